import numpy as np
import pytest

from polyriesz.errors import QuadratureError
from polyriesz.geometry import Polygon, Triangle, area, fan_vertices, polygon_moment
from polyriesz.quadrature import (
    MAX_DEGREE,
    fan_quadrature,
    gauss_legendre_unit,
    integrate_pair,
    integrate_triangle,
    reference_monomial,
    subdivide,
    triangle_areas,
    triangle_rule,
)


@pytest.mark.parametrize("degree", range(1, MAX_DEGREE + 1))
def test_rule_is_exact_to_its_degree(degree):
    rule = triangle_rule(degree)
    x, y = rule.xy[:, 0], rule.xy[:, 1]
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            approx = 0.5 * float(np.dot(rule.weights, x ** a * y ** b))
            exact = reference_monomial(a, b)
            assert abs(approx - exact) <= 1e-12 * exact


def test_rule_points_are_barycentric():
    rule = triangle_rule(8)
    assert np.all(rule.points >= 0.0)
    assert np.allclose(rule.points.sum(axis=1), 1.0)
    assert rule.weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert rule.size == 25


@pytest.mark.parametrize("degree", [0, 31, 2.5])
def test_degree_out_of_range(degree):
    with pytest.raises(QuadratureError):
        triangle_rule(degree)


def test_rules_are_cached():
    assert triangle_rule(6) is triangle_rule(6)


def test_integrate_triangle_linear_function():
    T = Triangle(np.array([[0.0, 0.0], [2.0, 0.0], [0.0, 3.0]]))
    # ∫ x over the triangle = area * centroid_x
    value = integrate_triangle(lambda p: p[:, 0], T, triangle_rule(1))
    assert value == pytest.approx(3.0 * 2.0 / 3.0)


def test_integrate_pair_constant_and_separable():
    T1 = Triangle(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))
    T2 = Triangle(np.array([[2.0, 0.0], [3.0, 0.5], [2.0, 1.0]]))
    rule = triangle_rule(4)
    assert integrate_pair(lambda x, y: np.ones((x.shape[0], y.shape[1])), T1, T2, rule) == \
        pytest.approx(T1.area * T2.area)
    # ∫∫ x1 y1 = (∫ x1)(∫ y1)
    sep = integrate_pair(lambda x, y: x[..., 0] * y[..., 0], T1, T2, rule)
    assert sep == pytest.approx((T1.area / 3.0) * (T2.area * 7.0 / 3.0))


def test_gauss_legendre_unit_interval():
    t, w = gauss_legendre_unit(5)
    assert w.sum() == pytest.approx(1.0)
    assert float(np.dot(w, t ** 9)) == pytest.approx(0.1)


def test_subdivide_preserves_area():
    tris = np.array([[[0.0, 0.0], [1.0, 0.0], [0.3, 0.8]]])
    children = subdivide(tris)
    assert children.shape == (4, 3, 2)
    assert np.all(triangle_areas(children) > 0)
    assert triangle_areas(children).sum() == pytest.approx(triangle_areas(tris).sum())


@pytest.mark.parametrize("refine", [0, 2])
def test_fan_quadrature_weights_sum_to_area(irregular_pentagon, refine):
    fq = fan_quadrature(irregular_pentagon, 4, refine=refine)
    assert fq.n == 5
    assert fq.weights.sum() == pytest.approx(area(irregular_pentagon))
    assert fq.points.shape == (5, triangle_rule(4).size * 4 ** refine, 2)


def test_fan_quadrature_groups_cells_by_fan_triangle(irregular_pentagon):
    fq = fan_quadrature(irregular_pentagon, 3, refine=1)
    tris = fan_vertices(irregular_pentagon)
    for a in range(fq.n):
        assert fq.weights[a].sum() == pytest.approx(triangle_areas(tris[a:a + 1])[0])


def test_fan_quadrature_first_moment(unit_square):
    fq = fan_quadrature(unit_square, 2)
    assert float((fq.weights * fq.points[..., 0]).sum()) == pytest.approx(0.5)
    assert np.allclose(fq.node, [0.5, 0.5])


AFFINE = np.array([[1.7, 0.4], [-0.3, 0.9]])
SHIFT = np.array([0.6, -1.2])
REFERENCE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


def test_integrate_triangle_under_affine_map():
    det = np.linalg.det(AFFINE)
    image = Triangle(REFERENCE @ AFFINE.T + SHIFT)
    rule = triangle_rule(10)

    def f(p):
        return np.exp(0.3 * p[:, 0]) * np.cos(p[:, 1])

    pulled = integrate_triangle(lambda p: f(p @ AFFINE.T + SHIFT), Triangle(REFERENCE), rule)
    assert integrate_triangle(f, image, rule) == pytest.approx(det * pulled, rel=1e-12)


def test_integrate_triangle_matches_exact_moments_on_image():
    image = Triangle(REFERENCE @ AFFINE.T + SHIFT)
    P = Polygon(image.vertices)
    rule = triangle_rule(5)
    for a, b in [(0, 0), (1, 0), (2, 3), (0, 5)]:
        value = integrate_triangle(lambda p: p[:, 0] ** a * p[:, 1] ** b, image, rule)
        assert value == pytest.approx(polygon_moment(P, a, b), rel=1e-12, abs=1e-14)


def test_integrate_pair_under_affine_map():
    det = np.linalg.det(AFFINE)
    T1 = Triangle(REFERENCE)
    T2 = Triangle(np.array([[2.0, 0.0], [3.0, 0.5], [2.0, 1.0]]))
    rule = triangle_rule(8)

    def h(x, y):
        d = x - y
        return np.exp(-(d * d).sum(axis=-1))

    def pulled(x, y):
        return h(x @ AFFINE.T, y @ AFFINE.T)

    images = [Triangle(T.vertices @ AFFINE.T + SHIFT) for T in (T1, T2)]
    expected = det * det * integrate_pair(pulled, T1, T2, rule)
    assert integrate_pair(h, *images, rule) == pytest.approx(expected, rel=1e-12)
