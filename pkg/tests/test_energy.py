import math

import numpy as np
import pytest

from polyriesz.derivatives import E_side_derivatives, side_parallel_field, side_rotation_field
from polyriesz.energy import (
    E,
    J,
    P_r,
    criticality_residuals,
    disc_overlap_integral,
    heat_content,
    lagrange_multiplier_hQ,
    lagrangian_hQ,
    log_power_energy,
    nonlocal_perimeter,
    pair_contributions,
    potential,
    scale_invariant_J,
)
from polyriesz.errors import NotStarShapedError, PolyrieszError
from polyriesz.geometry import (
    Polygon,
    area,
    diameter,
    graham_hexagon,
    perimeter,
    polygon_moment,
    regular_ngon,
    rotate,
    scale,
    translate,
)
from polyriesz.kernels import Kernel


def power_energy_from_moments(P, p, q):
    """∫∫ (x1 - y1)^p (x2 - y2)^q from exact monomial moments."""
    total = 0.0
    for i in range(p + 1):
        for j in range(q + 1):
            c = math.comb(p, i) * math.comb(q, j) * (-1) ** (i + j)
            total += c * polygon_moment(P, p - i, q - j) * polygon_moment(P, i, j)
    return total


def J4_from_moments(P):
    return (power_energy_from_moments(P, 4, 0) + 2.0 * power_energy_from_moments(P, 2, 2)
            + power_energy_from_moments(P, 0, 4))


class TestDoubleIntegral:
    def test_unit_square_power2(self, unit_square):
        report = J(unit_square, Kernel.power(2))
        assert report.value == pytest.approx(1.0 / 3.0, rel=1e-13)
        assert report.triangle_pairs == 16
        assert report.quadrature_degree == 4

    def test_power2_moment_identity(self, irregular_pentagon):
        expected = power_energy_from_moments(irregular_pentagon, 2, 0) \
            + power_energy_from_moments(irregular_pentagon, 0, 2)
        assert J(irregular_pentagon, Kernel.power(2)).value == pytest.approx(expected, rel=1e-12)

    def test_power4_moment_identity(self, irregular_pentagon):
        value = J(irregular_pentagon, Kernel.power(4)).value
        assert value == pytest.approx(J4_from_moments(irregular_pentagon), rel=1e-12)

    def test_rigid_motion_invariance(self, irregular_pentagon):
        K = Kernel.truncated_heat(12, 1.0)
        base = J(irregular_pentagon, K).value
        moved = translate(rotate(irregular_pentagon, 1.1), (3.0, -2.0))
        assert J(moved, K).value == pytest.approx(base, rel=1e-12)

    def test_power_homogeneity(self, irregular_pentagon):
        k = 6
        base = J(irregular_pentagon, Kernel.power(k)).value
        scaled = J(scale(irregular_pentagon, 1.7), Kernel.power(k)).value
        assert scaled == pytest.approx(1.7 ** (k + 4) * base, rel=1e-12)

    def test_independent_of_fan_node(self, unit_square):
        K = Kernel.power(4)
        a = J(unit_square, K, node=(0.5, 0.5)).value
        b = J(unit_square, K, node=(0.2, 0.7)).value
        assert a == pytest.approx(b, rel=1e-13)

    def test_pair_matrix_symmetric(self, irregular_pentagon):
        C = pair_contributions(irregular_pentagon, Kernel.gaussian(0.5))
        assert np.allclose(C, C.T, rtol=1e-13)

    def test_characteristic_exact_and_sampled_agree(self, regular_hexagon):
        K = Kernel.characteristic(0.8)
        exact = J(regular_hexagon, K)
        sampled = J(regular_hexagon, K, exact=False)
        assert exact.method == "exact-disc"
        assert sampled.value == pytest.approx(exact.value, rel=3e-2)

    def test_characteristic_bounds(self, regular_hexagon):
        value = J(regular_hexagon, Kernel.characteristic(0.5)).value
        a = area(regular_hexagon)
        assert 0.0 < value < a * math.pi * 0.25

    def test_not_star_shaped(self):
        U = Polygon(np.array([[0, 0], [3, 0], [3, 3], [2, 3], [2, 1], [1, 1], [1, 3], [0, 3]],
                             dtype=float))
        with pytest.raises(NotStarShapedError):
            J(U, Kernel.power(2))


class TestSingleIntegral:
    def test_power2_is_polar_moment(self, irregular_pentagon):
        expected = polygon_moment(irregular_pentagon, 2, 0) + polygon_moment(irregular_pentagon, 0, 2)
        assert E(irregular_pentagon, Kernel.power(2)) == pytest.approx(expected, rel=1e-13)

    def test_characteristic_is_disc_overlap(self, regular_hexagon):
        assert E(regular_hexagon, Kernel.characteristic(0.5)) == pytest.approx(math.pi * 0.25)

    def test_potential_integrates_to_J(self, unit_square):
        K = Kernel.power(2)
        pts = np.array([[0.5, 0.5], [0.0, 0.0], [1.0, 0.5]])
        # v(x) = ∫ |x - y|^2 dy = |x - c|^2 + 1/6 on the unit square
        expected = ((pts - 0.5) ** 2).sum(axis=1) + 1.0 / 6.0
        assert np.allclose(potential(unit_square, K, pts), expected, rtol=1e-13)

    @pytest.mark.parametrize("side", [0, 2])
    def test_side_derivatives_match_finite_differences(self, irregular_pentagon, side):
        K = Kernel.power(2)
        rot, par = E_side_derivatives(irregular_pentagon, side, K)
        eps = 1e-5
        for field, exact in ((side_parallel_field, par), (side_rotation_field, rot)):
            theta = field(irregular_pentagon, side).reshape(-1, 2)
            plus = Polygon(irregular_pentagon.vertices + eps * theta)
            minus = Polygon(irregular_pentagon.vertices - eps * theta)
            fd = (E(plus, K) - E(minus, K)) / (2.0 * eps)
            assert exact == pytest.approx(fd, rel=1e-7, abs=1e-9)


class TestPerimeter:
    def test_saturated_closed_form(self, regular_hexagon):
        r = diameter(regular_hexagon) + 0.1
        assert P_r(regular_hexagon, r) == pytest.approx(math.pi ** 2 * (r * r - 1.0), rel=1e-12)

    def test_small_radius_asymptotics(self, unit_square):
        r = 0.05
        ratio = P_r(unit_square, r) / (2.0 / 3.0 * r ** 3 * perimeter(unit_square))
        assert 0.85 < ratio < 1.05

    def test_monotone_in_radius(self, regular_hexagon):
        values = [P_r(regular_hexagon, r, depth=6) for r in (0.2, 0.5, 1.0, 1.5)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_overlap_integral_bounds(self, unit_square):
        r = 0.3
        value = disc_overlap_integral(unit_square, r, depth=6)
        assert 0.0 < value < math.pi * r * r

    def test_rejects_bad_radius(self, unit_square):
        with pytest.raises(ValueError):
            P_r(unit_square, 0.0)

    def test_nonlocal_perimeter_gaussian(self, regular_hexagon):
        K = Kernel.gaussian(0.1)
        value = nonlocal_perimeter(regular_hexagon, K)
        assert value == pytest.approx(area(regular_hexagon) * K.l1_norm() - J(regular_hexagon, K).value)
        assert value > 0.0

    def test_nonlocal_perimeter_needs_integrable_kernel(self, regular_hexagon):
        with pytest.raises(PolyrieszError):
            nonlocal_perimeter(regular_hexagon, Kernel.power(2))


class TestObjectives:
    def test_scale_invariant(self, irregular_pentagon):
        a = scale_invariant_J(irregular_pentagon, 6)
        b = scale_invariant_J(scale(irregular_pentagon, 2.5), 6)
        assert a == pytest.approx(b, rel=1e-12)
        with pytest.raises(ValueError):
            scale_invariant_J(irregular_pentagon, 3)

    def test_heat_content_prefactor(self, regular_hexagon):
        t = 2.0
        raw = J(regular_hexagon, Kernel.truncated_heat(12, t)).value
        assert heat_content(regular_hexagon, t) == pytest.approx(raw / (4.0 * math.pi * t))

    def test_lagrange_multiplier_for_small_hexagon(self):
        # s = |x - y|² stays below 2, where d/dλ J(λP) > 0
        a = 0.5
        ell = lagrange_multiplier_hQ(6, a, 12, 1.0)
        assert ell > 0.0
        P = regular_ngon(6, area=a)
        value, ell2 = lagrangian_hQ(P, 12, 1.0)
        assert ell2 == pytest.approx(ell)
        assert value == pytest.approx(J(P, Kernel.truncated_heat(12, 1.0)).value - ell * a)


class TestCriticality:
    @pytest.mark.parametrize("K", [Kernel.power(2), Kernel.truncated_heat(12, 1.0)],
                             ids=lambda K: K.spec())
    @pytest.mark.parametrize("n", [5, 6])
    def test_regular_polygons_are_critical(self, n, K):
        report = criticality_residuals(regular_ngon(n, area=math.pi), K)
        assert report.max_relative() < 1e-8

    def test_regular_critical_for_characteristic(self, regular_hexagon):
        report = criticality_residuals(regular_hexagon, Kernel.characteristic(0.3))
        assert report.max_relative() < 1e-8

    def test_graham_is_not_critical(self):
        report = criticality_residuals(graham_hexagon(area=math.pi), Kernel.power(2))
        assert report.max_relative() > 1e-3
        assert set(report.to_dict()) >= {"rotation", "parallel", "max_relative"}


class TestLogPower:
    def test_even_power_uses_exact_rule(self, regular_hexagon):
        assert log_power_energy(regular_hexagon, 6) == pytest.approx(
            math.log(J(regular_hexagon, Kernel.power(6)).value), rel=1e-14)

    def test_matches_direct_quadrature(self, regular_hexagon):
        k = 7
        direct = math.log(J(regular_hexagon, Kernel.power(k)).value)
        assert log_power_energy(regular_hexagon, k) == pytest.approx(direct, abs=1e-6)

    def test_power_cap(self, regular_hexagon):
        with pytest.raises(ValueError):
            log_power_energy(regular_hexagon, 5000)
