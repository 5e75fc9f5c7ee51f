"""
Triangle quadrature.

Collapsed tensor rules (Gauss-Legendre x Gauss-Jacobi(1, 0) on the square,
Duffy-mapped to the reference triangle), single- and double-integral helpers
and the fan quadrature of a polygon used by the energy and derivative
assemblies.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre

from .errors import QuadratureError
from .geometry import fan_vertices

logger = logging.getLogger(__name__)

MAX_DEGREE = 30


@dataclass(frozen=True, eq=False)
class TriangleRule:
    """Barycentric points and normalized weights (sum 1) exact to ``degree``."""

    degree: int
    points: np.ndarray
    weights: np.ndarray

    @property
    def size(self):
        return len(self.weights)

    @property
    def xy(self):
        """Points in reference coordinates (x, y) = (b2, b3)."""
        return self.points[:, 1:]

    def to_dict(self):
        return {
            "degree": self.degree,
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
        }


def reference_monomial(a, b):
    """∫ x^a y^b over the reference triangle (0,0), (1,0), (0,1)."""
    return math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)


@lru_cache(maxsize=None)
def triangle_rule(degree):
    """Collapsed Gauss rule with ceil((degree + 1) / 2) points per axis.

    x = (1 - s) t, y = s; t carries Gauss-Legendre nodes and s the
    Gauss-Jacobi nodes for the weight (1 - s) from the Duffy Jacobian.
    """
    if int(degree) != degree or not 1 <= degree <= MAX_DEGREE:
        raise QuadratureError(f"quadrature degree must be an integer in [1, {MAX_DEGREE}], got {degree}")
    degree = int(degree)
    n = (degree + 2) // 2

    xi, wx = roots_legendre(n)
    eta, we = roots_jacobi(n, 1.0, 0.0)
    t = 0.5 * (xi + 1.0)
    s = 0.5 * (eta + 1.0)

    T, S = np.meshgrid(t, s, indexing="ij")
    x = ((1.0 - S) * T).ravel()
    y = np.broadcast_to(S, T.shape).ravel()
    w = (np.outer(wx, we) / 4.0).ravel()

    points = np.column_stack([1.0 - x - y, x, y])
    points.setflags(write=False)
    w.setflags(write=False)
    rule = TriangleRule(degree, points, w)
    _self_test(rule)
    logger.debug("triangle rule degree %d: %d points", degree, rule.size)
    return rule


def _self_test(rule):
    x, y = rule.xy[:, 0], rule.xy[:, 1]
    if abs(rule.weights.sum() - 1.0) > 1e-13:
        raise QuadratureError(f"degree {rule.degree}: weights sum to {rule.weights.sum():.17g}")
    if np.any(rule.points < -1e-15):
        raise QuadratureError(f"degree {rule.degree}: point outside the triangle")
    for a in range(rule.degree + 1):
        for b in range(rule.degree + 1 - a):
            exact = reference_monomial(a, b)
            approx = 0.5 * float(np.dot(rule.weights, x ** a * y ** b))
            if abs(approx - exact) > 1e-12 * exact:
                raise QuadratureError(
                    f"degree {rule.degree}: x^{a} y^{b} integrates to {approx!r}, expected {exact!r}")


def integrate_triangle(f, T, rule):
    """∫_T f, with ``f`` evaluated on an (m, 2) array of points."""
    pts = T.map(rule.points)
    return T.area * float(np.dot(rule.weights, f(pts)))


def integrate_pair(h, T1, T2, rule):
    """∫_{T1}∫_{T2} h(x, y); ``h`` receives broadcastable (m, 1, 2) and (1, m, 2) arrays."""
    X = T1.map(rule.points)
    Y = T2.map(rule.points)
    H = h(X[:, None, :], Y[None, :, :])
    return T1.area * T2.area * float(rule.weights @ H @ rule.weights)


def gauss_legendre_unit(n):
    """Gauss-Legendre nodes and weights on [0, 1]."""
    xi, w = roots_legendre(n)
    return 0.5 * (xi + 1.0), 0.5 * w


# ─── Polygon fan quadrature ──────────────────────────────────────────────────

def subdivide(tris):
    """Split every triangle of a (C, 3, 2) array into four by edge midpoints."""
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
    return np.concatenate([
        np.stack([a, ab, ca], axis=1),
        np.stack([ab, b, bc], axis=1),
        np.stack([ca, bc, c], axis=1),
        np.stack([ab, bc, ca], axis=1),
    ])


def triangle_areas(tris):
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def cell_points(tris, rule):
    """Quadrature points (C, m, 2) and absolute weights (C, m) on each cell."""
    pts = np.einsum("pk,ckd->cpd", rule.points, tris)
    w = triangle_areas(tris)[:, None] * rule.weights[None, :]
    return pts, w


@dataclass(frozen=True, eq=False)
class FanQuadrature:
    """Quadrature of a polygon on its fan (node, A_i, A_i+1).

    ``points`` is (N, m, 2) and ``weights`` (N, m) includes triangle areas.
    With ``refine`` > 0 each fan triangle is split uniformly first and the
    per-triangle arrays hold 4**refine cells' worth of points.
    """

    triangles: np.ndarray
    rule: TriangleRule
    points: np.ndarray
    weights: np.ndarray

    @property
    def n(self):
        return len(self.triangles)

    @property
    def node(self):
        return self.triangles[0, 0]


def fan_quadrature(P, degree, node=None, refine=0):
    rule = triangle_rule(degree)
    tris = fan_vertices(P, node)
    n = len(tris)
    cells = tris
    for _ in range(refine):
        cells = subdivide(cells)
    pts, w = cell_points(cells, rule)
    if refine:
        # cell c descends from fan triangle c mod N
        order = np.arange(len(cells)).reshape(-1, n).T
        pts = pts[order].reshape(n, -1, 2)
        w = w[order].reshape(n, -1)
    return FanQuadrature(tris, rule, pts, w)
