"""
Polygon geometry for polyriesz.

The Polygon value type and its validation, canonical constructions (regular
N-gons, the Graham hexagon, random polygons), measures, fan triangulation,
exact moments, circular segments and exact polygon/disc intersection areas.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import fsolve, linprog
from scipy.spatial import ConvexHull
from scipy.special import roots_legendre

from .errors import ConvergenceError, NotStarShapedError, PolygonValidationError

logger = logging.getLogger(__name__)

# Orientation predicates work on coordinates normalized to [-1, 1].
_ORIENT_EPS = 1e-14

# Shortest side of a random start, relative to sqrt(area).
MIN_EDGE_FRACTION = 0.1

# Unit-diameter Graham hexagon, printed to nine digits.
GRAHAM_X = 0.343771453
GRAHAM_B = 0.939053346
GRAHAM_D = 0.536702650


# ─── Validation ──────────────────────────────────────────────────────────────

def _issue(rule, location, message, severity="error"):
    return {
        "severity": severity,
        "rule": rule,
        "location": location,
        "message": message,
    }


def _orient(a, b, c):
    v = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    if abs(v) <= _ORIENT_EPS:
        return 0
    return 1 if v > 0 else -1


def _on_segment(a, b, c):
    """c collinear with ab: is it within the segment's bounding box?"""
    return (min(a[0], b[0]) - _ORIENT_EPS <= c[0] <= max(a[0], b[0]) + _ORIENT_EPS
            and min(a[1], b[1]) - _ORIENT_EPS <= c[1] <= max(a[1], b[1]) + _ORIENT_EPS)


def _segments_intersect(a, b, c, d):
    o1, o2 = _orient(a, b, c), _orient(a, b, d)
    o3, o4 = _orient(c, d, a), _orient(c, d, b)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True
    if o1 == 0 and _on_segment(a, b, c):
        return True
    if o2 == 0 and _on_segment(a, b, d):
        return True
    if o3 == 0 and _on_segment(c, d, a):
        return True
    if o4 == 0 and _on_segment(c, d, b):
        return True
    return False


def _folds_back(shared, p, q):
    """Adjacent edges shared-p and shared-q overlap along a common line."""
    if _orient(p, shared, q) != 0:
        return False
    return float(np.dot(p - shared, q - shared)) > 0.0


def signed_area(vertices):
    """Shoelace signed area; positive for counterclockwise order."""
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def validate_polygon(vertices):
    """Check a candidate vertex list against the Polygon invariants.

    Returns a list of issue records (empty when the vertices form a simple,
    counterclockwise polygon with at least three vertices).
    """
    try:
        pts = np.asarray(vertices, dtype=float)
    except (TypeError, ValueError) as e:
        return [_issue("shape", "vertices", f"vertices are not numeric pairs: {e}")]
    if pts.ndim != 2 or pts.shape[1] != 2:
        return [_issue("shape", "vertices",
                       f"expected a list of [x, y] pairs, got array of shape {pts.shape}")]
    n = len(pts)
    if n < 3:
        return [_issue("vertex_count", "vertices",
                       f"a polygon needs at least 3 vertices, got {n}")]
    if not np.all(np.isfinite(pts)):
        return [_issue("finite", "vertices", "vertex coordinates must be finite")]

    centre = pts.mean(axis=0)
    span = float(np.max(np.abs(pts - centre)))
    if span == 0.0:
        return [_issue("duplicate_vertex", "vertices", "all vertices coincide")]
    q = (pts - centre) / span

    issues = []
    for i in range(n):
        for j in range(i + 1, n):
            if np.all(np.abs(q[i] - q[j]) <= _ORIENT_EPS):
                if j == i + 1 or (i == 0 and j == n - 1):
                    issues.append(_issue("zero_length_edge", f"vertices {i} and {j}",
                                         f"edge between vertices {i} and {j} has zero length"))
                else:
                    issues.append(_issue("duplicate_vertex", f"vertices {i} and {j}",
                                         f"vertices {i} and {j} coincide"))
    if issues:
        return issues

    for i in range(n):
        a, b = q[i], q[(i + 1) % n]
        for j in range(i + 1, n):
            c, d = q[j], q[(j + 1) % n]
            if j == i + 1:
                if _folds_back(b, a, d):
                    issues.append(_issue("edge_overlap", f"edges {i} and {j}",
                                         f"edges {i} and {j} fold back onto each other"))
            elif i == 0 and j == n - 1:
                if _folds_back(a, b, c):
                    issues.append(_issue("edge_overlap", f"edges {i} and {j}",
                                         f"edges {i} and {j} fold back onto each other"))
            elif _segments_intersect(a, b, c, d):
                issues.append(_issue("edge_crossing", f"edges {i} and {j}",
                                     f"edges {i} and {j} cross"))
    if issues:
        return issues

    sa = signed_area(pts)
    if sa <= 0.0:
        issues.append(_issue("orientation", "vertices",
                             f"vertices are ordered clockwise (signed area {sa:.6g}); "
                             "polygons must be counterclockwise"))
    return issues


# ─── Value types ─────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class Polygon:
    """Simple counterclockwise polygon with N >= 3 vertices."""

    vertices: np.ndarray

    def __post_init__(self):
        issues = validate_polygon(self.vertices)
        errors = [i for i in issues if i["severity"] == "error"]
        if errors:
            first = errors[0]
            raise PolygonValidationError(f"{first['rule']}: {first['message']}", issues)
        pts = np.array(self.vertices, dtype=float)
        pts.setflags(write=False)
        object.__setattr__(self, "vertices", pts)

    @property
    def n(self):
        return len(self.vertices)

    def __len__(self):
        return len(self.vertices)

    def edges(self):
        """Edge start and end points, each (N, 2)."""
        return self.vertices, np.roll(self.vertices, -1, axis=0)

    def flat(self):
        """Interleaved coordinate vector (x0, y0, x1, y1, ...)."""
        return self.vertices.reshape(-1).copy()

    @classmethod
    def from_flat(cls, z):
        return cls(np.asarray(z, dtype=float).reshape(-1, 2))

    def to_dict(self):
        return {"vertices": [[float(x), float(y)] for x, y in self.vertices]}


@dataclass(frozen=True, eq=False)
class Triangle:
    """Positively oriented triangle."""

    vertices: np.ndarray

    def __post_init__(self):
        pts = np.array(self.vertices, dtype=float).reshape(3, 2)
        if _triangle_signed_area(pts) <= 0.0:
            raise ValueError("triangle must have positive orientation and nonzero area")
        pts.setflags(write=False)
        object.__setattr__(self, "vertices", pts)

    @property
    def area(self):
        return _triangle_signed_area(self.vertices)

    def map(self, bary):
        """Barycentric (m, 3) points to Cartesian (m, 2) points."""
        return np.asarray(bary) @ self.vertices


@dataclass(frozen=True)
class CircularSegmentParams:
    r: float
    s: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"radius must be positive, got {self.r}")
        if not 0.0 <= self.s <= self.r:
            raise ValueError(f"apothem must lie in [0, r], got s={self.s}, r={self.r}")


def _triangle_signed_area(pts):
    (ax, ay), (bx, by), (cx, cy) = pts
    return 0.5 * ((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))


# ─── Measures ────────────────────────────────────────────────────────────────

def area(P):
    return signed_area(P.vertices)


def perimeter(P):
    a, b = P.edges()
    return float(np.linalg.norm(b - a, axis=1).sum())


def centroid(P):
    v = P.vertices
    w = np.roll(v, -1, axis=0)
    cross = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
    a6 = 3.0 * cross.sum()
    return np.array([((v[:, 0] + w[:, 0]) * cross).sum() / a6,
                     ((v[:, 1] + w[:, 1]) * cross).sum() / a6])


def diameter(P):
    v = P.vertices
    diff = v[:, None, :] - v[None, :, :]
    return float(np.sqrt((diff ** 2).sum(axis=-1).max()))


def side_lengths(P):
    a, b = P.edges()
    return np.linalg.norm(b - a, axis=1)


# ─── Transforms ──────────────────────────────────────────────────────────────

def translate(P, offset):
    return Polygon(P.vertices + np.asarray(offset, dtype=float))


def rotate(P, angle, about=(0.0, 0.0)):
    c, s = math.cos(angle), math.sin(angle)
    R = np.array([[c, -s], [s, c]])
    o = np.asarray(about, dtype=float)
    return Polygon((P.vertices - o) @ R.T + o)


def scale(P, factor, about=(0.0, 0.0)):
    if not factor > 0:
        raise ValueError(f"scale factor must be positive, got {factor}")
    o = np.asarray(about, dtype=float)
    return Polygon((P.vertices - o) * factor + o)


def apply_linear(P, matrix):
    """Image of P under a nonsingular linear map; orientation is restored."""
    L = np.asarray(matrix, dtype=float)
    det = float(np.linalg.det(L))
    if det == 0.0:
        raise ValueError("linear map is singular")
    pts = P.vertices @ L.T
    return Polygon(pts if det > 0 else pts[::-1])


def reflect(P, axis="x"):
    """Mirror image across the x1-axis ("x") or the x2-axis ("y")."""
    M = np.diag([1.0, -1.0]) if axis == "x" else np.diag([-1.0, 1.0])
    return apply_linear(P, M)


def scale_to_area(P, target, about="centroid"):
    """Rescale P to the given area, about its centroid or a given point."""
    if not target > 0:
        raise ValueError(f"target area must be positive, got {target}")
    o = centroid(P) if isinstance(about, str) else np.asarray(about, dtype=float)
    return scale(P, math.sqrt(target / area(P)), about=o)


# ─── Canonical polygons ──────────────────────────────────────────────────────

def regular_ngon(n, *, area=None, diameter=None, circumradius=None, phase=0.0):
    """Regular N-gon centred at the origin, first vertex at angle ``phase``.

    Exactly one of ``area``, ``diameter`` or ``circumradius`` fixes the size.
    """
    if int(n) != n or n < 3:
        raise ValueError(f"regular polygon needs an integer N >= 3, got {n}")
    n = int(n)
    given = [(k, v) for k, v in (("area", area), ("diameter", diameter),
                                 ("circumradius", circumradius)) if v is not None]
    if len(given) != 1:
        raise ValueError("specify exactly one of area, diameter, circumradius")
    kind, value = given[0]
    if not value > 0:
        raise ValueError(f"{kind} must be positive, got {value}")

    if kind == "circumradius":
        R = value
    elif kind == "area":
        R = math.sqrt(2.0 * value / (n * math.sin(2.0 * math.pi / n)))
    else:
        R = value / 2.0 if n % 2 == 0 else value / (2.0 * math.cos(math.pi / (2 * n)))

    theta = phase + 2.0 * math.pi * np.arange(n) / n
    return Polygon(R * np.column_stack([np.cos(theta), np.sin(theta)]))


@lru_cache(maxsize=1)
def _graham_template():
    """Re-solve the unit-diameter constraints around the printed digits."""

    def residual(u):
        x, b, d = u
        return [x * x + b * b - 1.0,
                (x + 0.5) ** 2 + d * d - 1.0,
                x - GRAHAM_X]

    sol, info, ier, msg = fsolve(residual, [GRAHAM_X, GRAHAM_B, GRAHAM_D],
                                 xtol=1e-14, full_output=True)
    res = np.max(np.abs(residual(sol)))
    if ier != 1 or res > 1e-12:
        raise ConvergenceError(f"Graham hexagon constraint solve failed: {msg} (residual {res:.3g})")
    x, b, d = (float(u) for u in sol)
    if abs(b - GRAHAM_B) > 1e-7 or abs(d - GRAHAM_D) > 1e-7:
        raise ConvergenceError(
            f"Graham constants inconsistent with the constraints: b={b:.9f}, d={d:.9f}")
    c = d - b
    logger.debug("Graham template x=%.12f b=%.12f d=%.12f c=%.12f", x, b, d, c)
    return np.array([
        [0.0, 0.0],     # A
        [-0.5, c],      # B
        [-x, -b],       # C
        [0.0, -1.0],    # D
        [x, -b],        # E
        [0.5, c],       # F
    ])


def graham_hexagon(*, diameter=None, area=None):
    """Largest-area hexagon of given diameter, or rescaled to a given area.

    The unit-diameter template has A at the origin and D at (0, -1); scaling
    is about the origin.
    """
    if (diameter is None) == (area is None):
        raise ValueError("specify exactly one of diameter, area")
    template = _graham_template()
    if diameter is not None:
        if not diameter > 0:
            raise ValueError(f"diameter must be positive, got {diameter}")
        factor = diameter
    else:
        if not area > 0:
            raise ValueError(f"area must be positive, got {area}")
        factor = math.sqrt(area / signed_area(template))
    return Polygon(template * factor)


def random_polygon(n, seed, mode="star", max_attempts=1000, min_edge=MIN_EDGE_FRACTION):
    """Random simple polygon of area pi, deterministic in ``seed``.

    ``star``: sorted random angles with radii in [0.3, 1.7] about the origin.
    ``convex``: convex hull of random points on the unit circle.
    Draws whose shortest side is below ``min_edge`` times sqrt(area) are rejected.
    """
    if int(n) != n or n < 3:
        raise ValueError(f"polygon needs N >= 3, got {n}")
    if mode not in ("star", "convex"):
        raise ValueError(f"unknown random polygon mode: {mode}")
    rng = np.random.default_rng(seed)
    for _ in range(max_attempts):
        if mode == "star":
            angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, n))
            gaps = np.diff(np.append(angles, angles[0] + 2.0 * math.pi))
            if gaps.max() >= math.pi or gaps.min() < 1e-3:
                continue
            radii = rng.uniform(0.3, 1.7, n)
            pts = radii[:, None] * np.column_stack([np.cos(angles), np.sin(angles)])
        else:
            angles = rng.uniform(0.0, 2.0 * math.pi, n)
            pts = np.column_stack([np.cos(angles), np.sin(angles)])
            try:
                hull = ConvexHull(pts)
            except (RuntimeError, ValueError):
                continue
            if len(hull.vertices) != n:
                continue
            pts = pts[hull.vertices]
        if validate_polygon(pts):
            continue
        P = Polygon(pts)
        if side_lengths(P).min() < min_edge * math.sqrt(area(P)):
            continue
        return scale(P, math.sqrt(math.pi / area(P)))
    raise ConvergenceError(f"random {mode} polygon with N={n} not found in {max_attempts} attempts")


# ─── Fan triangulation ───────────────────────────────────────────────────────

def _fan_cross(P, node):
    a = P.vertices - node
    b = np.roll(a, -1, axis=0)
    return a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]


def is_fan_node(P, node):
    """True when every fan triangle (node, A_i, A_i+1) is positively oriented."""
    return bool(np.all(_fan_cross(P, np.asarray(node, dtype=float)) > 1e-12 * area(P)))


def kernel_center(P):
    """Chebyshev centre of the polygon kernel (the set of valid fan nodes)."""
    a, b = P.edges()
    e = b - a
    lengths = np.linalg.norm(e, axis=1)
    inward = np.column_stack([-e[:, 1], e[:, 0]]) / lengths[:, None]
    # inward . (x - a_i) >= t  <=>  -inward . x + t <= -inward . a_i
    A_ub = np.column_stack([-inward, np.ones(len(e))])
    b_ub = -(inward * a).sum(axis=1)
    cap = diameter(P)
    res = linprog([0.0, 0.0, -1.0], A_ub=A_ub, b_ub=b_ub,
                  bounds=[(None, None), (None, None), (None, cap)], method="highs")
    if not res.success or res.x[2] <= 1e-9 * cap:
        raise NotStarShapedError("polygon is not star-shaped: its kernel has empty interior")
    return np.array(res.x[:2])


def fan_node(P):
    """Default fan node: the centroid when valid, else the kernel centre."""
    c = centroid(P)
    if is_fan_node(P, c):
        return c
    logger.debug("centroid is not a fan node, using the kernel centre")
    return kernel_center(P)


def fan_vertices(P, node=None):
    """Fan triangles as an (N, 3, 2) array with rows (node, A_i, A_i+1)."""
    node = fan_node(P) if node is None else np.asarray(node, dtype=float)
    cross = _fan_cross(P, node)
    bad = np.flatnonzero(cross <= 1e-12 * area(P))
    if bad.size:
        raise NotStarShapedError(
            f"not star-shaped w.r.t. node ({node[0]:.6g}, {node[1]:.6g}): "
            f"triangle {int(bad[0])} is not positively oriented")
    a, b = P.edges()
    return np.stack([np.broadcast_to(node, a.shape), a, b], axis=1)


def fan_triangulation(P, node=None):
    """Triangles (node, A_i, A_i+1), i = 0..N-1."""
    return [Triangle(t) for t in fan_vertices(P, node)]


# ─── Moments ─────────────────────────────────────────────────────────────────

def triangle_moments(T):
    """(∫x1x2, ∫x1², ∫x2²) over a triangle (O, A_i, A_i+1)."""
    o, (p0, q0), (p1, q1) = T.vertices
    if np.any(np.abs(o) > 1e-14 * (1.0 + np.abs(T.vertices).max())):
        raise ValueError("first triangle vertex must be the origin")
    det = p0 * q1 - p1 * q0
    m12 = det / 24.0 * (2 * p0 * q0 + p0 * q1 + p1 * q0 + 2 * p1 * q1)
    m11 = det / 12.0 * (p0 * p0 + p0 * p1 + p1 * p1)
    m22 = det / 12.0 * (q0 * q0 + q0 * q1 + q1 * q1)
    return float(m12), float(m11), float(m22)


def _origin_monomial(a, b, p, q):
    """Signed ∫ x1^p x2^q over the triangle (O, a, b)."""
    det = a[0] * b[1] - a[1] * b[0]
    total = 0.0
    for i in range(p + 1):
        ci = math.comb(p, i) * a[0] ** i * b[0] ** (p - i)
        for j in range(q + 1):
            cj = math.comb(q, j) * a[1] ** j * b[1] ** (q - j)
            ks, kt = i + j, p + q - i - j
            total += ci * cj * math.factorial(ks) * math.factorial(kt)
    return det * total / math.factorial(p + q + 2)


def triangle_monomial(T, p, q):
    """Exact ∫_T x1^p x2^q for a triangle whose first vertex is the origin."""
    o, a, b = T.vertices
    if np.any(np.abs(o) > 1e-14 * (1.0 + np.abs(T.vertices).max())):
        raise ValueError("first triangle vertex must be the origin")
    return _origin_monomial(a, b, p, q)


def polygon_moment(P, p, q):
    """Exact ∫_P x1^p x2^q by signed triangles about the origin."""
    a, b = P.edges()
    return math.fsum(_origin_monomial(a[i], b[i], p, q) for i in range(P.n))


# ─── Circles ─────────────────────────────────────────────────────────────────

def circular_segment_area(params):
    """|Δ_{r,s}| = r² arccos(s/r) - s √(r² - s²)."""
    r, s = params.r, params.s
    return r * r * math.acos(min(1.0, s / r)) - s * math.sqrt(max(0.0, r * r - s * s))


def _angle(u, v):
    cross = u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]
    dot = u[..., 0] * v[..., 0] + u[..., 1] * v[..., 1]
    return np.arctan2(cross, dot)


def disc_intersection_areas(vertices, centers, r):
    """|P ∩ B_r(c)| for every row c of ``centers``, by edge clipping.

    Each edge is split at its crossings with the circle; the part inside
    contributes a triangle with the centre, the parts outside contribute
    circular sectors.
    """
    v = np.asarray(vertices, dtype=float)
    c = np.atleast_2d(np.asarray(centers, dtype=float))
    p = v[None, :, :] - c[:, None, :]
    q = np.roll(v, -1, axis=0)[None, :, :] - c[:, None, :]
    d = q - p
    A = np.einsum("mnk,mnk->mn", d, d)
    B = 2.0 * np.einsum("mnk,mnk->mn", p, d)
    C = np.einsum("mnk,mnk->mn", p, p) - r * r
    disc = B * B - 4.0 * A * C
    # disc / 4A = r² - dist², tangent when |dist - r| < 1e-12 r
    crosses = disc > 8e-12 * A * r * r
    root = np.sqrt(np.where(crosses, disc, 0.0))
    s1 = np.where(crosses, np.clip((-B - root) / (2.0 * A), 0.0, 1.0), 0.0)
    s2 = np.where(crosses, np.clip((-B + root) / (2.0 * A), 0.0, 1.0), 0.0)
    p1 = p + s1[..., None] * d
    p2 = p + s2[..., None] * d
    chord = 0.5 * (p1[..., 0] * p2[..., 1] - p1[..., 1] * p2[..., 0])
    sectors = 0.5 * r * r * (_angle(p, p1) + _angle(p2, q))
    total = (chord + sectors).sum(axis=1)
    cap = min(signed_area(v), math.pi * r * r)
    return np.clip(total, 0.0, cap)


def polygon_disc_intersection_area(P, center, r):
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    return float(disc_intersection_areas(P.vertices, center, r)[0])


def point_segment_distances(points, a, b):
    """Distances from each point (M, 2) to each segment a_k b_k, shape (M, E)."""
    pts = np.atleast_2d(points)[:, None, :]
    e = (b - a)[None, :, :]
    t = np.einsum("mek,mek->me", pts - a[None], e) / np.einsum("mek,mek->me", e, e)
    t = np.clip(t, 0.0, 1.0)
    foot = a[None] + t[..., None] * e
    return np.linalg.norm(pts - foot, axis=-1)


def card_condition(P, r, samples=64):
    """For every boundary point x, ∂P ∩ B_r(x) lies in two consecutive sides.

    Checked at Gauss points on every side plus all vertices.
    """
    n = P.n
    a, b = P.edges()
    xi, _ = roots_legendre(samples)
    t = np.concatenate([[0.0], 0.5 * (xi + 1.0), [1.0]])
    for side in range(n):
        pts = a[side] + t[:, None] * (b[side] - a[side])
        near = point_segment_distances(pts, a, b) < r
        allowed_left = np.zeros(n, dtype=bool)
        allowed_left[[(side - 1) % n, side]] = True
        allowed_right = np.zeros(n, dtype=bool)
        allowed_right[[side, (side + 1) % n]] = True
        ok = ~np.any(near & ~allowed_left, axis=1) | ~np.any(near & ~allowed_right, axis=1)
        if not np.all(ok):
            return False
    return True
