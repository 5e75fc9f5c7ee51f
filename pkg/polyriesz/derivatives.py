"""
Vertex-displacement derivatives.

A vertex velocity θ = (θ_0, ..., θ_N-1) is extended to the polygon through
piecewise-affine hat functions on the fan triangulation, with the fan node
held fixed. Writing δφ_i = φ_i(x) - φ_i(y) and g_i = ∇φ_i(x) + ∇φ_i(y):

    B_i  = ∫∫ δφ_i ∇h + h g_i
    M_ij = ∫∫ δφ_i δφ_j ∇²h + δφ_i ∇h ⊗ g_j + δφ_j g_i ⊗ ∇h
           + h (g_i ⊗ g_j - ∇φ_j(x) ⊗ ∇φ_i(x) - ∇φ_j(y) ⊗ ∇φ_i(y))

with h and its derivatives taken at d = x - y. Both are integrated exactly
for polynomial kernels by the tensor pair rule of degree deg(h) + 2.
Coordinates are interleaved: index 2i is x_i and 2i + 1 is y_i.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .energy import J, half_side_integrals, map_ordered
from .errors import KernelCapabilityError
from .geometry import fan_node, fan_vertices, side_lengths
from .kernels import CHAR
from .quadrature import cell_points, gauss_legendre_unit, triangle_rule

logger = logging.getLogger(__name__)

ASYMMETRY_WARNING = 1e-10


# ─── Hat functions ───────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class HatBasis:
    """Hat functions on the fan (node, A_a, A_a+1).

    ``gradients[a, 0]`` is ∇φ_a and ``gradients[a, 1]`` is ∇φ_a+1 on
    triangle a; ``node_gradients[a]`` is the node hat's gradient there.
    """

    node: np.ndarray
    triangles: np.ndarray
    gradients: np.ndarray
    node_gradients: np.ndarray

    @property
    def n(self):
        return len(self.triangles)

    def barycentric(self, x):
        """(triangle index, barycentric triple) of a point inside the polygon."""
        x = np.asarray(x, dtype=float)
        for a, tri in enumerate(self.triangles):
            rel = x - tri[0]
            l1, l2 = self.gradients[a] @ rel
            l0 = 1.0 - l1 - l2
            if min(l0, l1, l2) >= -1e-12:
                return a, np.array([l0, l1, l2])
        raise ValueError(f"point ({x[0]:.6g}, {x[1]:.6g}) is outside the polygon")

    def values(self, x):
        """All N vertex hats followed by the node hat at x."""
        a, lam = self.barycentric(x)
        out = np.zeros(self.n + 1)
        out[a] += lam[1]
        out[(a + 1) % self.n] += lam[2]
        out[self.n] = lam[0]
        return out

    def gradient(self, i, x):
        """∇φ_i at x (constant on the containing triangle)."""
        a, _ = self.barycentric(x)
        if i == self.n:
            return self.node_gradients[a].copy()
        out = np.zeros(2)
        if i == a:
            out += self.gradients[a, 0]
        if i == (a + 1) % self.n:
            out += self.gradients[a, 1]
        return out


def hat_basis(P, node=None):
    node = fan_node(P) if node is None else np.asarray(node, dtype=float)
    tris = fan_vertices(P, node)
    edges = np.stack([tris[:, 1] - tris[:, 0], tris[:, 2] - tris[:, 0]], axis=2)
    det = np.linalg.det(edges)
    if np.any(np.abs(det) <= 1e-14 * np.abs(edges).max() ** 2):
        raise ValueError("degenerate triangle in the fan")
    # rows of the inverse Jacobian are ∇λ1, ∇λ2
    grads = np.linalg.inv(edges)
    return HatBasis(node=node, triangles=tris, gradients=grads,
                    node_gradients=-grads.sum(axis=1))


# ─── J derivatives ───────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class ShapeDerivatives:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray = None
    asymmetry_defect: float = 0.0

    def to_dict(self):
        out = {"value": self.value, "gradient": self.gradient.tolist()}
        if self.hessian is not None:
            out["hessian"] = self.hessian.tolist()
            out["asymmetry_defect"] = self.asymmetry_defect
        return out


def shape_derivatives(P, K, degree=None, node=None, hessian=True):
    """J, its gradient B and (optionally) Hessian M by triangle-pair assembly."""
    if not K.has_gradient or (hessian and not K.has_hessian):
        raise KernelCapabilityError("kernel not differentiable")
    degree = K.default_degree() if degree is None else degree
    basis = hat_basis(P, node)
    rule = triangle_rule(degree)
    pts, w = cell_points(basis.triangles, rule)
    n, m = basis.n, rule.size

    lam1, lam2 = rule.points[:, 1], rule.points[:, 2]
    zero = np.zeros(m)
    psi_x = np.array([lam1, lam2, zero, zero])
    psi_y = np.array([zero, zero, lam1, lam2])
    delta = psi_x[:, :, None] - psi_y[:, None, :]
    G = basis.gradients

    def pair(a, b):
        d = pts[a][:, None, :] - pts[b][None, :, :]
        W = w[a][:, None] * w[b][None, :]
        h = K.value(d)
        gh = K.grad(d)
        sh = float((W * h).sum())
        WD = W[None] * delta
        A = np.einsum("lpq,pqc->lc", WD, gh)
        gx = np.array([G[a, 0], G[a, 1], np.zeros(2), np.zeros(2)])
        gy = np.array([np.zeros(2), np.zeros(2), G[b, 0], G[b, 1]])
        g = gx + gy
        B = A + sh * g
        if not hessian:
            return sh, B, None
        Hh = K.hess(d)
        M = np.einsum("lpq,mpq,pqcd->lmcd", WD, delta, Hh, optimize=True)
        M += np.einsum("lc,md->lmcd", A, g)
        M += np.einsum("lc,md->lmcd", g, A)
        M += sh * (np.einsum("lc,md->lmcd", g, g)
                   - np.einsum("mc,ld->lmcd", gx, gx)
                   - np.einsum("mc,ld->lmcd", gy, gy))
        return sh, B, M

    rows = map_ordered(lambda a: [pair(a, b) for b in range(n)], range(n))

    value = 0.0
    Bv = np.zeros((n, 2))
    Mv = np.zeros((n, n, 2, 2)) if hessian else None
    for a, row in enumerate(rows):
        for b, (sh, B, M) in enumerate(row):
            idx = np.array([a, (a + 1) % n, b, (b + 1) % n])
            value += sh
            np.add.at(Bv, idx, B)
            if hessian:
                np.add.at(Mv, (idx[:, None], idx[None, :]), M)

    if not hessian:
        return ShapeDerivatives(value, Bv.reshape(-1))
    raw = Mv.transpose(0, 2, 1, 3).reshape(2 * n, 2 * n)
    norm = np.linalg.norm(raw)
    defect = float(np.linalg.norm(raw - raw.T) / norm) if norm > 0 else 0.0
    if defect > ASYMMETRY_WARNING:
        logger.warning("Hessian asymmetry defect %.3g exceeds %.0e", defect, ASYMMETRY_WARNING)
    return ShapeDerivatives(value, Bv.reshape(-1), 0.5 * (raw + raw.T), defect)


def grad_J(P, K, degree=None, node=None):
    return shape_derivatives(P, K, degree, node, hessian=False).gradient


def hess_J(P, K, degree=None, node=None):
    return shape_derivatives(P, K, degree, node, hessian=True).hessian


# ─── Area ────────────────────────────────────────────────────────────────────

def grad_area(P):
    v = P.vertices
    nxt = np.roll(v, -1, axis=0)
    prv = np.roll(v, 1, axis=0)
    g = 0.5 * np.column_stack([nxt[:, 1] - prv[:, 1], prv[:, 0] - nxt[:, 0]])
    return g.reshape(-1)


def hess_area(P):
    n = P.n
    H = np.zeros((2 * n, 2 * n))
    for i in range(n):
        nxt, prv = (i + 1) % n, (i - 1) % n
        H[2 * i, 2 * nxt + 1] += 0.5
        H[2 * nxt + 1, 2 * i] += 0.5
        H[2 * i, 2 * prv + 1] -= 0.5
        H[2 * prv + 1, 2 * i] -= 0.5
    return H


# ─── Vertex fields ───────────────────────────────────────────────────────────

def translation_field(P, axis):
    theta = np.zeros((P.n, 2))
    theta[:, axis] = 1.0
    return theta.reshape(-1)


def rotation_field(P, center=None):
    """θ_i = rot90(A_i - c), the infinitesimal rotation about c (default centroid)."""
    from .geometry import centroid

    c = centroid(P) if center is None else np.asarray(center, dtype=float)
    rel = P.vertices - c
    return np.column_stack([-rel[:, 1], rel[:, 0]]).reshape(-1)


def scaling_field(P, center=None):
    from .geometry import centroid

    c = centroid(P) if center is None else np.asarray(center, dtype=float)
    return (P.vertices - c).reshape(-1)


def _side_field(P, i, speed_start, speed_end):
    """Move side i with the given normal speeds at its endpoints.

    Each endpoint slides along the line of its other side, so only side i
    moves in the normal direction.
    """
    n = P.n
    v = P.vertices
    a, b = v[i], v[(i + 1) % n]
    e = b - a
    nu = np.array([e[1], -e[0]]) / np.linalg.norm(e)
    u_prev = a - v[(i - 1) % n]
    u_next = v[(i + 2) % n] - b
    theta = np.zeros((n, 2))
    theta[i] = speed_start / np.dot(u_prev, nu) * u_prev
    theta[(i + 1) % n] = speed_end / np.dot(u_next, nu) * u_next
    return theta.reshape(-1)


def side_rotation_field(P, i):
    """Rotation of side i about its midpoint: normal speed ±|x M_i|."""
    half = 0.5 * side_lengths(P)[i]
    return _side_field(P, i, half, -half)


def side_parallel_field(P, i):
    """Unit outward translation of side i."""
    return _side_field(P, i, 1.0, 1.0)


# ─── Side movements ──────────────────────────────────────────────────────────

def side_rotation_derivative(P, i, K, degree=None):
    """2 [∫_{A_i}^{M_i} v |x M_i| - ∫_{M_i}^{A_i+1} v |x M_i|]."""
    _, _, _, first_arm, second_arm = half_side_integrals(P, K, degree)
    return 2.0 * float(first_arm[i] - second_arm[i])


def side_parallel_derivative(P, i, K, degree=None):
    """2 ∫_{S_i} v."""
    _, first, second, _, _ = half_side_integrals(P, K, degree)
    return 2.0 * float(first[i] + second[i])


def side_area_derivatives(P, i):
    """Area rates (rotation, parallel) of side i; (0, |S_i|) for any polygon."""
    g = grad_area(P)
    return (float(g @ side_rotation_field(P, i)), float(g @ side_parallel_field(P, i)))


def _circle_breaks(a, b, r):
    """Parameters t in (0, 1) where a + t (b - a) meets the circle |x| = r."""
    d = b - a
    A, B, C = d @ d, 2.0 * (a @ d), a @ a - r * r
    disc = B * B - 4.0 * A * C
    if disc <= 0.0:
        return []
    root = np.sqrt(disc)
    return sorted(t for t in ((-B - root) / (2 * A), (-B + root) / (2 * A)) if 0.0 < t < 1.0)


def _segment_integral(f, a, b, weight, breaks, points=16):
    """∫ f(x) weight(t) over the segment a..b, split at ``breaks``."""
    t, w = gauss_legendre_unit(points)
    knots = [0.0, *breaks, 1.0]
    length = float(np.linalg.norm(b - a))
    total = 0.0
    for lo, hi in zip(knots[:-1], knots[1:]):
        s = lo + (hi - lo) * t
        x = a[None, :] + s[:, None] * (b - a)[None, :]
        total += (hi - lo) * length * float(np.dot(w, f(x) * weight(s)))
    return total


def E_side_derivatives(P, i, K):
    """(rotation, parallel) rates of E_h = ∫_P h for side i.

    rotation = ∫_{A_i}^{M_i} h |x M_i| - ∫_{M_i}^{A_i+1} h |x M_i|, parallel = ∫_{S_i} h.
    """
    v = P.vertices
    a, b = v[i], v[(i + 1) % P.n]
    mid = 0.5 * (a + b)
    half = 0.5 * float(np.linalg.norm(b - a))
    breaks = (lambda p, q: _circle_breaks(p, q, K.r)) if K.variant == CHAR else (lambda p, q: [])
    first_arm = _segment_integral(K.value, a, mid, lambda s: half * (1.0 - s), breaks(a, mid))
    second_arm = _segment_integral(K.value, mid, b, lambda s: half * s, breaks(mid, b))
    parallel = _segment_integral(K.value, a, b, np.ones_like, breaks(a, b))
    return first_arm - second_arm, parallel


# ─── Finite-difference validation ────────────────────────────────────────────

def _perturbed(P, theta, eps):
    from .geometry import Polygon

    return Polygon(P.vertices + eps * theta.reshape(-1, 2))


def fd_gradient_check(P, K, degree=None, eps=1e-5, directions=3, seed=0):
    """Compare B·θ with central differences of J along random unit fields."""
    node = fan_node(P)
    B = grad_J(P, K, degree, node=node)
    rng = np.random.default_rng(seed)
    errors = []
    for _ in range(directions):
        theta = rng.standard_normal(2 * P.n)
        theta /= np.linalg.norm(theta)
        fd = (J(_perturbed(P, theta, eps), K, degree, node=node).value
              - J(_perturbed(P, theta, -eps), K, degree, node=node).value) / (2.0 * eps)
        exact = float(B @ theta)
        errors.append(abs(exact - fd) / max(abs(exact), 1e-300))
    return {"kernel": K.spec(), "eps": eps, "relative_errors": errors,
            "max_relative_error": max(errors)}


def fd_hessian_check(P, K, degree=None, eps=1e-5, directions=3, seed=0):
    """Compare Mθ with central differences of B along random unit fields."""
    node = fan_node(P)
    M = hess_J(P, K, degree, node=node)
    rng = np.random.default_rng(seed)
    errors = []
    for _ in range(directions):
        theta = rng.standard_normal(2 * P.n)
        theta /= np.linalg.norm(theta)
        fd = (grad_J(_perturbed(P, theta, eps), K, degree, node=node)
              - grad_J(_perturbed(P, theta, -eps), K, degree, node=node)) / (2.0 * eps)
        exact = M @ theta
        errors.append(float(np.linalg.norm(exact - fd) / np.linalg.norm(exact)))
    return {"kernel": K.spec(), "eps": eps, "relative_errors": errors,
            "max_relative_error": max(errors)}
