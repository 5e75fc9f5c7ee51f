"""
Nonlocal polygon energies.

J_h(P) = ∫_P∫_P h(x - y) dx dy over ordered fan-triangle pairs, the single
integral E_h(P) = ∫_P h(x) dx, the exact r-perimeter P_r, scale-invariant and
Lagrangian objectives, criticality residuals of the side equations and a
log-domain evaluator for very large powers.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import config
from .errors import PolyrieszError
from .geometry import (
    area,
    disc_intersection_areas,
    fan_vertices,
    polygon_disc_intersection_area,
    point_segment_distances,
    regular_ngon,
)
from .kernels import CHAR, Kernel
from .quadrature import cell_points, fan_quadrature, gauss_legendre_unit, subdivide, triangle_areas, triangle_rule

logger = logging.getLogger(__name__)

# Event-aware subdivision of the exact disc-overlap path.
DISC_DEGREE = 12
DISC_DEPTH = 8
_MAX_CELLS = 400_000
_CHUNK = 16_384

LINE_POINTS = 16


@dataclass(frozen=True)
class EnergyReport:
    value: float
    quadrature_degree: int
    triangle_pairs: int
    kernel: Kernel
    method: str = "quadrature"

    def to_dict(self):
        return {
            "value": self.value,
            "degree": self.quadrature_degree,
            "triangle_pairs": self.triangle_pairs,
            "kernel": self.kernel.spec(),
            "method": self.method,
        }


def map_ordered(fn, items):
    """Map over items with the configured thread count, results in input order."""
    items = list(items)
    threads = config.get_threads()
    if threads <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as pool:
        return list(pool.map(fn, items))


# ─── Double integrals ────────────────────────────────────────────────────────

def pair_contributions(P, K, degree=None, node=None, refine=0):
    """N x N matrix of ∫_{T_a}∫_{T_b} h(x - y) over the fan triangles."""
    degree = K.default_degree() if degree is None else degree
    fq = fan_quadrature(P, degree, node=node, refine=refine)

    def row(a):
        X, wa = fq.points[a], fq.weights[a]
        out = np.empty(fq.n)
        for b in range(fq.n):
            H = K.value(X[:, None, :] - fq.points[b][None, :, :])
            out[b] = wa @ H @ fq.weights[b]
        return out

    return np.array(map_ordered(row, range(fq.n)))


def J(P, K, degree=None, node=None, exact=True, refine=4):
    """J_h(P) over all N² ordered fan-triangle pairs.

    The characteristic kernel takes the exact path (disc intersection areas
    under a single quadrature) unless ``exact`` is False, in which case the
    kernel is point-sampled on fan triangles refined ``refine`` times with a
    degree-4 rule per cell.
    """
    n = P.n
    if K.variant == CHAR and exact:
        value = disc_overlap_integral(P, K.r, node=node)
        return EnergyReport(value, DISC_DEGREE, n * n, K, method="exact-disc")
    sampled = K.variant == CHAR
    if degree is None:
        degree = 4 if sampled else K.default_degree()
    contrib = pair_contributions(P, K, degree, node=node, refine=refine if sampled else 0)
    value = math.fsum(contrib.ravel().tolist())
    return EnergyReport(value, degree, n * n, K)


def E(P, K, degree=None, node=None):
    """∫_P h(x) dx with the kernel centred at the origin."""
    if K.variant == CHAR:
        return polygon_disc_intersection_area(P, (0.0, 0.0), K.r)
    degree = K.default_degree() if degree is None else degree
    fq = fan_quadrature(P, degree, node=node)
    return math.fsum((fq.weights * K.value(fq.points)).ravel().tolist())


def potential(P, K, points, degree=None, node=None):
    """v_P(x) = ∫_P h(x - y) dy at each row of ``points``."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if K.variant == CHAR:
        return disc_intersection_areas(P.vertices, pts, K.r)
    degree = K.default_degree() if degree is None else degree
    fq = fan_quadrature(P, degree, node=node)
    Y = fq.points.reshape(-1, 2)
    W = fq.weights.reshape(-1)
    out = np.empty(len(pts))
    step = max(1, _CHUNK // max(1, len(W) // 64))
    for lo in range(0, len(pts), step):
        d = pts[lo:lo + step, None, :] - Y[None, :, :]
        out[lo:lo + step] = K.value(d) @ W
    return out


# ─── Exact disc-overlap path ─────────────────────────────────────────────────

def _point_triangle_distances(points, tris):
    """Distance from each point (N, 2) to each triangle (C, 3, 2), shape (C, N)."""
    dist = np.full((len(tris), len(points)), np.inf)
    inside = np.ones((len(tris), len(points)), dtype=bool)
    for k in range(3):
        a = tris[:, k]
        b = tris[:, (k + 1) % 3]
        dist = np.minimum(dist, point_segment_distances(points, a, b).T)
        e = b - a
        rel = points[None, :, :] - a[:, None, :]
        cross = e[:, None, 0] * rel[..., 1] - e[:, None, 1] * rel[..., 0]
        inside &= cross >= 0.0
    return np.where(inside, 0.0, dist)


def _event_mask(cells, vertices, r):
    """Cells crossed by a circle event of x -> |P ∩ B_r(x)|.

    Events: |x - v| = r for a vertex v, and dist(x, edge) = r with the foot
    of the perpendicular on the edge.
    """
    rel_v = cells[:, :, None, :] - vertices[None, None, :, :]
    dmax = np.linalg.norm(rel_v, axis=-1).max(axis=1)
    dmin = _point_triangle_distances(vertices, cells)
    vertex_event = (dmin <= r) & (r <= dmax)

    a = vertices
    e = np.roll(vertices, -1, axis=0) - a
    length = np.linalg.norm(e, axis=1)
    u = e / length[:, None]
    nrm = np.column_stack([-u[:, 1], u[:, 0]])
    rel = cells[:, :, None, :] - a[None, None, :, :]
    sd = np.einsum("cknd,nd->ckn", rel, nrm)
    tau = np.einsum("cknd,nd->ckn", rel, u)
    lo, hi = sd.min(axis=1), sd.max(axis=1)
    crosses = ((lo <= r) & (r <= hi)) | ((lo <= -r) & (-r <= hi))
    overlaps = (tau.max(axis=1) >= 0.0) & (tau.min(axis=1) <= length[None, :])
    edge_event = crosses & overlaps
    return vertex_event.any(axis=1) | edge_event.any(axis=1)


def event_cells(P, r, depth=DISC_DEPTH, node=None):
    """Fan triangles refined where circle events cross them."""
    vertices = P.vertices
    cells = fan_vertices(P, node)
    leaves = []
    for level in range(depth):
        mask = _event_mask(cells, vertices, r)
        leaves.append(cells[~mask])
        if not mask.any():
            cells = cells[:0]
            break
        if 4 * mask.sum() > _MAX_CELLS:
            logger.warning("disc-overlap subdivision capped at level %d (%d event cells)",
                           level, int(mask.sum()))
            cells = cells[mask]
            break
        cells = subdivide(cells[mask])
    leaves.append(cells)
    out = np.concatenate(leaves)
    logger.debug("event subdivision r=%g: %d leaf cells", r, len(out))
    return out


def disc_overlap_integral(P, r, depth=DISC_DEPTH, node=None):
    """∫_P |P ∩ B_r(x)| dx, the exact-path J for the characteristic kernel."""
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    cells = event_cells(P, r, depth=depth, node=node)
    pts, w = cell_points(cells, triangle_rule(DISC_DEGREE))
    pts = pts.reshape(-1, 2)
    w = w.reshape(-1)
    partial = []
    for lo in range(0, len(pts), _CHUNK):
        overlap = disc_intersection_areas(P.vertices, pts[lo:lo + _CHUNK], r)
        partial.append(float(np.dot(w[lo:lo + _CHUNK], overlap)))
    return math.fsum(partial)


def P_r(P, r, depth=DISC_DEPTH, node=None):
    """Nonlocal r-perimeter |P| π r² - J_r(P), evaluated on the exact path."""
    value = area(P) * math.pi * r * r - disc_overlap_integral(P, r, depth=depth, node=node)
    return max(0.0, value)


def nonlocal_perimeter(P, K, degree=None):
    """P_h = |P| ‖h‖_L1 - J_h for integrable kernels."""
    if not K.is_integrable:
        raise PolyrieszError(f"kernel {K.spec()} is not integrable over the plane")
    if K.variant == CHAR:
        return P_r(P, K.r)
    return area(P) * K.l1_norm() - J(P, K, degree).value


def heat_content(P, t, Q=12, degree=None):
    """Heat content (4πt)^-1 J_{h_Q}(P) with the truncated heat kernel."""
    return J(P, Kernel.truncated_heat(Q, t), degree).value / (4.0 * math.pi * t)


# ─── Objectives ──────────────────────────────────────────────────────────────

def scale_invariant_J(P, k, degree=None):
    """|P|^{-(k+4)/2} ∫_P∫_P |x - y|^k."""
    if int(k) != k or k < 2 or int(k) % 2:
        raise ValueError(f"scale-invariant energy needs an even k >= 2, got {k}")
    return area(P) ** (-(k + 4) / 2.0) * J(P, Kernel.power(k), degree).value


def lagrange_multiplier_hQ(n, a, Q, t, degree=None):
    """ℓ_Q making the regular N-gon of area ``a`` critical for J_{h_Q} - ℓ |P|."""
    from .derivatives import grad_area, grad_J

    ref = regular_ngon(n, area=a)
    B = grad_J(ref, Kernel.truncated_heat(Q, t), degree)
    g = grad_area(ref)
    return float(np.dot(B, g) / np.dot(g, g))


def lagrangian_hQ(P, Q, t, degree=None):
    """(J_{h_Q}(P) - ℓ_Q |P|, ℓ_Q) with ℓ_Q taken at the regular N-gon of equal area."""
    a = area(P)
    ell = lagrange_multiplier_hQ(P.n, a, Q, t, degree)
    value = J(P, Kernel.truncated_heat(Q, t), degree).value - ell * a
    return value, ell


# ─── Criticality ─────────────────────────────────────────────────────────────

@dataclass(frozen=True, eq=False)
class CriticalityReport:
    """Per-side residuals of the side-rotation and side-parallel equations."""

    rotation: np.ndarray
    parallel: np.ndarray
    side_means: np.ndarray
    mean_value: float
    rotation_scale: float
    parallel_scale: float

    def max_relative(self):
        return max(float(np.abs(self.rotation).max()) / self.rotation_scale,
                   float(np.abs(self.parallel).max()) / self.parallel_scale)

    def to_dict(self):
        return {
            "rotation": self.rotation.tolist(),
            "parallel": self.parallel.tolist(),
            "mean_value": self.mean_value,
            "rotation_scale": self.rotation_scale,
            "parallel_scale": self.parallel_scale,
            "max_relative": self.max_relative(),
        }


def half_side_integrals(P, K, degree=None, points=LINE_POINTS, node=None):
    """Gauss-Legendre data for ∫ v_P on each half side.

    Returns (lengths, first, second, first_arm, second_arm) where ``first`` and
    ``second`` are ∫ v over A_i..M_i and M_i..A_i+1, and the ``*_arm`` arrays
    are the same integrals weighted by |x M_i|.
    """
    t, w = gauss_legendre_unit(points)
    a, b = P.edges()
    mid = 0.5 * (a + b)
    lengths = np.linalg.norm(b - a, axis=1)
    half = 0.5 * lengths
    pts1 = a[:, None, :] + t[None, :, None] * (mid - a)[:, None, :]
    pts2 = mid[:, None, :] + t[None, :, None] * (b - mid)[:, None, :]
    v = potential(P, K, np.concatenate([pts1, pts2]).reshape(-1, 2), degree, node=node)
    v1, v2 = v.reshape(2, P.n, points)
    first = half * (v1 @ w)
    second = half * (v2 @ w)
    first_arm = half * half * (v1 @ (w * (1.0 - t)))
    second_arm = half * half * (v2 @ (w * t))
    return lengths, first, second, first_arm, second_arm


def criticality_residuals(P, K, degree=None, node=None):
    """Residuals of the side equations.

    rotation_i = ∫_{A_i}^{M_i} v |x M_i| - ∫_{M_i}^{A_i+1} v |x M_i|
    parallel_i = (1/ℓ_i) ∫_{S_i} v - mean over sides
    """
    lengths, first, second, first_arm, second_arm = half_side_integrals(P, K, degree, node=node)
    rotation = first_arm - second_arm
    side_means = (first + second) / lengths
    mean_value = float(side_means.mean())
    scale = max(abs(mean_value), 1e-300)
    return CriticalityReport(
        rotation=rotation,
        parallel=side_means - mean_value,
        side_means=side_means,
        mean_value=mean_value,
        rotation_scale=scale * float(np.mean(lengths)) ** 2,
        parallel_scale=scale,
    )


# ─── Large powers in the log domain ──────────────────────────────────────────

def _logsumexp(x):
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        return -np.inf
    m = np.max(x)
    if not np.isfinite(m):
        return m
    return float(m + np.log(np.sum(np.exp(x - m))))


def _log_pair_batch(T1, T2, rule, k):
    """log ∫_{T1}∫_{T2} |x - y|^k for batches of triangle pairs."""
    X, wx = cell_points(T1, rule)
    Y, wy = cell_points(T2, rule)
    out = np.empty(len(T1))
    step = max(1, 200_000 // (rule.size * rule.size))
    for lo in range(0, len(T1), step):
        sl = slice(lo, lo + step)
        d = X[sl, :, None, :] - Y[sl, None, :, :]
        with np.errstate(divide="ignore"):
            logs = (0.5 * k) * np.log(np.einsum("bpqk,bpqk->bpq", d, d))
            logs += np.log(wx[sl])[:, :, None] + np.log(wy[sl])[:, None, :]
        m = logs.reshape(len(logs), -1).max(axis=1)
        out[sl] = m + np.log(np.exp(logs - m[:, None, None]).sum(axis=(1, 2)))
    return out


def log_power_energy(P, k, degree=12, tau=4.0, drop=1e-16, coarse=1e-9, max_depth=14,
                     max_pairs=4_000_000):
    """log ∫_P∫_P |x - y|^k by adaptive triangle-pair refinement.

    A pair is integrated once k log(dmax/dmin) <= tau on it, or once its upper
    bound |T1||T2| dmax^k is below ``coarse`` relative to the total; pairs
    below ``drop`` relative are discarded. Even k <= 28 use the exact rule.
    """
    if not 0 < k <= 4096:
        raise ValueError(f"power must lie in (0, 4096], got {k}")
    if float(k) == int(k) and int(k) % 2 == 0 and k <= 28:
        return math.log(J(P, Kernel.power(k)).value)

    rule = triangle_rule(degree)
    tris = fan_vertices(P)
    n = len(tris)
    ia, ib = np.triu_indices(n)
    T1, T2 = tris[ia], tris[ib]
    log_mult = np.where(ia == ib, 0.0, math.log(2.0))
    log_ref = _logsumexp(_log_pair_batch(T1, T2, rule, k) + log_mult)

    accepted = []
    pairs = len(T1)
    for depth in range(max_depth + 1):
        if len(T1) == 0:
            break
        c1, c2 = T1.mean(axis=1), T2.mean(axis=1)
        rad1 = np.linalg.norm(T1 - c1[:, None], axis=-1).max(axis=1)
        rad2 = np.linalg.norm(T2 - c2[:, None], axis=-1).max(axis=1)
        dmax = np.linalg.norm(T1[:, :, None, :] - T2[:, None, :, :], axis=-1).max(axis=(1, 2))
        dmin = np.maximum(np.linalg.norm(c1 - c2, axis=1) - rad1 - rad2, 0.0)
        log_area = np.log(np.abs(triangle_areas(T1))) + np.log(np.abs(triangle_areas(T2)))
        with np.errstate(divide="ignore"):
            upper = log_area + k * np.log(dmax) + log_mult
            smooth = k * (np.log(dmax) - np.log(dmin)) <= tau
        keep = upper >= log_ref + math.log(drop)
        done = keep & (smooth | (upper < log_ref + math.log(coarse)) | (depth == max_depth))
        if pairs > max_pairs:
            logger.warning("log_power_energy: pair budget exhausted at depth %d", depth)
            done = keep
        split = keep & ~done
        if done.any():
            accepted.append(_log_pair_batch(T1[done], T2[done], rule, k) + log_mult[done])
        if not split.any():
            break
        S1 = subdivide(T1[split]).reshape(4, -1, 3, 2)
        S2 = subdivide(T2[split]).reshape(4, -1, 3, 2)
        lm = log_mult[split]
        T1 = np.concatenate([S1[i] for i in range(4) for _ in range(4)])
        T2 = np.concatenate([S2[j] for _ in range(4) for j in range(4)])
        log_mult = np.tile(lm, 16)
        pairs += len(T1)
    logger.debug("log_power_energy k=%g: %d pairs visited", k, pairs)
    return _logsumexp(np.concatenate(accepted)) if accepted else -np.inf
