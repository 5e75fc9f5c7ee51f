"""
Second-order analysis of polygon energies.

Eigen-decomposition of the assembled Hessians, restricted to the tangent
space of the area constraint where needed, with sign counts and the
classification of zero modes against the rigid-motion and scaling fields.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from .derivatives import (
    grad_area,
    hess_area,
    rotation_field,
    scaling_field,
    shape_derivatives,
    translation_field,
)
from .errors import ConvergenceError
from .geometry import area, regular_ngon
from .kernels import Kernel

logger = logging.getLogger(__name__)

ZERO_TOL_FACTOR = 1e-7
# regular N-gons for the spectral tables are inscribed in the unit circle
SPECTRUM_CIRCUMRADIUS = 1.0
GENERATORS = ("translation-x", "translation-y", "rotation", "scaling")


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    eigenvalues: np.ndarray
    zero_count: int
    positive_count: int
    negative_count: int
    zero_mode_overlaps: list
    zero_tolerance: float
    space: str = "full"
    generators: tuple = GENERATORS

    @property
    def dimension(self):
        return len(self.eigenvalues)

    def nonzero(self):
        return self.eigenvalues[np.abs(self.eigenvalues) > self.zero_tolerance]

    def signature(self):
        return {"zero": self.zero_count, "positive": self.positive_count,
                "negative": self.negative_count}

    def to_dict(self):
        return {
            "space": self.space,
            "dimension": self.dimension,
            "eigenvalues": self.eigenvalues.tolist(),
            "zero_count": self.zero_count,
            "positive_count": self.positive_count,
            "negative_count": self.negative_count,
            "zero_tolerance": self.zero_tolerance,
            "generators": list(self.generators),
            "zero_mode_overlaps": [list(o) for o in self.zero_mode_overlaps],
        }

    def to_rows(self):
        """One CSV row per eigenvalue with its classification tag."""
        rows = []
        for i, lam in enumerate(self.eigenvalues):
            if abs(lam) <= self.zero_tolerance:
                tag = "zero"
            else:
                tag = "positive" if lam > 0 else "negative"
            rows.append({"index": i, "eigenvalue": float(lam), "class": tag})
        return rows


def sym_eigen(M):
    """Eigenvalues (ascending) and orthonormal eigenvectors of a symmetric matrix."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ConvergenceError("eigensolver did not converge: matrix has non-finite entries")
    norm = np.linalg.norm(M)
    if norm and np.linalg.norm(M - M.T) > 1e-8 * norm:
        raise ValueError("matrix is not symmetric")
    S = 0.5 * (M + M.T)
    try:
        lam, V = np.linalg.eigh(S)
    except np.linalg.LinAlgError as e:
        raise ConvergenceError(f"eigensolver did not converge: {e}") from None
    scale = max(norm, 1e-300)
    residual = np.linalg.norm(S @ V - V * lam)
    if residual > 1e-10 * scale and norm > 0:
        raise ConvergenceError(f"eigen residual {residual:.3g} exceeds 1e-10 relative")
    return lam, V


def _generator_basis(P, project=None):
    """Orthonormal columns spanned by the generator fields, with their names."""
    fields = [translation_field(P, 0), translation_field(P, 1), rotation_field(P), scaling_field(P)]
    kept, names = [], []
    for name, f in zip(GENERATORS, fields):
        v = f if project is None else project(f)
        if np.linalg.norm(v) > 1e-8 * np.linalg.norm(f):
            kept.append(v)
            names.append(name)
    Q, _ = np.linalg.qr(np.column_stack(kept))
    return Q, tuple(names)


def _classify(lam, vectors, basis, names, tol, space):
    zero = np.abs(lam) <= tol
    overlaps = [tuple(float(c) for c in (basis.T @ vectors[:, i]) ** 2) for i in np.flatnonzero(zero)]
    return SpectrumReport(
        eigenvalues=lam,
        zero_count=int(zero.sum()),
        positive_count=int((lam > tol).sum()),
        negative_count=int((lam < -tol).sum()),
        zero_mode_overlaps=overlaps,
        zero_tolerance=tol,
        space=space,
        generators=names,
    )


def full_spectrum(M, P, zero_tol_factor=ZERO_TOL_FACTOR):
    """Spectrum of M on the full 2N coordinate space."""
    lam, V = sym_eigen(M)
    tol = zero_tol_factor * max(float(np.abs(lam).max()), 1e-300)
    basis, names = _generator_basis(P)
    return _classify(lam, V, basis, names, tol, "full")


def constrained_spectrum(M, g, P, zero_tol_factor=ZERO_TOL_FACTOR):
    """Spectrum of M restricted to the orthogonal complement of g (dimension 2N - 1)."""
    g = np.asarray(g, dtype=float)
    gnorm = np.linalg.norm(g)
    if not gnorm > 0:
        raise ValueError("zero constraint gradient")
    Z = null_space(g[None, :])
    lam, V = sym_eigen(Z.T @ (0.5 * (M + M.T)) @ Z)
    # ‖M‖₂ keeps the threshold meaningful when the restriction vanishes
    scale = max(float(np.abs(lam).max()), float(np.linalg.norm(M, 2)), 1e-300)
    tol = zero_tol_factor * scale
    ghat = g / gnorm
    basis, names = _generator_basis(P, project=lambda f: f - ghat * (ghat @ f))
    return _classify(lam, Z @ V, basis, names, tol, "area-tangent")


# ─── Hessians of the studied objectives ──────────────────────────────────────

def hess_scale_invariant(P, k, degree=None):
    """Hessian of F = |P|^α J_k(P), α = -(k + 4)/2, by the chain rule."""
    if int(k) != k or k < 2 or int(k) % 2:
        raise ValueError(f"scale-invariant energy needs an even k >= 2, got {k}")
    sd = shape_derivatives(P, Kernel.power(k), degree)
    Jv, dJ, HJ = sd.value, sd.gradient, sd.hessian
    A = area(P)
    dA, HA = grad_area(P), hess_area(P)
    alpha = -(k + 4) / 2.0
    cross = np.outer(dJ, dA) + np.outer(dA, dJ)
    return (A ** alpha * HJ
            + alpha * A ** (alpha - 1) * cross
            + alpha * (alpha - 1) * A ** (alpha - 2) * Jv * np.outer(dA, dA)
            + alpha * A ** (alpha - 1) * Jv * HA)


def hess_lagrangian(P, K, degree=None):
    """(M_L, ∇|P|, ℓ) for J_h - ℓ |P|, ℓ the projection of ∇J on ∇|P| at P."""
    sd = shape_derivatives(P, K, degree)
    g = grad_area(P)
    ell = float(sd.gradient @ g / (g @ g))
    return sd.hessian - ell * hess_area(P), g, ell


def hess_lagrangian_hQ(P, Q, t, degree=None):
    return hess_lagrangian(P, Kernel.truncated_heat(Q, t), degree)


def scale_invariant_spectrum(n, k, degree=None):
    P = regular_ngon(n, circumradius=SPECTRUM_CIRCUMRADIUS)
    return full_spectrum(hess_scale_invariant(P, k, degree), P)


def lagrangian_spectrum(n, Q, t, degree=None):
    P = regular_ngon(n, circumradius=SPECTRUM_CIRCUMRADIUS)
    M, g, _ = hess_lagrangian_hQ(P, Q, t, degree)
    return constrained_spectrum(M, g, P)


@dataclass(frozen=True, eq=False)
class MonotonicityScan:
    t_grid: tuple
    reports: list
    violations: list = field(default_factory=list)

    def to_dict(self):
        return {"t_grid": list(self.t_grid),
                "reports": [r.to_dict() for r in self.reports],
                "violations": self.violations}


def monotonicity_scan_t(n, Q, t_grid, degree=None):
    """Lagrangian spectra of the regular N-gon along increasing t.

    A violation is recorded when some nonzero |λ| (matched in sorted order)
    does not decrease between consecutive t values.
    """
    t_grid = tuple(float(t) for t in t_grid)
    if any(t <= 0 for t in t_grid) or any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise ValueError("t_grid must be positive and increasing")
    reports = [lagrangian_spectrum(n, Q, t, degree) for t in t_grid]
    violations = []
    for (t0, r0), (t1, r1) in zip(zip(t_grid, reports), zip(t_grid[1:], reports[1:])):
        a0 = np.sort(np.abs(r0.nonzero()))
        a1 = np.sort(np.abs(r1.nonzero()))
        if len(a0) != len(a1):
            violations.append({"t": [t0, t1], "reason": "nonzero count changed"})
        elif np.any(a1 >= a0):
            violations.append({"t": [t0, t1], "reason": "|eigenvalue| did not decrease"})
    for v in violations:
        logger.warning("monotonicity scan N=%d Q=%d: %s between t=%g and t=%g",
                       n, Q, v["reason"], *v["t"])
    return MonotonicityScan(t_grid, reports, violations)
