"""
Area-constrained optimization of polygon energies over vertex coordinates.

Differentiable objectives run an augmented-Lagrangian outer loop

    L(x) = f(x) - μ c(x) + ρ/2 c(x)²,   c(x) = |P(x)| - area_target,

around projected-gradient inner steps (tangential Barzilai-Borwein step plus
a Newton step along the constraint normal) with Armijo backtracking. Steps are
capped so that no vertex moves more than a fraction of its shortest incident
side, and trial iterates that are not simple polygons are rejected by step
halving. The exact r-perimeter is minimized by coordinate pattern search
instead.
"""
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .derivatives import grad_area, shape_derivatives
from .energy import DISC_DEPTH, P_r, map_ordered
from .errors import DegeneratingIterateError, KernelCapabilityError, PolygonValidationError
from .geometry import (
    Polygon,
    area,
    centroid,
    random_polygon,
    regular_ngon,
    scale_to_area,
    side_lengths,
)
from .kernels import Kernel

logger = logging.getLogger(__name__)

OBJECTIVE_J = "J"
OBJECTIVE_PR = "P_r"

_TINY = 1e-300


@dataclass(frozen=True)
class OptimizationConfig:
    objective: str = OBJECTIVE_J
    kernel: Kernel = None
    direction: str = "min"
    r: float = None
    area_target: float = math.pi
    max_iters: int = 3000
    max_outer: int = 12
    gradient_tolerance: float = 1e-8
    constraint_tolerance: float = 1e-9
    armijo: float = 1e-4
    initial_step: float = 0.05
    max_shrinks: int = 20
    max_vertex_move: float = 0.25
    penalty0: float = 10.0
    penalty_factor: float = 10.0
    penalty_max: float = 1e6
    inner_decay: float = 0.1
    pattern_step: float = 0.1
    pattern_step_min: float = 1e-6
    pr_depth: int = DISC_DEPTH
    degree: int = None
    seed: int = 0

    def __post_init__(self):
        if self.objective not in (OBJECTIVE_J, OBJECTIVE_PR):
            raise ValueError(f"unknown objective {self.objective!r}; expected 'J' or 'P_r'")
        if self.objective == OBJECTIVE_J and self.kernel is None:
            raise ValueError("objective 'J' needs a kernel")
        if self.objective == OBJECTIVE_PR and not (self.r is not None and self.r > 0):
            raise ValueError(f"objective 'P_r' needs r > 0, got {self.r}")
        if self.direction not in ("min", "max"):
            raise ValueError(f"direction must be 'min' or 'max', got {self.direction!r}")
        if not self.area_target > 0:
            raise ValueError(f"area_target must be positive, got {self.area_target}")
        for name in ("gradient_tolerance", "constraint_tolerance", "armijo", "initial_step",
                     "pattern_step", "pattern_step_min", "max_vertex_move"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.max_iters < 0 or self.max_outer < 1 or self.max_shrinks < 1:
            raise ValueError("iteration limits must be positive")

    def describe(self):
        out = {"objective": self.objective, "direction": self.direction,
               "area_target": self.area_target, "max_iters": self.max_iters,
               "gradient_tolerance": self.gradient_tolerance, "seed": self.seed}
        if self.kernel is not None:
            out["kernel"] = self.kernel.spec()
        if self.r is not None:
            out["r"] = self.r
        return out


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    outer: int
    objective: float
    violation: float
    grad_norm: float
    merit: float

    def to_dict(self):
        return {"iteration": self.iteration, "outer": self.outer, "objective": self.objective,
                "violation": self.violation, "grad_norm": self.grad_norm, "merit": self.merit}


@dataclass(frozen=True, eq=False)
class OptimizationTrace:
    records: tuple
    final: Polygon
    shape_distance_to_regular: float
    converged: bool
    config: OptimizationConfig
    multiplier: float = None
    notes: list = field(default_factory=list)

    @property
    def final_objective(self):
        return self.records[-1].objective

    @property
    def iterations(self):
        return self.records[-1].iteration

    def to_rows(self):
        return [r.to_dict() for r in self.records]

    def to_dict(self):
        return {
            "config": self.config.describe(),
            "converged": self.converged,
            "iterations": self.iterations,
            "final_objective": self.final_objective,
            "final_violation": self.records[-1].violation,
            "shape_distance_to_regular": self.shape_distance_to_regular,
            "multiplier": self.multiplier,
            "final_polygon": self.final.to_dict(),
            "notes": list(self.notes),
            "trace": self.to_rows(),
        }


# ─── Shape distance ──────────────────────────────────────────────────────────

def _normalized_complex(P):
    Q = scale_to_area(P, math.pi)
    rel = Q.vertices - centroid(Q)
    return rel[:, 0] + 1j * rel[:, 1]


def shape_distance(P, Q):
    """RMS vertex distance minimized over rotation, relabeling and reflection.

    Both polygons are normalized to area π and centred at their centroids; the
    optimal rotation for a fixed labeling has the closed form angle
    arg Σ z_i conj(w_i).
    """
    if P.n != Q.n:
        raise ValueError(f"vertex count mismatch: {P.n} vs {Q.n}")
    z = _normalized_complex(P)
    w = _normalized_complex(Q)
    base = float(np.sum(np.abs(z) ** 2) + np.sum(np.abs(w) ** 2))
    best = math.inf
    for cand in (w, np.conj(w)[::-1]):
        for s in range(P.n):
            corr = abs(np.sum(z * np.conj(np.roll(cand, s))))
            best = min(best, base - 2.0 * corr)
    return math.sqrt(max(best, 0.0) / P.n)


def shape_distance_to_regular(P):
    return shape_distance(P, regular_ngon(P.n, area=math.pi))


# ─── Gradient path ───────────────────────────────────────────────────────────

def _step_cap(P, d, fraction):
    """Largest step in (0, 1] along d that moves every vertex at most
    ``fraction`` of its shortest incident side."""
    sides = side_lengths(P)
    incident = np.minimum(sides, np.roll(sides, 1))
    move = np.linalg.norm(d.reshape(-1, 2), axis=1)
    ratio = float(np.max(move / incident))
    return 1.0 if ratio <= fraction else fraction / ratio


def optimize(P0, cfg):
    """Optimize cfg's objective over N-gons of area cfg.area_target starting from P0."""
    if cfg.objective == OBJECTIVE_PR:
        return optimize_Pr_derivative_free(P0, cfg.r, cfg)
    if not cfg.kernel.has_gradient:
        raise KernelCapabilityError("kernel not differentiable")

    target = cfg.area_target
    sign = 1.0 if cfg.direction == "min" else -1.0
    P = scale_to_area(P0, target)

    def evaluate(Q):
        sd = shape_derivatives(Q, cfg.kernel, cfg.degree, hessian=False)
        return sd.value, sd.gradient

    raw, grad = evaluate(P)
    # merit in units of the starting objective
    fscale = abs(raw) if raw != 0.0 else 1.0
    f, df = sign * raw / fscale, sign * grad / fscale

    g = grad_area(P)
    mu = float(df @ g / (g @ g))
    rho = cfg.penalty0
    alpha = None
    records = []
    notes = []
    it = 0
    converged = False

    for outer in range(cfg.max_outer):
        inner_tol = max(cfg.gradient_tolerance, cfg.inner_decay ** (outer + 1))
        while True:
            c = area(P) - target
            g = grad_area(P)
            gnorm = math.sqrt(g @ g)
            ghat = g / gnorm
            pg = df - ghat * (ghat @ df)
            dfn = max(np.linalg.norm(df), _TINY)
            rel = float(np.linalg.norm(pg) / dfn)
            merit = f - mu * c + 0.5 * rho * c * c
            records.append(IterationRecord(it, outer, raw, abs(c), rel, merit))
            logger.debug("iter %d outer %d: J=%.12g |c|=%.3e |Pg|=%.3e merit=%.12g",
                         it, outer, raw, abs(c), rel, merit)
            if rel <= cfg.gradient_tolerance and abs(c) <= cfg.constraint_tolerance:
                converged = True
                break
            if it >= cfg.max_iters:
                break

            dL = df + (rho * c - mu) * g
            normal = float(ghat @ dL)
            tangent = dL - ghat * normal
            if np.linalg.norm(dL) <= inner_tol * dfn:
                break
            tn = max(np.linalg.norm(tangent), _TINY)
            if alpha is None:
                alpha = cfg.initial_step * math.sqrt(target) / tn
            d = -alpha * tangent - ghat * normal / (rho * gnorm * gnorm)
            slope = float(dL @ d)

            x = P.flat()
            step = _step_cap(P, d, cfg.max_vertex_move)
            shrinks = 0
            accepted = None
            for _ in range(60):
                try:
                    trial = Polygon.from_flat(x + step * d)
                    t_raw, t_grad = evaluate(trial)
                except PolygonValidationError:
                    shrinks += 1
                    if shrinks >= cfg.max_shrinks:
                        raise DegeneratingIterateError(
                            f"degenerating iterate: {shrinks} consecutive simplicity rejections "
                            f"at iteration {it}") from None
                    step *= 0.5
                    continue
                shrinks = 0
                t_f = sign * t_raw / fscale
                t_c = area(trial) - target
                t_merit = t_f - mu * t_c + 0.5 * rho * t_c * t_c
                if t_merit <= merit + cfg.armijo * step * slope:
                    accepted = (trial, t_raw, t_f, sign * t_grad / fscale)
                    break
                step *= 0.5
            if accepted is None:
                logger.debug("line search stalled at iteration %d", it)
                break

            trial, raw, f, new_df = accepted
            new_g = grad_area(trial)
            new_ghat = new_g / np.linalg.norm(new_g)
            new_dL = new_df + (rho * (area(trial) - target) - mu) * new_g
            new_tangent = new_dL - new_ghat * (new_ghat @ new_dL)
            s = trial.flat() - x
            y = new_tangent - tangent
            sy = float(s @ y)
            # Barzilai-Borwein step for the next tangential move
            alpha = float(s @ s) / sy if sy > 0 else 2.0 * alpha
            alpha = min(alpha, cfg.initial_step * math.sqrt(target) / max(np.linalg.norm(new_tangent), _TINY))
            P, df = trial, new_df
            it += 1

        if converged or it >= cfg.max_iters:
            break
        mu -= rho * (area(P) - target)
        rho = min(rho * cfg.penalty_factor, cfg.penalty_max)

    if not converged:
        logger.warning("optimize: stopped after %d iterations without convergence", it)
        notes.append("iteration budget exhausted")
    c = area(P) - target
    if abs(c) > cfg.constraint_tolerance:
        P = scale_to_area(P, target)
        raw = shape_derivatives(P, cfg.kernel, cfg.degree, hessian=False).value
        records.append(IterationRecord(it, records[-1].outer, raw,
                                       abs(area(P) - target), records[-1].grad_norm, float("nan")))
        notes.append("final polygon rescaled onto the area constraint")
    else:
        logger.info("optimize: converged=%s after %d iterations, J=%.12g", converged, it, raw)
    return OptimizationTrace(
        records=tuple(records),
        final=P,
        shape_distance_to_regular=shape_distance_to_regular(P),
        converged=converged,
        config=cfg,
        multiplier=mu * fscale * sign,
        notes=notes,
    )


# ─── Derivative-free path for P_r ────────────────────────────────────────────

def optimize_Pr_derivative_free(P0, r, cfg):
    """Coordinate pattern search on the exact P_r at fixed area.

    Each trial move of one coordinate by ±step is rescaled about the centroid
    back to the target area; the step halves after a sweep without
    improvement, down to cfg.pattern_step_min. ``grad_norm`` in the trace
    holds the current pattern step.
    """
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    target = cfg.area_target
    sign = 1.0 if cfg.direction == "min" else -1.0
    P = scale_to_area(P0, target)
    fval = P_r(P, r, depth=cfg.pr_depth)
    step = cfg.pattern_step
    records = []
    sweep = 0
    while True:
        c = abs(area(P) - target)
        records.append(IterationRecord(sweep, 0, fval, c, step, sign * fval))
        if step < cfg.pattern_step_min or sweep >= cfg.max_iters:
            break
        improved = False
        x = P.flat()
        for j in range(len(x)):
            for direction in (1.0, -1.0):
                z = x.copy()
                z[j] += direction * step
                try:
                    trial = scale_to_area(Polygon.from_flat(z), target)
                    tval = P_r(trial, r, depth=cfg.pr_depth)
                except PolygonValidationError:
                    continue
                if sign * tval < sign * fval - 1e-14 * abs(fval):
                    P, fval, improved = trial, tval, True
                    x = P.flat()
                    break
        if not improved:
            step *= 0.5
        logger.debug("pattern sweep %d: P_r=%.12g step=%.3g", sweep, fval, step)
        sweep += 1

    converged = step < cfg.pattern_step_min
    if not converged:
        logger.warning("pattern search: sweep budget exhausted at step %.3g", step)
    return OptimizationTrace(
        records=tuple(records),
        final=P,
        shape_distance_to_regular=shape_distance_to_regular(P),
        converged=converged,
        config=cfg,
    )


# ─── Restarts ────────────────────────────────────────────────────────────────

def run_restarts(n, cfg, seeds, mode="convex"):
    """Independent runs from random area-π starts, traces in seed order."""
    seeds = list(seeds)

    def run(seed):
        start = random_polygon(n, seed, mode=mode)
        return optimize(start, replace(cfg, seed=seed))

    traces = map_ordered(run, seeds)
    hits = sum(t.converged for t in traces)
    logger.info("restarts N=%d: %d/%d converged", n, hits, len(traces))
    return traces


def export_trace(trace, out_dir, stem, svg=False):
    """Write <stem>.csv, <stem>.json and optionally <stem>.svg; return the paths."""
    from . import io

    paths = {
        "csv": io.write_csv(f"{out_dir}/{stem}.csv", trace.to_rows(),
                            ["iteration", "outer", "objective", "violation", "grad_norm", "merit"]),
        "json": io.write_json(f"{out_dir}/{stem}.json", trace.to_dict()),
    }
    if svg:
        disc = None
        if trace.config.objective == OBJECTIVE_PR:
            disc = (*centroid(trace.final), trace.config.r)
        paths["svg"] = io.write_svg(f"{out_dir}/{stem}.svg", trace.final, disc=disc)
    return paths
