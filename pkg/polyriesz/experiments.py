"""
Scripted reproductions of the quantitative claims about polygonal energies.

Every experiment returns a list of ExperimentResult records. A record with a
reference value passes when |measured - reference| <= tolerance; property
records pass when the property holds; ``passed=None`` marks values that are
recorded without a verdict.
"""
import logging
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.spatial import ConvexHull

from . import io
from .energy import DISC_DEPTH, E, J, P_r, log_power_energy, potential
from .errors import PolyrieszError
from .geometry import (
    Polygon,
    apply_linear,
    area,
    centroid,
    diameter,
    disc_intersection_areas,
    graham_hexagon,
    random_polygon,
    regular_ngon,
    rotate,
    scale_to_area,
    translate,
    validate_polygon,
)
from .kernels import CHAR, Kernel
from .spectral import lagrangian_spectrum, monotonicity_scan_t, scale_invariant_spectrum

logger = logging.getLogger(__name__)

PUBLISHED = "PUBLISHED"
DERIVED = "DERIVED"
TRIVIAL = "TRIVIAL"

# Printed constants
GRAHAM_AREA_RATIO = 1.039201
GRAHAM_DIAMETER_RATIO = 0.980957
GRAHAM_UNIT_AREA = 0.674981
REGULAR_HEXAGON_UNIT_AREA = 0.649519
POWER_THRESHOLD = 2832

SUMMARY_FIELDS = ["experiment", "name", "measured", "reference", "tolerance",
                  "provenance", "passed", "runtime"]


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    name: str
    parameters: dict
    measured: object
    reference: object = None
    provenance: str = DERIVED
    tolerance: float = None
    passed: bool = None
    runtime: float = 0.0
    details: dict = field(default_factory=dict)
    shapes: tuple = ()

    def to_dict(self, runtime=True):
        out = {
            "name": self.name,
            "parameters": self.parameters,
            "measured": self.measured,
            "reference": self.reference,
            "provenance": self.provenance,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "details": self.details,
        }
        if runtime:
            out["runtime"] = self.runtime
        return out

    def summary_row(self, experiment, runtime=True):
        return {
            "experiment": experiment,
            "name": self.name,
            "measured": _scalar(self.measured),
            "reference": _scalar(self.reference),
            "tolerance": self.tolerance,
            "provenance": self.provenance,
            "passed": self.passed,
            "runtime": round(self.runtime, 3) if runtime else "",
        }


def _scalar(v):
    if isinstance(v, float):
        return repr(v)
    return v if isinstance(v, (int, str)) or v is None else str(v)


def _compare(name, params, measured, reference, tolerance, provenance, started, **details):
    passed = abs(measured - reference) <= tolerance
    return ExperimentResult(name, params, float(measured), reference, provenance, tolerance,
                            bool(passed), time.perf_counter() - started, details)


def _property(name, params, measured, holds, provenance, started, reference=None,
              tolerance=None, shapes=(), **details):
    return ExperimentResult(name, params, measured, reference, provenance, tolerance,
                            None if holds is None else bool(holds),
                            time.perf_counter() - started, details, tuple(shapes))


# ─── Graham hexagon ──────────────────────────────────────────────────────────

def exp_graham():
    t0 = time.perf_counter()
    hg = graham_hexagon(diameter=1.0)
    hr = regular_ngon(6, diameter=1.0)
    a_g, a_r = area(hg), area(hr)
    area_ratio = a_g / a_r
    d_g = diameter(graham_hexagon(area=math.pi))
    d_r = diameter(regular_ngon(6, area=math.pi))
    diam_ratio = d_g / d_r
    params = {"n": 6}
    shapes = [("graham", hg, None), ("regular", hr, None)]
    return [
        _compare("graham_unit_area", params, a_g, GRAHAM_UNIT_AREA, 1e-6, PUBLISHED, t0),
        _compare("regular_unit_area", params, a_r, REGULAR_HEXAGON_UNIT_AREA, 1e-6, PUBLISHED, t0),
        _compare("area_ratio", params, area_ratio, GRAHAM_AREA_RATIO, 1e-5, PUBLISHED, t0),
        _compare("diameter_ratio", params, diam_ratio, GRAHAM_DIAMETER_RATIO, 1e-5, PUBLISHED, t0),
        _compare("ratio_scaling_identity", params, area_ratio * diam_ratio ** 2, 1.0, 1e-9,
                 TRIVIAL, t0),
        _property("shapes", params, None, None, TRIVIAL, t0, shapes=shapes,
                  graham_diameter_at_area_pi=d_g, regular_diameter_at_area_pi=d_r),
    ]


# ─── Power threshold ─────────────────────────────────────────────────────────

def threshold_bound(graham_area, d=GRAHAM_DIAMETER_RATIO):
    """Smallest integer k with |H_G|² d^k < 3 (π ε²/3)² (d + ε)^k, ε = (1 - d)/3.

    The regular hexagon has unit diameter; every corner region B_ε(x₀) ∩ H_R
    has area π ε²/3 and its points lie at distance at least d + ε from the
    opposite corner region.
    """
    eps = (1.0 - d) / 3.0
    lhs = 2.0 * math.log(graham_area)
    rhs = math.log(3.0) + 2.0 * math.log(math.pi * eps * eps / 3.0)
    k_real = (lhs - rhs) / (math.log(d + eps) - math.log(d))
    return math.floor(k_real) + 1, k_real


# upper end of the opt-in crossing search
BISECT_MAX = 64


def _log_energy_gap(k, hg, hr):
    """log J_k(H_G) - log J_k(H_R); negative when the Graham hexagon is lower."""
    return log_power_energy(hg, k) - log_power_energy(hr, k)


def exp_power_threshold_hexagon(k_direct=(2, 6, 12, 24), bisect=False, bisect_max=BISECT_MAX,
                                max_steps=14):
    """Bound route, equal-area variant and direct comparisons at small k.

    With ``bisect`` the true crossing is searched between max(k_direct) and
    ``bisect_max`` (at most the bound threshold). Each adaptive evaluation
    above k = 28 costs from tens of seconds to minutes, so the search is
    opt-in. A bracket without a sign change yields an undecided result.
    """
    t0 = time.perf_counter()
    results = []
    k_bound, k_real = threshold_bound(GRAHAM_UNIT_AREA)
    results.append(_compare("bound_threshold", {"graham_area": GRAHAM_UNIT_AREA,
                                                "d": GRAHAM_DIAMETER_RATIO},
                            k_bound, POWER_THRESHOLD, 0, PUBLISHED, t0, k_real=k_real))
    k_eq, k_eq_real = threshold_bound(REGULAR_HEXAGON_UNIT_AREA)
    results.append(_property("bound_threshold_equal_area", {"graham_area": REGULAR_HEXAGON_UNIT_AREA},
                             k_eq, k_eq <= k_bound, DERIVED, t0, k_real=k_eq_real))

    hg = graham_hexagon(area=math.pi)
    hr = regular_ngon(6, area=math.pi)
    for k in k_direct:
        t1 = time.perf_counter()
        gap = _log_energy_gap(k, hg, hr)
        results.append(_property(f"direct_k{k}", {"k": k}, gap, gap > 0.0, DERIVED, t1,
                                 regular_lower=gap > 0.0))

    if bisect:
        t1 = time.perf_counter()
        lo = max(k_direct) if k_direct else 2
        hi = min(int(bisect_max), POWER_THRESHOLD)
        if hi <= lo:
            raise ValueError(f"bisect_max must exceed {lo}, got {bisect_max}")
        g_lo, g_hi = _log_energy_gap(lo, hg, hr), _log_energy_gap(hi, hg, hr)
        if not (g_lo > 0.0 > g_hi):
            logger.info("power threshold: no sign change of the energy gap on [%d, %d]", lo, hi)
            results.append(_property("crossing", {"bracket": [lo, hi]}, None, None, DERIVED, t1,
                                     gap_lo=g_lo, gap_hi=g_hi,
                                     reason=f"no crossing in [{lo}, {hi}]"))
        else:
            for _ in range(max_steps):
                if hi - lo <= 1:
                    break
                mid = (lo + hi) // 2
                if _log_energy_gap(mid, hg, hr) > 0.0:
                    lo = mid
                else:
                    hi = mid
            results.append(_property("crossing", {"bracket": [lo, hi]}, hi,
                                     2 < hi < POWER_THRESHOLD, DERIVED, t1,
                                     reference=f"(2, {POWER_THRESHOLD})"))
    return results


# ─── Symmetry breaking for P_r ───────────────────────────────────────────────

def exp_symmetry_breaking_scan(r_grid=None, depth=DISC_DEPTH):
    t0 = time.perf_counter()
    hg = graham_hexagon(area=math.pi)
    hr = regular_ngon(6, area=math.pi)
    r_low, r_high = diameter(hg), diameter(hr)
    if r_grid is None:
        r_grid = (0.2, r_low + 0.25 * (r_high - r_low), 2.18, r_high + 0.05)
    results = [_property("r_threshold", {}, r_low, None, DERIVED, t0, regular_diameter=r_high)]
    for r in r_grid:
        t1 = time.perf_counter()
        p_g = P_r(hg, r, depth=depth)
        p_r = P_r(hr, r, depth=depth)
        closed = math.pi ** 2 * (r * r - 1.0)
        gap = p_r - p_g
        params = {"r": r}
        disc = (0.0, 0.0, r)
        if r >= r_high:
            results.append(_property(f"both_saturated_r{r:g}", params, gap, abs(gap) < 1e-9,
                                     TRIVIAL, t1, graham=p_g, regular=p_r))
        elif r >= r_low:
            results.append(_compare(f"graham_closed_form_r{r:g}", params, p_g, closed, 1e-6,
                                    DERIVED, t1))
            holds = gap > 1e-8
            if abs(r - 2.18) < 1e-12:
                holds = 1e-7 < gap < 1e-6
            results.append(_property(f"graham_below_regular_r{r:g}", params, gap, holds, DERIVED,
                                     t1, shapes=[(f"graham_r{r:g}", hg, disc)],
                                     graham=p_g, regular=p_r))
        else:
            results.append(_property(f"regular_region_r{r:g}", params, gap, None if r > 0.5 else gap < 0.0,
                                     DERIVED, t1, graham=p_g, regular=p_r))
    return results


# ─── Hardy-Littlewood inequality ─────────────────────────────────────────────

def best_disc_overlap(P, r):
    """max over translations τ of |(P + τ) ∩ B_r(0)|, grid plus Nelder-Mead."""
    v = P.vertices
    lo, hi = v.min(axis=0), v.max(axis=0)
    gx = np.linspace(lo[0], hi[0], 8)
    gy = np.linspace(lo[1], hi[1], 8)
    cands = np.vstack([np.array(np.meshgrid(gx, gy)).reshape(2, -1).T, centroid(P)])
    vals = disc_intersection_areas(v, cands, r)
    start = cands[int(np.argmax(vals))]
    res = minimize(lambda c: -disc_intersection_areas(v, c, r)[0], start, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-15, "maxiter": 400})
    return max(float(vals.max()), float(-res.fun))


def min_power_moment(P, k):
    """min over τ of ∫_P |x - τ|^k, the surrogate for the kernel M - |x|^k."""
    K = Kernel.power(k)
    start = centroid(P)
    res = minimize(lambda c: potential(P, K, c)[0], start, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-15, "maxiter": 400})
    return min(float(potential(P, K, start)[0]), float(res.fun))


def _hardy_gap(P, K, reference):
    """Positive when the inequality holds with margin."""
    if K.variant == CHAR:
        return reference - best_disc_overlap(P, K.r)
    return min_power_moment(P, K.k) - reference


def exp_hardy(n_set=range(3, 9), kernels=None, samples=200, seed=0):
    if kernels is None:
        kernels = [Kernel.characteristic(r) for r in (0.3, 0.6, 1.0)] + [Kernel.power(2)]
    results = []
    for K in kernels:
        for n in n_set:
            t0 = time.perf_counter()
            star = regular_ngon(n, area=math.pi)
            reference = E(star, K)
            gaps = []
            for i in range(samples):
                P = random_polygon(n, seed + i, mode="star")
                gaps.append(_hardy_gap(P, K, reference))
            violations = sum(g < -1e-10 for g in gaps)
            results.append(_property(f"hardy_{K.spec()}_n{n}", {"n": n, "kernel": K.spec(),
                                                               "samples": samples},
                                     violations, violations == 0, PUBLISHED, t0, reference=0,
                                     min_gap=min(gaps) if gaps else None))

    t0 = time.perf_counter()
    K = kernels[0]
    star = regular_ngon(5, area=math.pi)
    eq = abs(_hardy_gap(star, K, E(star, K)))
    results.append(_property("hardy_equality", {"n": 5, "kernel": K.spec()}, eq, eq < 1e-12,
                             TRIVIAL, t0))
    t0 = time.perf_counter()
    w = math.sqrt(math.pi / 100.0)
    thin = Polygon(np.array([[0.0, 0.0], [100.0 * w, 0.0], [100.0 * w, w], [0.0, w]]))
    gap = _hardy_gap(thin, K, E(regular_ngon(4, area=math.pi), K))
    results.append(_property("hardy_thin", {"aspect": 100, "kernel": K.spec()}, gap,
                             gap > 1e-3 * E(regular_ngon(4, area=math.pi), K), DERIVED, t0))
    return results


# ─── Riesz power energies ────────────────────────────────────────────────────

def exp_riesz_power(n_set=range(3, 9), ks=(2, 4), samples=200, seed=0):
    results = []
    for k in ks:
        K = Kernel.power(k)
        for n in n_set:
            t0 = time.perf_counter()
            ref = J(regular_ngon(n, area=math.pi), K).value
            worst = math.inf
            violations = 0
            for i in range(samples):
                val = J(random_polygon(n, seed + i, mode="star"), K).value
                worst = min(worst, val - ref)
                violations += val < ref - 1e-9 * ref
            results.append(_property(f"riesz_k{k}_n{n}", {"n": n, "k": k, "samples": samples},
                                     violations, violations == 0, PUBLISHED, t0, reference=0,
                                     min_gap=worst))
        t0 = time.perf_counter()
        star = regular_ngon(7, area=math.pi)
        moved = translate(rotate(star, 0.37), (0.3, -1.1))
        diff = abs(J(moved, K).value - J(star, K).value)
        results.append(_property(f"riesz_k{k}_rigid_equality", {"n": 7, "k": k}, diff,
                                 diff < 1e-9, TRIVIAL, t0))
    return results


# ─── Linear images ───────────────────────────────────────────────────────────

def exp_linear_image_monotonicity(n=6, k=2, t_grid=None, sigma=1.3, h=1e-4):
    """g(t) = J_k(diag(σ^t, σ^-t) Ω*_N) is nondecreasing on [0, 1] with g'(0) = 0."""
    t0 = time.perf_counter()
    if t_grid is None:
        t_grid = np.linspace(0.0, 1.0, 21)
    star = regular_ngon(n, area=math.pi)
    K = Kernel.power(k)

    def g(t):
        return J(apply_linear(star, np.diag([sigma ** t, sigma ** -t])), K).value

    values = np.array([g(t) for t in t_grid])
    steps = np.diff(values)
    scale = abs(values[0])
    if sigma == 1.0:
        nondecreasing = bool(np.all(np.abs(steps) <= 1e-12 * scale))
    else:
        nondecreasing = bool(np.all(steps >= -1e-12 * scale))
    deriv = (g(h) - g(-h)) / (2.0 * h) / scale
    params = {"n": n, "k": k, "sigma": sigma, "points": len(t_grid)}
    return [
        _property("nondecreasing", params, float(values[-1] - values[0]), nondecreasing, PUBLISHED, t0,
                  values=values.tolist()),
        _property("derivative_at_zero", params, deriv, abs(deriv) < 1e-6, PUBLISHED, t0, step=h),
    ]


# ─── Axisymmetric octagons ───────────────────────────────────────────────────

def random_axisymmetric_octagon(rng, max_attempts=1000):
    """Convex octagon symmetric across the x1-axis with area π."""
    for _ in range(max_attempts):
        theta = np.sort(rng.uniform(0.05, math.pi - 0.05, 4))
        radii = rng.uniform(0.6, 1.4, 4)
        upper = radii[:, None] * np.column_stack([np.cos(theta), np.sin(theta)])
        # counterclockwise: upper half right to left, then its mirror image
        lower = upper[::-1] * np.array([1.0, -1.0])
        pts = np.vstack([upper, lower])
        if validate_polygon(pts):
            continue
        hull = ConvexHull(pts)
        if len(hull.vertices) != 8:
            continue
        P = Polygon(pts)
        return scale_to_area(P, math.pi, about=(0.0, 0.0))
    raise PolyrieszError("no convex axisymmetric octagon found")


def exp_axisym_octagon(samples=100, seed=0, k=6):
    t0 = time.perf_counter()
    K = Kernel.power(k)
    star = regular_ngon(8, area=math.pi, phase=math.pi / 8.0)
    ref = J(star, K).value
    rng = np.random.default_rng(seed)
    violations = 0
    worst = math.inf
    for _ in range(samples):
        val = J(random_axisymmetric_octagon(rng), K).value
        worst = min(worst, (val - ref) / ref)
        violations += val < ref - 1e-9 * ref
    params = {"n": 8, "k": k, "samples": samples}
    results = [_property("axisym_octagon", params, violations, violations == 0, PUBLISHED, t0,
                         reference=0, min_relative_gap=worst)]
    t1 = time.perf_counter()
    stretched = apply_linear(star, np.diag([1.5, 1.0 / 1.5]))
    margin = (J(stretched, K).value - ref) / ref
    results.append(_property("axisym_stretched", {"n": 8, "k": k, "stretch": 1.5}, margin,
                             margin > 1e-3, DERIVED, t1))
    return results


# ─── Spectral tables ─────────────────────────────────────────────────────────

def exp_spectral_tables(n_set=range(5, 11), k_set=range(6, 25, 2), Q=12, t_set=(1.0, 10.0, 100.0),
                        q_sweep=range(2, 13), q_sweep_n=6, q_sweep_t=1.0, degree=None):
    results = []
    for n in n_set:
        for k in k_set:
            t0 = time.perf_counter()
            rep = scale_invariant_spectrum(n, k, degree)
            overlap = min((sum(o) for o in rep.zero_mode_overlaps), default=0.0)
            holds = rep.zero_count == 4 and rep.positive_count == 2 * n - 4 and overlap >= 0.99
            results.append(_property(f"scale_invariant_n{n}_k{k}", {"n": n, "k": k},
                                     rep.signature(), holds, PUBLISHED, t0,
                                     reference={"zero": 4, "positive": 2 * n - 4},
                                     min_zero_overlap=overlap))
    for n in n_set:
        t0 = time.perf_counter()
        scan = monotonicity_scan_t(n, Q, t_set, degree)
        for t, rep in zip(scan.t_grid, scan.reports):
            overlap = min((sum(o) for o in rep.zero_mode_overlaps), default=0.0)
            holds = rep.zero_count == 3 and rep.negative_count == 2 * n - 4 and overlap >= 0.99
            results.append(_property(f"lagrangian_n{n}_Q{Q}_t{t:g}", {"n": n, "Q": Q, "t": t},
                                     rep.signature(), holds, PUBLISHED, t0,
                                     reference={"zero": 3, "negative": 2 * n - 4},
                                     smallest_nonzero=float(np.abs(rep.nonzero()).min())))
        lam_first = float(np.abs(scan.reports[0].nonzero()).max())
        lam_last = float(np.abs(scan.reports[-1].nonzero()).max())
        results.append(_property(f"lagrangian_n{n}_decreasing", {"n": n, "Q": Q, "t": list(t_set)},
                                 [lam_first, lam_last], lam_first > lam_last, PUBLISHED, t0,
                                 violations=scan.violations))
        if n == 10 and 100.0 in scan.t_grid:
            rep = scan.reports[scan.t_grid.index(100.0)]
            smallest = float(np.abs(rep.nonzero()).min())
            results.append(_property("lagrangian_n10_t100_gap", {"n": 10, "Q": Q, "t": 100.0},
                                     smallest, smallest > 1e-4, PUBLISHED, t0, reference=1e-4))
    for q in q_sweep:
        t0 = time.perf_counter()
        rep = lagrangian_spectrum(q_sweep_n, q, q_sweep_t, degree)
        n = q_sweep_n
        holds = None
        if q >= 6:
            holds = rep.zero_count == 3 and rep.negative_count == 2 * n - 4
        results.append(_property(f"q_sweep_n{n}_Q{q}", {"n": n, "Q": q, "t": q_sweep_t},
                                 rep.signature(), holds, PUBLISHED, t0))
    return results


# ─── Runner ──────────────────────────────────────────────────────────────────

EXPERIMENTS = {
    "graham": exp_graham,
    "power-threshold": exp_power_threshold_hexagon,
    "symmetry-breaking": exp_symmetry_breaking_scan,
    "hardy": exp_hardy,
    "riesz": exp_riesz_power,
    "linear-image": exp_linear_image_monotonicity,
    "axisym-octagon": exp_axisym_octagon,
    "spectral-tables": exp_spectral_tables,
}


def run_experiment(name, out_dir, svg=False, deterministic=False, options=None):
    """Run one experiment (or ``all``) and write its result files.

    Returns ``(passed, {experiment: results})``; ``passed`` is False when any
    record with a verdict failed.
    """
    if name == "all":
        names = list(EXPERIMENTS)
    elif name in EXPERIMENTS:
        names = [name]
    else:
        raise ValueError(f"unknown experiment {name!r}; expected one of "
                         + ", ".join([*EXPERIMENTS, "all"]))
    options = options or {}
    stamp = "deterministic" if deterministic else time.strftime("%Y%m%dT%H%M%S")
    keep_runtime = not deterministic
    outcome = {}
    for exp in names:
        logger.info("experiment %s: started", exp)
        results = EXPERIMENTS[exp](**options.get(exp, {}))
        outcome[exp] = results
        exp_dir = os.path.join(out_dir, exp)
        io.write_json(os.path.join(exp_dir, f"{stamp}.json"),
                      {"experiment": exp, "results": [r.to_dict(keep_runtime) for r in results]})
        rows = [r.summary_row(exp, keep_runtime) for r in results]
        summary = os.path.join(out_dir, "summary.csv")
        if deterministic and exp == names[0]:
            io.write_csv(summary, rows, SUMMARY_FIELDS)
        else:
            io.append_csv(summary, rows, SUMMARY_FIELDS)
        if svg:
            for r in results:
                for label, poly, disc in r.shapes:
                    io.write_svg(os.path.join(exp_dir, f"{label}.svg"), poly, disc=disc, label=label)
        failed = [r.name for r in results if r.passed is False]
        if failed:
            logger.warning("experiment %s: %d failed: %s", exp, len(failed), ", ".join(failed))
        else:
            logger.info("experiment %s: all checks passed", exp)
    passed = all(r.passed is not False for rs in outcome.values() for r in rs)
    return passed, outcome
