"""
Command-line entry point.

    polyriesz energy --polygon square.json --kernel power:k=2
    polyriesz perimeter-r --polygon hexagon.json --r 2.18
    polyriesz grad-check --polygon p.json --kernel heat:Q=12,t=1
    polyriesz spectrum --ngon 8 --kernel power:k=12
    polyriesz spectrum --ngon 8 --kernel heat:Q=12,t=1 --lagrangian
    polyriesz optimize --n 6 --kernel power:k=6 --direction min --restarts 10
    polyriesz experiment graham
    polyriesz emit-svg --polygon p.json --disc 0,0,1
    polyriesz emit-dxf --polygon p.json --output p.dxf

Results go to stdout as JSON (or CSV with --format csv); diagnostics go to
stderr. Exit status: 0 success, 1 failed experiment, 2 usage error.
"""
import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass, field

from . import __version__, config, io
from .derivatives import fd_gradient_check, fd_hessian_check
from .energy import DISC_DEPTH, J, P_r
from .errors import KernelCapabilityError, UsageError
from .experiments import EXPERIMENTS, run_experiment
from .geometry import area, diameter, regular_ngon
from .kernels import CHAR, POWER, parse_kernel_spec
from .optimize import OBJECTIVE_J, OBJECTIVE_PR, OptimizationConfig, export_trace, run_restarts
from .spectral import (
    SPECTRUM_CIRCUMRADIUS,
    constrained_spectrum,
    full_spectrum,
    hess_lagrangian,
    hess_scale_invariant,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


@dataclass(frozen=True)
class CliConfig:
    command: str
    seed: int = 0
    degree: int = None
    out: str = config.DEFAULT_OUT_DIR
    format: str = "json"
    svg: bool = False
    threads: int = None
    deterministic: bool = False
    log_level: str = "WARNING"
    options: dict = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ─── Argument parsing ────────────────────────────────────────────────────────

def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _positive_float(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value > 0 or not math.isfinite(value):
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return value


def _degree(text):
    value = _positive_int(text)
    if value > 30:
        raise argparse.ArgumentTypeError(f"quadrature degree must be in [1, 30], got {value}")
    return value


def _ngon(text):
    value = _positive_int(text)
    if value < 3:
        raise argparse.ArgumentTypeError(f"a polygon needs N >= 3, got {value}")
    return value


def _int_list(text):
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _disc(text):
    try:
        return io.parse_disc(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--degree", type=_degree, default=None)
    common.add_argument("--out", default=None, help="results directory (POLYRIESZ_OUT overrides)")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--svg", action="store_true", help="write SVG snapshots of final shapes")
    common.add_argument("--threads", type=_positive_int, default=None)
    common.add_argument("--deterministic", action="store_true")
    common.add_argument("--log-level", default=None,
                        choices=("DEBUG", "INFO", "WARNING", "ERROR"), type=str.upper)

    parser = _Parser(prog="polyriesz", description="Nonlocal energies of polygons.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("energy", parents=[common], help="J_h(P) for a polygon file")
    p.add_argument("--polygon", required=True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--sampled", action="store_true",
                   help="point-sample a characteristic kernel instead of the exact path")

    p = sub.add_parser("perimeter-r", parents=[common], help="exact nonlocal r-perimeter")
    p.add_argument("--polygon", required=True)
    p.add_argument("--r", type=_positive_float, required=True)
    p.add_argument("--depth", type=_positive_int, default=DISC_DEPTH)

    p = sub.add_parser("grad-check", parents=[common], help="finite-difference derivative check")
    p.add_argument("--polygon", required=True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--eps", type=_positive_float, default=1e-5)
    p.add_argument("--directions", type=_positive_int, default=3)

    p = sub.add_parser("spectrum", parents=[common], help="Hessian spectrum at the regular N-gon")
    p.add_argument("--ngon", type=_ngon, required=True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--lagrangian", action="store_true",
                   help="restrict J - l|P| to the area-tangent space")

    p = sub.add_parser("optimize", parents=[common], help="area-constrained optimization")
    p.add_argument("--n", type=_ngon, required=True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--direction", choices=("min", "max"), default="min")
    p.add_argument("--restarts", type=_positive_int, default=1)
    p.add_argument("--max-iters", type=_positive_int, default=3000)
    p.add_argument("--start", choices=("convex", "star"), default="convex")

    p = sub.add_parser("experiment", parents=[common], help="run a named reproduction")
    p.add_argument("name", choices=[*EXPERIMENTS, "all"])
    p.add_argument("--samples", type=_positive_int, default=None)
    p.add_argument("--n-set", type=_int_list, default=None)
    p.add_argument("--k-set", type=_int_list, default=None)
    p.add_argument("--t-set", type=_float_list, default=None)
    p.add_argument("--r-grid", type=_float_list, default=None)
    p.add_argument("--bisect", action="store_true",
                   help="search the power-threshold crossing by direct evaluation (slow)")
    p.add_argument("--bisect-max", type=_positive_int, default=None,
                   help="upper end of the crossing search")

    for name, what in (("emit-svg", "SVG"), ("emit-dxf", "DXF")):
        p = sub.add_parser(name, parents=[common], help=f"{what} drawing of a polygon")
        p.add_argument("--polygon", required=True)
        p.add_argument("--disc", type=_disc, default=None, help="overlay disc x,y,r")
        p.add_argument("--output", required=(name == "emit-dxf"), default=None)
    return parser


def parse_config(argv):
    args = build_parser().parse_args(argv)
    if args.command is None:
        raise UsageError("a subcommand is required")
    shared = {"command", "seed", "degree", "out", "format", "svg", "threads", "deterministic",
              "log_level"}
    return CliConfig(
        command=args.command,
        seed=args.seed,
        degree=args.degree,
        out=config.resolve_out_dir(args.out),
        format=args.format,
        svg=args.svg,
        threads=args.threads,
        deterministic=args.deterministic,
        log_level=args.log_level or config.default_log_level(),
        options={k: v for k, v in vars(args).items() if k not in shared},
    )


# ─── Output ──────────────────────────────────────────────────────────────────

def _emit(payload, rows=None, fieldnames=None, fmt="json"):
    if fmt == "csv":
        if rows is None:
            rows = [{k: v for k, v in payload.items() if not isinstance(v, (dict, list))}]
        if fieldnames is None:
            fieldnames = list(rows[0]) if rows else []
        sys.stdout.write(io.csv_text(rows, fieldnames))
    else:
        sys.stdout.write(io.dumps(payload))


def _kernel(text):
    return parse_kernel_spec(text)


# ─── Subcommands ─────────────────────────────────────────────────────────────

def cmd_energy(cfg):
    opts = cfg.options
    P = io.read_polygon(opts["polygon"])
    K = _kernel(opts["kernel"])
    report = J(P, K, cfg.degree, exact=not opts["sampled"])
    _emit({**report.to_dict(), "n": P.n, "area": area(P)}, fmt=cfg.format)
    return EXIT_OK


def cmd_perimeter_r(cfg):
    opts = cfg.options
    P = io.read_polygon(opts["polygon"])
    r = opts["r"]
    value = P_r(P, r, depth=opts["depth"])
    payload = {"P_r": value, "r": r, "area": area(P), "diameter": diameter(P),
               "saturated": diameter(P) < r, "closed_form_if_saturated": area(P) * (math.pi * r * r - area(P))}
    _emit(payload, fmt=cfg.format)
    return EXIT_OK


def cmd_grad_check(cfg):
    opts = cfg.options
    P = io.read_polygon(opts["polygon"])
    K = _kernel(opts["kernel"])
    if not K.has_gradient:
        raise KernelCapabilityError("kernel not differentiable")
    grad = fd_gradient_check(P, K, cfg.degree, eps=opts["eps"], directions=opts["directions"],
                             seed=cfg.seed)
    hess = fd_hessian_check(P, K, cfg.degree, eps=opts["eps"], directions=opts["directions"],
                            seed=cfg.seed)
    payload = {"kernel": K.spec(), "gradient": grad, "hessian": hess,
               "passed": grad["max_relative_error"] < 1e-6 and hess["max_relative_error"] < 1e-5}
    rows = [{"check": name, "direction": i, "relative_error": e}
            for name, rep in (("gradient", grad), ("hessian", hess))
            for i, e in enumerate(rep["relative_errors"])]
    _emit(payload, rows, fmt=cfg.format)
    return EXIT_OK


def cmd_spectrum(cfg):
    opts = cfg.options
    n = opts["ngon"]
    K = _kernel(opts["kernel"])
    P = regular_ngon(n, circumradius=SPECTRUM_CIRCUMRADIUS)
    if opts["lagrangian"]:
        M, g, ell = hess_lagrangian(P, K, cfg.degree)
        report = constrained_spectrum(M, g, P)
        extra = {"multiplier": ell}
    elif K.variant == POWER and K.even_power:
        report = full_spectrum(hess_scale_invariant(P, K.k, cfg.degree), P)
        extra = {"objective": "scale-invariant"}
    else:
        raise UsageError("spectrum without --lagrangian needs an even power kernel")
    _emit({"n": n, "kernel": K.spec(), **extra, **report.to_dict()}, report.to_rows(),
          fmt=cfg.format)
    return EXIT_OK


def cmd_optimize(cfg):
    opts = cfg.options
    K = _kernel(opts["kernel"])
    if K.variant == CHAR:
        ocfg = OptimizationConfig(objective=OBJECTIVE_PR, r=K.r, direction=opts["direction"],
                                  max_iters=opts["max_iters"], degree=cfg.degree, seed=cfg.seed)
    else:
        ocfg = OptimizationConfig(objective=OBJECTIVE_J, kernel=K, direction=opts["direction"],
                                  max_iters=opts["max_iters"], degree=cfg.degree, seed=cfg.seed)
    seeds = range(cfg.seed, cfg.seed + opts["restarts"])
    traces = run_restarts(opts["n"], ocfg, seeds, mode=opts["start"])
    out_dir = os.path.join(cfg.out, "optimize")
    runs = []
    for seed, trace in zip(seeds, traces):
        paths = export_trace(trace, out_dir, f"n{opts['n']}-seed{seed}", svg=cfg.svg)
        runs.append({"seed": seed, "converged": trace.converged, "iterations": trace.iterations,
                     "final_objective": trace.final_objective,
                     "shape_distance_to_regular": trace.shape_distance_to_regular,
                     "final_polygon": trace.final.to_dict(), "files": paths})
    rows = [{k: v for k, v in r.items() if k not in ("final_polygon", "files")} for r in runs]
    _emit({"config": ocfg.describe(), "runs": runs}, rows, fmt=cfg.format)
    return EXIT_OK


def _experiment_options(name, opts):
    """Map grid flags onto the keyword arguments of each experiment."""
    per = {
        "symmetry-breaking": {"r_grid": opts["r_grid"]},
        "hardy": {"n_set": opts["n_set"], "samples": opts["samples"]},
        "riesz": {"n_set": opts["n_set"], "ks": opts["k_set"], "samples": opts["samples"]},
        "axisym-octagon": {"samples": opts["samples"]},
        "spectral-tables": {"n_set": opts["n_set"], "k_set": opts["k_set"], "t_set": opts["t_set"]},
        "power-threshold": {"bisect": opts["bisect"] or None, "bisect_max": opts["bisect_max"]},
    }
    names = list(EXPERIMENTS) if name == "all" else [name]
    return {n: {k: v for k, v in per.get(n, {}).items() if v is not None} for n in names}


def cmd_experiment(cfg):
    opts = cfg.options
    name = opts["name"]
    passed, outcome = run_experiment(name, cfg.out, svg=cfg.svg, deterministic=cfg.deterministic,
                                     options=_experiment_options(name, opts))
    keep_runtime = not cfg.deterministic
    payload = {"experiment": name, "passed": passed,
               "results": {exp: [r.to_dict(keep_runtime) for r in rs] for exp, rs in outcome.items()}}
    rows = [r.summary_row(exp, keep_runtime) for exp, rs in outcome.items() for r in rs]
    _emit(payload, rows, fmt=cfg.format)
    return EXIT_OK if passed else EXIT_FAILED


def cmd_emit_svg(cfg):
    opts = cfg.options
    P = io.read_polygon(opts["polygon"])
    if opts["output"]:
        path = io.write_svg(opts["output"], P, disc=opts["disc"])
        _emit({"output_path": path, "n": P.n}, fmt=cfg.format)
    else:
        sys.stdout.write(io.svg_text(P, disc=opts["disc"]))
    return EXIT_OK


def cmd_emit_dxf(cfg):
    opts = cfg.options
    P = io.read_polygon(opts["polygon"])
    path = io.write_dxf(opts["output"], P, disc=opts["disc"])
    _emit({"output_path": path, "n": P.n, "file_size_bytes": os.path.getsize(path)}, fmt=cfg.format)
    return EXIT_OK


COMMANDS = {
    "energy": cmd_energy,
    "perimeter-r": cmd_perimeter_r,
    "grad-check": cmd_grad_check,
    "spectrum": cmd_spectrum,
    "optimize": cmd_optimize,
    "experiment": cmd_experiment,
    "emit-svg": cmd_emit_svg,
    "emit-dxf": cmd_emit_dxf,
}


def _configure_logging(level):
    root = logging.getLogger("polyriesz")
    for h in list(root.handlers):
        if getattr(h, "_polyriesz_cli", False):
            root.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    handler._polyriesz_cli = True
    root.addHandler(handler)
    root.setLevel(level)


def run(argv=None):
    """Run the CLI and return its exit code."""
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
    except UsageError as e:
        print(f"polyriesz: error: {e}", file=sys.stderr)
        return EXIT_USAGE

    _configure_logging(cfg.log_level)
    previous = config.thread_override()
    config.set_threads(1 if cfg.deterministic and cfg.threads is None else cfg.threads)
    logger.debug("command %s with %s", cfg.command, cfg.options)
    try:
        return COMMANDS[cfg.command](cfg)
    except (ValueError, OSError) as e:
        print(f"polyriesz: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        config.set_threads(previous)


def main():
    sys.exit(run())
