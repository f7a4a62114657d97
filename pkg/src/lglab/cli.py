"""Command-line entry point: ``lglab <subcommand> [flags]``.

Exit codes: 0 success, 1 usage or input error, 2 numerical failure,
3 resource-cap refusal.  Results go to stdout; diagnostics and the echoed
effective configuration go to stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import ConstantMode, Lemma, bound_report, tail_check
from .calibrate import DEFAULT_QUADRATURE, QuadratureConfig, calibrate_mu, lambda_value
from .connection import spec_from_descriptor
from .errors import LGLabError, NumericalError, ResourceCapError
from .experiments import ExperimentConfig, default_workers, phase_sweep, power_matrix, run_power, sweep_csv
from .sampler import read_graph, sample_graph, write_edgelist, write_graph
from .seeding import SeedContext
from .tristat import signed_triangles_naive, signed_triangles_trace

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_RESOURCE = 0, 1, 2, 3

SWEEP_DEFAULTS = {
    "spec": "logistic", "d_list": [2], "r_list": [1.0], "reps_null": 400, "reps_alt": 400,
    "level": 0.05, "master_seed": 0, "mechanism": "uniform",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- canonical output ----------------------------------------------------------

def _canon(obj) -> str:
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return "null" if not math.isfinite(x) else "%.17g" % x
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_canon(v)}" for k, v in sorted(obj.items())) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_canon(v) for v in obj) + "]"
    if hasattr(obj, "value"):  # enums
        return _canon(obj.value)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj) -> str:
    """Sorted keys, 17 significant digits, non-finite floats as null."""
    return _canon(obj)


def _emit(result: dict, as_json: bool, out=None) -> None:
    out = out or sys.stdout
    if as_json:
        out.write(canonical_json(result) + "\n")
        return
    width = max(len(k) for k in result)
    for k in sorted(result):
        v = result[k]
        text = repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)
        out.write(f"{k.ljust(width)}  {text}\n")


def _echo_config(cmd: str, cfg: dict) -> None:
    sys.stderr.write(f"lglab {cmd}: effective config {canonical_json(cfg)}\n")


# --- argument helpers ------------------------------------------------------------

def _descriptor(text: str) -> str:
    return Path(text[1:]).read_text() if text.startswith("@") else text


def _family(text: str):
    return spec_from_descriptor(_descriptor(text))


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _threads(args) -> int:
    return default_workers() if args.threads is None else max(1, args.threads)


def _common(p: argparse.ArgumentParser, seed_default=0) -> None:
    p.add_argument("--seed", type=int, default=seed_default, help="master seed")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (None: LGLAB_THREADS, else machine parallelism)")
    p.add_argument("--json", action="store_true", help="emit canonical JSON instead of aligned text")


def _model_flags(p: argparse.ArgumentParser, n_default=None) -> None:
    p.add_argument("--family", default="logistic",
                   help="logistic | gaussian | JSON descriptor | @file.json")
    if n_default is not False:
        p.add_argument("--n", type=int, default=n_default, required=n_default is None, help="vertices")
    p.add_argument("--p", type=float, required=True, help="edge density")
    p.add_argument("--d", type=int, required=True, help="latent dimension")
    p.add_argument("--r", type=float, required=True, help="flatness")
    p.add_argument("--tol", type=float, default=DEFAULT_QUADRATURE.abs_tol, help="calibration tolerance")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="lglab", description="Latent Gaussian random graphs: sampling, bounds, experiments.",
                     formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"lglab {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("calibrate", help="solve for the location mu", formatter_class=fmt)
    _model_flags(p, n_default=False)
    _common(p)

    p = sub.add_parser("sample", help="draw one G(n,p,d,r) graph", formatter_class=fmt)
    _model_flags(p)
    p.add_argument("--mechanism", choices=("uniform", "threshold"), default="uniform", help="edge mechanism")
    p.add_argument("--out", default=None, help="output path (graph.bin, or edge list with --edgelist)")
    p.add_argument("--edgelist", action="store_true", help="write plain-text 'i j' lines")
    _common(p, seed_default=0)

    p = sub.add_parser("tau", help="signed-triangle statistic of a graph file", formatter_class=fmt)
    p.add_argument("--in", dest="infile", required=True, help="graph.bin path")
    p.add_argument("--p", type=float, required=True, help="centering density")
    p.add_argument("--algo", choices=("naive", "trace", "both"), default="trace", help="algorithm")
    _common(p)

    p = sub.add_parser("bounds", help="closed-form KL/TV and tau bounds", formatter_class=fmt)
    _model_flags(p)
    p.add_argument("--constant-mode", choices=[m.value for m in ConstantMode], default="paper",
                   help="cubic KL constant: 68/3 (paper) or 136/3 (conservative)")
    _common(p)

    p = sub.add_parser("tails", help="empirical tail check against a concentration bound", formatter_class=fmt)
    p.add_argument("--lemma", choices=[m.value for m in Lemma], required=True, help="which tail bound")
    p.add_argument("--d", type=int, required=True, help="dimension")
    p.add_argument("--t", type=_floats, required=True, help="comma-separated t grid")
    p.add_argument("--reps", type=int, default=100_000, help="Monte Carlo replicates")
    p.add_argument("--family", default="logistic", help="connection family (gamma, linear)")
    p.add_argument("--p", type=float, default=0.5, help="edge density (gamma, linear)")
    p.add_argument("--r", type=float, default=1.0, help="flatness (gamma, linear)")
    p.add_argument("--out", default=None, help="CSV path; stdout when omitted")
    _common(p)

    p = sub.add_parser("power", help="power of the signed-triangle test at one (d, r)", formatter_class=fmt)
    _model_flags(p)
    p.add_argument("--reps-null", type=int, default=400, help="null replicates")
    p.add_argument("--reps-alt", type=int, default=400, help="alternative replicates")
    p.add_argument("--level", type=float, default=0.05, help="test level")
    p.add_argument("--mechanism", choices=("uniform", "threshold"), default="uniform", help="edge mechanism")
    p.add_argument("--self-test", action="store_true", help="replace the alternative by Erdos-Renyi graphs")
    _common(p)

    p = sub.add_parser("sweep", help="(d, r) phase sweep to CSV", formatter_class=fmt)
    sup = argparse.SUPPRESS
    p.add_argument("--config", default=None, help="ExperimentConfig JSON file")
    p.add_argument("--out", default=None, help="CSV path; stdout when omitted")
    p.add_argument("--gnuplot", default=None, help="also write a gnuplot power matrix to this path")
    p.add_argument("--n", type=int, default=sup, help="vertices (default: from config; required somewhere)")
    p.add_argument("--p", type=float, default=sup, help="edge density (default: from config; required somewhere)")
    p.add_argument("--family", dest="spec", default=sup,
                   help=f"connection family (default: from config, else {SWEEP_DEFAULTS['spec']})")
    p.add_argument("--d-list", dest="d_list", type=_ints, default=sup,
                   help=f"comma-separated d values (default: from config, else {SWEEP_DEFAULTS['d_list']})")
    p.add_argument("--r-list", dest="r_list", type=_floats, default=sup,
                   help=f"comma-separated r values (default: from config, else {SWEEP_DEFAULTS['r_list']})")
    for flag, key in (("--reps-null", "reps_null"), ("--reps-alt", "reps_alt")):
        p.add_argument(flag, dest=key, type=int, default=sup,
                       help=f"replicates (default: from config, else {SWEEP_DEFAULTS[key]})")
    p.add_argument("--level", type=float, default=sup,
                   help=f"test level (default: from config, else {SWEEP_DEFAULTS['level']})")
    p.add_argument("--mechanism", choices=("uniform", "threshold"), default=sup,
                   help=f"edge mechanism (default: from config, else {SWEEP_DEFAULTS['mechanism']})")
    p.add_argument("--seed", dest="master_seed", type=int, default=sup,
                   help=f"master seed (default: from config, else {SWEEP_DEFAULTS['master_seed']})")
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (None: LGLAB_THREADS, else machine parallelism)")
    return parser


# --- subcommands -------------------------------------------------------------------

def _quad(args) -> QuadratureConfig:
    return QuadratureConfig(abs_tol=args.tol)


def cmd_calibrate(args) -> int:
    spec = _family(args.family)
    _echo_config("calibrate", {"family": spec.name, "p": args.p, "d": args.d, "r": args.r,
                               "tol": args.tol, "seed": args.seed})
    q = _quad(args)
    seed = SeedContext(args.seed)
    params = calibrate_mu(spec, args.p, args.d, args.r, q, seed=seed)
    lam = lambda_value(spec, params, q, seed=seed)
    _emit({"mu": params.mu, "residual": params.calib_residual, "lambda": lam}, args.json)
    return EXIT_OK


def cmd_sample(args) -> int:
    spec = _family(args.family)
    _echo_config("sample", {"family": spec.name, "n": args.n, "p": args.p, "d": args.d, "r": args.r,
                            "mechanism": args.mechanism, "seed": args.seed, "out": args.out,
                            "edgelist": args.edgelist})
    if args.out is None and not args.edgelist:
        raise UsageError("sample: --out is required unless --edgelist is given")
    seed = SeedContext(args.seed)
    params = calibrate_mu(spec, args.p, args.d, args.r, _quad(args), n=args.n, seed=seed)
    g = sample_graph(spec, params, seed, args.mechanism)
    if args.edgelist:
        if args.out is None:
            write_edgelist(g, sys.stdout)
            return EXIT_OK
        with open(args.out, "w") as fh:
            write_edgelist(g, fh)
    else:
        write_graph(g, args.out)
    _emit({"n": g.n, "edges": g.edge_count(), "density": g.density(), "mu": params.mu, "out": args.out},
          args.json)
    return EXIT_OK


def cmd_tau(args) -> int:
    _echo_config("tau", {"in": args.infile, "p": args.p, "algo": args.algo, "seed": args.seed})
    g = read_graph(args.infile)
    result = {"n": g.n}
    if args.algo in ("trace", "both"):
        s = signed_triangles_trace(g, args.p)
    if args.algo == "both":
        naive = signed_triangles_naive(g, args.p)
        result["tau_naive"] = naive.tau
        result["discrepancy"] = abs(naive.tau - s.tau)
    elif args.algo == "naive":
        s = signed_triangles_naive(g, args.p)
    result.update(tau=s.tau, triangle_count=s.triangle_count, cherry_count=s.cherry_count)
    _emit(result, args.json)
    return EXIT_OK


def cmd_bounds(args) -> int:
    spec = _family(args.family)
    _echo_config("bounds", {"family": spec.name, "n": args.n, "p": args.p, "d": args.d, "r": args.r,
                            "constant_mode": args.constant_mode, "tol": args.tol, "seed": args.seed})
    q = _quad(args)
    params = calibrate_mu(spec, args.p, args.d, args.r, q, n=args.n, seed=SeedContext(args.seed))
    report = bound_report(spec, params, args.constant_mode, q,
                          lam=lambda_value(spec, params, q, seed=SeedContext(args.seed)))
    out = report.as_dict()
    out["mu"] = params.mu
    _emit(out, args.json)
    return EXIT_OK


def cmd_tails(args) -> int:
    lemma = Lemma(args.lemma)
    spec = params = None
    cfg = {"lemma": lemma.value, "d": args.d, "t": args.t, "reps": args.reps, "seed": args.seed}
    if lemma in (Lemma.GAMMA_SUBEXP, Lemma.LINEAR_REMAINDER):
        spec = _family(args.family)
        cfg.update(family=spec.name, p=args.p, r=args.r)
    _echo_config("tails", cfg)
    if spec is not None:
        params = calibrate_mu(spec, args.p, args.d, args.r, seed=SeedContext(args.seed))
    report = tail_check(lemma, args.t, args.reps, SeedContext(args.seed), d=args.d, spec=spec, params=params)
    lines = ["t,empirical,se,bound,violation"]
    for t, e, s, b, v in report.rows():
        lines.append(f"{float(t)!r},{float(e)!r},{float(s)!r},{float(b)!r},{'true' if v else 'false'}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_power(args) -> int:
    cfg = ExperimentConfig(n=args.n, p=args.p, spec=_descriptor(args.family), d_list=(args.d,), r_list=(args.r,),
                           reps_null=args.reps_null, reps_alt=args.reps_alt, level=args.level,
                           master_seed=args.seed, mechanism=args.mechanism)
    workers = _threads(args)
    _echo_config("power", dict(cfg.to_dict(), self_test=args.self_test, threads=workers, tol=args.tol))
    cell = run_power(cfg, args.d, args.r, workers=workers, self_test=args.self_test, q=_quad(args))
    summary = cell.summary()
    summary.pop("bounds", None)
    _emit(summary, args.json)
    return EXIT_OK if cell.status == "ok" else EXIT_NUMERICAL


def sweep_config(args) -> ExperimentConfig:
    """Merge defaults, the config file and explicit flags, in increasing priority."""
    merged = dict(SWEEP_DEFAULTS)
    if args.config is not None:
        with open(args.config) as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise UsageError(f"{args.config}: config must be a JSON object")
        if "family" in data and "spec" not in data:
            data["spec"] = data.pop("family")
        merged.update(data)
    for key in ("n", "p", "spec", "d_list", "r_list", "reps_null", "reps_alt", "level", "mechanism",
                "master_seed"):
        if hasattr(args, key):
            merged[key] = getattr(args, key)
    for key in ("n", "p"):
        if key not in merged:
            raise UsageError(f"sweep: {key} must be given by --{key} or the config file")
    return ExperimentConfig.from_dict(merged)


def cmd_sweep(args) -> int:
    cfg = sweep_config(args)
    workers = _threads(args)
    _echo_config("sweep", dict(cfg.to_dict(), threads=workers))
    cells = phase_sweep(cfg, workers=workers)
    text = sweep_csv(cells)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.gnuplot:
        Path(args.gnuplot).write_text(power_matrix(cfg, cells))
    failed = [c for c in cells if c.status != "ok"]
    for c in failed:
        sys.stderr.write(f"lglab sweep: cell d={c.d} r={c.r!r}: {c.status}\n")
    return EXIT_OK


COMMANDS = {
    "calibrate": cmd_calibrate, "sample": cmd_sample, "tau": cmd_tau, "bounds": cmd_bounds,
    "tails": cmd_tails, "power": cmd_power, "sweep": cmd_sweep,
}


def dispatch(argv: list[str] | None = None) -> int:
    """Parse ``argv`` and run one subcommand; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except ResourceCapError as exc:
        sys.stderr.write(f"lglab: resource cap: {exc}\n")
        return EXIT_RESOURCE
    except NumericalError as exc:
        sys.stderr.write(f"lglab: numerical failure: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERICAL
    except FileNotFoundError as exc:
        sys.stderr.write(f"lglab: file not found: {exc.filename}\n")
        return EXIT_USAGE
    except (LGLabError, ValueError, TypeError, OSError, KeyError) as exc:
        sys.stderr.write(f"lglab: error: {type(exc).__name__}: {exc}\n")
        return EXIT_USAGE


def main() -> None:
    sys.exit(dispatch())
