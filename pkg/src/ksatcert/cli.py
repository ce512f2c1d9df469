"""Command-line entry point.

Exit codes: 0 success, 1 certification failure, 2 usage error, 3 numerical error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

from .certify import GridSpec, certify, scan
from .constraint import solve_gamma
from .errors import KSatCertError
from .oracle import FormulaModel, mc_moments, oracle_report
from .search import optimize_beta, reproduce_table
from .weights import WeightScheme

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
SCAN_HEADER = ("alpha", "log_g_lower", "log_G", "violation")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    k: int | None = None
    beta: float | None = None
    gamma: float | None = None
    r: float | None = None
    grid: GridSpec = field(default_factory=GridSpec)
    output_format: str = "text"
    output_path: str | None = None
    seed: int | None = None
    extra: dict = field(default_factory=dict)


def _clean(obj):
    """Replace non-finite floats with None so JSON stays standard."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return v


def _need(cfg: RunConfig, *names):
    missing = [n for n in names if getattr(cfg, n) is None]
    if missing:
        raise UsageError(f"{cfg.command} requires --{' --'.join(missing)}")


# -- commands ---------------------------------------------------------------

def _cmd_certify(cfg: RunConfig):
    _need(cfg, "k", "beta", "r")
    rep = certify(cfg.k, cfg.beta, cfg.r, cfg.grid)
    code = EXIT_OK if rep.passed else EXIT_FAIL
    d = rep.to_dict()
    if cfg.output_format == "json":
        return _json(d), code
    scalars = [key for key in sorted(d) if key not in ("violations", "roots_tried")]
    if cfg.output_format == "csv":
        header = scalars + ["violation_count"]
        return _csv(header, [[d[key] for key in scalars] + [len(rep.violations)]]), code
    lines = [
        f"k={rep.k} beta={rep.beta!r} gamma={rep.gamma!r} r={rep.r!r}",
        f"pass: {rep.passed}",
        f"log G_r(1/2): {rep.log_g_at_half!r}",
        f"worst off-center alpha: {rep.worst_off_center_alpha!r} (gap {rep.min_gap!r})",
        f"center window ok: {rep.center_window_ok}",
        f"d2 ln G_r at 1/2: {rep.second_derivative_log!r}",
        f"laplace rho: {rep.laplace_rho!r}",
        f"violations: {len(rep.violations)}",
    ]
    return "\n".join(lines) + "\n", code


def _cmd_search(cfg: RunConfig):
    _need(cfg, "k")
    ex = cfg.extra
    if cfg.beta is not None:
        lo = hi = cfg.beta
    else:
        lo, hi = ex.get("beta_lo", -0.5), ex.get("beta_hi", 1.5)
    bracket = None
    if ex.get("r_lo") is not None or ex.get("r_hi") is not None:
        if ex.get("r_lo") is None or ex.get("r_hi") is None:
            raise UsageError("--r-lo and --r-hi must be given together")
        bracket = (ex["r_lo"], ex["r_hi"])
    res = optimize_beta(
        cfg.k, lo, hi, points=ex.get("points", 50), precision=ex.get("precision", 1e-3),
        r_bracket=bracket, grid=cfg.grid,
    )
    d = res.to_dict()
    if cfg.output_format == "json":
        return _json(d), EXIT_OK
    if cfg.output_format == "csv":
        return _csv(("beta", "r"), res.trace), EXIT_OK
    lines = [
        f"k={res.k} best beta={res.best_beta!r} gamma={res.best_gamma!r}",
        f"certified r={res.r_certified!r} (precision {res.r_precision!r})",
        f"passing beta range: {res.passing_beta_range}",
        f"verified on 10x finer grid: {res.verified_fine_grid}",
    ]
    return "\n".join(lines) + "\n", EXIT_OK


def _cmd_table(cfg: RunConfig):
    rows = reproduce_table(cfg.grid, endpoints=cfg.extra.get("endpoints", False))
    code = EXIT_OK if all(r.passed for r in rows) else EXIT_FAIL
    if cfg.output_format == "json":
        return _json([r.to_dict() for r in rows]), code
    header = ("k", "beta", "gamma", "r", "pass", "role", "min_gap", "second_derivative_log")
    body = [(r.k, r.beta, r.gamma, r.r, r.passed, r.role, r.min_gap, r.second_derivative_log) for r in rows]
    if cfg.output_format == "csv":
        return _csv(header, body), code
    out = [f"{'k':>2} {'beta':>6} {'gamma':>10} {'r':>7} {'pass':>5} {'role':>4} {'min_gap':>11} {'d2':>9}"]
    for r in rows:
        out.append(
            f"{r.k:>2} {r.beta:>6.3f} {r.gamma:>10.7f} {r.r:>7.2f} {str(r.passed):>5} "
            f"{r.role:>4} {r.min_gap:>11.3e} {r.second_derivative_log:>9.4f}"
        )
    return "\n".join(out) + "\n", code


def emit_scan(k: int, beta: float, r: float, grid: GridSpec | None = None) -> str:
    """CSV of the alpha scan: alpha,log_g_lower,log_G,violation (alpha strictly increasing)."""
    rep = certify(k, beta, r, grid)
    data = scan(WeightScheme(k, beta, rep.gamma), r, grid)
    rows = zip(data.alpha.tolist(), data.log_g_lower.tolist(), data.log_G.tolist(), data.violation.tolist())
    return _csv(SCAN_HEADER, rows)


def _cmd_scan(cfg: RunConfig):
    _need(cfg, "k", "beta", "r")
    text = emit_scan(cfg.k, cfg.beta, cfg.r, cfg.grid)
    if cfg.output_format == "json":
        reader = csv.DictReader(io.StringIO(text))
        rows = [
            {"alpha": float(x["alpha"]), "log_g_lower": float(x["log_g_lower"]),
             "log_G": float(x["log_G"]), "violation": x["violation"] == "true"}
            for x in reader
        ]
        return _json(rows), EXIT_OK
    return text, EXIT_OK


def _cmd_oracle(cfg: RunConfig):
    _need(cfg, "k", "beta")
    n, m = cfg.extra.get("n"), cfg.extra.get("m")
    if n is None or m is None:
        raise UsageError("oracle requires --n and --m")
    gamma = cfg.gamma
    if gamma is None:
        if cfg.k < 3:
            raise UsageError("--gamma is required for k < 3 (no balanced gamma exists)")
        gamma = solve_gamma(cfg.k, cfg.beta).gammas[0]
    scheme = WeightScheme(cfg.k, cfg.beta, gamma)
    model = FormulaModel(cfg.k, n, m)
    samples = cfg.extra.get("samples")
    if samples:
        seed = 0 if cfg.seed is None else cfg.seed
        rep = mc_moments(model, scheme, samples, seed)
    else:
        rep = oracle_report(model, scheme)
    d = rep.to_dict()
    d["gamma"] = gamma
    d["beta"] = cfg.beta
    if cfg.output_format == "json":
        return _json(d), EXIT_OK
    if cfg.output_format == "csv":
        keys = sorted(d)
        return _csv(keys, [[d[key] for key in keys]]), EXIT_OK
    return "".join(f"{key}: {d[key]!r}\n" for key in sorted(d)), EXIT_OK


COMMANDS = {
    "certify": _cmd_certify,
    "search": _cmd_search,
    "table": _cmd_table,
    "scan": _cmd_scan,
    "oracle": _cmd_oracle,
}


def run(cfg: RunConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        text, code = COMMANDS[cfg.command](cfg)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KSatCertError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if cfg.output_path:
        with open(cfg.output_path, "w", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return code


# -- argument parsing -------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ksatcert", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid=True):
        p.add_argument("--format", dest="output_format", choices=("json", "csv", "text"), default=None)
        p.add_argument("--output", dest="output_path")
        if grid:
            p.add_argument("--grid-step", type=float, help="coarse alpha step (env KSAT_GRID_STEP)")
            p.add_argument("--refine-step", type=float, default=GridSpec.refine_step)
            p.add_argument("--center-window", type=float, help="default: max(1e-3, coarse step)")
            p.add_argument("--margin", type=float, default=GridSpec.margin)

    p = sub.add_parser("certify", help="certify r_k >= r at one (k, beta)")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    common(p)

    p = sub.add_parser("search", help="largest certifiable r, optimised over beta")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--beta", type=float, help="fix beta instead of searching")
    p.add_argument("--beta-lo", type=float, default=-0.5)
    p.add_argument("--beta-hi", type=float, default=1.5)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--precision", type=float, default=1e-3)
    p.add_argument("--r-lo", type=float)
    p.add_argument("--r-hi", type=float)
    common(p)

    p = sub.add_parser("table", help="certify the reference (k, beta, r) rows")
    p.add_argument("--endpoints", action="store_true", help="also certify both ends of interval betas")
    common(p)

    p = sub.add_parser("scan", help="CSV of the alpha landscape")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    common(p)

    p = sub.add_parser("oracle", help="exhaustive / Monte Carlo moment check")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--gamma", type=float, help="default: balanced gamma")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--samples", type=int, help="Monte Carlo samples instead of exhaustive enumeration")
    p.add_argument("--seed", type=int)
    common(p, grid=False)
    return parser


def config_from_args(args: argparse.Namespace, environ=None) -> RunConfig:
    environ = os.environ if environ is None else environ
    grid = GridSpec()
    if hasattr(args, "grid_step"):
        step = args.grid_step
        if step is None and environ.get("KSAT_GRID_STEP"):
            try:
                step = float(environ["KSAT_GRID_STEP"])
            except ValueError:
                raise UsageError(f"KSAT_GRID_STEP is not a number: {environ['KSAT_GRID_STEP']!r}")
        step = step if step is not None else GridSpec.coarse_step
        window = args.center_window
        if window is None:
            window = max(GridSpec.center_window, step)
        grid = GridSpec(
            coarse_step=step,
            refine_step=args.refine_step,
            center_window=window,
            margin=args.margin,
        )
    default_format = "csv" if args.command == "scan" else "text"
    extra = {
        key: getattr(args, key)
        for key in ("beta_lo", "beta_hi", "points", "precision", "r_lo", "r_hi", "endpoints", "n", "m", "samples")
        if hasattr(args, key)
    }
    return RunConfig(
        command=args.command,
        k=getattr(args, "k", None),
        beta=getattr(args, "beta", None),
        gamma=getattr(args, "gamma", None),
        r=getattr(args, "r", None),
        grid=grid,
        output_format=args.output_format or default_format,
        output_path=args.output_path,
        seed=getattr(args, "seed", None),
        extra=extra,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except (UsageError, ValueError) as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
