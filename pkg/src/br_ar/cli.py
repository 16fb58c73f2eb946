"""Command-line front end ``br-ar``.

Every subcommand writes one JSON document (to stdout or ``--out``) and,
with ``--csv``, a comma-separated plot-data file.  Floats are written with
17 significant digits so documents parse back to identical reports.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager

import numpy as np

from . import __version__
from .ar import ArModel, TimeSeries, get_model, simulate
from .errors import BrArError, ParameterError
from .estimation import fit_residuals
from .gof import TestConfig, br_gof_test, wiener_functional_quantiles
from .kde import Bandwidth, get_kernel
from .montecarlo import (
    RATE_CATALOGUE,
    McConfig,
    calibrate_h0,
    empirical_level,
    mean_alternatives,
    power_sweep,
    rate_check,
    variance_alternatives,
)
from .noise import parse_noise

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# bandwidth constants calibrated for delta = 2, alpha = 0.05
TABLE1_H0 = {
    "gaussian": {50: 0.10, 100: 0.14, 500: 0.14},
    "uniform": {50: 0.20, 100: 0.25, 500: 0.32},
}
TABLE1_HEADER = ("kernel", "n", "h0", "model", "rate", "stderr", "retries")


class ConfigError(BrArError):
    """Invalid command line or configuration file."""


# -- serialization ------------------------------------------------------------


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    text = format(x, ".17g")
    return text if any(c in text for c in ".en") else text + ".0"


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with floats at 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in seq):
            return "[" + ", ".join(dumps(v) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def csv_text(header, rows) -> str:
    def cell(v):
        if isinstance(v, (float, np.floating)):
            return _fmt_float(float(v))
        return str(v)

    lines = [",".join(header)] + [",".join(cell(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


# -- argument handling ---------------------------------------------------------


def _float_list(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _int_list(text):
    return [int(v) for v in str(text).split(",") if v.strip()]


def _n_grid(text):
    """``lo:hi`` (powers of two between) or a comma list."""
    text = str(text)
    if ":" in text:
        lo, hi = (int(v) for v in text.split(":"))
        if lo < 1 or hi < lo:
            raise ValueError(text)
        k0, k1 = math.ceil(math.log2(lo)), math.floor(math.log2(hi))
        return [2**k for k in range(k0, k1 + 1)]
    return _int_list(text)


def _add_common(p):
    p.add_argument("--config", help="JSON file with option values (keys as long flag names)")
    p.add_argument("--out", help="write the JSON document here instead of stdout")
    p.add_argument("--csv", help="also write plot data as CSV")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=None, help="worker processes (default: $BR_AR_JOBS or 1)")
    p.add_argument("--verbose", action="store_true", help="report runtime on stderr")


def _add_model(p, n_default=100):
    p.add_argument("--model", default="m0", help="model alias m0..m5")
    p.add_argument("--theta", type=_float_list, default=None, help="comma-separated coefficients")
    p.add_argument("--n", type=int, default=n_default)
    p.add_argument("--phi0", type=_float_list, default=None, help="initial vector X_0, X_-1, ...")


def _add_test(p):
    p.add_argument("--f0", default="normal:0,1", help="null density, e.g. normal:0,1")
    p.add_argument("--noise", default=None, help="true innovation law (default: f0)")
    p.add_argument("--kernel", default="gaussian", help="gaussian | uniform[:eps] | exponential")
    p.add_argument("--h0", type=float, default=0.14)
    p.add_argument("--kappa", type=float, default=0.23)
    p.add_argument("--delta", type=float, default=2.0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--fit-order", type=int, default=None)


def _add_mc(p):
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--retry-limit", type=int, default=20)
    p.add_argument("--ks", action="store_true", help="also run the KS baseline")
    p.add_argument("--keep-z", action="store_true", help="include per-replication z values")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="br-ar", description="Residual density tests for AR processes.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one AR path")
    _add_common(p)
    _add_model(p)
    p.add_argument("--noise", default="normal:0,1")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="least-squares fit and residuals")
    _add_common(p)
    _add_model(p)
    p.add_argument("--noise", default="normal:0,1")
    p.add_argument("--input", help="CSV/text file with one observation per line (instead of simulating)")
    p.add_argument("--p", type=int, default=None, help="fit order (default: model order)")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("test", help="goodness-of-fit test on one simulated path")
    _add_common(p)
    _add_model(p)
    _add_test(p)
    p.add_argument("--ks", action="store_true")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("level", help="empirical level")
    _add_common(p)
    _add_model(p)
    _add_test(p)
    _add_mc(p)
    p.set_defaults(func=cmd_level)

    p = sub.add_parser("power", help="empirical power over a sweep of alternatives")
    _add_common(p)
    _add_model(p)
    _add_test(p)
    _add_mc(p)
    p.add_argument("--sweep", choices=["mean", "variance"], default=None)
    p.add_argument("--values", type=_float_list, default=None, help="sweep values")
    p.add_argument("--alternative", action="append", default=None, help="explicit alternative (repeatable)")
    p.set_defaults(func=cmd_power)

    p = sub.add_parser("calibrate", help="calibrate h0 on the neutral model")
    _add_common(p)
    p.add_argument("--kernel", default="gaussian")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--target", type=float, default=0.05)
    p.add_argument("--range", dest="search", default="0.05:0.4", help="lo:hi")
    p.add_argument("--kappa", type=float, default=0.23)
    p.add_argument("--delta", type=float, default=2.0)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--band", type=float, default=0.005)
    p.add_argument("--grid", type=int, default=9)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("ratecheck", help="empirical convergence rates")
    _add_common(p)
    p.add_argument("--quantity", default="all", help=f"one of {', '.join(RATE_CATALOGUE)} or 'all'")
    p.add_argument("--ngrid", type=_n_grid, default=None, help="lo:hi (powers of two) or a comma list")
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--tolerance", type=float, default=0.15)
    p.set_defaults(func=cmd_ratecheck)

    p = sub.add_parser("wiener-quantiles", help="quantiles of the random-walk limit functional")
    _add_common(p)
    p.add_argument("--reps", type=int, default=100_000)
    p.add_argument("--steps", type=int, default=4096)
    p.add_argument("--levels", type=_float_list, default=[0.90, 0.95, 0.99])
    p.set_defaults(func=cmd_wiener)

    p = sub.add_parser("table1", help="empirical level grid over kernels, n and models")
    _add_common(p)
    p.add_argument("--kernels", default="gaussian,uniform")
    p.add_argument("--ns", type=_int_list, default=[50, 100, 500])
    p.add_argument("--models", default="m0,m1,m2,m3,m4,m5")
    p.add_argument("--h0", type=float, default=None, help="override the calibrated h0 table")
    p.add_argument("--kappa", type=float, default=0.23)
    p.add_argument("--delta", type=float, default=2.0)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--retry-limit", type=int, default=20)
    p.set_defaults(func=cmd_table1)
    return parser


def _apply_config(parser, args, argv):
    """Fill options from ``--config``; flags given on the command line win."""
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            data = json.load(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if data.pop("command", args.command) != args.command:
        raise ConfigError(f"config is for a different command than {args.command!r}")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    given = {
        a.dest for a in sub._actions for s in a.option_strings for tok in argv if tok == s or tok.startswith(s + "=")
    }
    for key, value in data.items():
        dest = key.replace("-", "_")
        if dest not in actions:
            raise ConfigError(f"unknown config key {key!r}")
        if dest in given:
            continue
        act = actions[dest]
        if act.type is not None and isinstance(value, str):
            try:
                value = act.type(value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {value!r}") from exc
        setattr(args, dest, value)
    return args


def _model(args) -> ArModel:
    if args.theta is not None:
        return ArModel(tuple(args.theta), name="custom")
    return get_model(args.model)


def _model_doc(model: ArModel) -> dict:
    return {"name": model.name, "theta": list(model.theta), "classification": model.classification}


@contextmanager
def _mapper(jobs):
    if jobs is None:
        env = os.environ.get("BR_AR_JOBS")
        try:
            jobs = int(env) if env else 1
        except ValueError:
            raise ConfigError(f"BR_AR_JOBS must be an integer, got {env!r}") from None
    if jobs < 1:
        raise ConfigError("--jobs must be >= 1")
    if jobs == 1:
        yield map
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            yield pool.map


def _emit(args, command, config, result, csv=None):
    doc = {"command": command, "config": config, "result": result}
    _write(args.out, dumps(doc) + "\n")
    if args.csv and csv is not None:
        _write(args.csv, csv_text(*csv))


def _test_config(args) -> TestConfig:
    return TestConfig(
        parse_noise(args.f0), get_kernel(args.kernel), Bandwidth(args.h0, args.kappa), args.delta, args.alpha
    )


def _test_doc(args) -> dict:
    return {
        "f0": args.f0,
        "noise": args.noise or args.f0,
        "kernel": str(get_kernel(args.kernel)),
        "h0": args.h0,
        "kappa": args.kappa,
        "delta": args.delta,
        "alpha": args.alpha,
        "fit_order": args.fit_order,
    }


def _mc_config(args) -> McConfig:
    f0 = parse_noise(args.f0)
    return McConfig(
        model=_model(args),
        noise=parse_noise(args.noise) if args.noise else f0,
        f0=f0,
        kernel=get_kernel(args.kernel),
        bandwidth=Bandwidth(args.h0, args.kappa),
        n=args.n,
        reps=args.reps,
        alpha=args.alpha,
        delta=args.delta,
        seed=args.seed,
        retry_limit=args.retry_limit,
        fit_order=args.fit_order,
        phi0=tuple(args.phi0) if args.phi0 else None,
        keep_z=args.keep_z,
        with_ks=args.ks,
    )


# -- subcommands ---------------------------------------------------------------


def cmd_simulate(args):
    model = _model(args)
    s = simulate(model, parse_noise(args.noise), args.n, args.phi0, seed=args.seed)
    result = {"p": s.p, "n": s.n, "values": s.values, "innovations": s.innovations}
    t = np.arange(-s.p + 1, s.n + 1)
    eps = np.concatenate([np.full(s.p, np.nan), s.innovations])
    csv = (("t", "x", "eps"), zip(t, s.values, eps))
    config = {"model": _model_doc(model), "noise": args.noise, "n": args.n, "seed": args.seed}
    _emit(args, "simulate", config, result, csv)


def _read_series(path, p):
    values = np.loadtxt(path, delimiter=",", ndmin=1, dtype=float).ravel()
    return TimeSeries(values, p)


def cmd_estimate(args):
    model = _model(args)
    p = model.p if args.p is None else args.p
    if args.input:
        series = _read_series(args.input, p)
        source = {"input": args.input}
    else:
        series = simulate(model, parse_noise(args.noise), args.n, args.phi0, seed=args.seed)
        source = {"model": _model_doc(model), "noise": args.noise, "n": args.n, "seed": args.seed}
    fit, res = fit_residuals(series, p)
    r = np.asarray(res)
    result = {
        "p": p,
        "theta_hat": [] if fit is None else fit.theta_hat,
        "condition_estimate": None if fit is None else fit.condition_estimate,
        "residual_mean": float(r.mean()),
        "residual_var": float(r.var()),
        "residuals": r,
    }
    _emit(args, "estimate", source, result, (("t", "residual"), zip(range(1, r.size + 1), r)))


def cmd_test(args):
    model = _model(args)
    cfg = _test_config(args)
    noise = parse_noise(args.noise) if args.noise else cfg.f0
    series = simulate(model, noise, args.n, args.phi0, seed=args.seed)
    p = model.p if args.fit_order is None else args.fit_order
    _, res = fit_residuals(series, p)
    report = br_gof_test(res, cfg, with_ks=args.ks)
    config = {"model": _model_doc(model), "n": args.n, "seed": args.seed, **_test_doc(args)}
    _emit(args, "test", config, report.to_dict())


def _mc_doc(args):
    model = _model(args)
    return {
        "model": _model_doc(model),
        "n": args.n,
        "reps": args.reps,
        "seed": args.seed,
        "retry_limit": args.retry_limit,
        **_test_doc(args),
    }


_MC_HEADER = ("rejection_rate", "stderr", "reps_used", "retries", "ks_rejection_rate")


def _mc_row(r):
    ks = "" if r.ks_rejection_rate is None else r.ks_rejection_rate
    return (r.rejection_rate, r.stderr, r.reps_used, r.retries, ks)


def cmd_level(args):
    cfg = _mc_config(args)
    with _mapper(args.jobs) as mapper:
        report = empirical_level(cfg, mapper=mapper)
    _log_runtime(args, report.runtime)
    _emit(args, "level", _mc_doc(args), report.to_dict(), (_MC_HEADER, [_mc_row(report)]))


def cmd_power(args):
    cfg = _mc_config(args)
    if args.alternative:
        alts = [(float(i), parse_noise(a)) for i, a in enumerate(args.alternative)]
    elif args.sweep == "mean":
        alts = mean_alternatives(args.values or [-1, -0.5, -0.2, 0, 0.2, 0.5, 1])
    elif args.sweep == "variance":
        alts = variance_alternatives(args.values or [0.2, 0.5, 1, 2, 3.5])
    else:
        raise ConfigError("power needs --sweep mean|variance or --alternative")
    with _mapper(args.jobs) as mapper:
        points = power_sweep(cfg, alts, mapper=mapper)
    _log_runtime(args, sum(p.report.runtime for p in points))
    config = {**_mc_doc(args), "sweep": args.sweep, "alternatives": [str(a) for _, a in alts]}
    rows = [(pt.parameter, str(pt.alternative), *_mc_row(pt.report)) for pt in points]
    _emit(args, "power", config, [p.to_dict() for p in points], (("parameter", "alternative", *_MC_HEADER), rows))


def cmd_calibrate(args):
    try:
        lo, _, hi = args.search.partition(":")
        search = (float(lo), float(hi or lo))
    except ValueError:
        raise ConfigError(f"--range must be lo:hi, got {args.search!r}") from None
    kernel = get_kernel(args.kernel)
    t0 = time.perf_counter()
    with _mapper(args.jobs) as mapper:
        cal = calibrate_h0(
            args.target, kernel, args.n, search, kappa=args.kappa, reps=args.reps, seed=args.seed,
            delta=args.delta, band=args.band, grid=args.grid, mapper=mapper,
        )
    _log_runtime(args, time.perf_counter() - t0)
    config = {
        "kernel": str(kernel), "n": args.n, "target": args.target, "range": list(search),
        "kappa": args.kappa, "delta": args.delta, "reps": args.reps, "seed": args.seed,
    }
    _emit(args, "calibrate", config, cal.to_dict(), (("h0", "level"), cal.evaluations))


def cmd_ratecheck(args):
    ids = list(RATE_CATALOGUE) if args.quantity == "all" else [args.quantity]
    with _mapper(args.jobs) as mapper:
        reports = [
            rate_check(q, args.ngrid, args.reps, args.seed, tolerance=args.tolerance, mapper=mapper) for q in ids
        ]
    rows = [(r.quantity, n, m, r.slope, "" if r.theory is None else r.theory, r.passed)
            for r in reports for n, m in zip(r.n_grid, r.medians)]
    config = {"quantity": args.quantity, "ngrid": args.ngrid, "reps": args.reps, "seed": args.seed,
              "tolerance": args.tolerance}
    result = reports[0].to_dict() if len(reports) == 1 else [r.to_dict() for r in reports]
    _emit(args, "ratecheck", config, result, (("quantity", "n", "median", "slope", "theory", "passed"), rows))


def cmd_wiener(args):
    with _mapper(args.jobs) as mapper:
        table = wiener_functional_quantiles(args.reps, args.steps, args.seed, tuple(args.levels), mapper=mapper)
    config = {"reps": args.reps, "steps": args.steps, "seed": args.seed}
    result = {"quantiles": [{"level": q, "value": v} for q, v in table.items()]}
    _emit(args, "wiener-quantiles", config, result, (("level", "value"), table.items()))


def table1_rows(args, mapper):
    f0 = parse_noise("normal:0,1")
    rows = []
    for kname in [k for k in args.kernels.split(",") if k]:
        kernel = get_kernel(kname)
        base = kname.split(":")[0]
        for n in args.ns:
            h0 = args.h0 if args.h0 is not None else TABLE1_H0.get(base, {}).get(n)
            if h0 is None:
                raise ConfigError(f"no tabulated h0 for kernel {kname!r} at n={n}; pass --h0")
            for m in [m for m in args.models.split(",") if m]:
                cfg = McConfig(get_model(m), f0, f0, kernel, Bandwidth(h0, args.kappa), n, args.reps,
                               args.alpha, args.delta, args.seed, args.retry_limit)
                r = empirical_level(cfg, mapper=mapper)
                rows.append((kname, n, h0, m, r.rejection_rate, r.stderr, r.retries))
    return rows


def cmd_table1(args):
    t0 = time.perf_counter()
    with _mapper(args.jobs) as mapper:
        rows = table1_rows(args, mapper)
    _log_runtime(args, time.perf_counter() - t0)
    config = {"kernels": args.kernels, "ns": args.ns, "models": args.models, "h0": args.h0, "kappa": args.kappa,
              "delta": args.delta, "alpha": args.alpha, "reps": args.reps, "seed": args.seed}
    result = [dict(zip(TABLE1_HEADER, row)) for row in rows]
    _emit(args, "table1", config, result, (TABLE1_HEADER, rows))


def _log_runtime(args, seconds):
    if args.verbose:
        print(f"runtime: {seconds:.2f} s", file=sys.stderr)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        args = _apply_config(parser, args, argv)
        args.func(args)
    except (ConfigError, ParameterError, KeyError, ValueError) as exc:
        print(f"br-ar: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (BrArError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"br-ar: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
