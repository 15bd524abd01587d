"""Command line interface.

Subcommands:
  grid       print the adaptive candidate grid for (n, d) as JSON
  estimate   estimate a functional from a file of samples (one float/line)
  simulate   run a Monte Carlo experiment from a JSON config
  calibrate  simulate the selection-threshold constant for (n, d)
  report     rate regression over a results CSV, plus plot-ready output
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import harness
from .cubic import choose_k_triple, cubic_estimator
from .general import builtin_functional, estimate_general
from .haar import count_bins, dyadic_round
from .lepski import (adaptive_cubic, adaptive_quadratic, build_grid,
                     calibrate_threshold)
from .quadratic import quad_ustat_fast


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _read_sample(path: str) -> np.ndarray:
    with open(path, encoding="utf-8") as fh:
        vals = [float(line) for line in fh if line.strip()]
    return np.asarray(vals, dtype=float)


def _cmd_grid(args) -> int:
    _emit(build_grid(args.n, args.d).to_dict())
    return 0


def _resolve_c(args, grid_n: int) -> float:
    if args.c_opt is not None:
        return args.c_opt
    grid = build_grid(grid_n, args.d)
    rng = harness.rng_stream(args.seed, harness.PURPOSE_CALIBRATION, grid_n)
    return calibrate_threshold(grid_n, grid, args.calibration_reps, rng)


def _cmd_estimate(args) -> int:
    x = _read_sample(args.input)
    n = x.size
    name = args.functional
    out = {"functional": name, "n": n, "seed": args.seed}

    if name in ("square", "renyi2"):
        if args.adaptive:
            c = _resolve_c(args, n)
            est, sel = adaptive_quadratic(x, build_grid(n, args.d), c)
            out.update({"mode": "adaptive", "estimate": est.value, "k": est.k,
                        "selected_j": sel.jhat, "c_opt": c})
        else:
            k = dyadic_round(float(n) ** (2.0 / (1.0 + 4.0 * args.beta)))
            est = quad_ustat_fast(count_bins(x, k), k)
            out.update({"mode": "fixed", "beta": args.beta,
                        "estimate": est.value, "k": k})
    elif name == "cube":
        if args.adaptive:
            c = _resolve_c(args, n)
            est, sel = adaptive_cubic(x, build_grid(n, args.d), c)
            out.update({"mode": "adaptive", "estimate": est.value,
                        "ktriple": list(est.ktriple.ks()),
                        "selected_j": sel.jhat, "c_opt": c})
        else:
            ktriple = choose_k_triple(args.beta, n)
            est = cubic_estimator(x, ktriple)
            out.update({"mode": "fixed", "beta": args.beta,
                        "estimate": est.value, "ktriple": list(ktriple.ks())})
    else:
        func = builtin_functional(name, domain_floor=args.domain_floor)
        rng = harness.rng_stream(args.seed, harness.PURPOSE_REPLICATION, n)
        if args.adaptive:
            c = _resolve_c(args, n // 2)
            est = estimate_general(x, func, None, c, rng, d=args.d)
            out.update({"mode": "adaptive", "c_opt": c,
                        "selected_j": est.selection.jhat})
        else:
            est = estimate_general(x, func, None, 0.0, rng, d=args.d,
                                   beta=args.beta)
            out.update({"mode": "fixed", "beta": args.beta})
        out.update({"estimate": est.value, "terms": list(est.term_values),
                    "pilot_k": est.pilot_k,
                    "ktriple": list(est.ktriple.ks()),
                    "pilot_clamped": est.pilot_clamped})
    _emit(out)
    return 0


def _cmd_simulate(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        cfg = harness.ExperimentConfig.from_dict(json.load(fh))
    rows = harness.run_mc(cfg, workers=args.workers)
    c_by_n = {n: harness.resolve_c_opt(cfg, n) for n in cfg.n_list}
    _emit(harness.summarize(cfg, rows, c_by_n))
    return 0


def _cmd_calibrate(args) -> int:
    grid = build_grid(args.n, args.d)
    rng = harness.rng_stream(args.seed, harness.PURPOSE_CALIBRATION, args.n)
    c = calibrate_threshold(args.n, grid, args.reps, rng)
    _emit({"n": args.n, "d": args.d, "reps": args.reps, "seed": args.seed,
           "c_opt": c})
    return 0


def _cmd_report(args) -> int:
    rows = harness.read_csv(args.input)
    report = harness.rate_regression(rows, beta=args.beta)
    _emit(report.to_dict())
    if args.plot_csv:
        with open(args.plot_csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("log_n,log_mse\n")
            for p in report.per_n:
                fh.write("%.17g,%.17g\n" % (np.log(p["n"]), np.log(p["mse"])))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="densint",
        description="Integral functionals of a density on [0,1]: estimation "
                    "and Monte Carlo verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("grid", help="print the candidate grid as JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=float, default=2.0)
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("estimate", help="estimate a functional from a sample file")
    p.add_argument("--input", required=True, help="file with one float per line")
    p.add_argument("--functional", required=True,
                   help="square | cube | entropy | renyi2 | power:<p>")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--beta", type=float, help="known smoothness")
    group.add_argument("--adaptive", action="store_true")
    p.add_argument("--c-opt", type=float, default=None, dest="c_opt")
    p.add_argument("--d", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--calibration-reps", type=int, default=400)
    p.add_argument("--domain-floor", type=float, default=0.05)
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("simulate", help="run a Monte Carlo experiment")
    p.add_argument("--config", required=True, help="experiment JSON file")
    p.add_argument("--workers", type=int, default=None,
                   help="overrides DENSINT_WORKERS")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("calibrate", help="calibrate the threshold constant")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=float, default=2.0)
    p.add_argument("--reps", type=int, default=400)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("report", help="rate regression over a results CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--beta", type=float, default=None,
                   help="attach the reference slope -8b/(1+4b)")
    p.add_argument("--plot-csv", default=None,
                   help="write log n vs log MSE rows here")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
