"""Deterministic Monte Carlo experiment runner and rate regression.

Every replication draws its randomness from a counter-based Philox stream
keyed by (base seed, purpose, n, rep) through numpy's SeedSequence, so
results are a pure function of the configuration: replications can run in
any order or degree of parallelism and the output files are byte-identical.
Threshold calibrations run once per n in the parent process with their own
streams.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .densities import model_from_config
from .general import builtin_functional, estimate_general
from .haar import count_bins, dyadic_round
from .lepski import (adaptive_cubic, adaptive_quadratic, build_grid,
                     calibrate_threshold)
from .cubic import choose_k_triple, cubic_estimator_fast
from .quadratic import quad_ustat_fast

RNG_ALGORITHM = "philox4x64 via SeedSequence(entropy=seed, spawn_key=(purpose, n, rep))"

PURPOSE_REPLICATION = 0
PURPOSE_CALIBRATION = 1

CSV_COLUMNS = ("n", "rep", "estimate", "truth", "selected_j", "k3_used", "flags")

_MIN_N = {"quadratic": 2, "cubic": 3, "general": 16}


def rng_stream(seed: int, purpose: int, n: int, rep: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(purpose, n, rep))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ExperimentConfig:
    model: dict
    estimator: dict
    n_list: tuple
    replications: int
    seed: int
    d: float = 2.0
    c_opt: object = "calibrate"  # float or the string "calibrate"
    calibration_reps: int = 400
    output_csv: str | None = None
    output_json: str | None = None

    def __post_init__(self):
        kind = self.estimator.get("kind")
        if kind not in _MIN_N:
            raise ValueError(f"unknown estimator kind {kind!r}")
        min_n = _MIN_N[kind]
        if any(int(n) < min_n for n in self.n_list):
            raise ValueError(f"every n must be >= {min_n} for kind={kind}")
        if self.replications < 1:
            raise ValueError("at least one replication is required")
        if not (self.c_opt == "calibrate" or isinstance(self.c_opt, (int, float))):
            raise ValueError("c_opt must be a number or the string 'calibrate'")

    @classmethod
    def from_dict(cls, cfg: dict) -> "ExperimentConfig":
        return cls(model=dict(cfg["model"]), estimator=dict(cfg["estimator"]),
                   n_list=tuple(int(n) for n in cfg["n_list"]),
                   replications=int(cfg["replications"]),
                   seed=int(cfg["seed"]), d=float(cfg.get("d", 2.0)),
                   c_opt=cfg.get("c_opt", "calibrate"),
                   calibration_reps=int(cfg.get("calibration_reps", 400)),
                   output_csv=cfg.get("output_csv"),
                   output_json=cfg.get("output_json"))

    def to_dict(self) -> dict:
        return {"model": self.model, "estimator": self.estimator,
                "n_list": list(self.n_list), "replications": self.replications,
                "seed": self.seed, "d": self.d, "c_opt": self.c_opt,
                "calibration_reps": self.calibration_reps,
                "output_csv": self.output_csv, "output_json": self.output_json}


def _grid_n(kind: str, n: int) -> int:
    # the general estimator selects on the pilot half
    return n // 2 if kind == "general" else n


def resolve_c_opt(config: ExperimentConfig, n: int) -> float:
    """Per-n threshold constant: the configured value, or a calibration
    under the uniform density with a dedicated stream."""
    if config.c_opt != "calibrate":
        return float(config.c_opt)
    if config.estimator.get("mode", "adaptive") == "fixed":
        return 0.0  # unused
    gn = _grid_n(config.estimator["kind"], n)
    grid = build_grid(gn, config.d)
    rng = rng_stream(config.seed, PURPOSE_CALIBRATION, n)
    return calibrate_threshold(gn, grid, config.calibration_reps, rng)


def _estimate_once(model, estimator: dict, n: int, d: float, c_opt: float,
                   rng: np.random.Generator) -> dict:
    kind = estimator["kind"]
    mode = estimator.get("mode", "adaptive")
    sample = model.sample(n, rng)
    flags = []
    selected_j = -1

    if kind == "quadratic":
        truth = model.true_functional(builtin_functional("square")).value
        if mode == "fixed":
            if "k" in estimator:
                k = dyadic_round(n) if estimator["k"] == "n" else int(estimator["k"])
            else:
                k = dyadic_round(float(n) ** (2.0 / (1.0 + 4.0 * estimator["beta"])))
            est = quad_ustat_fast(count_bins(sample, k), k)
        else:
            grid = build_grid(n, d)
            est, sel = adaptive_quadratic(sample, grid, c_opt)
            selected_j = sel.jhat
            if sel.forced:
                flags.append("forced_selection")
            if grid.fallback_used:
                flags.append("fallback_grid")
        return {"estimate": est.value, "truth": truth,
                "selected_j": selected_j, "k3_used": est.k, "flags": flags}

    if kind == "cubic":
        truth = model.true_functional(builtin_functional("cube")).value
        if mode == "fixed":
            ktriple = choose_k_triple(estimator["beta"], n)
            est = cubic_estimator_fast(count_bins(sample, ktriple.ks()), ktriple)
        else:
            grid = build_grid(n, d)
            est, sel = adaptive_cubic(sample, grid, c_opt)
            selected_j = sel.jhat
            if sel.forced:
                flags.append("forced_selection")
            if grid.fallback_used:
                flags.append("fallback_grid")
        return {"estimate": est.value, "truth": truth,
                "selected_j": selected_j, "k3_used": est.ktriple.k3,
                "flags": flags}

    # general T
    floor = estimator.get("domain_floor")
    if floor is None:
        floor = max(model.f_min / 2.0, 1e-6)
    func = builtin_functional(estimator["functional"], domain_floor=floor)
    truth = model.true_functional(func).value
    grid = build_grid(_grid_n(kind, n), d)
    est = estimate_general(sample, func, grid, c_opt, rng)
    selected_j = est.selection.jhat
    if est.pilot_clamped:
        flags.append("pilot_clamped")
    if est.selection.forced:
        flags.append("forced_selection")
    if grid.fallback_used:
        flags.append("fallback_grid")
    return {"estimate": est.value, "truth": truth, "selected_j": selected_j,
            "k3_used": est.ktriple.k3, "flags": flags}


def _replication(payload: tuple) -> dict:
    cfg_dict, n, rep, c_opt = payload
    config = ExperimentConfig.from_dict(cfg_dict)
    model = model_from_config(config.model)
    rng = rng_stream(config.seed, PURPOSE_REPLICATION, n, rep)
    row = {"n": n, "rep": rep}
    try:
        out = _estimate_once(model, config.estimator, n, config.d, c_opt, rng)
        row.update(out)
        row["flags"] = ";".join(out["flags"])
    except Exception as exc:  # a failed replication is a flagged row, not a crash
        row.update({"estimate": float("nan"), "truth": float("nan"),
                    "selected_j": -1, "k3_used": 0,
                    "flags": f"error:{type(exc).__name__}"})
    return row


def run_mc(config: ExperimentConfig, workers: int | None = None) -> list:
    """All replications of the experiment, as (n, rep)-sorted row dicts.

    Output is independent of the worker count: every replication owns a
    stream keyed by (seed, n, rep) and rows are merged by key afterwards.
    """
    if workers is None:
        workers = int(os.environ.get("DENSINT_WORKERS", "1"))
    c_by_n = {n: resolve_c_opt(config, n) for n in config.n_list}
    payloads = [(config.to_dict(), n, rep, c_by_n[n])
                for n in config.n_list for rep in range(config.replications)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_replication, payloads, chunksize=16))
    else:
        rows = [_replication(p) for p in payloads]
    rows.sort(key=lambda r: (r["n"], r["rep"]))

    if config.output_csv:
        write_csv(rows, config.output_csv)
    if config.output_json:
        summary = summarize(config, rows, c_by_n)
        with open(config.output_json, "w", encoding="utf-8") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return rows


def _fmt(v: float) -> str:
    return "%.17g" % v


def write_csv(rows: list, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for r in rows:
            fh.write(",".join([str(r["n"]), str(r["rep"]), _fmt(r["estimate"]),
                               _fmt(r["truth"]), str(r["selected_j"]),
                               str(r["k3_used"]), r["flags"]]) + "\n")


def read_csv(path: str) -> list:
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != CSV_COLUMNS:
            raise ValueError(f"unexpected results header {header}")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            rows.append({"n": int(parts[0]), "rep": int(parts[1]),
                         "estimate": float(parts[2]), "truth": float(parts[3]),
                         "selected_j": int(parts[4]), "k3_used": int(parts[5]),
                         "flags": parts[6] if len(parts) > 6 else ""})
    return rows


def _aggregate(rows: list) -> list:
    """Per-n population moments over the valid replications."""
    per_n = []
    for n in sorted({r["n"] for r in rows}):
        vals = np.asarray([r["estimate"] for r in rows
                           if r["n"] == n and not r["flags"].startswith("error")])
        truths = [r["truth"] for r in rows
                  if r["n"] == n and not r["flags"].startswith("error")]
        n_failed = sum(1 for r in rows
                       if r["n"] == n and r["flags"].startswith("error"))
        truth = truths[0] if truths else float("nan")
        if vals.size == 0:
            per_n.append({"n": n, "replications": 0, "n_failed": n_failed,
                          "truth": truth, "mean": float("nan"),
                          "bias": float("nan"), "variance": float("nan"),
                          "mse": float("nan"), "se_mean": float("nan")})
            continue
        mean = float(np.mean(vals))
        bias = mean - truth
        variance = float(np.var(vals))  # population variance: mse identity is exact
        mse = float(np.mean((vals - truth) ** 2))
        se_mean = math.sqrt(variance / vals.size)
        per_n.append({"n": n, "replications": int(vals.size), "n_failed": n_failed,
                      "truth": truth, "mean": mean, "bias": bias,
                      "variance": variance, "mse": mse, "se_mean": se_mean})
    return per_n


def summarize(config: ExperimentConfig, rows: list, c_by_n: dict) -> dict:
    return {"config": config.to_dict(), "rng": RNG_ALGORITHM,
            "c_opt_by_n": {str(n): c for n, c in c_by_n.items()},
            "per_n": _aggregate(rows)}


@dataclass(frozen=True)
class RateReport:
    per_n: tuple
    slope: float
    intercept: float
    slope_se: float
    ci95: tuple
    theoretical_slope: float | None = None

    def to_dict(self) -> dict:
        return {"per_n": list(self.per_n), "slope": self.slope,
                "intercept": self.intercept, "slope_se": self.slope_se,
                "ci95": list(self.ci95),
                "theoretical_slope": self.theoretical_slope}


def rate_regression(rows: list, beta: float | None = None) -> RateReport:
    """OLS of log MSE on log n over the per-n aggregates.

    With a smoothness value supplied, the reference slope
    -8 beta / (1 + 4 beta) is attached for comparison. Zero MSE rows make
    the fit degenerate; the report then carries infinite uncertainty
    rather than raising.
    """
    per_n = _aggregate(rows)
    if len(per_n) < 3:
        raise ValueError(f"rate regression needs >= 3 distinct n, got {len(per_n)}")
    theo = -8.0 * beta / (1.0 + 4.0 * beta) if beta is not None else None
    mses = np.asarray([p["mse"] for p in per_n])
    ns = np.asarray([p["n"] for p in per_n], dtype=float)
    if np.any(~np.isfinite(mses)) or np.any(mses <= 0.0):
        return RateReport(tuple(per_n), float("nan"), float("nan"),
                          float("inf"), (float("-inf"), float("inf")), theo)
    x = np.log(ns)
    y = np.log(mses)
    design = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    dof = max(len(x) - 2, 1)
    sigma2 = float(resid @ resid) / dof
    cov = sigma2 * np.linalg.inv(design.T @ design)
    slope = float(coef[1])
    slope_se = float(math.sqrt(max(cov[1, 1], 0.0)))
    ci = (slope - 1.96 * slope_se, slope + 1.96 * slope_se)
    return RateReport(tuple(per_n), slope, float(coef[0]), slope_se, ci, theo)
