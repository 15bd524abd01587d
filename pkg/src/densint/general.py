"""Sample-splitting Taylor plug-in estimator of int T(f).

Half the sample fits a clamped histogram pilot (its resolution chosen by
the adaptive selection run on the same half); the other half estimates the
zeroth- through third-order corrections of T around the pilot. Powers of
(f - fhat) are expanded into pure moments of f with piecewise-constant
weights before estimation:

    int g (f - fhat)^2 = int g f^2 - 2 int g fhat f + int g fhat^2
    int g (f - fhat)^3 = int g f^3 - 3 int g fhat f^2
                         + 3 int g fhat^2 f - int g fhat^3

so every statistical piece is a weighted first-, second-, or third-order
U-statistic with an exactly integrable piecewise-constant weight, and the
f-free pieces are exact bin sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cubic import KTriple, MULTIPLICITIES, _fast_terms, choose_k_triple
from .haar import (PiecewiseConstantFn, as_k, bin_index, count_bins,
                   dyadic_round, empirical_projection)
from .lepski import LepskiGrid, SelectionResult, build_grid, select_modified


@dataclass(frozen=True)
class FunctionalSpec:
    """The target T with its first three derivatives, all vectorized over
    numpy arrays, and the clamp point for the pilot density."""

    name: str
    T: callable
    d1: callable
    d2: callable
    d3: callable
    domain_floor: float = 0.05

    def __post_init__(self):
        if not self.domain_floor > 0.0:
            raise ValueError(f"domain floor {self.domain_floor} must be positive")


def builtin_functional(name: str, domain_floor: float = 0.05) -> FunctionalSpec:
    """Named targets selectable from configs: square, cube, entropy
    (x log x), renyi2 (alias of square), power:p."""
    if name in ("square", "renyi2"):
        return FunctionalSpec(name, lambda x: x**2, lambda x: 2.0 * x,
                              lambda x: 2.0 * np.ones_like(x),
                              lambda x: np.zeros_like(x), domain_floor)
    if name == "cube":
        return FunctionalSpec(name, lambda x: x**3, lambda x: 3.0 * x**2,
                              lambda x: 6.0 * x,
                              lambda x: 6.0 * np.ones_like(x), domain_floor)
    if name == "entropy":
        return FunctionalSpec(name, lambda x: x * np.log(x),
                              lambda x: np.log(x) + 1.0,
                              lambda x: 1.0 / x,
                              lambda x: -1.0 / x**2, domain_floor)
    if name.startswith("power:"):
        p = float(name.split(":", 1)[1])
        return FunctionalSpec(
            name, lambda x: x**p, lambda x: p * x ** (p - 1),
            lambda x: p * (p - 1) * x ** (p - 2),
            lambda x: p * (p - 1) * (p - 2) * x ** (p - 3), domain_floor)
    raise ValueError(f"unknown functional {name!r}; "
                     "choices: square, cube, entropy, renyi2, power:<p>")


@dataclass(frozen=True)
class GeneralEstimate:
    value: float
    term_values: tuple  # zeroth, linear, quadratic, cubic corrections
    pilot_k: int
    n1: int
    n2: int
    pilot_clamped: bool
    selection: SelectionResult
    ktriple: KTriple


def weighted_quad_ustat(sample, weight: PiecewiseConstantFn, resolution) -> float:
    """Pair statistic with the t-integral weighted by g: the kernel
    integral over bin j contributes k^2 * (g_j / k), so the value is
    (k / (n(n-1))) * sum_j g_j N_j (N_j - 1). O(n + k)."""
    k = as_k(resolution)
    if weight.k != k:
        raise ValueError(
            f"weight resolution {weight.k} must match the statistic's k={k}")
    x = np.asarray(sample, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError(f"the pair statistic needs n >= 2, got n={n}")
    nj = count_bins(x, k).at(k)
    return float(k) * float(np.sum(weight.values * nj * (nj - 1))) / (n * (n - 1))


def weighted_cubic_ustat(sample, weight: PiecewiseConstantFn,
                         ktriple: KTriple) -> float:
    """Five-term triple statistic with every t-integral weighted by g
    (piecewise constant at the coarsest resolution k1). O(n + k3)."""
    if weight.k != ktriple.k1:
        raise ValueError(
            f"weight resolution {weight.k} must match k1={ktriple.k1}")
    x = np.asarray(sample, dtype=float)
    if x.size < 3:
        raise ValueError(f"the triple statistic needs n >= 3, got n={x.size}")
    counts = count_bins(x, ktriple.ks())
    terms = _fast_terms(counts, ktriple, weight.values, weight.k)
    return float(sum(m * t for m, t in zip(MULTIPLICITIES, terms)))


def weighted_cubic_ustat_naive(sample, weight: PiecewiseConstantFn,
                               ktriple: KTriple) -> float:
    """Quadrature oracle for the weighted triple statistic.

    Evaluates the actual kernel factors on the k3 midpoint grid (where the
    integrands are bin-wise constant, so the midpoint rule is exact) and
    enumerates all ordered distinct triples. Independent of both the
    closed-form kernel integrals and the count algebra. O(k3 n^3).
    """
    x = np.asarray(sample, dtype=float)
    n = x.size
    if n < 3:
        raise ValueError(f"the triple statistic needs n >= 3, got n={n}")
    k1, k2, k3 = ktriple.ks()
    if weight.k != k1:
        raise ValueError(
            f"weight resolution {weight.k} must match k1={k1}")
    grid = (np.arange(k3) + 0.5) / k3

    def kmat(k):
        return float(k) * (bin_index(k, grid)[:, None] == bin_index(k, x)[None, :])

    m1, m2, m3 = kmat(k1), kmat(k2), kmat(k3)
    factors = {0: m1, 1: m2, 2: m3}
    w = weight(grid) / k3

    idx = np.arange(n)
    distinct = ((idx[:, None, None] != idx[None, :, None])
                & (idx[None, :, None] != idx[None, None, :])
                & (idx[:, None, None] != idx[None, None, :]))
    denom = n * (n - 1) * (n - 2)

    term_factor_ids = (
        ((0,), (0,), (0,)),
        ((0,), (2, 0), (0,)),
        ((0,), (2, 0), (2, 0)),
        ((1, 0), (1, 0), (2, 1)),
        ((1, 0), (1, 0), (1, 0)),
    )
    total = 0.0
    for mult, fids in zip(MULTIPLICITIES, term_factor_ids):
        mats = [factors[f[0]] - factors[f[1]] if len(f) == 2 else factors[f[0]]
                for f in fids]
        h = np.einsum("g,gi,gj,gl->ijl", w, *mats)
        total += mult * float(h[distinct].sum()) / denom
    return total


def _mean_at(values: np.ndarray, k: int, points: np.ndarray) -> float:
    return float(np.mean(values[bin_index(k, points) - 1]))


def estimate_general(sample, func_spec: FunctionalSpec,
                     grid: LepskiGrid | None, c_opt: float,
                     rng: np.random.Generator, d: float = 2.0,
                     beta: float | None = None) -> GeneralEstimate:
    """Split, fit the pilot on one half, estimate the corrections on the
    other.

    The grid drives the selection on the pilot half, so it must be built
    for n1 = n // 2 observations (built internally when omitted). The
    pilot resolution follows the selected smoothness at the density rate
    exponent 1/(1 + 2 beta); the correction statistics use the resolution
    triple at the selected smoothness with k3 = k_jhat*. Passing beta
    skips the selection and uses the stated smoothness throughout.
    Deterministic given the generator state.
    """
    x = np.asarray(sample, dtype=float)
    n = x.size
    if n < 6:
        raise ValueError(f"the split estimator needs n >= 6, got n={n}")
    n1 = n // 2
    n2 = n - n1
    perm = rng.permutation(n)
    d1_half, d2_half = x[perm[:n1]], x[perm[n1:]]

    if beta is not None:
        beta_hat = beta
        k3_star = dyadic_round(
            (n1 * n1 / np.log(n1)) ** (1.0 / (1.0 + 4.0 * beta_hat)))
        sel = SelectionResult(jhat=-1, tested=(), c_used=0.0)
    else:
        if grid is None:
            grid = build_grid(n1, d)
        sel = select_modified(d1_half, grid, c_opt)
        beta_hat = grid.betas[sel.jhat]
        k3_star = grid.k_stars[sel.jhat]

    k_dens = dyadic_round(float(n1) ** (1.0 / (1.0 + 2.0 * beta_hat)))
    pilot = empirical_projection(d1_half, k_dens)
    clamped = bool(np.any(pilot.values < func_spec.domain_floor))
    v = np.maximum(pilot.values, func_spec.domain_floor)

    ktriple = choose_k_triple(beta_hat, n2, k3=k3_star)
    kq = ktriple.k3

    tv, g1, g2, g3 = (np.asarray(f(v), dtype=float)
                      for f in (func_spec.T, func_spec.d1,
                                lambda y: func_spec.d2(y) / 2.0,
                                lambda y: func_spec.d3(y) / 6.0))
    for arr, label in ((tv, "T"), (g1, "T'"), (g2, "T''"), (g3, "T'''")):
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{label} is not finite on the clamped pilot range")

    t0 = float(np.mean(tv))
    t1 = _mean_at(g1, k_dens, d2_half) - float(np.mean(g1 * v))

    quad_w = PiecewiseConstantFn(k_dens, g2).refine(kq)
    t2 = (weighted_quad_ustat(d2_half, quad_w, kq)
          - 2.0 * _mean_at(g2 * v, k_dens, d2_half)
          + float(np.mean(g2 * v * v)))

    if np.any(g3 != 0.0):
        cubic_w = PiecewiseConstantFn(k_dens, g3).refine(ktriple.k1)
        quad3_w = PiecewiseConstantFn(k_dens, g3 * v).refine(kq)
        t3 = (weighted_cubic_ustat(d2_half, cubic_w, ktriple)
              - 3.0 * weighted_quad_ustat(d2_half, quad3_w, kq)
              + 3.0 * _mean_at(g3 * v * v, k_dens, d2_half)
              - float(np.mean(g3 * v**3)))
    else:
        t3 = 0.0

    value = t0 + t1 + t2 + t3
    return GeneralEstimate(value=value, term_values=(t0, t1, t2, t3),
                           pilot_k=k_dens, n1=n1, n2=n2,
                           pilot_clamped=clamped, selection=sel,
                           ktriple=ktriple)
