"""Smoothness-adaptive truncation selection.

A geometric grid of candidate truncations k_j = d^j n (j = 0..N-1) is
identified with smoothness values beta_j through k_j = n^(2/(1+4 beta_j)),
all logs natural. Each candidate also carries a log-deflated resolution
k_j* = (n^2 / log n)^(1/(1+4 beta_j)) at which the pair-difference
statistics are computed, and a noise scale R_j* = k_j* / n^2.

Selection picks the smallest feasible index: j is feasible when every
difference statistic against a finer candidate stays below its noise
threshold. The selected index then feeds either the quadratic estimator
directly or the third-order estimator (the selection statistics stay
second-order either way, which is the whole point). The threshold constant
is calibrated by simulation under the uniform density, where every
difference statistic is pure noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cubic import choose_k_triple, cubic_estimator_fast
from .haar import count_bins, dyadic_round
from .quadratic import QuadEstimate, quad_ustat_fast

# below this sample size the grid-width exponent 1 - 2/log(log(n)) is
# nonpositive; see build_grid
_EXPONENT_FLOOR_N = math.exp(math.exp(2.0))


@dataclass(frozen=True)
class LepskiGrid:
    n: int
    d: float
    ks: tuple  # dyadic-rounded candidate truncations, nondecreasing
    betas: tuple  # implied smoothness values, nonincreasing
    k_stars: tuple  # dyadic-rounded log-deflated resolutions
    r_stars: tuple  # k_star / n^2 noise scales
    s_star: int  # first index whose k_star reaches n (clamped to size-1)
    fallback_used: bool

    def __post_init__(self):
        if any(a > b for a, b in zip(self.ks, self.ks[1:])):
            raise ValueError("grid truncations must be nondecreasing")
        if any(a < b for a, b in zip(self.betas, self.betas[1:])):
            raise ValueError("grid smoothness values must be nonincreasing")
        if any(ks > k for ks, k in zip(self.k_stars, self.ks)):
            raise ValueError("k_star must not exceed k at any index")

    @property
    def size(self) -> int:
        return len(self.ks)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "d": self.d,
            "size": self.size,
            "s_star": self.s_star,
            "fallback_used": self.fallback_used,
            "entries": [
                {"j": j, "k": self.ks[j], "beta": self.betas[j],
                 "k_star": self.k_stars[j], "r_star": self.r_stars[j]}
                for j in range(self.size)
            ],
        }


def build_grid(n: int, d: float = 2.0) -> LepskiGrid:
    """Candidate grid for sample size n and geometric spacing d.

    The grid width N is the largest integer with d^(N-1) <= n^e, where
    e = 1 - 2/log(log n). For n below e^(e^2) (about 1619) that exponent
    is nonpositive, so the construction degenerates; there we substitute
    e = max(1 - 2/log(log n), 1/2) and flag the fallback.
    """
    if n < 8:
        raise ValueError(f"grid construction needs n >= 8, got n={n}")
    if not d > 1.0:
        raise ValueError(f"grid spacing d={d} must exceed 1")
    log_n = math.log(n)
    fallback = n < _EXPONENT_FLOOR_N
    exponent = max(1.0 - 2.0 / math.log(log_n), 0.5) if fallback \
        else 1.0 - 2.0 / math.log(log_n)
    size = int(math.floor(exponent * log_n / math.log(d) + 1e-12)) + 1
    size = max(size, 1)

    ks, betas, k_stars, r_stars = [], [], [], []
    for j in range(size):
        beta = 0.25 * (2.0 * log_n / (j * math.log(d) + log_n) - 1.0)
        k = dyadic_round(d**j * n)
        k_star = dyadic_round((n * n / log_n) ** (1.0 / (1.0 + 4.0 * beta)))
        ks.append(k)
        betas.append(beta)
        k_stars.append(k_star)
        r_stars.append(k_star / (float(n) * n))
    s_star = next((j for j in range(size) if k_stars[j] >= n), size - 1)
    return LepskiGrid(n=n, d=float(d), ks=tuple(ks), betas=tuple(betas),
                      k_stars=tuple(k_stars), r_stars=tuple(r_stars),
                      s_star=s_star, fallback_used=fallback)


@dataclass(frozen=True)
class TwoPointResult:
    jhat: int  # 0 selects the smoother candidate, 1 the rougher
    estimate: QuadEstimate
    i_hat: float
    threshold: float
    k0: int
    k1: int
    k1_star: int
    c_used: float


def _two_point_resolutions(n: int, beta0: float, beta1: float) -> tuple:
    if not beta1 < beta0 < 0.25:
        raise ValueError(
            f"need beta1 < beta0 < 1/4, got beta0={beta0}, beta1={beta1}")
    log_n = math.log(n)
    k0 = dyadic_round(float(n) ** (2.0 / (1.0 + 4.0 * beta0)))
    k1 = dyadic_round(float(n) ** (2.0 / (1.0 + 4.0 * beta1)))
    k1_star = dyadic_round((n * n / log_n) ** (1.0 / (1.0 + 4.0 * beta1)))
    if k0 > k1_star:
        raise ValueError(
            f"degenerate pair: k0={k0} exceeds k1*={k1_star}; "
            "the smoothness values are too close at this n")
    return k0, k1, k1_star


def select_two_point(sample, beta0: float, beta1: float, c: float) -> TwoPointResult:
    """Two-candidate rule: pick the rougher truncation k1 when the
    difference statistic U^(k1*) - U^(k0) exceeds
    c * sqrt(log n) * sqrt(k1*) / n, else keep k0."""
    x = np.asarray(sample, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError(f"selection needs n >= 2, got n={n}")
    k0, k1, k1_star = _two_point_resolutions(n, beta0, beta1)
    counts = count_bins(x, {k0, k1, k1_star})
    ihat = (quad_ustat_fast(counts, k1_star).value
            - quad_ustat_fast(counts, k0).value)
    threshold = c * math.sqrt(math.log(n)) * math.sqrt(k1_star) / n
    jhat = 1 if ihat > threshold else 0
    estimate = quad_ustat_fast(counts, k1 if jhat else k0)
    return TwoPointResult(jhat=jhat, estimate=estimate, i_hat=ihat,
                          threshold=threshold, k0=k0, k1=k1, k1_star=k1_star,
                          c_used=c)


def calibrate_two_point(n: int, beta0: float, beta1: float, reps: int,
                        rng: np.random.Generator) -> float:
    """Constant for the two-point rule: the empirical (1 - 1/n) quantile of
    the normalized difference statistic under the uniform density."""
    if reps < 100:
        raise ValueError(f"calibration needs at least 100 replications, got {reps}")
    k0, _, k1_star = _two_point_resolutions(n, beta0, beta1)
    scale = math.sqrt(math.log(n)) * math.sqrt(k1_star) / n
    stats = np.empty(reps)
    for r in range(reps):
        counts = count_bins(rng.random(n), {k0, k1_star})
        ihat = (quad_ustat_fast(counts, k1_star).value
                - quad_ustat_fast(counts, k0).value)
        stats[r] = ihat / scale
    return float(np.quantile(stats, 1.0 - 1.0 / n, method="higher"))


@dataclass(frozen=True)
class SelectionResult:
    jhat: int
    tested: tuple  # (j, l, ihat_squared, threshold) rows, in scan order
    c_used: float
    forced: bool = False  # no index passed; fell back to the last one


def _star_ustats(sample, grid: LepskiGrid) -> dict:
    x = np.asarray(sample, dtype=float)
    stars = {grid.k_stars[j] for j in range(grid.s_star, grid.size)}
    counts = count_bins(x, stars)
    return {j: quad_ustat_fast(counts, grid.k_stars[j]).value
            for j in range(grid.s_star, grid.size)}


def _select_from_ustats(u: dict, grid: LepskiGrid, c_opt: float) -> SelectionResult:
    log_n = math.log(grid.n)
    tested = []
    for j in range(grid.s_star, grid.size):
        feasible = True
        for l in range(j + 1, grid.size):
            ihat_sq = (u[l] - u[j]) ** 2
            threshold = c_opt * c_opt * log_n * grid.r_stars[l]
            tested.append((j, l, ihat_sq, threshold))
            if ihat_sq > threshold:
                feasible = False
                break
        if feasible:
            return SelectionResult(jhat=j, tested=tuple(tested), c_used=c_opt)
    return SelectionResult(jhat=grid.size - 1, tested=tuple(tested),
                           c_used=c_opt, forced=True)


def select_modified(sample, grid: LepskiGrid, c_opt: float) -> SelectionResult:
    """Smallest index j >= s_star whose difference statistics against every
    finer candidate all sit below c_opt^2 * log n * R(k_l*).

    All statistics are computed from one shared count hierarchy. The last
    index is vacuously feasible, so a forced fallback cannot trigger unless
    the statistics are non-finite.
    """
    x = np.asarray(sample, dtype=float)
    if x.size < 2:
        raise ValueError(f"selection needs n >= 2, got n={x.size}")
    return _select_from_ustats(_star_ustats(x, grid), grid, c_opt)


def adaptive_quadratic(sample, grid: LepskiGrid, c_opt: float) -> tuple:
    """Selected-index quadratic estimate: U at k_jhat*."""
    x = np.asarray(sample, dtype=float)
    if x.size < 2:
        raise ValueError(f"adaptive estimation needs n >= 2, got n={x.size}")
    u = _star_ustats(x, grid)
    sel = _select_from_ustats(u, grid, c_opt)
    k = grid.k_stars[sel.jhat]
    estimate = QuadEstimate(u[sel.jhat], k, x.size, "fast")
    return estimate, sel


def adaptive_cubic(sample, grid: LepskiGrid, c_opt: float) -> tuple:
    """Adaptive third-order estimate.

    Smoothness is tested with the second-order statistics; the selected
    index maps to a resolution triple with k3 = k_jhat* and the five-term
    estimator is evaluated there.
    """
    x = np.asarray(sample, dtype=float)
    n = x.size
    if n < 3:
        raise ValueError(f"the triple statistic needs n >= 3, got n={n}")
    sel = select_modified(x, grid, c_opt)
    ktriple = choose_k_triple(grid.betas[sel.jhat], n,
                              k3=grid.k_stars[sel.jhat])
    counts = count_bins(x, ktriple.ks())
    return cubic_estimator_fast(counts, ktriple), sel


def calibrate_threshold(n: int, grid: LepskiGrid, reps: int,
                        rng: np.random.Generator) -> float:
    """Threshold constant for the multi-point rule.

    Simulates the uniform density, where every difference statistic has
    mean zero, and returns the square root of the empirical (1 - 1/n)
    quantile of the worst normalized pair statistic. Deterministic given
    the generator state.
    """
    if reps < 100:
        raise ValueError(f"calibration needs at least 100 replications, got {reps}")
    log_n = math.log(grid.n)
    pairs = [(j, l)
             for j in range(grid.s_star, grid.size)
             for l in range(j + 1, grid.size)]
    if not pairs:
        return 1.0  # a single candidate: no tests will ever run
    worst = np.empty(reps)
    for r in range(reps):
        u = _star_ustats(rng.random(n), grid)
        worst[r] = max((u[l] - u[j]) ** 2 / (log_n * grid.r_stars[l])
                       for j, l in pairs)
    q = float(np.quantile(worst, 1.0 - 1.0 / n, method="higher"))
    return math.sqrt(q)
