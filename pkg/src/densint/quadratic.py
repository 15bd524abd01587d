"""Second-order U-statistics for int f^2.

The estimator averages the Haar projection kernel over ordered pairs of
distinct observations. Because the kernel is k times a same-bin indicator,
the sum collapses to a polynomial in bin occupancy counts; the naive
pairwise enumeration is kept as the oracle the fast path is tested against.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .haar import BinCountHierarchy, as_k, bin_index, count_bins


@dataclass(frozen=True)
class QuadEstimate:
    value: float
    k: int
    n: int
    path: str  # "fast" | "naive"


def quad_ustat_naive(sample, resolution) -> QuadEstimate:
    """Oracle: enumerate every ordered pair i1 != i2 of kernel values."""
    k = as_k(resolution)
    x = np.asarray(sample, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError(f"the pair statistic needs n >= 2, got n={n}")
    bins = bin_index(k, x)
    same = bins[:, None] == bins[None, :]
    np.fill_diagonal(same, False)
    total = float(k) * np.count_nonzero(same)
    return QuadEstimate(total / (n * (n - 1)), k, n, "naive")


def quad_ustat_fast(counts: BinCountHierarchy, resolution) -> QuadEstimate:
    """k * sum_j N_j (N_j - 1) / (n (n-1)), from bin counts in O(n + k)."""
    k = as_k(resolution)
    n = counts.n
    if n < 2:
        raise ValueError(f"the pair statistic needs n >= 2, got n={n}")
    nj = counts.at(k)
    collisions = int(np.sum(nj * (nj - 1)))
    return QuadEstimate(float(k) * collisions / (n * (n - 1)), k, n, "fast")


def quad_ustat(sample, resolution) -> QuadEstimate:
    """Fast path from a fresh single-resolution count hierarchy."""
    x = np.asarray(sample, dtype=float)
    return quad_ustat_fast(count_bins(x, as_k(resolution)), resolution)


def i_hat(sample, k_small, k_large,
          counts: BinCountHierarchy | None = None) -> float:
    """Difference statistic U^(k_large) - U^(k_small).

    Both statistics are evaluated from one shared count hierarchy so they
    see identical bin assignments.
    """
    ks, kl = as_k(k_small), as_k(k_large)
    if ks > kl:
        raise ValueError(f"k_small={ks} must not exceed k_large={kl}")
    if counts is None:
        counts = count_bins(np.asarray(sample, dtype=float), [ks, kl])
    return quad_ustat_fast(counts, kl).value - quad_ustat_fast(counts, ks).value
