"""Third-order U-statistics for int f^3.

The estimator is a sum of five order-3 kernels built from the projection
kernels at three nested resolutions (k1, k2, k3), with multiplicities
(1, 3, 3, 3, 1). Each kernel is a product of three factors, every factor a
signed combination of projection kernels, so each kernel expands by
multilinearity into primitives

    P(r1, r2, r3) = V_n[ integral of K_r1(t, X_i1) K_r2(t, X_i2)
                         K_r3(t, X_i3) dt ]

with slot resolutions r_s drawn from the triple. The expansion table is
built symbolically once; the naive oracle enumerates every ordered triple
of distinct observations with explicit slot order, while the fast path
evaluates each primitive as a per-bin polynomial of occupancy counts:
summing over fine bins j (at the finest slot resolution), the number of
ordered distinct triples compatible with bin j is

    N_fine(j) * (N_mid(parent) - 1) * (N_coarse(parent) - 2),

which the oracle-equivalence tests pin against the enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .haar import BinCountHierarchy, as_k, bin_index, count_bins, dyadic_round

MULTIPLICITIES = (1, 3, 3, 3, 1)

# factor = signed combination of projection kernels; slot ids 0,1,2 -> k1,k2,k3
_K1 = ((1, 0),)
_D31 = ((1, 2), (-1, 0))  # K_{k3} - K_{k1}
_D21 = ((1, 1), (-1, 0))  # K_{k2} - K_{k1}
_D32 = ((1, 2), (-1, 1))  # K_{k3} - K_{k2}

_TERM_FACTORS = (
    (_K1, _K1, _K1),
    (_K1, _D31, _K1),
    (_K1, _D31, _D31),
    (_D21, _D21, _D32),
    (_D21, _D21, _D21),
)


def _expand(factors):
    out = []
    for s1, r1 in factors[0]:
        for s2, r2 in factors[1]:
            for s3, r3 in factors[2]:
                out.append((s1 * s2 * s3, (r1, r2, r3)))
    return tuple(out)


# term index -> tuple of (sign, slot-resolution-id triple)
TERM_EXPANSIONS = tuple(_expand(f) for f in _TERM_FACTORS)


@dataclass(frozen=True)
class KTriple:
    k1: int
    k2: int
    k3: int

    def __post_init__(self):
        for k in (self.k1, self.k2, self.k3):
            as_k(k)
        if not self.k1 <= self.k2 <= self.k3:
            raise ValueError(
                f"resolutions must be nested: k1={self.k1} <= k2={self.k2} <= k3={self.k3}")

    def ks(self) -> tuple:
        return (self.k1, self.k2, self.k3)


@dataclass(frozen=True)
class CubicEstimate:
    value: float
    ktriple: KTriple
    n: int
    term_values: tuple  # the five V_n terms, before multiplicities
    path: str  # "fast" | "naive"


def choose_k_triple(beta: float, n: int, k3: int | None = None) -> KTriple:
    """Resolutions for the known-smoothness estimator.

    k1 tracks n, k3 tracks n^(2/(1+4 beta)) (or a supplied adaptive k3),
    and k2 sits at the geometric midpoint exponent 3/(2(1+4 beta)) of its
    admissible bracket, clamped into it; nesting is enforced by rounding
    up. beta = 1/4 is allowed (top of the adaptive grid), where all three
    exponents meet at 1.
    """
    if not 0.0 < beta <= 0.25:
        raise ValueError(f"beta={beta} must be in (0, 1/4]")
    if n < 8:
        raise ValueError(f"resolution selection needs n >= 8, got n={n}")
    denom = 1.0 + 4.0 * beta
    k1 = dyadic_round(n)
    if k3 is None:
        k3 = dyadic_round(float(n) ** (2.0 / denom))
    else:
        k3 = as_k(k3)
    k3 = max(k3, k1)
    lo = float(n) ** ((1.5 - 2.0 * beta) / denom)
    hi = float(n) ** ((1.5 + 2.0 * beta) / denom)
    mid = float(n) ** (1.5 / denom)
    k2 = dyadic_round(min(max(mid, lo), hi))
    k2 = min(max(k2, k1), k3)
    return KTriple(k1, k2, k3)


def _primitive_fast(counts: BinCountHierarchy, ks_sorted: tuple,
                    weight_values: np.ndarray | None = None,
                    weight_k: int | None = None) -> float:
    """One primitive from bin counts; ks_sorted = (a, b, c) ascending.

    The optional weight (piecewise constant at weight_k, weight_k <= a)
    multiplies the t-integral, turning the per-fine-bin factor 1/c into
    the weight's integral over the fine bin.
    """
    a, b, c = ks_sorted
    n = counts.n
    nc = counts.at(c)
    nb = np.repeat(counts.at(b), c // b)
    na = np.repeat(counts.at(a), c // a)
    per_bin = nc * (nb - 1) * (na - 2)
    denom = n * (n - 1) * (n - 2)
    if weight_values is None:
        return float(a) * b * float(np.sum(per_bin)) / denom
    g = np.repeat(weight_values, c // weight_k)
    return float(a) * b * c * float(np.sum(g * per_bin)) / c / denom


def _fast_terms(counts: BinCountHierarchy, ktriple: KTriple,
                weight_values=None, weight_k=None) -> tuple:
    ks = ktriple.ks()
    cache: dict = {}
    terms = []
    for expansion in TERM_EXPANSIONS:
        val = 0.0
        for sign, slots in expansion:
            key = tuple(sorted(ks[s] for s in slots))
            if key not in cache:
                cache[key] = _primitive_fast(counts, key, weight_values, weight_k)
            val += sign * cache[key]
        terms.append(val)
    return tuple(terms)


def cubic_estimator_fast(counts: BinCountHierarchy, ktriple: KTriple) -> CubicEstimate:
    """All five terms from one count hierarchy, O(n + k3)."""
    n = counts.n
    if n < 3:
        raise ValueError(f"the triple statistic needs n >= 3, got n={n}")
    terms = _fast_terms(counts, ktriple)
    value = float(sum(m * t for m, t in zip(MULTIPLICITIES, terms)))
    return CubicEstimate(value, ktriple, n, terms, "fast")


def cubic_estimator(sample, ktriple: KTriple) -> CubicEstimate:
    """Fast path from a fresh count hierarchy on the triple's resolutions."""
    x = np.asarray(sample, dtype=float)
    return cubic_estimator_fast(count_bins(x, ktriple.ks()), ktriple)


def _slot_axis(values: np.ndarray, slot: int) -> np.ndarray:
    shape = [1, 1, 1]
    shape[slot] = values.size
    return values.reshape(shape)


def cubic_estimator_naive(sample, ktriple: KTriple) -> CubicEstimate:
    """Oracle: enumerate all ordered distinct triples.

    Each expanded primitive is the closed-form triple-kernel integral with
    explicit slot order (the kernels are asymmetric across slots, so no
    symmetrization is applied). O(n^3) time and memory; intended for small
    samples only.
    """
    x = np.asarray(sample, dtype=float)
    n = x.size
    if n < 3:
        raise ValueError(f"the triple statistic needs n >= 3, got n={n}")
    ks = ktriple.ks()
    bins = {k: bin_index(k, x) for k in set(ks)}

    idx = np.arange(n)
    distinct = ((idx[:, None, None] != idx[None, :, None])
                & (idx[None, :, None] != idx[None, None, :])
                & (idx[:, None, None] != idx[None, None, :]))
    denom = n * (n - 1) * (n - 2)

    terms = []
    for expansion in TERM_EXPANSIONS:
        acc = np.zeros((n, n, n))
        for sign, slots in expansion:
            slot_ks = [ks[s] for s in slots]
            order = sorted(range(3), key=lambda s: (slot_ks[s], s))
            coarse, mid, fine = order
            compat = (
                (_slot_axis(bins[slot_ks[mid]], mid)
                 == _slot_axis(bins[slot_ks[mid]], fine))
                & (_slot_axis(bins[slot_ks[coarse]], coarse)
                   == _slot_axis(bins[slot_ks[coarse]], fine)))
            acc += (sign * float(slot_ks[coarse]) * slot_ks[mid]) * compat
        terms.append(float(acc[distinct].sum()) / denom)

    value = float(sum(m * t for m, t in zip(MULTIPLICITIES, terms)))
    return CubicEstimate(value, ktriple, n, tuple(terms), "naive")


def cubic_bias_identity(f_k1, f_k2, f_k3, f_moment3: float, f_k3_moment3: float) -> float:
    """Exact expectation of the estimator minus int f^3.

    Taking expectations termwise turns each kernel factor into the
    corresponding projected density, and the five terms collapse to

        E = int f_k3^3 - int (f_k3 - f_k2)^3
            - 3 int (f_k3 - f_k2)^2 (f_k2 - f_k1),

    so the bias is minus the usual three-bracket display. The projections
    enter as piecewise-constant functions; the truncation bracket comes
    from the model's exact moments. With k1 = k2 = k3 this reduces to
    int f_k^3 - int f^3.
    """
    d32 = f_k3 - f_k2
    d21 = f_k2 - f_k1
    first = (d32**3).integral()
    second = 3.0 * ((d32**2) * d21).integral()
    return -(first + second + (f_moment3 - f_k3_moment3))
