"""Haar bins on (0, 1]: dyadic resolutions, bin indexing, projection kernels,
closed-form kernel integrals, and piecewise-constant function algebra.

Resolutions are exact powers of two so that any two partitions nest. Bins are
left-open / right-closed, ``((j-1)/k, j/k]``, with ``x = 0`` assigned to bin 1
so the whole interval is covered. Bin indices follow one fixed floating-point
rule (``min(k, floor(x*k) + 1)``, exact-integer case resolved downward) so
that every code path sees identical bin assignments.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def dyadic_round(value: float) -> int:
    """Smallest power of two >= value (at least 1).

    Doubling loop rather than log2 so exact powers never round up from
    float noise.
    """
    if not np.isfinite(value):
        raise ValueError(f"cannot round non-finite value {value!r} to a dyadic k")
    k = 1
    while k < value * (1.0 - 1e-12):
        k *= 2
    return k


def is_power_of_two(k: int) -> bool:
    return k >= 1 and (k & (k - 1)) == 0


@dataclass(frozen=True)
class DyadicResolution:
    """A truncation level: ``k = 2**level`` right-closed bins on (0, 1]."""

    level: int

    @property
    def k(self) -> int:
        return 1 << self.level

    @classmethod
    def from_k(cls, k: int) -> "DyadicResolution":
        if not is_power_of_two(int(k)):
            raise ValueError(f"resolution k={k} is not a power of two")
        return cls(level=int(k).bit_length() - 1)

    @classmethod
    def from_target(cls, value: float) -> "DyadicResolution":
        """Round a requested (real) bin count up to the next power of two."""
        return cls.from_k(dyadic_round(value))


def as_k(resolution) -> int:
    """Accept an int or a DyadicResolution; return the validated bin count."""
    k = resolution.k if isinstance(resolution, DyadicResolution) else int(resolution)
    if not is_power_of_two(k):
        raise ValueError(f"resolution k={k} is not a power of two")
    return k


def bin_index(resolution, x):
    """1-based bin index of x in the k-partition; vectorized over x.

    Convention: bin j = ((j-1)/k, j/k]; x*k landing exactly on an integer
    belongs to the lower bin (right-closed); x = 0 maps to bin 1.
    """
    k = as_k(resolution)
    x = np.asarray(x, dtype=float)
    out_of_range = (x < 0.0) | (x > 1.0)
    if np.any(out_of_range):
        bad = int(np.argmax(np.atleast_1d(out_of_range)))
        raise ValueError(f"point outside [0, 1] at flat index {bad}")
    t = x * k
    f = np.floor(t)
    j = np.where(t == f, f, f + 1.0)
    j = np.clip(j, 1, k).astype(np.int64)
    if j.ndim == 0:
        return int(j)
    return j


def kernel_eval(resolution, x, y) -> float:
    """Projection kernel K_k(x, y): k if x and y share a bin, else 0."""
    k = as_k(resolution)
    return float(k) if bin_index(k, x) == bin_index(k, y) else 0.0


def kernel_row_mass(resolution, x) -> float:
    """Integral of K_k(x, .) over [0, 1], in closed form: k * (1/k)."""
    k = as_k(resolution)
    bin_index(k, x)  # domain check only
    return k * (1.0 / k)


def kernel_l2_mass(resolution) -> float:
    """Double integral of K_k^2, in closed form: k^2 * k * (1/k^2) = k."""
    k = as_k(resolution)
    return (float(k) * k) * k * (1.0 / k / k)


def _ancestor_bin(j: int, fine_k: int, coarse_k: int) -> int:
    # 1-based fine bin -> 1-based bin of the coarser nested partition
    return (j - 1) // (fine_k // coarse_k) + 1


def triple_kernel_integral(res_a, res_b, res_c, u: float, v: float, w: float) -> float:
    """Closed form of the x-integral of K_a(x,u) K_b(x,v) K_c(x,w) for nested
    a <= b <= c.

    The product is nonzero on the intersection of the three bins; for nested
    dyadic partitions this is the finest bin when the bins are compatible,
    so the integral is a*b*c * (1/c) * [v,w share a b-bin] * [u,w share an
    a-bin].
    """
    a, b, c = as_k(res_a), as_k(res_b), as_k(res_c)
    if not (a <= b <= c):
        raise ValueError(f"resolutions must be nested ascending, got ({a}, {b}, {c})")
    jw = bin_index(c, w)
    same_b = bin_index(b, v) == _ancestor_bin(jw, c, b)
    same_a = bin_index(a, u) == _ancestor_bin(jw, c, a)
    return float(a) * b if (same_b and same_a) else 0.0


def slot_triple_kernel_integral(res_by_slot, points) -> float:
    """Same integral with per-slot resolutions in arbitrary order.

    Used by the naive cubic enumeration, where the kernel slots carry
    distinct resolutions and no symmetry may be assumed.
    """
    ks = [as_k(r) for r in res_by_slot]
    order = sorted(range(3), key=lambda s: ks[s])
    a, b, c = (ks[s] for s in order)
    u, v, w = (points[s] for s in order)
    return triple_kernel_integral(a, b, c, u, v, w)


@dataclass(frozen=True)
class PiecewiseConstantFn:
    """A function constant on the k bins of a dyadic partition."""

    k: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not is_power_of_two(self.k):
            raise ValueError(f"resolution k={self.k} is not a power of two")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.k,):
            raise ValueError(f"expected {self.k} bin values, got shape {vals.shape}")
        object.__setattr__(self, "values", vals)

    def __call__(self, x):
        return self.values[bin_index(self.k, x) - 1]

    def integral(self) -> float:
        return float(np.sum(self.values)) / self.k

    def refine(self, k: int) -> "PiecewiseConstantFn":
        """Represent the same function on a finer nested partition."""
        k = as_k(k)
        if k < self.k:
            raise ValueError(f"cannot refine from k={self.k} to coarser k={k}")
        return PiecewiseConstantFn(k, np.repeat(self.values, k // self.k))

    def project(self, k: int) -> "PiecewiseConstantFn":
        """L2 projection onto a coarser nested partition: child averages."""
        k = as_k(k)
        if k > self.k:
            return self.refine(k)
        return PiecewiseConstantFn(k, self.values.reshape(k, self.k // k).mean(axis=1))

    def _binop(self, other, op):
        if isinstance(other, PiecewiseConstantFn):
            k = max(self.k, other.k)
            return PiecewiseConstantFn(k, op(self.refine(k).values, other.refine(k).values))
        return PiecewiseConstantFn(self.k, op(self.values, float(other)))

    def __add__(self, other):
        return self._binop(other, np.add)

    def __sub__(self, other):
        return self._binop(other, np.subtract)

    def __mul__(self, other):
        return self._binop(other, np.multiply)

    def __pow__(self, p):
        return PiecewiseConstantFn(self.k, self.values**p)


@dataclass(frozen=True)
class BinCountHierarchy:
    """Occupancy counts of one sample at nested dyadic resolutions.

    Counts at the finest resolution come from a single binning pass; coarser
    counts aggregate children, so parent consistency holds by construction.
    """

    n: int
    counts: dict  # k -> int64 array of length k

    @classmethod
    def from_sample(cls, sample, resolutions) -> "BinCountHierarchy":
        ks = sorted({as_k(r) for r in resolutions})
        if not ks:
            raise ValueError("at least one resolution is required")
        x = np.asarray(sample, dtype=float)
        finest = ks[-1]
        if x.size:
            idx0 = bin_index(finest, x) - 1
            fine_counts = np.bincount(idx0, minlength=finest).astype(np.int64)
        else:
            fine_counts = np.zeros(finest, dtype=np.int64)
        counts = {finest: fine_counts}
        for k in reversed(ks[:-1]):
            counts[k] = counts[finest].reshape(k, finest // k).sum(axis=1)
        return cls(n=int(x.size), counts=counts)

    def at(self, resolution) -> np.ndarray:
        k = as_k(resolution)
        if k in self.counts:
            return self.counts[k]
        # aggregate from any stored finer resolution, without mutating
        # shared state (instances are safe to share across threads)
        finer = [kk for kk in self.counts if kk >= k]
        if not finer:
            raise KeyError(f"no counts at or above resolution k={k}")
        src = min(finer)
        return self.counts[src].reshape(k, src // k).sum(axis=1)


def count_bins(sample, resolutions) -> BinCountHierarchy:
    """Bin a sample at one or more nested dyadic resolutions."""
    if isinstance(resolutions, (int, np.integer, DyadicResolution)):
        resolutions = [resolutions]
    return BinCountHierarchy.from_sample(sample, resolutions)


def empirical_projection(sample, resolution) -> PiecewiseConstantFn:
    """Haar histogram: value k * N_j / n on bin j; integrates to 1 exactly."""
    k = as_k(resolution)
    x = np.asarray(sample, dtype=float)
    if x.size == 0:
        raise ValueError("empirical projection needs at least one observation")
    counts = count_bins(x, k).at(k)
    return PiecewiseConstantFn(k, counts * (k / x.size))
