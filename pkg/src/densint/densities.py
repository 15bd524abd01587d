"""Analytic density fixtures on [0, 1].

Every model exposes an exact pdf/cdf pair, a deterministic sampler driven by
an explicit numpy Generator, closed-form low-order moments ``int f^p`` where
one exists, and exact projected moments ``int f_k^p`` computed from cdf
differences (the bin average of f is k * (F(j/k) - F((j-1)/k)), which is
exact whenever the cdf is).

Samplers use inverse transforms where the cdf inverts in closed or
per-block-monotone form (uniform, linear ramp, perturbed uniform) and
rejection with a constant ``f_max`` envelope otherwise (trig perturbed,
dyadic self-similar). Rejection acceptance rates are logged at debug level.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import integrate

logger = logging.getLogger(__name__)

_QUAD_TOL = 1e-10


@dataclass(frozen=True)
class FunctionalTruth:
    functional: str
    value: float
    provenance: str  # "closed-form" | "quadrature"
    error: float = 0.0


@dataclass(frozen=True)
class HolderReport:
    beta: float
    radius: float
    max_ratio: float
    argmax_pair: tuple
    within_radius: bool


def _rejection_sample(n: int, rng: np.random.Generator, pdf, f_max: float,
                      label: str) -> np.ndarray:
    out = np.empty(n, dtype=float)
    have = 0
    proposed = 0
    while have < n:
        m = int((n - have) * f_max * 1.2) + 16
        x = rng.random(m)
        u = rng.random(m)
        acc = x[u * f_max <= pdf(x)]
        proposed += m
        take = min(acc.size, n - have)
        out[have:have + take] = acc[:take]
        have += take
    logger.debug("%s rejection sampler: acceptance rate %.3f", label, n / proposed)
    return out


class DensityModel:
    """Base: subclasses set f_min / f_max and implement pdf, cdf, sample."""

    name = "abstract"
    f_min: float
    f_max: float

    def pdf(self, x):
        raise NotImplementedError

    def cdf(self, x):
        raise NotImplementedError

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    # -- exact projections -------------------------------------------------

    def bin_averages(self, k: int) -> np.ndarray:
        """Bin means of f on the k-partition, exact via cdf differences."""
        edges = np.arange(k + 1, dtype=float) / k
        return k * np.diff(self.cdf(edges))

    def projected_functional(self, k: int, p: int) -> float:
        """int (f_k)^p for the Haar projection f_k at resolution k."""
        avg = self.bin_averages(k)
        return float(np.sum(avg**p)) / k

    # -- truths ------------------------------------------------------------

    def moment(self, p: int) -> float | None:
        """Closed-form int f^p when available (p = 1 always gives 1)."""
        return 1.0 if p == 1 else None

    def _quadrature_functional(self, T) -> tuple:
        val, err = integrate.quad(lambda x: T(self.pdf(x)), 0.0, 1.0,
                                  epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=400)
        return val, err

    def true_functional(self, spec) -> FunctionalTruth:
        """phi(f) = int T(f) for T given as a FunctionalSpec-like object
        (``.T`` and optionally ``.name``) or a bare callable."""
        T = getattr(spec, "T", spec)
        name = getattr(spec, "name", getattr(T, "__name__", "T"))
        probe = np.linspace(self.f_min, self.f_max, 33)
        with np.errstate(all="ignore"):
            vals = np.asarray([T(v) for v in probe], dtype=float)
        if not np.all(np.isfinite(vals)):
            raise ValueError(
                f"T={name!r} is not finite on the density range "
                f"[{self.f_min:g}, {self.f_max:g}]")
        if name in ("square", "renyi2"):
            closed = self.moment(2)
        elif name == "cube":
            closed = self.moment(3)
        else:
            closed = None
        if closed is not None:
            return FunctionalTruth(name, closed, "closed-form")
        val, err = self._quadrature_functional(T)
        return FunctionalTruth(name, val, "quadrature", err)


class Uniform(DensityModel):
    name = "uniform"
    f_min = 1.0
    f_max = 1.0

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        _check_domain(x)
        return np.ones_like(x)

    def cdf(self, x):
        return np.asarray(x, dtype=float)

    def sample(self, n, rng):
        _check_n(n)
        return rng.random(n)

    def moment(self, p):
        return 1.0


class LinearRamp(DensityModel):
    """f(x) = a + 2(1-a) x, a in (0, 1]; a = 0.5 gives f(x) = 0.5 + x."""

    name = "linear_ramp"

    def __init__(self, a: float = 0.5):
        if not 0.0 < a <= 1.0:
            raise ValueError(f"linear ramp intercept a={a} must be in (0, 1]")
        self.a = float(a)
        self.slope = 2.0 * (1.0 - self.a)
        self.f_min = self.a
        self.f_max = self.a + self.slope

    def params(self):
        return {"a": self.a}

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        _check_domain(x)
        return self.a + self.slope * x

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        return self.a * x + (1.0 - self.a) * x * x

    def sample(self, n, rng):
        _check_n(n)
        u = rng.random(n)
        if self.a == 1.0:
            return u
        b = 1.0 - self.a
        return (np.sqrt(self.a * self.a + 4.0 * b * u) - self.a) / (2.0 * b)

    def moment(self, p):
        if p == 1:
            return 1.0
        if self.slope == 0.0:
            return 1.0
        top, bot = self.f_max, self.f_min
        return (top ** (p + 1) - bot ** (p + 1)) / (self.slope * (p + 1))


class TrigPerturbed(DensityModel):
    """f(x) = 1 + rho * sin(2 pi m x), rho in [0, 1), integer frequency m."""

    name = "trig_perturbed"

    def __init__(self, rho: float = 0.5, m: int = 1):
        if not 0.0 <= rho < 1.0:
            raise ValueError(f"amplitude rho={rho} must be in [0, 1)")
        if int(m) < 1:
            raise ValueError(f"frequency m={m} must be a positive integer")
        self.rho = float(rho)
        self.m = int(m)
        self.f_min = 1.0 - self.rho
        self.f_max = 1.0 + self.rho

    def params(self):
        return {"rho": self.rho, "m": self.m}

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        _check_domain(x)
        return 1.0 + self.rho * np.sin(2.0 * np.pi * self.m * x)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        w = 2.0 * np.pi * self.m
        return x + self.rho * (1.0 - np.cos(w * x)) / w

    def sample(self, n, rng):
        _check_n(n)
        return _rejection_sample(n, rng, self.pdf, self.f_max, self.name)

    def moment(self, p):
        # odd powers of the sine integrate to zero over whole periods
        if p == 1:
            return 1.0
        if p == 2:
            return 1.0 + self.rho**2 / 2.0
        if p == 3:
            return 1.0 + 1.5 * self.rho**2
        return None


class DyadicSelfSimilar(DensityModel):
    """Rough density with exact Haar-frame energy per level.

    f(x) = 1 + c * sum_{i=0..L} 2^{-i beta} r_i(x), where r_i is +1 on the
    left half and -1 on the right half of each level-i dyadic cell (the full
    level of Haar bumps with equal coefficients c * 2^{-i(beta + 1/2)}).
    The r_i behave like independent signs under Lebesgue measure, so every
    low-order moment and every projected moment is a short closed form, and
    the projection gap int f^2 - int f_k^2 decays exactly like k^{-2 beta}
    (up to the level-L truncation tail).
    """

    name = "dyadic_self_similar"

    def __init__(self, beta: float = 0.2, depth: int = 40, c: float = 0.1):
        if not 0.0 < beta < 1.0:
            raise ValueError(f"roughness beta={beta} must be in (0, 1)")
        if int(depth) < 0:
            raise ValueError(f"depth L={depth} must be nonnegative")
        self.beta = float(beta)
        self.depth = int(depth)
        self.c = float(c)
        amp = self.c * np.sum(2.0 ** (-self.beta * np.arange(self.depth + 1)))
        if amp >= 1.0:
            raise ValueError(
                f"c={c} too large: total oscillation {amp:.4f} >= 1 makes the pdf nonpositive")
        self.f_min = 1.0 - amp
        self.f_max = 1.0 + amp

    def params(self):
        return {"beta": self.beta, "depth": self.depth, "c": self.c}

    def _level_signs(self, x, i):
        # +1 on the left half of the level-i cell, -1 on the right half,
        # following the right-closed bin convention of the Haar machinery.
        # Pure float arithmetic: half-cell counts are exact powers of two,
        # so floor and fmod stay exact at any depth.
        t = np.asarray(x, dtype=float) * 2.0 ** (i + 1)
        f = np.floor(t)
        b0 = np.where(t == f, np.maximum(f - 1.0, 0.0), f)  # 0-based half-cell
        return np.where(np.fmod(b0, 2.0) == 0.0, 1.0, -1.0)

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        _check_domain(x)
        out = np.ones(np.shape(x), dtype=float)
        for i in range(self.depth + 1):
            out += self.c * 2.0 ** (-i * self.beta) * self._level_signs(x, i)
        return out if out.ndim else float(out)

    def cdf(self, x):
        # integral of r_i over [0, x] is a 2^-i periodic tent
        x = np.asarray(x, dtype=float)
        out = x.astype(float).copy()
        for i in range(self.depth + 1):
            u = x * (1 << i)
            u = u - np.floor(u)
            tent = np.where(u <= 0.5, u, 1.0 - u)
            out += self.c * 2.0 ** (-i * self.beta) * tent / (1 << i)
        return out

    def sample(self, n, rng):
        _check_n(n)
        return _rejection_sample(n, rng, self.pdf, self.f_max, self.name)

    def _level_energy(self, upto: int) -> float:
        # sum_{i=0..upto} 2^{-2 i beta}; empty sum for upto < 0
        if upto < 0:
            return 0.0
        return float(np.sum(2.0 ** (-2.0 * self.beta * np.arange(upto + 1))))

    def moment(self, p):
        s = self._level_energy(self.depth)
        if p == 1:
            return 1.0
        if p == 2:
            return 1.0 + self.c**2 * s
        if p == 3:
            # odd sign products vanish, leaving the three pairings
            return 1.0 + 3.0 * self.c**2 * s
        return None

    def projected_functional(self, k, p):
        # projection at k = 2^m keeps levels i <= m-1 untouched and kills
        # the rest, so the projected moments reuse the closed forms
        level = int(k).bit_length() - 1
        s = self._level_energy(min(self.depth, level - 1))
        if p == 2:
            return 1.0 + self.c**2 * s
        if p == 3:
            return 1.0 + 3.0 * self.c**2 * s
        return super().projected_functional(k, p)

    def projection_gap(self, k: int, p: int = 2) -> float:
        """int f^p - int (f_k)^p, as an exact geometric-tail sum."""
        return self.moment(p) - self.projected_functional(k, p)

    def _quadrature_functional(self, T):
        # the pdf is constant on the 2^(L+1) finest cells; enumerate them
        if self.depth > 22:
            raise ValueError(
                "exact cell enumeration needs depth <= 22 for non-polynomial T")
        vals = np.zeros(1)
        for i in range(self.depth + 1):
            coef = self.c * 2.0 ** (-i * self.beta)
            vals = (np.repeat(vals, 2)
                    + coef * np.tile([1.0, -1.0], vals.size))
        return float(np.mean(T(1.0 + vals))), 0.0


class PerturbedUniform(DensityModel):
    """Uniform plus v disjoint sine bumps of height A * v^{-beta}.

    f(x) = 1 + A v^{-beta} * a_i * sin(2 pi (v x - i)) on block
    [i/v, (i+1)/v), with signs a_i in {-1, +1}. Each bump integrates to
    zero, so the cdf returns to the diagonal at every block boundary and
    inverts block by block.
    """

    name = "perturbed_uniform"

    def __init__(self, beta: float, v: int, signs=None, amplitude: float = 1.0):
        if int(v) < 1:
            raise ValueError(f"block count v={v} must be a positive integer")
        self.beta = float(beta)
        self.v = int(v)
        self.amplitude = float(amplitude)
        self.bump = self.amplitude * self.v ** (-self.beta)
        if not 0.0 <= self.bump < 1.0:
            raise ValueError(
                f"bump height A*v^-beta = {self.bump:.4f} must be in [0, 1) "
                "for a positive pdf")
        if signs is None:
            signs = np.ones(self.v)
        signs = np.asarray(signs, dtype=float)
        if signs.shape != (self.v,) or not np.all(np.abs(signs) == 1.0):
            raise ValueError(f"signs must be a length-{v} vector of +-1")
        self.signs = signs
        self.f_min = 1.0 - self.bump
        self.f_max = 1.0 + self.bump

    def params(self):
        return {"beta": self.beta, "v": self.v, "amplitude": self.amplitude,
                "n_plus": int(np.sum(self.signs > 0))}

    def _blocks(self, x):
        m = np.minimum(np.floor(x * self.v), self.v - 1).astype(np.int64)
        return m, x * self.v - m

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        _check_domain(x)
        m, u = self._blocks(x)
        return 1.0 + self.bump * self.signs[m] * np.sin(2.0 * np.pi * u)

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        m, u = self._blocks(np.clip(x, 0.0, 1.0))
        wiggle = (1.0 - np.cos(2.0 * np.pi * u)) / (2.0 * np.pi)
        return x + self.bump * self.signs[m] * wiggle / self.v

    def sample(self, n, rng):
        # the cdf maps block i onto [i/v, (i+1)/v] bijectively: pick the
        # block from u directly, then bisect the within-block equation
        _check_n(n)
        u = rng.random(n)
        m = np.minimum(np.floor(u * self.v), self.v - 1).astype(np.int64)
        target = u * self.v - m
        s = self.signs[m] * self.bump
        lo = np.zeros(n)
        hi = np.ones(n)
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            g = mid + s * (1.0 - np.cos(2.0 * np.pi * mid)) / (2.0 * np.pi)
            high = g > target
            hi = np.where(high, mid, hi)
            lo = np.where(high, lo, mid)
        return (m + 0.5 * (lo + hi)) / self.v

    def moment(self, p):
        if p == 1:
            return 1.0
        if p == 2:
            return 1.0 + self.bump**2 / 2.0
        if p == 3:
            return 1.0 + 1.5 * self.bump**2
        return None

    def _quadrature_functional(self, T):
        # only two block shapes exist (sign +-1); integrate each once
        n_plus = int(np.sum(self.signs > 0))
        vals, errs = [], []
        for s in (+1.0, -1.0):
            v, e = integrate.quad(
                lambda u: T(1.0 + s * self.bump * np.sin(2.0 * np.pi * u)),
                0.0, 1.0, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL, limit=200)
            vals.append(v)
            errs.append(e)
        value = (n_plus * vals[0] + (self.v - n_plus) * vals[1]) / self.v
        return value, max(errs)


def holder_verify(model: DensityModel, beta: float, radius: float,
                  grid_size: int = 512) -> HolderReport:
    """Numeric check of the Holder-beta ratio on a dense grid (report only)."""
    x = np.linspace(0.0, 1.0, grid_size)
    f = np.asarray(model.pdf(x), dtype=float)
    dx = np.abs(x[:, None] - x[None, :])
    df = np.abs(f[:, None] - f[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dx > 0, df / dx**beta, 0.0)
    i, j = np.unravel_index(np.argmax(ratio), ratio.shape)
    max_ratio = float(ratio[i, j])
    return HolderReport(beta=beta, radius=radius, max_ratio=max_ratio,
                        argmax_pair=(float(x[i]), float(x[j])),
                        within_radius=max_ratio <= radius * (1.0 + 1e-9))


_MODEL_BUILDERS = {
    "uniform": lambda p: Uniform(),
    "linear_ramp": lambda p: LinearRamp(a=p.get("a", 0.5)),
    "trig_perturbed": lambda p: TrigPerturbed(rho=p.get("rho", 0.5), m=p.get("m", 1)),
    "dyadic_self_similar": lambda p: DyadicSelfSimilar(
        beta=p["beta"], depth=p.get("depth", 40), c=p.get("c", 0.1)),
    "perturbed_uniform": lambda p: PerturbedUniform(
        beta=p["beta"], v=p["v"], signs=p.get("signs"),
        amplitude=p.get("amplitude", 1.0)),
}


def model_from_config(config: dict) -> DensityModel:
    """Build a model from its JSON experiment-config entry."""
    cfg = dict(config)
    name = cfg.pop("name", None)
    if name not in _MODEL_BUILDERS:
        raise ValueError(f"unknown density model {name!r}; "
                         f"choices: {sorted(_MODEL_BUILDERS)}")
    return _MODEL_BUILDERS[name](cfg)


def _check_domain(x):
    if np.any((x < 0.0) | (x > 1.0)):
        raise ValueError("density models are supported on [0, 1]")


def _check_n(n):
    if int(n) < 1:
        raise ValueError(f"sample size n={n} must be at least 1")
