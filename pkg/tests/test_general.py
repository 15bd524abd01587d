import numpy as np
import pytest

from densint.cubic import KTriple, cubic_estimator_fast
from densint.densities import DyadicSelfSimilar, LinearRamp, Uniform
from densint.general import (builtin_functional, estimate_general,
                             weighted_cubic_ustat, weighted_cubic_ustat_naive,
                             weighted_quad_ustat)
from densint.haar import (PiecewiseConstantFn, count_bins, dyadic_round,
                          empirical_projection)
from densint.lepski import build_grid
from densint.quadratic import quad_ustat, quad_ustat_fast


def test_builtin_functionals():
    sq = builtin_functional("square")
    assert sq.T(3.0) == 9.0 and sq.d1(3.0) == 6.0
    ent = builtin_functional("entropy", domain_floor=0.5)
    assert np.isclose(ent.T(1.0), 0.0)
    assert np.isclose(ent.d2(2.0), 0.5)
    pw = builtin_functional("power:2.5")
    assert np.isclose(pw.T(4.0), 32.0)
    assert builtin_functional("renyi2").T(2.0) == 4.0
    with pytest.raises(ValueError, match="unknown functional"):
        builtin_functional("quartic")
    with pytest.raises(ValueError, match="positive"):
        builtin_functional("square", domain_floor=0.0)


def test_weighted_quad_reductions():
    rng = np.random.default_rng(1)
    x = rng.random(60)
    k = 16
    ones = PiecewiseConstantFn(k, np.ones(k))
    assert np.isclose(weighted_quad_ustat(x, ones, k), quad_ustat(x, k).value)
    zeros = PiecewiseConstantFn(k, np.zeros(k))
    assert weighted_quad_ustat(x, zeros, k) == 0.0


def test_weighted_quad_hand_example():
    g = PiecewiseConstantFn(2, np.array([1.0, 0.0]))
    assert np.isclose(weighted_quad_ustat([0.1, 0.3, 0.9], g, 2), 2.0 / 3.0)


def test_weighted_quad_resolution_mismatch():
    g = PiecewiseConstantFn(4, np.ones(4))
    with pytest.raises(ValueError, match="match"):
        weighted_quad_ustat([0.1, 0.5, 0.9], g, 8)


def test_weighted_cubic_reductions():
    rng = np.random.default_rng(2)
    x = rng.random(50)
    kt = KTriple(4, 8, 32)
    ones = PiecewiseConstantFn(4, np.ones(4))
    assert np.isclose(weighted_cubic_ustat(x, ones, kt),
                      cubic_estimator_fast(count_bins(x, kt.ks()), kt).value)
    zeros = PiecewiseConstantFn(4, np.zeros(4))
    assert weighted_cubic_ustat(x, zeros, kt) == 0.0
    with pytest.raises(ValueError, match="match"):
        weighted_cubic_ustat(x, PiecewiseConstantFn(8, np.ones(8)), kt)


def test_weighted_cubic_fast_vs_quadrature_oracle():
    rng = np.random.default_rng(3)
    for _ in range(12):
        n = int(rng.integers(3, 30))
        e1 = int(rng.integers(0, 3))
        e2 = e1 + int(rng.integers(0, 2))
        e3 = e2 + int(rng.integers(0, 3))
        kt = KTriple(2**e1, 2**e2, 2**e3)
        x = rng.random(n)
        w = PiecewiseConstantFn(kt.k1, rng.normal(size=kt.k1))
        fast = weighted_cubic_ustat(x, w, kt)
        naive = weighted_cubic_ustat_naive(x, w, kt)
        assert abs(fast - naive) <= 1e-8 * max(1.0, abs(naive))


def test_weighted_quad_expected_value_on_exact_fixture():
    # the fixture density is piecewise constant at 2^(L+1), so at any finer
    # statistic resolution the weighted pair statistic is exactly unbiased
    # for int g f^2: this pins the (f - fhat)^2 expansion table
    model = DyadicSelfSimilar(0.2, 5, 0.12)
    k = 2 ** (model.depth + 2)
    rng = np.random.default_rng(4)
    g = PiecewiseConstantFn(k, 1.0 + rng.random(k))
    f_pcf = PiecewiseConstantFn(k, model.bin_averages(k))
    target = (g * f_pcf * f_pcf).integral()
    n, reps = 128, 1500
    vals = np.array([weighted_quad_ustat(model.sample(n, rng), g, k)
                     for _ in range(reps)])
    se = vals.std(ddof=1) / np.sqrt(reps)
    assert abs(vals.mean() - target) <= 4.0 * se


def _manual_split(x, seed):
    rng = np.random.default_rng(seed)
    perm = rng.permutation(x.size)
    n1 = x.size // 2
    return x[perm[:n1]], x[perm[n1:]]


def test_cube_path_equals_dedicated_cubic_exactly():
    model = LinearRamp(0.5)
    x = model.sample(2048, np.random.default_rng(11))
    grid = build_grid(1024, 2.0)
    for seed in range(4):
        est = estimate_general(x, builtin_functional("cube", 0.25), grid, 1.4,
                               np.random.default_rng(seed))
        _, d2 = _manual_split(x, seed)
        dedicated = cubic_estimator_fast(count_bins(d2, est.ktriple.ks()),
                                         est.ktriple)
        assert abs(est.value - dedicated.value) <= 1e-12


def test_square_path_equals_dedicated_quadratic_exactly():
    model = LinearRamp(0.5)
    x = model.sample(2048, np.random.default_rng(13))
    grid = build_grid(1024, 2.0)
    for seed in range(4):
        est = estimate_general(x, builtin_functional("square", 0.25), grid, 1.4,
                               np.random.default_rng(seed))
        _, d2 = _manual_split(x, seed)
        kq = est.ktriple.k3
        dedicated = quad_ustat_fast(count_bins(d2, kq), kq)
        assert abs(est.value - dedicated.value) <= 1e-12
        assert est.term_values[3] == 0.0  # vanishing third derivative skipped


def test_split_determinism():
    x = LinearRamp(0.5).sample(600, np.random.default_rng(17))
    grid = build_grid(300, 2.0)
    func = builtin_functional("entropy", domain_floor=0.25)
    a = estimate_general(x, func, grid, 1.4, np.random.default_rng(99))
    b = estimate_general(x, func, grid, 1.4, np.random.default_rng(99))
    assert a.value == b.value
    assert a.term_values == b.term_values
    c = estimate_general(x, func, grid, 1.4, np.random.default_rng(100))
    assert c.value != a.value  # different split


def test_clamping_keeps_terms_finite():
    x = Uniform().sample(512, np.random.default_rng(19))
    grid = build_grid(256, 2.0)
    values = []
    for floor in (0.05, 0.2, 0.5, 0.9):
        est = estimate_general(x, builtin_functional("entropy", floor), grid,
                               1.4, np.random.default_rng(7))
        assert all(np.isfinite(t) for t in est.term_values)
        values.append(est.value)
    assert all(np.isfinite(v) for v in values)


def test_estimate_general_rejects_tiny_samples():
    with pytest.raises(ValueError, match="n >= 6"):
        estimate_general(np.array([0.1, 0.5, 0.9]),
                         builtin_functional("square"), None, 1.0,
                         np.random.default_rng(0))


def test_fixed_beta_path_skips_selection():
    x = LinearRamp(0.5).sample(1024, np.random.default_rng(21))
    est = estimate_general(x, builtin_functional("cube", 0.25), None, 0.0,
                           np.random.default_rng(3), beta=0.2)
    assert est.selection.jhat == -1
    assert est.selection.tested == ()
    assert np.isfinite(est.value)


def test_pilot_fourth_moment_decay_attainable_rate():
    # pilot accuracy: E int (f - fhat)^4 at the density-rate resolution
    # decays no slower than n^{-4 beta / (1 + 2 beta)} (the squared-L2 rate
    # squared is not attainable; see the xfail below)
    beta = 0.2
    model = DyadicSelfSimilar(beta, 12, 0.12)
    kf = 2 ** (model.depth + 1)
    truth = PiecewiseConstantFn(kf, model.bin_averages(kf))
    rng = np.random.default_rng(23)
    ns = (512, 1024, 2048, 4096, 8192)
    means = []
    for n in ns:
        kd = dyadic_round(float(n) ** (1.0 / (1.0 + 2.0 * beta)))
        vals = [((truth - empirical_projection(model.sample(n, rng), kd)) ** 4).integral()
                for _ in range(50)]
        means.append(np.mean(vals))
    slope = np.polyfit(np.log(ns), np.log(means), 1)[0]
    assert slope <= -4.0 * beta / (1.0 + 2.0 * beta) + 0.2


@pytest.mark.xfail(reason="the stated fourth-moment rate n^(-8b/(1+2b)) is "
                          "below the squared-L2 floor ((int (f-fhat)^2)^2 >= "
                          "n^(-4b/(1+2b)) by Cauchy-Schwarz); kept as the "
                          "literal claim", strict=False)
def test_pilot_fourth_moment_decay_literal_claim():
    beta = 0.2
    model = DyadicSelfSimilar(beta, 12, 0.12)
    kf = 2 ** (model.depth + 1)
    truth = PiecewiseConstantFn(kf, model.bin_averages(kf))
    rng = np.random.default_rng(23)
    ns = (512, 1024, 2048, 4096, 8192)
    means = []
    for n in ns:
        kd = dyadic_round(float(n) ** (1.0 / (1.0 + 2.0 * beta)))
        vals = [((truth - empirical_projection(model.sample(n, rng), kd)) ** 4).integral()
                for _ in range(50)]
        means.append(np.mean(vals))
    slope = np.polyfit(np.log(ns), np.log(means), 1)[0]
    assert slope <= -8.0 * beta / (1.0 + 2.0 * beta) + 0.2
