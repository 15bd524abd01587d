import numpy as np
import pytest

from densint.densities import TrigPerturbed
from densint.haar import count_bins
from densint.quadratic import (i_hat, quad_ustat, quad_ustat_fast,
                               quad_ustat_naive)


def test_naive_hand_examples():
    assert np.isclose(quad_ustat_naive([0.1, 0.3, 0.9], 2).value, 2.0 / 3.0)
    assert quad_ustat_naive([0.1, 0.9], 1).value == 1.0
    assert quad_ustat_naive([0.37] * 6, 32).value == 32.0


def test_fast_hand_examples():
    counts = count_bins([0.1, 0.3, 0.9], 2)
    assert np.isclose(quad_ustat_fast(counts, 2).value, 2.0 / 3.0)
    singles = count_bins([0.05, 0.3, 0.55, 0.8], 4)
    assert quad_ustat_fast(singles, 4).value == 0.0
    assert quad_ustat_fast(count_bins([0.2, 0.9], 1), 1).value == 1.0


def test_small_sample_rejected():
    with pytest.raises(ValueError, match="n >= 2"):
        quad_ustat_naive([0.5], 2)
    with pytest.raises(ValueError, match="n >= 2"):
        quad_ustat_fast(count_bins([0.5], 2), 2)


def test_fast_matches_naive():
    rng = np.random.default_rng(17)
    for _ in range(40):
        n = int(rng.integers(2, 129))
        k = 2 ** int(rng.integers(0, 9))
        x = rng.random(n)
        fast = quad_ustat(x, k).value
        naive = quad_ustat_naive(x, k).value
        assert abs(fast - naive) <= 1e-10 * max(1.0, abs(naive))


def test_permutation_invariance():
    rng = np.random.default_rng(23)
    x = rng.random(40)
    base = quad_ustat(x, 16).value
    for _ in range(5):
        assert quad_ustat(rng.permutation(x), 16).value == base


def test_i_hat_examples():
    x = [0.1, 0.3, 0.9]
    assert i_hat(x, 4, 4) == 0.0
    assert np.isclose(i_hat(x, 1, 2), -1.0 / 3.0)
    with pytest.raises(ValueError, match="must not exceed"):
        i_hat(x, 8, 2)


def test_i_hat_mean_is_projection_gap():
    # E U^(k) = int f_k^2 exactly, so E i_hat is the projected-moment gap
    model = TrigPerturbed(0.6, 2)
    n, reps = 256, 600
    k_small, k_large = 4, 64
    target = (model.projected_functional(k_large, 2)
              - model.projected_functional(k_small, 2))
    rng = np.random.default_rng(29)
    vals = np.array([i_hat(model.sample(n, rng), k_small, k_large)
                     for _ in range(reps)])
    se = vals.std(ddof=1) / np.sqrt(reps)
    assert abs(vals.mean() - target) <= 4.0 * se


def test_mc_unbiasedness_light():
    model = TrigPerturbed(0.5, 3)
    n, k, reps = 256, 512, 600
    target = model.projected_functional(k, 2)
    rng = np.random.default_rng(31)
    vals = np.array([quad_ustat(model.sample(n, rng), k).value
                     for _ in range(reps)])
    se = vals.std(ddof=1) / np.sqrt(reps)
    assert abs(vals.mean() - target) <= 4.0 * se
