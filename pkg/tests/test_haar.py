import numpy as np
import pytest
from scipy import integrate

from densint.haar import (BinCountHierarchy, DyadicResolution,
                          PiecewiseConstantFn, bin_index, count_bins,
                          dyadic_round, empirical_projection, kernel_eval,
                          kernel_l2_mass, kernel_row_mass,
                          triple_kernel_integral)


def test_bin_index_boundary_convention():
    assert bin_index(8, 0.125) == 1  # right endpoint of bin 1
    assert bin_index(8, 0.126) == 2  # left-open bins
    assert bin_index(4, 0.0) == 1    # zero belongs to the first bin
    assert bin_index(4, 1.0) == 4
    assert bin_index(1, 0.7) == 1


def test_bin_index_rejects_out_of_range():
    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        bin_index(8, 1.0001)
    with pytest.raises(ValueError):
        bin_index(8, np.array([0.2, -0.1]))


def test_bin_index_vectorized_matches_scalar():
    rng = np.random.default_rng(0)
    x = rng.random(200)
    for k in (1, 2, 16, 128):
        vec = bin_index(k, x)
        assert all(vec[i] == bin_index(k, float(x[i])) for i in range(x.size))


def test_dyadic_round():
    assert dyadic_round(1.0) == 1
    assert dyadic_round(1024.0) == 1024
    assert dyadic_round(1024.0001) == 2048
    assert dyadic_round(3.2) == 4
    assert dyadic_round(0.3) == 1


def test_dyadic_resolution_validation():
    assert DyadicResolution.from_k(64).level == 6
    assert DyadicResolution.from_target(60.0).k == 64
    with pytest.raises(ValueError, match="power of two"):
        DyadicResolution.from_k(12)


def test_kernel_eval_examples():
    assert kernel_eval(4, 0.1, 0.2) == 4.0
    assert kernel_eval(4, 0.1, 0.3) == 0.0
    assert kernel_eval(1, 0.7, 0.05) == 1.0


def test_kernel_symmetry_on_grid():
    xs = np.linspace(0.0, 1.0, 33)
    for k in (1, 4, 32):
        for x in xs:
            for y in xs:
                assert kernel_eval(k, x, y) == kernel_eval(k, y, x)


def test_kernel_mass_identities_exact():
    # powers of two make 1/k exact, so these closed forms are bit-exact
    for k in (1, 2, 8, 512):
        assert kernel_row_mass(k, 0.37) == 1.0
        assert kernel_l2_mass(k) == float(k)


def test_triple_kernel_integral_examples():
    assert triple_kernel_integral(2, 2, 2, 0.1, 0.2, 0.3) == 4.0
    assert triple_kernel_integral(2, 4, 8, 0.1, 0.3, 0.35) == 8.0
    assert triple_kernel_integral(2, 4, 8, 0.6, 0.3, 0.35) == 0.0


def test_triple_kernel_integral_rejects_unsorted():
    with pytest.raises(ValueError, match="nested"):
        triple_kernel_integral(8, 4, 2, 0.1, 0.2, 0.3)


def test_triple_kernel_integral_vs_quadrature():
    rng = np.random.default_rng(5)
    for _ in range(60):
        ea = int(rng.integers(0, 4))
        eb = ea + int(rng.integers(0, 3))
        ec = eb + int(rng.integers(0, 3))
        a, b, c = 2**ea, 2**eb, 2**ec
        u, v, w = rng.random(3)
        closed = triple_kernel_integral(a, b, c, u, v, w)
        breaks = np.arange(1, c) / c
        val, _ = integrate.quad(
            lambda t: kernel_eval(a, t, u) * kernel_eval(b, t, v) * kernel_eval(c, t, w),
            0.0, 1.0, points=breaks, limit=max(60, 2 * c))
        assert abs(val - closed) <= 1e-6


def test_count_bins_examples():
    x = [0.1, 0.3, 0.9]
    h = count_bins(x, 2)
    assert h.at(2).tolist() == [2, 1]
    h = count_bins(x, [2, 4])
    assert h.at(4).tolist() == [1, 1, 0, 1]
    assert h.at(2).tolist() == [2, 1]
    empty = count_bins([], 8)
    assert empty.at(8).tolist() == [0] * 8


def test_count_bins_rejects_bad_point():
    with pytest.raises(ValueError, match="index 1"):
        count_bins([0.5, 1.5], 4)


def test_parent_consistency_sweep():
    rng = np.random.default_rng(9)
    for _ in range(20):
        n = int(rng.integers(1, 300))
        x = rng.random(n)
        h = count_bins(x, [4, 16, 64])
        assert int(h.at(64).sum()) == n
        for coarse, fine in ((4, 16), (16, 64), (4, 64)):
            agg = h.at(fine).reshape(coarse, fine // coarse).sum(axis=1)
            assert np.array_equal(agg, h.at(coarse))


def test_hierarchy_requires_a_resolution():
    with pytest.raises(ValueError):
        BinCountHierarchy.from_sample([0.5], [])


def test_empirical_projection():
    f = empirical_projection([0.1, 0.3, 0.9], 2)
    assert np.allclose(f.values, [4.0 / 3.0, 2.0 / 3.0])
    assert empirical_projection([0.5], 1).values.tolist() == [1.0]
    rng = np.random.default_rng(3)
    for k in (1, 8, 64):
        g = empirical_projection(rng.random(57), k)
        assert g.integral() == 1.0
    with pytest.raises(ValueError, match="at least one"):
        empirical_projection([], 4)


def test_piecewise_constant_projection_algebra():
    f = PiecewiseConstantFn(4, np.array([1.0, 3.0, 2.0, 0.0]))
    assert f.integral() == 1.5
    assert f.project(4) is not f
    assert np.array_equal(f.project(4).values, f.values)
    coarse = f.project(2)
    assert np.allclose(coarse.values, [2.0, 1.0])
    fine = f.refine(8)
    assert fine.k == 8
    assert np.allclose(fine.project(4).values, f.values)
    assert f(0.3) == 3.0
    assert ((f - f) ** 2).integral() == 0.0
    with pytest.raises(ValueError, match="coarser"):
        f.refine(2)


def test_piecewise_constant_mixed_resolution_ops():
    f = PiecewiseConstantFn(2, np.array([1.0, 2.0]))
    g = PiecewiseConstantFn(4, np.array([0.0, 1.0, 1.0, 3.0]))
    prod = f * g
    assert prod.k == 4
    assert np.allclose(prod.values, [0.0, 1.0, 2.0, 6.0])
    assert np.isclose((f + g).integral(), f.integral() + g.integral())
