"""Estimation of integral functionals int T(f) of a density on [0, 1].

Quadratic and cubic functionals are estimated by U-statistics of Haar
projection kernels, evaluated in O(n + k) through dyadic bin counting;
general smooth T goes through a sample-splitting Taylor plug-in. The
truncation level adapts to unknown smoothness by testing second-order
difference statistics against simulated noise thresholds. A deterministic
Monte Carlo harness verifies bias, variance, normality, and rate behaviour
against analytic density fixtures.
"""

from .cubic import (CubicEstimate, KTriple, choose_k_triple, cubic_bias_identity,
                    cubic_estimator, cubic_estimator_fast, cubic_estimator_naive)
from .densities import (DensityModel, DyadicSelfSimilar, FunctionalTruth,
                        HolderReport, LinearRamp, PerturbedUniform,
                        TrigPerturbed, Uniform, holder_verify, model_from_config)
from .general import (FunctionalSpec, GeneralEstimate, builtin_functional,
                      estimate_general, weighted_cubic_ustat,
                      weighted_cubic_ustat_naive, weighted_quad_ustat)
from .haar import (BinCountHierarchy, DyadicResolution, PiecewiseConstantFn,
                   bin_index, count_bins, dyadic_round, empirical_projection,
                   kernel_eval, kernel_l2_mass, kernel_row_mass,
                   triple_kernel_integral)
from .harness import (ExperimentConfig, RateReport, rate_regression, read_csv,
                      rng_stream, run_mc, write_csv)
from .lepski import (LepskiGrid, SelectionResult, TwoPointResult,
                     adaptive_cubic, adaptive_quadratic, build_grid,
                     calibrate_threshold, calibrate_two_point, select_modified,
                     select_two_point)
from .quadratic import QuadEstimate, i_hat, quad_ustat, quad_ustat_fast, quad_ustat_naive

__version__ = "0.1.0"

__all__ = [
    "BinCountHierarchy", "CubicEstimate", "DensityModel", "DyadicResolution",
    "DyadicSelfSimilar", "ExperimentConfig", "FunctionalSpec", "FunctionalTruth",
    "GeneralEstimate", "HolderReport", "KTriple", "LepskiGrid", "LinearRamp",
    "PerturbedUniform", "PiecewiseConstantFn", "QuadEstimate", "RateReport",
    "SelectionResult", "TrigPerturbed", "TwoPointResult", "Uniform",
    "adaptive_cubic", "adaptive_quadratic", "bin_index", "build_grid",
    "builtin_functional", "calibrate_threshold", "calibrate_two_point",
    "choose_k_triple", "count_bins", "cubic_bias_identity", "cubic_estimator",
    "cubic_estimator_fast", "cubic_estimator_naive", "dyadic_round",
    "empirical_projection", "estimate_general", "holder_verify", "i_hat",
    "kernel_eval", "kernel_l2_mass", "kernel_row_mass", "model_from_config",
    "quad_ustat", "quad_ustat_fast", "quad_ustat_naive", "rate_regression",
    "read_csv", "rng_stream", "run_mc", "select_modified", "select_two_point",
    "triple_kernel_integral", "weighted_cubic_ustat",
    "weighted_cubic_ustat_naive", "weighted_quad_ustat", "write_csv",
]
