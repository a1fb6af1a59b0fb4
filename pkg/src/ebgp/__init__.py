"""Gaussian-process regression that adapts to the low intrinsic dimension of
its predictors through a data-driven prior on the kernel bandwidth.

The package bundles the estimators (data-driven and rescaled-Gamma GP plus
non-Bayesian baselines), the nearest-neighbour and kernel-affinity
statistics behind the bandwidth prior, synthetic manifold generators,
numerical oracles for the supporting analysis, and a seeded benchmark
harness with a CLI.
"""

from ._core import backend_name
from .benchmark import BenchmarkReport, run_benchmark
from .datagen import (
    Dataset,
    add_noise,
    gen_circle,
    gen_mixed_union,
    gen_swiss_roll,
    load_image_manifold,
)
from .estimators import (
    EstimatorConfig,
    Prediction,
    fit_predict,
    fit_predict_eb_gp,
    fit_predict_gamma_gp,
    fit_predict_kernel_ridge_cv,
    select_bandwidth_median,
    select_bandwidth_mle,
    truncate_prediction,
)
from .exceptions import (
    EbgpError,
    InvalidInputError,
    InvalidParameterError,
    NumericalFailureError,
)
from .kernel_gp import (
    GPFit,
    GramCache,
    KernelParams,
    fit_gp,
    gram_matrix,
    kernel_eval,
    marginal_log_likelihood,
    posterior_node_moments,
    posterior_predict,
)
from .manifold_stats import (
    DEGENERATE_RATIO,
    KnnConfig,
    box_counting_dimension,
    estimate_dimension,
    harmonic_affinity_stat,
    kernel_affinity_stat,
    knn_distance,
    tn_statistic,
)
from .metrics import error_2_empirical, error_n, fit_rate_slope
from .oracles import (
    affinity_band_check,
    circle_manifold,
    g_epsilon_apply,
    knn_band_check,
    rkhs_norm_squared,
    segment_manifold,
)
from .priors import (
    EmpiricalBayesPrior,
    RescaledGammaPrior,
    check_a3_bounds,
    empirical_bayes_prior,
    misspecified_rate_exponent,
    normalized,
    rate_exponent,
)
from .sampler import MHConfig, PosteriorChain, grid_posterior, \
    mh_sample_bandwidth, mh_sample_joint

__version__ = "0.1.0"
