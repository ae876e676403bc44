"""Robust sparse Gaussian graphical models.

Point estimation of sparse precision matrices under a divergence-based
objective that down-weights outliers, approximate posterior sampling by
weighted Bayesian bootstrap, block-Gibbs baselines, graph-edge selection,
benchmark generators, and low-dimensional quadrature verification of the
posterior-robustness theory.
"""

__version__ = "0.1.0"

from .core import (
    DataMatrix,
    NotPositiveDefiniteError,
    PrecisionMatrix,
    SampleCov,
    gaussian_log_density,
    log_det,
    sample_covariance,
)
from .gamma_mm import GammaConfig, MMState, gamma_objective, mm_fit, mm_surrogate
from .gibbs import GibbsConfig, bg_gibbs, bt_gibbs, sample_u
from .glasso import GlassoConfig, GlassoSolution, glasso_solve
from .robustness import (
    OutlierExperiment,
    PosteriorKind,
    dp_limit_ratio,
    log_unnormalized_posterior,
    normalize_1d,
    robustness_curve,
)
from .selection import EdgeSet, MetricsReport, compute_metrics, median_probability_select
from .simulate import (
    GraphSpec,
    ScenarioSpec,
    generate,
    hotelling_filter,
    mad_normalize,
    matrix_a,
    matrix_ar2,
    precision_from_graph,
)
from .wbb import HyperPrior, PosteriorSample, dirichlet_weights, wbb_sample, wbbg_sample

__all__ = [
    "DataMatrix",
    "EdgeSet",
    "GammaConfig",
    "GibbsConfig",
    "GlassoConfig",
    "GlassoSolution",
    "GraphSpec",
    "HyperPrior",
    "MMState",
    "MetricsReport",
    "NotPositiveDefiniteError",
    "OutlierExperiment",
    "PosteriorKind",
    "PosteriorSample",
    "PrecisionMatrix",
    "SampleCov",
    "ScenarioSpec",
    "bg_gibbs",
    "bt_gibbs",
    "compute_metrics",
    "dirichlet_weights",
    "dp_limit_ratio",
    "gamma_objective",
    "gaussian_log_density",
    "generate",
    "glasso_solve",
    "hotelling_filter",
    "log_det",
    "log_unnormalized_posterior",
    "mad_normalize",
    "matrix_a",
    "matrix_ar2",
    "median_probability_select",
    "mm_fit",
    "mm_surrogate",
    "normalize_1d",
    "precision_from_graph",
    "robustness_curve",
    "sample_covariance",
    "sample_u",
    "wbb_sample",
    "wbbg_sample",
]
