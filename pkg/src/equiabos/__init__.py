"""Bayes-optimal sparse multiple testing for equicorrelated Gaussian statistics."""

from .data import Dataset, center, empirical_moments, generate, replicate_seed
from .exceptions import (
    BracketError,
    ConvergenceError,
    DomainError,
    NoSolutionError,
    ParameterError,
)
from .model import DerivedScales, LossParams, ModelParams, derive_scales, validate_params
from .risk import (
    bayes_risk_fixed,
    evaluate_rejections,
    monte_carlo_metrics,
    optimal_risk,
    type_errors,
)
from .thresholds import (
    bfdr_of_threshold,
    bfdr_threshold,
    bh_random_threshold,
    bh_reject,
    bonferroni_expansion,
    bonferroni_threshold,
    fixed_threshold_reject,
    gw_threshold,
    oracle_cutoff,
)

__version__ = "0.1.0"
