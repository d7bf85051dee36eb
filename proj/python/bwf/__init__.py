"""Bayesian workflow toolkit."""

from ._core import (
    ComputationError,
    Dataset,
    LooResult,
    ValidationError,
    divergence_scatter_svg,
    eight_schools,
    fit,
    gpd_fit,
    kde,
    ks_uniform,
    load_csv,
    log_posterior,
    loo,
    loo_compare,
    loo_pit,
    ols_r2,
    parameter_names,
    pointwise_log_lik,
    prior_predictive,
    psis,
    replicates,
    simulate,
    split_rhat,
    stat_check,
    test_stat,
)

__all__ = [name for name in dir() if not name.startswith("_")]
