"""Particle filters and marginal smoothers for scalar trend models."""

from ._pfsmooth import (
    FilterHistory,
    Grid,
    SmoothedMarginals,
    TrendModel,
    dist,
    ffbsm,
    filter_marginals,
    fixed_lag_smooth,
    generate_test_series,
    grid_smoother,
    k_cauchy,
    k_gaussian,
    k_gaussian_voutier,
    k_truncated_cauchy,
    kalman_smoother,
    marginals_to_grid,
    ns_ffbsm,
    run_filter,
    s_ffbsm,
)
from . import _pfsmooth

__all__ = [
    "FilterHistory",
    "Grid",
    "SmoothedMarginals",
    "TrendModel",
    "dist",
    "ffbsm",
    "filter_marginals",
    "fixed_lag_smooth",
    "generate_test_series",
    "grid_smoother",
    "k_cauchy",
    "k_gaussian",
    "k_gaussian_voutier",
    "k_truncated_cauchy",
    "kalman_smoother",
    "marginals_to_grid",
    "ns_ffbsm",
    "optimal_lag",
    "run_experiment",
    "run_filter",
    "s_ffbsm",
]


def _settings(kwargs):
    # Python-friendly keyword names map onto the CLI/config keys.
    return {key.replace("_", "-"): str(value) for key, value in kwargs.items()}


def run_experiment(**settings):
    """Replicated Dist/time experiment, e.g. run_experiment(method="ffbsm", m=100, nsim=5).

    Keys are the config-file keys (model, method, m, ms, lag, alpha, eps, nsim,
    seed, N, data_seed, reference, threads, ...).
    """
    return _pfsmooth._run_experiment(_settings(settings))


def optimal_lag(lags, **settings):
    """Fixed-lag Dist for every candidate lag; returns best_lag, lags, dist_mean."""
    return _pfsmooth._optimal_lag(_settings(settings), list(lags))
