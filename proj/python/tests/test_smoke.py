import math

import numpy as np
import pytest

import pfsmooth as ps


@pytest.fixture(scope="module")
def gauss():
    model = ps.TrendModel("gauss")
    data = ps.generate_test_series(model, length=60, seed=1)
    return model, data["y"]


def test_model_defaults():
    model = ps.TrendModel("tcauchy")
    assert model.family == "tcauchy"
    assert model.tau == pytest.approx(0.0059)
    assert ps.TrendModel().tau == pytest.approx(math.sqrt(0.0122))
    assert model.transition_logdensity(0.0, 11.0) == -math.inf
    with pytest.raises(ValueError):
        ps.TrendModel("student")


def test_series_shape():
    data = ps.generate_test_series(ps.TrendModel(), length=500, seed=1)
    assert data["y"].shape == (500,)
    assert data["trend"][150] == 1.0
    assert len(set(data["y"][:10])) == 10
    assert np.count_nonzero(data["trend"]) == 300


def test_filter_and_smoothers(gauss):
    model, y = gauss
    history = ps.run_filter(model, y, 200, seed=3)
    assert history.particles.shape == (60, 200)
    np.testing.assert_allclose(history.weights.sum(axis=1), 1.0)
    exact = ps.ffbsm(history, model)
    full = ps.s_ffbsm(history, model, 200)
    np.testing.assert_allclose(full.weights, exact.weights, rtol=1e-12)
    ns = ps.ns_ffbsm(history, model, 200, radius=1e9)
    np.testing.assert_allclose(ns.weights, exact.weights, rtol=1e-12)
    lag0 = ps.fixed_lag_smooth(model, y, 200, 0, seed=3)
    np.testing.assert_array_equal(lag0.weights, history.weights)
    mean, std = exact.moments()
    assert mean.shape == (60,) and np.all(std > 0)


def test_references_agree(gauss):
    model, y = gauss
    kalman = ps.kalman_smoother(model, y)
    grid = ps.grid_smoother(model, y)
    np.testing.assert_allclose(grid["smoothed_mean"], kalman["smoothed_mean"], atol=1e-3)
    assert grid["density"].shape == (60, 6400)


def test_dist_of_histogram(gauss):
    model, y = gauss
    grid = ps.grid_smoother(model, y)
    smoothed = ps.ffbsm(ps.run_filter(model, y, 300, seed=1), model)
    est = ps.marginals_to_grid(smoothed)
    d = ps.dist(grid["density"], est)
    assert d > 0
    assert ps.dist(est, est) == 0


def test_thresholds():
    assert ps.k_gaussian(100) == pytest.approx(2.5758, abs=1e-4)
    assert ps.k_gaussian_voutier(100) == pytest.approx(2.6630, abs=1e-4)
    assert ps.k_cauchy(2) == pytest.approx(1.0)
    assert ps.k_truncated_cauchy(100, 10 / 0.0059, mc_samples=200000) == pytest.approx(61.4, rel=0.05)


def test_experiment_and_lag_search():
    r = ps.run_experiment(method="ffbsm", m=100, nsim=3, N=50)
    assert r["dist"].shape == (3,)
    assert r["dist_std"] > 0
    again = ps.run_experiment(method="ffbsm", m=100, nsim=3, N=50, threads=2)
    np.testing.assert_array_equal(r["dist"], again["dist"])
    single = ps.run_experiment(method="filter", m=100, nsim=1, N=50)
    assert single["dist_std"] is None
    lag = ps.optimal_lag(range(0, 10, 2), model="tcauchy", m=100, nsim=2, N=50)
    assert lag["best_lag"] in lag["lags"]
    with pytest.raises(ValueError):
        ps.run_experiment(method="s-ffbsm", m=100)
