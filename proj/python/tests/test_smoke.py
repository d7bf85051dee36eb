import math

import numpy as np
import pytest

import bwf


def test_eight_schools_data():
    d = bwf.eight_schools()
    assert len(d) == 8
    assert d.y[0] == 28.0
    assert d.x[7] == 18.0


def test_gradient_matches_finite_difference():
    d = bwf.simulate(seed=3, design="grouped")
    names = bwf.parameter_names("hier-who", d)
    rng = np.random.default_rng(0)
    theta = rng.uniform(-1, 1, len(names))
    lp, grad = bwf.log_posterior("hier-who", d, theta.tolist())
    h = 1e-5
    for k in range(len(theta)):
        up, dn = theta.copy(), theta.copy()
        up[k] += h
        dn[k] -= h
        fd = (bwf.log_posterior("hier-who", d, up.tolist())[0]
              - bwf.log_posterior("hier-who", d, dn.tolist())[0]) / (2 * h)
        assert fd == pytest.approx(grad[k], rel=1e-5, abs=1e-5)


def test_fit_and_loo_on_eight_schools():
    d = bwf.eight_schools()
    draws = bwf.fit("8schools-nc", d, warmup=300, draws=300, chains=2, seed=5)
    assert draws["params"].shape == (600, len(draws["names"]))
    tau = draws["params"][:, draws["names"].index("tau")]
    assert (tau > 0).all()
    ll = bwf.pointwise_log_lik("8schools-nc", d, draws)
    assert ll.shape == (600, 8)
    res = bwf.loo(ll)
    assert res.pointwise_elpd.sum() == pytest.approx(res.elpd)
    assert bwf.loo_compare(res, res)[0] == 0.0
    svg = bwf.divergence_scatter_svg(draws, "theta[1]", "log(tau)")
    assert svg.startswith("<?xml") or svg.startswith("<svg")


def test_fit_is_deterministic():
    d = bwf.eight_schools()
    a = bwf.fit("8schools-nc", d, warmup=100, draws=50, chains=2, seed=9)
    b = bwf.fit("8schools-nc", d, warmup=100, draws=50, chains=2, seed=9)
    np.testing.assert_array_equal(a["params"], b["params"])


def test_psis_and_gpd():
    rng = np.random.default_rng(1)
    x = np.sort(rng.pareto(1 / 0.5, 2000))  # GPD with k = 0.5
    k, sigma = bwf.gpd_fit(x.tolist())
    assert abs(k - 0.5) < 0.1 and sigma > 0
    lw, khat, status = bwf.psis(rng.normal(size=1000).tolist())
    assert status == "smoothed"
    assert lw.max() == 0.0
    assert math.isfinite(khat)


def test_ppc_helpers():
    assert bwf.test_stat([1, 2, 3, 4, 10], "skew") == pytest.approx(1.1384, abs=1e-4)
    y = [1.0, 2.0, 3.0]
    obs, up, low = bwf.stat_check(y, np.array([y, y]), "mean")
    assert (obs, up, low) == (2.0, 1.0, 1.0)
    grid, dens = bwf.kde(np.random.default_rng(2).normal(size=500).tolist())
    assert float(np.sum(np.diff(grid) * (dens[1:] + dens[:-1]) / 2)) == pytest.approx(1.0, abs=0.02)
    assert bwf.ks_uniform([0.25, 0.75]) == pytest.approx(0.25)


def test_prior_predictive_tails():
    d = bwf.simulate()
    _, weak = bwf.prior_predictive("hier-who", d, n_datasets=200, priors="weak", seed=1)
    _, vague = bwf.prior_predictive("hier-who", d, n_datasets=200, priors="vague", seed=1)
    assert vague["max_abs_q50"] > 10 * weak["max_abs_q50"]


def test_errors_are_python_exceptions():
    with pytest.raises(bwf.ValidationError):
        bwf.fit("no-such-model", bwf.eight_schools())
    with pytest.raises(ValueError):
        bwf.loo(np.array([[0.0, float("nan")]] * 30))


def test_default_data_r2():
    d = bwf.simulate()
    assert 0.5 <= bwf.ols_r2(d.x, d.y) <= 0.7
