import math

import numpy as np
import pytest
from scipy import integrate, stats

from discrete_bilal import likelihood as lik
from discrete_bilal.bayes import McmcConfig, PriorSpec, acf, geweke, hdi, log_posterior, run_mcmc
from discrete_bilal.data import SurvivalDataset
from discrete_bilal.mle import fit_ml

SHORT = McmcConfig(iterations=12_000, burn_in=2_000, thin=10, seed=1)


# log posterior ---------------------------------------------------------------------------


def test_log_posterior_cross_module_oracle(pelvic):
    prior = PriorSpec((2.0, 30.0), (2.0, 3.0))
    for beta, eta in [(0.01, 0.1), (0.03, 0.58), (0.2, 0.9)]:
        expect = (
            lik.loglik_cure((beta, eta), pelvic)
            + stats.gamma.logpdf(beta, 2.0, scale=1 / 30.0)
            + stats.beta.logpdf(eta, 2.0, 3.0)
        )
        assert abs(log_posterior((beta, eta), pelvic, prior, "cure") - expect) < 1e-12 * max(1, abs(expect))


def test_flat_eta_prior_contributes_nothing(pelvic):
    prior = PriorSpec()
    assert prior.log_eta_density(0.37) == 0.0
    a = log_posterior((0.03, 0.37), pelvic, prior, "cure")
    b = lik.loglik_cure((0.03, 0.37), pelvic) + stats.gamma.logpdf(0.03, 0.001, scale=1000.0)
    assert a == pytest.approx(b, rel=1e-12)


def test_smaller_rate_favours_large_beta(leukemia):
    def spread(rate):
        p = PriorSpec((0.5, rate))
        return log_posterior(1.0, leukemia, p, "complete") - log_posterior(0.05, leukemia, p, "complete")

    assert spread(0.01) > spread(10.0)


@pytest.mark.parametrize("params,setting", [(0.0, "censored"), (-1.0, "complete"), ((0.1, 1.0), "cure"),
                                            ((0.1, -0.1), "cure"), ((math.nan, 0.5), "cure")])
def test_out_of_domain_is_minus_inf(leukemia, params, setting):
    assert log_posterior(params, leukemia, PriorSpec(), setting) == -math.inf


def test_prior_validation():
    with pytest.raises(ValueError):
        PriorSpec((0.0, 1.0))
    with pytest.raises(ValueError):
        PriorSpec((1.0, 1.0), (1.0, -2.0))


def test_config_validation():
    with pytest.raises(ValueError):
        McmcConfig(iterations=100, burn_in=100)
    with pytest.raises(ValueError):
        McmcConfig(iterations=1000, burn_in=0, thin=20)
    with pytest.raises(ValueError):
        McmcConfig(thin=0)
    with pytest.raises(ValueError):
        McmcConfig(proposal_scale=-1.0)
    assert McmcConfig().n_retained == 5000


# summaries ---------------------------------------------------------------------------------


def test_hdi_uniform_and_constant():
    u = np.random.default_rng(0).random(20_000)
    lo, hi = hdi(u, 0.95)
    assert hi - lo == pytest.approx(0.95, abs=0.01)
    assert hdi(np.full(50, 2.5), 0.9) == (2.5, 2.5)
    with pytest.raises(ValueError):
        hdi(u, 1.0)
    with pytest.raises(ValueError):
        hdi(np.arange(9.0), 0.5)


def test_hdi_normal_matches_equal_tail():
    x = np.random.default_rng(2).standard_normal(200_000)
    lo, hi = hdi(x, 0.95)
    assert lo == pytest.approx(-1.96, abs=0.03) and hi == pytest.approx(1.96, abs=0.03)


def test_geweke_calibration_and_trend():
    ok = sum(abs(geweke(np.random.default_rng(s).standard_normal(5000))) < 1.96 for s in range(100))
    assert ok >= 93
    assert abs(geweke(np.arange(1, 1001, dtype=float))) > 10
    assert geweke(np.ones(200)) == 0.0
    with pytest.raises(ValueError):
        geweke(np.zeros(99))


def test_acf():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(4000)
    r = acf(x, 40)
    assert r[0] == 1.0 and np.all(np.abs(r) <= 1.0)
    assert np.mean(np.abs(r[1:]) < 2 / math.sqrt(x.size)) >= 0.9
    e = rng.standard_normal(100_000)
    y = np.empty_like(e)
    y[0] = e[0]
    for i in range(1, y.size):
        y[i] = 0.9 * y[i - 1] + e[i]
    assert acf(y, 1)[1] == pytest.approx(0.9, abs=0.05)
    with pytest.raises(ValueError):
        acf(x, x.size)


# sampler -----------------------------------------------------------------------------------


def test_determinism_thinning_and_domain(pelvic):
    a = run_mcmc(pelvic, config=SHORT, setting="cure")
    b = run_mcmc(pelvic, config=SHORT, setting="cure")
    assert np.array_equal(a.draws, b.draws)
    assert a.draws.shape == (1000, 2)
    assert np.all(a.draws[:, 0] > 0) and np.all((a.draws[:, 1] >= 0) & (a.draws[:, 1] < 1))
    assert 0.0 < a.acceptance_rate < 1.0
    assert np.all(a.hdi[:, 0] < a.hdi[:, 1])
    c = run_mcmc(pelvic, config=McmcConfig(12_000, 2_000, 10, seed=2), setting="cure")
    assert not np.array_equal(a.draws, c.draws)


def test_thinning_count_odd_schedule(leukemia):
    cfg = McmcConfig(iterations=5_123, burn_in=1_000, thin=7, seed=0)
    chain = run_mcmc(leukemia, config=cfg, setting="complete")
    assert chain.draws.shape[0] == (5_123 - 1_000) // 7


def test_fixed_proposal_scale_is_kept(leukemia):
    cfg = McmcConfig(iterations=3_000, burn_in=1_000, thin=2, seed=0, proposal_scale=0.5)
    assert run_mcmc(leukemia, config=cfg, setting="complete").proposal_scale == 0.5


def test_leukemia_chain_matches_quadrature(leukemia):
    prior = PriorSpec()

    def dens(b):
        return math.exp(log_posterior(b, leukemia, prior, "complete") + 65.0)

    z = integrate.quad(dens, 1e-6, 1.0, points=[0.09], limit=200)[0]
    mean = integrate.quad(lambda b: b * dens(b), 1e-6, 1.0, points=[0.09], limit=200)[0] / z
    chain = run_mcmc(leukemia, prior, McmcConfig(seed=5), "complete")
    mc_se = chain.posterior_sd[0] / math.sqrt(chain.draws.shape[0]) * 3  # generous for autocorrelation
    assert abs(chain.posterior_mean[0] - mean) < 4 * mc_se
    fit = fit_ml("db", "complete", leukemia)
    assert abs(chain.posterior_mean[0] - fit.theta) < 2 * chain.posterior_sd[0]


def test_prior_domination(leukemia):
    chain = run_mcmc(leukemia, PriorSpec((1e6, 1e7)), McmcConfig(22_000, 2_000, 4, seed=0), "complete")
    assert chain.posterior_mean[0] == pytest.approx(0.1, abs=1e-3)


def test_all_censored_warns():
    data = SurvivalDataset.from_records([(3, 0), (5, 0), (8, 0), (10, 0), (12, 0)])
    with pytest.warns(RuntimeWarning, match="drifted"):
        chain = run_mcmc(data, config=McmcConfig(22_000, 2_000, 4, seed=0))
    assert chain.warnings and np.all(chain.draws[:, 0] > 0)


def test_chain_export(pelvic):
    chain = run_mcmc(pelvic, config=SHORT, setting="cure")
    lines = chain.to_csv().strip().split("\n")
    assert lines[0] == "beta,eta" and len(lines) == 1001
    assert [float(v) for v in lines[1].split(",")] == chain.draws[0].tolist()
    d = chain.to_dict()
    assert set(d["parameters"]) == {"beta", "eta"} and "draws" not in d
