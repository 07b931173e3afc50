import math

import numpy as np
import pytest

from conftest import simulate_censored
from discrete_bilal import distribution as db
from discrete_bilal import likelihood as lik
from discrete_bilal.competitors import FamilyName
from discrete_bilal.data import DataError, SurvivalDataset
from discrete_bilal.mle import fit_ml, information_criteria, moment_start, wald_ci


# reference fits --------------------------------------------------------------------------


def test_leukemia_complete(leukemia):
    fit = fit_ml("db", "complete", leukemia)
    assert fit.converged
    assert fit.theta == pytest.approx(0.09085, abs=5e-4)
    assert fit.std_errors[0] == pytest.approx(0.01431, rel=0.10)
    lo, hi = fit.ci[0]
    assert lo == pytest.approx(0.0628, abs=2e-3) and hi == pytest.approx(0.1189, abs=2e-3)
    # the same data in the censored setting gives the same fit
    fit2 = fit_ml("db", "censored", leukemia)
    assert fit2.theta == pytest.approx(fit.theta, rel=1e-10)


def test_pelvic_cure(pelvic):
    fit = fit_ml("db", "cure", pelvic)
    assert fit.converged and fit.param_names == ("beta", "eta")
    assert fit.theta == pytest.approx(0.02859, abs=5e-4)
    assert fit.eta == pytest.approx(0.57985, abs=5e-3)
    assert fit.std_errors == pytest.approx([0.01047, 0.13965], rel=0.10)
    (b_lo, b_hi), (e_lo, e_hi) = fit.ci
    assert (b_lo, b_hi) == pytest.approx((0.0081, 0.0491), abs=3e-3)
    assert (e_lo, e_hi) == pytest.approx((0.3061, 0.8536), abs=3e-3)


def test_scipy_oracle_agrees(leukemia, pelvic):
    # independent route: bounded scalar / Nelder-Mead maximisation of the raw likelihood
    from scipy import optimize

    r = optimize.minimize_scalar(lambda b: -lik.loglik_complete(b, leukemia), bounds=(1e-4, 2), method="bounded",
                                 options={"xatol": 1e-12})
    assert fit_ml("db", "complete", leukemia).theta == pytest.approx(r.x, rel=1e-6)
    r2 = optimize.minimize(lambda x: -lik.loglik_cure(x, pelvic) if 0 < x[0] and 0 <= x[1] < 1 else 1e10,
                           [0.05, 0.5], method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12})
    assert fit_ml("db", "cure", pelvic).estimates == pytest.approx(r2.x, rel=1e-5)


def test_fit_result_invariants(pelvic):
    fit = fit_ml("db", "cure", pelvic)
    cov = fit.covariance
    assert np.allclose(cov, cov.T)
    assert np.all(np.linalg.eigvalsh(cov) > 0)
    assert np.allclose(fit.std_errors, np.sqrt(np.diag(cov)))
    assert fit.score_norm < 1e-8 * (1 + abs(fit.loglik))
    assert fit.aic == pytest.approx(-2 * fit.loglik + 4)
    d = fit.to_dict()
    assert set(d["parameters"]) == {"beta", "eta"}


# helpers ----------------------------------------------------------------------------------


def test_wald_ci_examples():
    lo, hi = wald_ci(0.09085, 0.01431, 0.95)
    assert lo == pytest.approx(0.0628, abs=1e-4) and hi == pytest.approx(0.1189, abs=1e-4)
    assert wald_ci(0.3, 0.0, 0.9) == (0.3, 0.3)
    lo, hi = wald_ci(0.57985, 0.13965, 0.95, (0.0, 1.0))
    assert lo == pytest.approx(0.3061, abs=1e-4) and hi == pytest.approx(0.8536, abs=1e-4)
    assert wald_ci(0.01, 0.05)[0] == 0.0
    assert wald_ci(0.95, 0.2, 0.95, (0.0, 1.0))[1] == 1.0
    with pytest.raises(ValueError):
        wald_ci(0.1, 0.01, 1.0)


def test_information_criteria_examples():
    ic = information_criteria(-50.0, 1, 21)
    assert ic.aic == 102.0
    assert ic.bic == pytest.approx(100 + math.log(21), abs=1e-12)  # about 103.045
    assert ic.aicc == pytest.approx(102 + 4 / 19, abs=1e-12)
    assert information_criteria(-50.0, 0, 21).aic == 100.0
    assert information_criteria(-50.0, 2, 21).aic - ic.aic == 2.0
    small = information_criteria(-5.0, 2, 3)
    assert math.isnan(small.aicc) and not small.aicc_available


def test_moment_start_inverts_mean():
    for beta in (0.02, 0.3, 1.5):
        m = db.mean(beta)
        data = SurvivalDataset.complete(np.full(10, int(round(m))))
        b0 = moment_start(data)
        assert db.mean(b0) == pytest.approx(float(round(m)), rel=1e-8, abs=1e-8)


# robustness -------------------------------------------------------------------------------


@pytest.mark.parametrize("start", [0.001, 0.01, 0.3, 1.0, 5.0])
def test_start_robustness_leukemia(leukemia, start):
    ref = fit_ml("db", "complete", leukemia)
    fit = fit_ml("db", "complete", leukemia, start=[start])
    assert fit.converged
    assert fit.theta == pytest.approx(ref.theta, abs=1e-6)


@pytest.mark.parametrize("start", [(0.005, 0.05), (0.02, 0.3), (0.1, 0.6), (0.5, 0.9), (1.0, 0.2)])
def test_start_robustness_pelvic(pelvic, start):
    ref = fit_ml("db", "cure", pelvic)
    fit = fit_ml("db", "cure", pelvic, start=start)
    assert fit.converged
    assert fit.estimates == pytest.approx(ref.estimates, abs=1e-6)


@pytest.mark.parametrize("setting,name", [("complete", "leukemia"), ("cure", "pelvic")])
def test_idempotent(setting, name, leukemia, pelvic):
    data = leukemia if name == "leukemia" else pelvic
    fit = fit_ml("db", setting, data)
    again = fit_ml("db", setting, data, start=fit.estimates)
    assert np.all(np.abs(again.estimates - fit.estimates) < 1e-8)


def test_cure_on_complete_data_hits_boundary(leukemia):
    with pytest.warns(UserWarning):
        fit = fit_ml("db", "cure", leukemia)
    assert fit.converged and fit.eta == 0.0
    assert fit.theta == pytest.approx(fit_ml("db", "complete", leukemia).theta, rel=1e-8)


@pytest.mark.parametrize("family", [f.value for f in FamilyName])
def test_every_family_fits_leukemia(leukemia, family):
    fit = fit_ml(family, "censored", leukemia)
    assert fit.converged and np.isfinite(fit.aic)


def test_non_convergence_reported(pelvic):
    fit = fit_ml("burr_hatke", "cure", pelvic)
    assert not fit.converged and "boundary" in fit.message


def test_errors(leukemia, pelvic):
    all_censored = SurvivalDataset.from_records([(3, 0), (5, 0), (8, 0)])
    with pytest.raises(DataError):
        fit_ml("db", "censored", all_censored)
    with pytest.raises(DataError):
        fit_ml("db", "complete", pelvic)
    with pytest.raises(ValueError):
        fit_ml("db", "complete", leukemia, start=[-1.0])
    with pytest.raises(ValueError):
        fit_ml("db", "cure", pelvic, start=[0.1, 1.2])
    with pytest.raises(ValueError):
        fit_ml("db", "nope", leukemia)


# simulation studies -------------------------------------------------------------------------


def test_synthetic_large_sample():
    data = SurvivalDataset.complete(db.sample(0.2, np.random.default_rng(99), 10_000))
    fit = fit_ml("db", "complete", data)
    assert abs(fit.theta - 0.2) < 3 * fit.std_errors[0]


def _coverage(censor_frac, seed):
    rng = np.random.default_rng(seed)
    hits = 0
    for _ in range(200):
        data = simulate_censored(0.1, 200, rng, censor_frac=censor_frac)
        fit = fit_ml("db", "censored" if censor_frac else "complete", data)
        lo, hi = fit.ci[0]
        hits += lo <= 0.1 <= hi
    return hits / 200


def test_coverage_complete():
    assert 0.90 <= _coverage(0.0, 2024) <= 0.99


def test_coverage_censored():
    assert 0.90 <= _coverage(0.2, 2025) <= 0.99


def test_cure_recovery():
    rng = np.random.default_rng(4242)
    etas, betas = [], []
    for _ in range(100):
        data = simulate_censored(0.05, 500, rng, censor_frac=0.0, eta=0.4, admin=120)
        fit = fit_ml("db", "cure", data)
        assert fit.converged
        etas.append(fit.eta)
        betas.append(fit.theta)
    assert abs(np.mean(etas) - 0.4) < 0.05
    assert abs(np.mean(betas) - 0.05) < 0.005
