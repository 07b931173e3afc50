"""Log-likelihoods and their analytic derivatives for DB lifetime models.

Three settings are covered:

* complete data, every observation an event: ``sum log f(t_i)``;
* right-censored data: ``sum d_i log f(t_i) + (1 - d_i) log S(t_i)``;
* cure mixture: survival ``eta + (1 - eta) S(t)`` and mass ``(1 - eta) f(t)``.

Derivatives are obtained by differentiating the per-observation log terms
directly (see :func:`_event_terms` and :func:`_censored_terms`), which keeps
each expression short enough to check against finite differences. The
long expanded forms live in :mod:`discrete_bilal.closed_forms`.

A generic censored/cure log-likelihood for any :class:`~discrete_bilal.competitors.Family`
is provided by :func:`loglik_family`.
"""

from __future__ import annotations

import math

import numpy as np

from discrete_bilal import distribution as db
from discrete_bilal.competitors import Family
from discrete_bilal.data import CureParams, DataError, SurvivalDataset

__all__ = [
    "LOG_FLOOR",
    "loglik_complete",
    "score_complete",
    "obs_info_complete",
    "loglik_censored",
    "score_censored",
    "obs_info_censored",
    "loglik_cure",
    "grad_cure",
    "hessian_cure",
    "loglik_family",
]

# stands in for log(0) so optimisers see a finite, very poor value
LOG_FLOOR = -1e10


def _guard(x):
    return np.maximum(np.nan_to_num(x, nan=LOG_FLOOR, neginf=LOG_FLOOR), LOG_FLOOR)


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not math.isfinite(beta) or beta <= 0.0:
        raise ValueError(f"beta must be finite and > 0, got {beta!r}")
    return beta


def _cure_params(params) -> tuple[float, float]:
    if not isinstance(params, CureParams):
        params = CureParams(*map(float, params))
    return params.beta, params.eta


def _split(data: SurvivalDataset) -> tuple[np.ndarray, np.ndarray]:
    t = data.time.astype(np.float64)
    events = data.status == 1
    return t[events], t[~events]


def _require_complete(data: SurvivalDataset) -> None:
    if not data.is_complete:
        raise DataError("complete-data likelihood needs every status == 1; use the censored form")


def _event_terms(beta: float, t: np.ndarray):
    """``log f(t)`` and its first two beta-derivatives, per observation."""
    p = math.exp(-beta)
    pt = np.exp(-beta * t)
    pt1, pt2 = pt * p, pt * p * p
    g = db._bracket(beta, t)
    dg = -3.0 * p + 2.0 * (t * pt + (t + 1.0) * pt1 + (t + 2.0) * pt2)
    d2g = 3.0 * p - 2.0 * (t * t * pt + (t + 1.0) ** 2 * pt1 + (t + 2.0) ** 2 * pt2)
    em1 = math.expm1(beta)
    logf = -2.0 * beta * t + math.log(-math.expm1(-beta)) + np.log(g)
    d1 = -2.0 * t + 1.0 / em1 + dg / g
    d2 = -(em1 + 1.0) / (em1 * em1) + d2g / g - (dg / g) ** 2
    return logf, d1, d2


def _censored_terms(beta: float, t: np.ndarray):
    """``log S(t)`` and its first two beta-derivatives, per observation."""
    u = t + 1.0
    q = np.exp(-beta * u)
    h = 3.0 - 2.0 * q
    logs = -2.0 * beta * u + np.log(h)
    d1 = -2.0 * u + 2.0 * u * q / h
    d2 = -6.0 * u * u * q / (h * h)
    return logs, d1, d2


# complete data ----------------------------------------------------------------


def loglik_complete(beta: float, data: SurvivalDataset) -> float:
    """Log-likelihood for uncensored data."""
    beta = _check_beta(beta)
    _require_complete(data)
    logf, _, _ = _event_terms(beta, data.time.astype(np.float64))
    return float(np.sum(_guard(logf)))


def score_complete(beta: float, data: SurvivalDataset) -> float:
    beta = _check_beta(beta)
    _require_complete(data)
    _, d1, _ = _event_terms(beta, data.time.astype(np.float64))
    return float(np.sum(d1))


def obs_info_complete(beta: float, data: SurvivalDataset) -> float:
    """Observed information ``-d^2 l / d beta^2``."""
    beta = _check_beta(beta)
    _require_complete(data)
    _, _, d2 = _event_terms(beta, data.time.astype(np.float64))
    return float(-np.sum(d2))


# right-censored data ------------------------------------------------------------


def loglik_censored(beta: float, data: SurvivalDataset) -> float:
    beta = _check_beta(beta)
    te, tc = _split(data)
    logf, _, _ = _event_terms(beta, te)
    logs, _, _ = _censored_terms(beta, tc)
    return float(np.sum(_guard(logf)) + np.sum(_guard(logs)))


def score_censored(beta: float, data: SurvivalDataset) -> float:
    beta = _check_beta(beta)
    te, tc = _split(data)
    return float(np.sum(_event_terms(beta, te)[1]) + np.sum(_censored_terms(beta, tc)[1]))


def obs_info_censored(beta: float, data: SurvivalDataset) -> float:
    beta = _check_beta(beta)
    te, tc = _split(data)
    return float(-np.sum(_event_terms(beta, te)[2]) - np.sum(_censored_terms(beta, tc)[2]))


# cure mixture ----------------------------------------------------------------------


def _log_mixture(eta: float, logs: np.ndarray) -> np.ndarray:
    log_eta = math.log(eta) if eta > 0.0 else -np.inf
    return np.logaddexp(log_eta, math.log1p(-eta) + logs)


def loglik_cure(params, data: SurvivalDataset) -> float:
    """Log-likelihood of the cure mixture; ``params`` is CureParams or ``(beta, eta)``.

    At ``eta = 0`` this is identical to :func:`loglik_censored`.
    """
    beta, eta = _cure_params(params)
    te, tc = _split(data)
    logf, _, _ = _event_terms(beta, te)
    logs, _, _ = _censored_terms(beta, tc)
    event_part = np.sum(_guard(logf)) + te.size * math.log1p(-eta)
    return float(event_part + np.sum(_guard(_log_mixture(eta, logs))))


def _cure_pieces(beta: float, eta: float, tc: np.ndarray):
    logs, dl1, dl2 = _censored_terms(beta, tc)
    logm = _log_mixture(eta, logs)
    inv_m = np.exp(-logm)
    s_over_m = np.exp(logs - logm)
    # S'/M and S''/M from the log-survival derivatives
    ds_m = s_over_m * dl1
    d2s_m = s_over_m * (dl2 + dl1 * dl1)
    return ds_m, d2s_m, -np.expm1(logs) * inv_m, inv_m


def grad_cure(params, data: SurvivalDataset) -> np.ndarray:
    """Gradient ``(dl/dbeta, dl/deta)`` of :func:`loglik_cure`."""
    beta, eta = _cure_params(params)
    te, tc = _split(data)
    _, de1, _ = _event_terms(beta, te)
    ds_m, _, r, _ = _cure_pieces(beta, eta, tc)
    g_beta = np.sum(de1) + (1.0 - eta) * np.sum(ds_m)
    g_eta = -te.size / (1.0 - eta) + np.sum(r)
    return np.array([g_beta, g_eta])


def hessian_cure(params, data: SurvivalDataset) -> np.ndarray:
    """Symmetric 2x2 Hessian of :func:`loglik_cure` in ``(beta, eta)``."""
    beta, eta = _cure_params(params)
    te, tc = _split(data)
    _, _, de2 = _event_terms(beta, te)
    ds_m, d2s_m, r, inv_m = _cure_pieces(beta, eta, tc)
    a = 1.0 - eta
    h_bb = np.sum(de2) + np.sum(a * d2s_m - (a * ds_m) ** 2)
    h_ee = -te.size / (a * a) - np.sum(r * r)
    # d/deta [(1-eta) S'/M] simplifies to -S'/M^2
    h_be = -np.sum(ds_m * inv_m)
    return np.array([[h_bb, h_be], [h_be, h_ee]])


# any family --------------------------------------------------------------------------


def loglik_family(family: Family, theta: float, data: SurvivalDataset, eta: float | None = None) -> float:
    """Censored log-likelihood of ``data`` under a one-parameter family.

    With ``eta`` given the cure mixture is used instead. For complete data
    this is the plain sum of log masses.
    """
    theta = family.check(theta)
    te, tc = _split(data)
    logf = np.asarray(family.logpmf(theta, te), dtype=float)
    logs = np.asarray(family.logsf(theta, tc), dtype=float)
    if eta is None:
        return float(np.sum(_guard(logf)) + np.sum(_guard(logs)))
    if not 0.0 <= eta < 1.0:
        raise ValueError(f"eta must lie in [0, 1), got {eta!r}")
    return float(
        np.sum(_guard(logf)) + te.size * math.log1p(-eta) + np.sum(_guard(_log_mixture(eta, logs)))
    )
