"""Fully expanded derivative expressions for the DB likelihoods.

These are the long-hand algebraic forms of the scores and second
derivatives, written term by term in ``exp(-beta)`` and ``exp(-beta * t)``.
They are an independent evaluation route: the library's estimators use
:mod:`discrete_bilal.likelihood`, and the test-suite compares both against
finite differences.

Several expansions, as commonly printed, do not equal the derivative of
the log-likelihood they belong to. They are kept verbatim so the
discrepancy stays visible, and :data:`KNOWN_MISMATCHES` describes each one.
Where the error could be pinned to a single factor or sign, passing
``corrected=True`` evaluates the repaired expression.
"""

from __future__ import annotations

import numpy as np

from discrete_bilal.data import SurvivalDataset

__all__ = [
    "KNOWN_MISMATCHES",
    "score_complete",
    "second_derivative_complete",
    "score_censored",
    "second_derivative_censored",
    "dbeta_cure",
    "deta_cure",
    "d2beta_cure",
    "d2eta_cure",
    "dbeta_deta_cure",
]


def _arrays(data: SurvivalDataset):
    return data.time.astype(np.float64), data.status.astype(np.float64)


def _g(b, t):
    e = np.exp
    return 2 * e(-b * t) * (e(-2 * b) + e(-b) + 1) - 3 * e(-b) - 3


def score_complete(beta: float, data: SurvivalDataset, corrected: bool = False) -> float:
    t, _ = _arrays(data)
    b, e, n = beta, np.exp, t.size
    shift = 1 if corrected else -1
    num = 2 * e(-b * (t + shift)) * (1 + 2 * e(-b)) + 2 * t * e(-b * t) * (e(-2 * b) + e(-b) + 1) - 3 * e(-b)
    return float(-2 * t.sum() - n * e(-b) / (e(-b) - 1) - np.sum(num / _g(b, t)))


def _a_term(b, t):
    e = np.exp
    return (
        -2 * e(-b * (t - 1)) * (3 - 2 * e(-b * t) + 6 * e(-2 * b) + 12 * e(-b))
        + 2 * t * e(-b * (t - 1)) * (3 + 9 * e(-b) - 6 * e(-2 * b) + 4 * e(-b * t))
        + 6 * t * e(-b * t) * (2 * e(-2 * b) - e(-2 * b) - e(-b) + t)
        + 3 * e(-b) * (2 * e(-b * t) - 2 * e(-2 * b) * e(-b * t) - 3)
        + 4 * e(-2 * b) * (6 * t - e(-b) + 6 * t * e(-b) + 4 * t * e(-2 * b) - 4)
        + 6 * t**2 * e(-b * (1 + t)) * (2 * e(-b) + e(-2 * b) + 2)
    )


def second_derivative_complete(beta: float, data: SurvivalDataset, corrected: bool = False) -> float:
    """With ``corrected=True`` the A-term is replaced by the (corrected) B-term,
    which is the same quantity for uncensored data."""
    t, _ = _arrays(data)
    b, e, n = beta, np.exp, t.size
    if corrected:
        return float(-n * e(-b) / (e(-b) - 1) ** 2 - np.sum(_b_term(b, t, True) / _g(b, t) ** 2))
    return float(-n * e(-b) / (e(-b) - 1) ** 2 + np.sum(_a_term(b, t) / _g(b, t) ** 2))


def score_censored(beta: float, data: SurvivalDataset, corrected: bool = False) -> float:
    t, d = _arrays(data)
    b, e = beta, np.exp
    num = 2 * e(-b * t) * (e(-b) + 2 * e(-2 * b) + t + t * e(-2 * b) + t * e(-b)) - 3 * e(-b)
    u = t + 1
    sign = -1 if corrected else 1
    return float(
        sign * 2 * np.sum(t * d)
        - e(-b) / (e(-b) - 1) * d.sum()
        - np.sum(d * num / _g(b, t))
        - 2 * np.sum((1 - d) * u * e(-b * u) / (2 * e(-b * u) - 3))
        - 2 * np.sum(u * (1 - d))
    )


def _b_term(b, t, corrected=False):
    e = np.exp
    stray = 1.0 if corrected else e(-b * t)
    return (
        6 * t**2 * e(-b * t) * (e(-3 * b) + 2 * e(-2 * b) + 2 * e(-b) * stray + 1)
        + 12 * t * e(-b * t) * e(-2 * b) * (e(-b) + 2)
        + 6 * e(-b * t) * e(-b) * (e(-2 * b) + 4 * e(-b) + 2)
        - 4 * e(-2 * b * t) * e(-b) * (e(-2 * b) + 4 * e(-b) + 1)
        - 9 * e(-b)
    )


def second_derivative_censored(beta: float, data: SurvivalDataset, corrected: bool = False) -> float:
    t, d = _arrays(data)
    b, e = beta, np.exp
    u = t + 1
    return float(
        -np.sum(d * e(-b) / (e(-b) - 1) ** 2)
        - np.sum(d * _b_term(b, t, corrected) / _g(b, t) ** 2)
        - 6 * np.sum((1 - d) * e(-b * u) * u**2 / (2 * e(-b * u) - 3) ** 2)
    )


def _cure_den(b, eta, u, corrected=False):
    # corrected: the mixture survival eta + (1 - eta) q^2 (3 - 2q)
    e = np.exp
    sign = -1 if corrected else 1
    return eta + (1 - eta) * e(-2 * b * u) * (3 + sign * 2 * np.sqrt(e(-2 * b * u)))


def dbeta_cure(beta: float, eta: float, data: SurvivalDataset, corrected: bool = False) -> float:
    t, d = _arrays(data)
    b, e = beta, np.exp
    u = t + 1
    num = 2 * e(-b * t) * (t + e(-b) * (2 * e(-b) + t * e(-b) + t + 1)) - 3 * e(-b)
    return float(
        -2 * np.sum(d * t)
        - np.sum(d * e(-b) / (e(-b) - 1))
        - np.sum(d * num / _g(b, t))
        + (-1 if corrected else 1)
        * 6
        * (eta - 1)
        * np.sum((1 - d) * u * e(-2 * b * u) * (e(-b * u) - 1) / _cure_den(b, eta, u, corrected))
    )


def deta_cure(beta: float, eta: float, data: SurvivalDataset, corrected: bool = False) -> float:
    t, d = _arrays(data)
    b, e = beta, np.exp
    u = t + 1
    num = (2 * e(-b * u) + 1) * (e(-b * u) - 1) ** 2
    return float(-d.sum() / (1 - eta) + np.sum((1 - d) * num / _cure_den(b, eta, u, corrected)))


def d2beta_cure(beta: float, eta: float, data: SurvivalDataset) -> float:
    t, d = _arrays(data)
    b, e = beta, np.exp
    u = t + 1
    c = eta * (2 - 3 * e(-b * u)) + 5 * (eta - 1) * e(-3 * b * u)
    dd = (
        eta**2
        + 6 * eta * (1 - eta) * e(-2 * b * u)
        + 4 * eta * e(-3 * b * u)
        + 9 * (1 - 2 * eta) * e(-4 * b * u)
        + 4 * (1 - eta) ** 2 * e(-6 * b * u)
        + 12 * (1 - 2 * eta) * e(-4 * b * u) * e(-b * u)
        + 9 * eta**2 * e(-4 * b * u)
        - 4 * eta**2 * e(-3 * b * u)
        + 12 * eta**2 * e(-5 * b * u)
    )
    return float(
        -np.sum(d * e(-b) / (e(-b) - 1) ** 2)
        + 6 * (eta - 1) * np.sum((1 - d) * u**2 * e(-2 * b * u) * c / dd)
    )


def _f_den(b, eta, u, corrected=False):
    # corrected: the square of the mixture survival
    e = np.exp
    sign = -1 if corrected else 1
    return (
        eta**2
        + 2 * eta * (1 - eta) * (3 * e(-2 * b * u) + sign * 2 * e(-3 * b * u))
        + (1 - eta) ** 2 * (9 * e(-4 * b * u) + sign * 12 * e(-5 * b * u) + 4 * e(-6 * b * u))
    )


def d2eta_cure(beta: float, eta: float, data: SurvivalDataset, corrected: bool = False) -> float:
    t, d = _arrays(data)
    b, e = beta, np.exp
    u = t + 1
    if corrected:
        num = (2 * e(-b * u) + 1) * (e(-b * u) - 1) ** 2 * (3 * e(-2 * b * u) - 2 * e(-3 * b * u) - 1)
        return float(-d.sum() / (eta - 1) ** 2 + np.sum((1 - d) * num / _f_den(b, eta, u, True)))
    ee = (
        eta**2
        + 6 * eta * (1 - eta) * e(-2 * b * u)
        + 4 * eta * (1 - eta**2) * e(-3 * b * u)
        + (1 - eta) ** 2 * (9 * e(-4 * b * u) + 12 * e(-5 * b * u) + 4 * e(-6 * b * u))
    )
    num = (2 * e(-b * u) + 1) * (e(-b * u) - 1) ** 2 * (3 * e(-2 * b * u) + 2 * e(-3 * b * u) - 1)
    return float(d.sum() / (eta - 1) ** 2 + np.sum((1 - d) * num / ee))


def dbeta_deta_cure(beta: float, eta: float, data: SurvivalDataset, corrected: bool = False) -> float:
    t, d = _arrays(data)
    b, e = beta, np.exp
    u = t + 1
    sign = -1 if corrected else 1
    return float(sign * 6 * np.sum((1 - d) * u * e(-2 * b * u) * (e(-b * u) - 1) / _f_den(b, eta, u, corrected)))


KNOWN_MISMATCHES: dict[str, str] = {
    "score_complete": "exp(-beta (t - 1)) in the numerator should be exp(-beta (t + 1)); fixed by corrected=True",
    "second_derivative_complete": "A-term does not reproduce g''g - g'^2; corrected=True uses the fixed B-term",
    "score_censored": "sign of 2 sum(t d) must be negative; fixed by corrected=True",
    "second_derivative_censored": "B-term factor 2 exp(-beta) exp(-beta t) should be 2 exp(-beta); fixed by corrected=True",
    "dbeta_cure": "denominator uses 3 + 2q instead of 3 - 2q and the censored term has the wrong sign; fixed by corrected=True",
    "deta_cure": "denominator uses 3 + 2q instead of 3 - 2q; fixed by corrected=True",
    "d2beta_cure": "omits the event-term second derivative and C/D do not match; no correction identified",
    "d2eta_cure": "wrong sign on the event term and E is not the squared mixture survival; fixed by corrected=True",
    "dbeta_deta_cure": "wrong overall sign and F is not the squared mixture survival; fixed by corrected=True",
}
