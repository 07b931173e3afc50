"""The discrete Bilal (DB) lifetime distribution.

DB(beta) is the distribution of ``T = floor(X)`` where ``X`` follows the
continuous Bilal law with survival ``S_X(x) = exp(-2*beta*x) * (3 - 2*exp(-beta*x))``.
With ``p = exp(-beta)`` the probability mass function is

.. math::

    f(t) = 2(p^3 - 1) p^{3t} - 3(p^2 - 1) p^{2t}, \\qquad t = 0, 1, 2, \\ldots

and the survival function is ``S(t) = P(T > t) = (3 - 2 p^{t+1}) p^{2(t+1)}``.

Every function accepts scalar or array ``t`` and broadcasts. Powers of ``p`` are
always evaluated as ``exp(-beta * k)``; values that underflow come back as
exactly 0 (pmf, survival) or 1 (cdf). Use :func:`logpmf` and :func:`logsf`
when the result feeds a log-likelihood.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DbParam",
    "pmf",
    "logpmf",
    "pmf_power_form",
    "cdf",
    "survival",
    "logsf",
    "hazard",
    "mean",
    "variance",
    "sample",
]


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not math.isfinite(beta) or beta <= 0.0:
        raise ValueError(f"beta must be finite and > 0, got {beta!r}")
    return beta


def _as_time(t, lowest: int = 0) -> np.ndarray:
    arr = np.asarray(t)
    if arr.dtype.kind == "f":
        if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
            raise ValueError("time values must be integers")
    elif arr.dtype.kind not in "iu":
        raise TypeError(f"time values must be integers, got dtype {arr.dtype}")
    if np.any(arr < lowest):
        raise ValueError(f"time values must be >= {lowest}")
    return arr.astype(np.float64)


def _unwrap(result: np.ndarray):
    return result.item() if result.ndim == 0 else result


@dataclass(frozen=True)
class DbParam:
    """The single DB parameter ``beta > 0``; ``p = exp(-beta)``."""

    beta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "beta", _check_beta(self.beta))

    @classmethod
    def from_p(cls, p: float) -> "DbParam":
        if not 0.0 < p < 1.0:
            raise ValueError(f"p must lie in (0, 1), got {p!r}")
        return cls(-math.log(p))

    @property
    def p(self) -> float:
        return math.exp(-self.beta)

    def pmf(self, t):
        return pmf(self.beta, t)

    def cdf(self, t):
        return cdf(self.beta, t)

    def survival(self, t):
        return survival(self.beta, t)

    def hazard(self, t):
        return hazard(self.beta, t)

    def mean(self) -> float:
        return mean(self.beta)

    def variance(self) -> float:
        return variance(self.beta)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return sample(self.beta, rng, n)


def _bracket(beta: float, t: np.ndarray) -> np.ndarray:
    # 3(1+p) - 2 p^t (1+p+p^2), rewritten as a sum of non-negative terms so
    # small beta does not cancel.
    p = math.exp(-beta)
    one_minus_p = -math.expm1(-beta)
    return one_minus_p * (1.0 + 2.0 * p) + 2.0 * (1.0 + p + p * p) * (-np.expm1(-beta * t))


def logpmf(beta: float, t):
    """Log of the probability mass at ``t >= 0``."""
    beta = _check_beta(beta)
    tt = _as_time(t)
    out = -2.0 * beta * tt + math.log(-math.expm1(-beta)) + np.log(_bracket(beta, tt))
    return _unwrap(out)


def pmf(beta: float, t):
    """Probability mass ``P(T = t)`` for ``t >= 0``.

    Evaluated through the factored form
    ``p^{2t} (1 - p) [3(1 + p) - 2 p^t (p^2 + p + 1)]``.

    Examples
    --------
    >>> round(pmf(math.log(2.0), 0), 12)
    0.5
    """
    return _unwrap(np.exp(np.asarray(logpmf(beta, t))))


def pmf_power_form(beta: float, t):
    """The pmf written directly as ``2(p^3-1)p^{3t} - 3(p^2-1)p^{2t}``.

    Kept as an independent evaluation path for cross-checking :func:`pmf`.
    """
    beta = _check_beta(beta)
    tt = _as_time(t)
    p2 = math.exp(-2.0 * beta)
    p3 = math.exp(-3.0 * beta)
    out = 2.0 * (p3 - 1.0) * np.exp(-3.0 * beta * tt) - 3.0 * (p2 - 1.0) * np.exp(-2.0 * beta * tt)
    return _unwrap(out)


def logsf(beta: float, t):
    """Log survival ``log P(T > t)`` for ``t >= -1``."""
    beta = _check_beta(beta)
    u = _as_time(t, lowest=-1) + 1.0
    return _unwrap(-2.0 * beta * u + np.log(3.0 - 2.0 * np.exp(-beta * u)))


def survival(beta: float, t):
    """Survival ``S(t) = P(T > t)``; defined for ``t >= -1`` with ``S(-1) = 1``."""
    beta = _check_beta(beta)
    u = _as_time(t, lowest=-1) + 1.0
    q = np.exp(-beta * u)
    return _unwrap(q * q * (3.0 - 2.0 * q))


def cdf(beta: float, t):
    """Distribution function ``F(t) = P(T <= t)``; ``F(-1) = 0``.

    Computed as ``1 - S(t)`` except in the left tail, where the
    complementary form would lose relative precision.
    """
    beta = _check_beta(beta)
    u = _as_time(t, lowest=-1) + 1.0
    # 1 - 3q^2 + 2q^3 = (1 - q)^2 (1 + 2q), with 1 - q = -expm1(-beta*u)
    one_minus_q = -np.expm1(-beta * u)
    q = 1.0 - one_minus_q
    return _unwrap(one_minus_q * one_minus_q * (1.0 + 2.0 * q))


def hazard(beta: float, t):
    """Discrete hazard ``h(t) = f(t) / S(t - 1)`` for ``t >= 0``.

    The common ``p^{2t}`` factor is cancelled analytically, so the result
    never underflows: ``h(t) = (1 - p) B(t) / (3 - 2 p^t)`` with ``B`` the
    bracket of the factored pmf. ``h`` increases towards ``L = 1 - p^2``;
    once past ``L / 2`` it is evaluated as ``L - D(t)`` with the decreasing
    gap ``D(t) = 2 (1 - p) p^(t+2) / (3 - 2 p^t)``, which keeps the computed
    values non-decreasing up to the limit.
    """
    beta = _check_beta(beta)
    tt = _as_time(t)
    one_minus_p = -math.expm1(-beta)
    limit = -math.expm1(-2.0 * beta)
    denom = 3.0 - 2.0 * np.exp(-beta * tt)
    gap = 2.0 * one_minus_p * np.exp(-beta * (tt + 2.0)) / denom
    direct = one_minus_p * _bracket(beta, tt) / denom
    out = np.where(gap <= 0.5 * limit, limit - gap, direct)
    return _unwrap(out)


def mean(beta: float) -> float:
    """Closed-form ``E(T)``."""
    beta = _check_beta(beta)
    p = math.exp(-beta)
    p2 = p * p
    return p2 * (p2 + p + 3.0) / ((p2 + p + 1.0) * (-math.expm1(-2.0 * beta)))


def variance(beta: float) -> float:
    """Closed-form ``Var(T)``."""
    beta = _check_beta(beta)
    p = math.exp(-beta)
    p2 = p * p
    num = p2 * (3.0 * p2 * p2 + 4.0 * p2 * p - p2 + 4.0 * p + 3.0)
    den = (p2 + p + 1.0) ** 2 * math.expm1(-2.0 * beta) ** 2
    return num / den


def _invert(beta: float, u) -> np.ndarray:
    """Smallest integer ``t`` with ``F(t) >= u``, vectorised over ``u``."""
    u = np.asarray(u, dtype=np.float64)
    v = 1.0 - u
    # S(t) = 3y^2 - 2y^3 with y = exp(-beta (t + 1)); the root in [0, 1] of
    # 2y^3 - 3y^2 + v = 0 has a trigonometric closed form.
    y = 0.5 + np.cos((np.arccos(np.clip(1.0 - 2.0 * v, -1.0, 1.0)) - 2.0 * np.pi) / 3.0)
    with np.errstate(divide="ignore"):
        x = -np.log(np.clip(y, 0.0, 1.0)) / beta
    t = np.maximum(np.ceil(x) - 1.0, 0.0)
    t = np.where(np.isfinite(t), t, np.iinfo(np.int64).max // 2)
    # the closed-form root is only approximate near the ends; step to the exact answer
    for _ in range(64):
        too_high = (t > 0) & (cdf(beta, t - 1) >= u)
        too_low = cdf(beta, t) < u
        if not (too_high.any() or too_low.any()):
            break
        t = t - too_high + too_low
    return t.astype(np.int64)


def sample(beta: float, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` i.i.d. DB(beta) variates by inversion of the cdf."""
    beta = _check_beta(beta)
    if n < 1:
        raise ValueError("n must be >= 1")
    return _invert(beta, rng.random(n))
