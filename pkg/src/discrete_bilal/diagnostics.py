"""Goodness-of-fit diagnostics for fitted discrete lifetime models."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from discrete_bilal.data import SurvivalDataset

__all__ = [
    "KmCurve",
    "ResidualSet",
    "kaplan_meier",
    "quantile_residuals",
    "ks_normal_test",
    "kolmogorov_sf",
    "fitted_survival_table",
    "table_to_csv",
]


@dataclass(frozen=True)
class KmCurve:
    """Product-limit estimate; ``survival[i]`` holds just after ``times[i]``."""

    times: np.ndarray
    survival: np.ndarray
    at_risk: np.ndarray
    events: np.ndarray

    def at(self, t):
        """Step-function value ``S(t)`` (right-continuous, 1 before the first event)."""
        idx = np.searchsorted(self.times, np.asarray(t), side="right")
        s = np.concatenate([[1.0], self.survival])
        return s[idx]

    def to_csv(self) -> str:
        return table_to_csv(list(zip(self.times.tolist(), self.survival.tolist())))


def kaplan_meier(data: SurvivalDataset) -> KmCurve:
    """Kaplan-Meier estimate of ``P(T > t)``.

    Events at a shared time are pooled; subjects censored at an event time
    count as at risk there (censoring is taken to happen just after).
    """
    t = data.time
    d = data.status
    times = np.unique(t[d == 1])
    at_risk = np.array([(t >= s).sum() for s in times], dtype=np.int64)
    events = np.array([((t == s) & (d == 1)).sum() for s in times], dtype=np.int64)
    survival = np.cumprod(1.0 - events / at_risk) if times.size else np.array([], dtype=float)
    return KmCurve(times, survival, at_risk, events)


# residuals -----------------------------------------------------------------------------


def kolmogorov_sf(x):
    """Survival function of the limiting Kolmogorov distribution.

    Uses ``2 sum (-1)^{k-1} exp(-2 k^2 x^2)`` for ``x >= 1`` and the
    theta-function form for small ``x``; each truncated at 100 terms.
    """
    x = np.asarray(x, dtype=float)
    k = np.arange(1, 101)[:, None]
    xs = np.maximum(x.ravel()[None, :], 1e-12)
    upper = 2.0 * np.sum((-1.0) ** (k - 1) * np.exp(-2.0 * k**2 * xs**2), axis=0)
    lower_cdf = math.sqrt(2.0 * math.pi) / xs * np.sum(np.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8.0 * xs**2)), axis=0)
    out = np.where(xs >= 1.0, upper, 1.0 - lower_cdf).reshape(x.shape)
    out = np.clip(out, 0.0, 1.0)
    return out.item() if out.ndim == 0 else out


def ks_normal_test(residuals) -> tuple[float, float]:
    """One-sample Kolmogorov-Smirnov test against N(0, 1).

    The p-value is asymptotic (``sqrt(n) * D`` referred to the Kolmogorov
    law); for ``n`` below about 35 it is only approximate.
    """
    x = np.sort(np.asarray(residuals, dtype=float))
    n = x.size
    if n < 5:
        raise ValueError("the K-S test needs at least 5 residuals")
    if not np.all(np.isfinite(x)):
        raise ValueError("residuals must be finite")
    cdf = norm.cdf(x)
    i = np.arange(1, n + 1)
    stat = float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))
    return stat, float(kolmogorov_sf(math.sqrt(n) * stat))


@dataclass(frozen=True)
class ResidualSet:
    residuals: np.ndarray
    uniforms: np.ndarray
    seed: int
    ks_statistic: float
    ks_p_value: float

    def qq_pairs(self) -> list[tuple[float, float]]:
        """(theoretical normal quantile, sorted residual) pairs for a Q-Q plot."""
        r = np.sort(self.residuals)
        n = r.size
        q = norm.ppf((np.arange(1, n + 1) - 0.5) / n)
        return list(zip(q.tolist(), r.tolist()))

    def to_csv(self) -> str:
        n = self.residuals.size
        ranks = np.empty(n, dtype=np.int64)
        ranks[np.argsort(self.residuals, kind="stable")] = np.arange(1, n + 1)
        q = norm.ppf((ranks - 0.5) / n)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "residual", "theoretical_quantile"])
        for i in range(n):
            w.writerow([i, repr(float(self.residuals[i])), repr(float(q[i]))])
        return buf.getvalue()


def quantile_residuals(fit, data: SurvivalDataset, seed: int) -> ResidualSet:
    """Randomised quantile residuals of a fitted model.

    For an event at ``t`` a uniform is drawn on ``[F(t - 1), F(t)]``; for a
    censored time on ``[F(t), 1]``. The residual is its standard-normal
    quantile. ``fit`` is anything with a ``cdf(t)`` method accepting
    ``t >= -1``, e.g. a :class:`~discrete_bilal.mle.FitResult` (cure fits use
    the mixture distribution function). ``seed`` fixes the randomisation.
    """
    rng = np.random.default_rng(seed)
    t = data.time
    events = data.status == 1
    f_t = np.asarray(fit.cdf(t), dtype=float)
    f_prev = np.asarray(fit.cdf(t - 1), dtype=float)
    lo = np.where(events, f_prev, f_t)
    hi = np.where(events, f_t, 1.0)
    u = lo + (hi - lo) * rng.random(t.size)
    u = np.clip(u, np.finfo(float).tiny, 1.0 - np.finfo(float).epsneg)
    r = norm.ppf(u)
    if not np.all(np.isfinite(r)):
        raise FloatingPointError("non-finite residual; check the fitted distribution function")
    stat, p = ks_normal_test(r) if r.size >= 5 else (math.nan, math.nan)
    return ResidualSet(r, u, int(seed), stat, p)


# fitted curves -------------------------------------------------------------------------


def fitted_survival_table(fit, t_max: int) -> list[tuple[int, float]]:
    """Model survival ``P(T > t)`` for ``t = 0..t_max``."""
    if t_max < 0:
        raise ValueError("t_max must be >= 0")
    t = np.arange(t_max + 1)
    s = np.asarray(fit.survival(t), dtype=float)
    return list(zip(t.tolist(), s.tolist()))


def table_to_csv(rows, header=("t", "survival")) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([row[0], *(repr(float(v)) for v in row[1:])])
    return buf.getvalue()
