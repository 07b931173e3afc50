"""One-parameter discrete lifetime families used as comparators for DB.

Every family is described by its log survival ``log P(T > t)`` on
``t >= -1``; the mass function follows from ``f(t) = S(t - 1) - S(t)``,
evaluated in log space. The forms used:

======================  ==========  ==================================================
family                  parameter   survival ``P(T > t)``, ``u = t + 1``
======================  ==========  ==================================================
discrete Lindley        theta > 0   ``(1 + theta + theta*u) / (1 + theta) * exp(-theta*u)``
discrete Rayleigh       0 < q < 1   ``q ** (u**2)``
discrete Burr-Hatke     0 < p < 1   ``p ** u / (u + 1)``
DsFx-I                  0 < a < 1   ``a ** u * (1 + u * (1 - a))``
======================  ==========  ==================================================

Lindley follows Gomez-Deniz & Calderin-Ojeda (2011), obtained by
discretising the continuous Lindley survival on unit intervals. Rayleigh is
Roy (2004). Burr-Hatke is El-Morshedy, Eliwa & Altun (2020). For DsFx-I the
original parameterisation could not be checked against its source; the
two-stage geometric form above is a one-parameter over-dispersed stand-in
with the same support and parameter range.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from discrete_bilal import distribution as db
from discrete_bilal.distribution import _as_time, _unwrap

__all__ = [
    "Family",
    "FamilyName",
    "CompetitorParam",
    "FAMILIES",
    "get_family",
    "competitor_pmf",
    "competitor_survival",
    "competitor_cdf",
]


class FamilyName(str, enum.Enum):
    DB = "db"
    DSFX_I = "dsfx1"
    DISCRETE_LINDLEY = "lindley"
    DISCRETE_RAYLEIGH = "rayleigh"
    DISCRETE_BURR_HATKE = "burr_hatke"


def _log_diff_exp(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """log(exp(a) - exp(b)) for a >= b."""
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a + np.log(-np.expm1(b - a))
    return np.where(np.isneginf(a), -np.inf, out)


@dataclass(frozen=True)
class Family:
    """A one-parameter discrete lifetime family.

    ``domain`` is ``"positive"`` for ``(0, inf)`` or ``"unit"`` for ``(0, 1)``.
    """

    name: FamilyName
    label: str
    param_name: str
    domain: str
    _logsf: Callable[[float, np.ndarray], np.ndarray]
    _logpmf: Callable[[float, np.ndarray], np.ndarray] | None = None

    def check(self, theta: float) -> float:
        theta = float(theta)
        ok = math.isfinite(theta) and theta > 0.0
        if self.domain == "unit":
            ok = ok and theta < 1.0
        if not ok:
            rng = "(0, 1)" if self.domain == "unit" else "(0, inf)"
            raise ValueError(f"{self.label}: {self.param_name} must lie in {rng}, got {theta!r}")
        return theta

    def logsf(self, theta: float, t):
        theta = self.check(theta)
        return _unwrap(np.asarray(self._logsf(theta, _as_time(t, lowest=-1)), dtype=float))

    def logpmf(self, theta: float, t):
        theta = self.check(theta)
        tt = _as_time(t)
        if self._logpmf is not None:
            return _unwrap(np.asarray(self._logpmf(theta, tt), dtype=float))
        return _unwrap(_log_diff_exp(self._logsf(theta, tt - 1.0), self._logsf(theta, tt)))

    def survival(self, theta: float, t):
        return _unwrap(np.exp(np.asarray(self.logsf(theta, t))))

    def cdf(self, theta: float, t):
        return _unwrap(-np.expm1(np.asarray(self.logsf(theta, t))))

    def pmf(self, theta: float, t):
        return _unwrap(np.exp(np.asarray(self.logpmf(theta, t))))

    def to_unconstrained(self, theta: float) -> float:
        if self.domain == "unit":
            return math.log(theta) - math.log1p(-theta)
        return math.log(theta)

    def from_unconstrained(self, z: float) -> float:
        if self.domain == "unit":
            return 1.0 / (1.0 + math.exp(-z)) if z >= 0 else math.exp(z) / (1.0 + math.exp(z))
        return math.exp(z)


def _lindley_logsf(theta, t):
    u = t + 1.0
    return np.log1p(theta * u / (1.0 + theta)) - theta * u


def _rayleigh_logsf(q, t):
    u = t + 1.0
    return u * u * math.log(q)


def _burr_hatke_logsf(p, t):
    u = t + 1.0
    return u * math.log(p) - np.log1p(u)


def _dsfx1_logsf(a, t):
    u = t + 1.0
    return u * math.log(a) + np.log1p(u * (1.0 - a))


FAMILIES: dict[FamilyName, Family] = {
    FamilyName.DB: Family(
        FamilyName.DB, "discrete Bilal", "beta", "positive",
        lambda b, t: np.asarray(db.logsf(b, t)), lambda b, t: np.asarray(db.logpmf(b, t)),
    ),
    FamilyName.DSFX_I: Family(FamilyName.DSFX_I, "DsFx-I", "a", "unit", _dsfx1_logsf),
    FamilyName.DISCRETE_LINDLEY: Family(
        FamilyName.DISCRETE_LINDLEY, "discrete Lindley", "theta", "positive", _lindley_logsf
    ),
    FamilyName.DISCRETE_RAYLEIGH: Family(
        FamilyName.DISCRETE_RAYLEIGH, "discrete Rayleigh", "q", "unit", _rayleigh_logsf
    ),
    FamilyName.DISCRETE_BURR_HATKE: Family(
        FamilyName.DISCRETE_BURR_HATKE, "discrete Burr-Hatke", "p", "unit", _burr_hatke_logsf
    ),
}


def get_family(name) -> Family:
    """Look up a family by :class:`FamilyName` or its string value."""
    try:
        return FAMILIES[FamilyName(name)]
    except ValueError:
        known = ", ".join(f.value for f in FamilyName)
        raise ValueError(f"unsupported family {name!r}; expected one of: {known}") from None


@dataclass(frozen=True)
class CompetitorParam:
    family: FamilyName
    theta: float

    def __post_init__(self) -> None:
        fam = get_family(self.family)
        object.__setattr__(self, "family", fam.name)
        object.__setattr__(self, "theta", fam.check(self.theta))


def competitor_pmf(param: CompetitorParam, t):
    return get_family(param.family).pmf(param.theta, t)


def competitor_survival(param: CompetitorParam, t):
    return get_family(param.family).survival(param.theta, t)


def competitor_cdf(param: CompetitorParam, t):
    return get_family(param.family).cdf(param.theta, t)
