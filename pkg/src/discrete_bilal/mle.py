"""Maximum-likelihood fitting with Wald intervals and information criteria.

The optimiser is Newton-Raphson on an unconstrained scale (``log`` for
positive parameters, ``logit`` for ones in ``(0, 1)``) with step halving.
When the Hessian there is not negative definite the iteration hands over
to golden-section search (one parameter) or Nelder-Mead (two) and then
resumes Newton from wherever that lands.

Standard errors and intervals are always reported on the natural scale,
from the inverse observed information of the untransformed log-likelihood.
"""

from __future__ import annotations

import enum
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import optimize
from scipy.stats import norm

from discrete_bilal import distribution as db
from discrete_bilal import likelihood as lik
from discrete_bilal.competitors import Family, FamilyName, get_family
from discrete_bilal.data import DataError, SurvivalDataset

__all__ = [
    "Setting",
    "FitResult",
    "InformationCriteria",
    "fit_ml",
    "wald_ci",
    "information_criteria",
    "moment_start",
]

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200


class Setting(str, enum.Enum):
    COMPLETE = "complete"
    CENSORED = "censored"
    CURE = "cure"


class InformationCriteria(NamedTuple):
    aic: float
    bic: float
    aicc: float  # nan when n <= K + 1

    @property
    def aicc_available(self) -> bool:
        return not math.isnan(self.aicc)


def information_criteria(loglik: float, k: int, n: int) -> InformationCriteria:
    """AIC, BIC and small-sample corrected AIC.

    ``aicc = aic + (2K^2 + 2K) / (n - K - 1)`` is undefined for ``n <= K + 1``
    and returned as nan.

    >>> information_criteria(-50.0, 1, 21).aic
    102.0
    """
    if k < 0 or n < 1:
        raise ValueError("need K >= 0 and n >= 1")
    aic = -2.0 * loglik + 2.0 * k
    bic = -2.0 * loglik + k * math.log(n)
    aicc = aic + (2.0 * k * k + 2.0 * k) / (n - k - 1) if n > k + 1 else math.nan
    return InformationCriteria(aic, bic, aicc)


def wald_ci(estimate: float, std_error: float, level: float = 0.95, bounds=(0.0, math.inf)):
    """``estimate -/+ z * se`` clipped to ``bounds``; ``z`` is the upper ``(1-level)/2`` normal quantile."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level!r}")
    if not std_error >= 0.0:
        return (math.nan, math.nan)
    z = float(norm.ppf(0.5 + level / 2.0))
    estimate, std_error = float(estimate), float(std_error)
    lo, hi = bounds
    return (max(estimate - z * std_error, lo), min(estimate + z * std_error, hi))


@dataclass
class FitResult:
    """Outcome of :func:`fit_ml`.

    ``std_errors`` and ``covariance`` hold nan when the observed information
    at the optimum is not positive definite.
    """

    family: FamilyName
    setting: Setting
    param_names: tuple[str, ...]
    estimates: np.ndarray
    std_errors: np.ndarray
    covariance: np.ndarray
    loglik: float
    aic: float
    bic: float
    aicc: float
    ci: list[tuple[float, float]]
    ci_level: float
    converged: bool
    iterations: int
    n: int
    score_norm: float
    message: str = ""
    warnings: list[str] = field(default_factory=list)

    @property
    def k(self) -> int:
        return len(self.param_names)

    @property
    def params(self) -> dict[str, float]:
        return dict(zip(self.param_names, self.estimates.tolist()))

    @property
    def theta(self) -> float:
        return float(self.estimates[0])

    @property
    def eta(self) -> float | None:
        return float(self.estimates[1]) if self.setting is Setting.CURE else None

    def logsf(self, t):
        fam = get_family(self.family)
        logs = np.asarray(fam.logsf(self.theta, t), dtype=float)
        if self.setting is Setting.CURE:
            logs = lik._log_mixture(self.eta, logs)
        return logs

    def survival(self, t):
        """Fitted survival ``P(T > t)``; the mixture survival for cure fits."""
        return np.exp(self.logsf(t))

    def cdf(self, t):
        return -np.expm1(self.logsf(t))

    def to_dict(self) -> dict:
        def num(x):
            x = float(x)
            return x if math.isfinite(x) else None

        return {
            "family": self.family.value,
            "setting": self.setting.value,
            "parameters": {
                name: {
                    "estimate": num(self.estimates[i]),
                    "std_error": num(self.std_errors[i]),
                    "ci": [num(self.ci[i][0]), num(self.ci[i][1])],
                }
                for i, name in enumerate(self.param_names)
            },
            "ci_level": self.ci_level,
            "covariance": [[num(v) for v in row] for row in self.covariance],
            "loglik": num(self.loglik),
            "aic": num(self.aic),
            "bic": num(self.bic),
            "aicc": num(self.aicc),
            "converged": self.converged,
            "iterations": self.iterations,
            "score_norm": num(self.score_norm),
            "n": self.n,
            "message": self.message,
            "warnings": list(self.warnings),
        }


# objective functions on the natural scale -------------------------------------------


def _fd_grad_hess(f: Callable[[np.ndarray], float], x: np.ndarray, steps: np.ndarray):
    """Fourth-order central differences."""
    k = x.size
    g = np.zeros(k)
    h = np.zeros((k, k))
    f0 = f(x)
    for i in range(k):
        e = np.zeros(k)
        e[i] = steps[i]
        fp1, fm1, fp2, fm2 = f(x + e), f(x - e), f(x + 2 * e), f(x - 2 * e)
        g[i] = (8 * (fp1 - fm1) - (fp2 - fm2)) / (12 * steps[i])
        h[i, i] = (-fp2 + 16 * fp1 - 30 * f0 + 16 * fm1 - fm2) / (12 * steps[i] ** 2)
    for i in range(k):
        for j in range(i + 1, k):
            ei = np.zeros(k)
            ej = np.zeros(k)
            ei[i] = steps[i]
            ej[j] = steps[j]
            v = (f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)) / (4 * steps[i] * steps[j])
            h[i, j] = h[j, i] = v
    return g, h


class _Objective:
    """Log-likelihood, gradient and Hessian in natural parameters."""

    def __init__(self, family: Family, setting: Setting, data: SurvivalDataset):
        self.family = family
        self.setting = setting
        self.data = data
        self.domains = [family.domain] + (["unit"] if setting is Setting.CURE else [])

    def in_domain(self, x: np.ndarray) -> bool:
        for v, dom in zip(x, self.domains):
            if not (math.isfinite(v) and v > 0.0 and (dom != "unit" or v < 1.0)):
                return False
        return True

    def loglik(self, x: np.ndarray) -> float:
        if not self.in_domain(x):
            return -math.inf
        if self.family.name is FamilyName.DB:
            if self.setting is Setting.CURE:
                return lik.loglik_cure((x[0], x[1]), self.data)
            return lik.loglik_censored(x[0], self.data)
        eta = x[1] if self.setting is Setting.CURE else None
        return lik.loglik_family(self.family, x[0], self.data, eta)

    def grad_hess(self, x: np.ndarray):
        if self.family.name is FamilyName.DB:
            if self.setting is Setting.CURE:
                return lik.grad_cure((x[0], x[1]), self.data), lik.hessian_cure((x[0], x[1]), self.data)
            return (
                np.array([lik.score_censored(x[0], self.data)]),
                np.array([[-lik.obs_info_censored(x[0], self.data)]]),
            )
        steps = np.array([1e-4 * min(v, 1.0 - v) if d == "unit" else 1e-4 * v for v, d in zip(x, self.domains)])
        return _fd_grad_hess(self.loglik, x, steps)

    # transforms
    def to_z(self, x: np.ndarray) -> np.ndarray:
        return np.array([math.log(v) if d == "positive" else math.log(v) - math.log1p(-v) for v, d in zip(x, self.domains)])

    def from_z(self, z: np.ndarray) -> np.ndarray:
        out = []
        for v, d in zip(z, self.domains):
            if d == "positive":
                out.append(math.exp(min(v, 700.0)))
            else:
                out.append(1.0 / (1.0 + math.exp(-v)) if v >= 0 else math.exp(v) / (1.0 + math.exp(v)))
        return np.array(out)

    def jacobians(self, x: np.ndarray):
        d1, d2 = [], []
        for v, d in zip(x, self.domains):
            if d == "positive":
                d1.append(v)
                d2.append(v)
            else:
                s = v * (1.0 - v)
                d1.append(s)
                d2.append(s * (1.0 - 2.0 * v))
        return np.array(d1), np.array(d2)


# starting values -------------------------------------------------------------------


def moment_start(data: SurvivalDataset) -> float:
    """Beta whose DB mean equals the mean observed event time (bisection)."""
    events = data.time[data.status == 1]
    target = float(events.mean()) if events.size else float(data.time.mean())
    lo, hi = 1e-8, 50.0
    if target <= db.mean(hi):
        return hi
    if target >= db.mean(lo):
        return lo
    return optimize.bisect(lambda b: db.mean(b) - target, lo, hi, xtol=1e-12)


def _km_plateau(data: SurvivalDataset) -> float:
    from discrete_bilal.diagnostics import kaplan_meier

    curve = kaplan_meier(data)
    return float(curve.survival[-1]) if curve.survival.size else 1.0


def _default_start(obj: _Objective) -> np.ndarray:
    fam, data = obj.family, obj.data
    if fam.name is FamilyName.DB:
        theta0 = moment_start(data)
    else:
        # coarse scan on the unconstrained scale
        grid = np.linspace(-8.0, 8.0, 81) if fam.domain == "unit" else np.linspace(-12.0, 4.0, 81)
        eta_probe = [0.5] if obj.setting is Setting.CURE else []
        vals = [obj.loglik(np.array([fam.from_unconstrained(z)] + eta_probe)) for z in grid]
        theta0 = fam.from_unconstrained(grid[int(np.argmax(vals))])
    if obj.setting is Setting.CURE:
        return np.array([theta0, min(max(_km_plateau(data), 0.01), 0.99)])
    return np.array([theta0])


# the optimiser -----------------------------------------------------------------------


def _fallback(obj: _Objective, z: np.ndarray) -> tuple[np.ndarray, int]:
    def negll(zz):
        v = obj.loglik(obj.from_z(np.atleast_1d(zz)))
        return -v if math.isfinite(v) else 1e300

    if z.size == 1:
        res = optimize.minimize_scalar(
            lambda s: negll(np.array([s])), bracket=(z[0] - 0.5, z[0] + 0.5), method="golden", tol=1e-10
        )
        return np.array([res.x]), int(res.nit)
    res = optimize.minimize(negll, z, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-13, "maxiter": 5000})
    return res.x, int(res.nit)


def _run_fallback(obj: _Objective, z: np.ndarray, ll: float, it: int, notes: list[str]):
    z_new, nit = _fallback(obj, z)
    x_new = obj.from_z(z_new)
    ll_new = obj.loglik(x_new)
    notes.append(f"fallback search at iteration {it} ({nit} steps)")
    if not (math.isfinite(ll_new) and ll_new > ll + 1e-12 * (1.0 + abs(ll))):
        notes.append("no further ascent; the supremum may lie on the parameter boundary")
        return None
    return z_new, x_new, ll_new


def _newton(obj: _Objective, x0: np.ndarray, tol: float, max_iter: int):
    z = obj.to_z(x0)
    x = obj.from_z(z)
    ll = obj.loglik(x)
    if not math.isfinite(ll):
        raise ValueError(f"log-likelihood is not finite at the start {x0.tolist()}")
    notes: list[str] = []
    it = 0
    while True:
        g, h = obj.grad_hess(x)
        gnorm = float(np.linalg.norm(g))
        if gnorm < tol * (1.0 + abs(ll)):
            return x, ll, g, h, True, it, notes
        if it >= max_iter:
            return x, ll, g, h, False, it, notes
        it += 1
        j1, j2 = obj.jacobians(x)
        gz = j1 * g
        hz = h * np.outer(j1, j1) + np.diag(g * j2)
        try:
            np.linalg.cholesky(-hz)
            step = -np.linalg.solve(hz, gz)
        except np.linalg.LinAlgError:
            step = None
        if step is None:
            moved = _run_fallback(obj, z, ll, it, notes)
            if moved is None:
                return x, ll, g, h, False, it, notes
            z, x, ll = moved
            continue
        step_len = float(np.max(np.abs(step)))
        if step_len > 5.0:
            step *= 5.0 / step_len
        alpha = 1.0
        while alpha > 1e-12:
            z_new = z + alpha * step
            x_new = obj.from_z(z_new)
            ll_new = obj.loglik(x_new)
            if math.isfinite(ll_new) and ll_new >= ll - 1e-12 * (1.0 + abs(ll)):
                break
            alpha *= 0.5
        else:
            # no ascent along the Newton direction
            moved = _run_fallback(obj, z, ll, it, notes)
            if moved is None:
                return x, ll, g, h, False, it, notes
            z, x, ll = moved
            continue
        if np.all(np.abs(z_new - z) < 1e-15) and ll_new == ll:
            g, h = obj.grad_hess(x_new)
            ok = float(np.linalg.norm(g)) < tol * (1.0 + abs(ll_new))
            return x_new, ll_new, g, h, ok, it, notes
        z, x, ll = z_new, x_new, ll_new


def _boundary_eta(obj: _Objective, x: np.ndarray, tol: float, max_iter: int):
    """Refit with eta fixed at 0 when the cure fraction runs to the boundary."""
    sub = _Objective(obj.family, Setting.CENSORED, obj.data)
    xb, _, _, _, ok, it, notes = _newton(sub, x[:1], tol, max_iter)
    full = np.array([xb[0], 0.0])
    # at eta = 0 the cure likelihood equals the censored one
    ll = sub.loglik(xb)
    if obj.family.name is FamilyName.DB:
        g = lik.grad_cure((full[0], 0.0), obj.data)
        h = lik.hessian_cure((full[0], 0.0), obj.data)
    else:
        g_sub, h_sub = sub.grad_hess(xb)
        g = np.array([g_sub[0], math.nan])
        h = np.array([[h_sub[0, 0], math.nan], [math.nan, math.nan]])
    return full, ll, g, h, ok, it, notes


def fit_ml(
    family="db",
    setting="censored",
    data: SurvivalDataset | None = None,
    *,
    start=None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    ci_level: float = 0.95,
) -> FitResult:
    """Maximum-likelihood fit of ``family`` to ``data`` in the given setting.

    Parameters
    ----------
    family : str or FamilyName
        ``"db"`` or one of the competitor families.
    setting : {"complete", "censored", "cure"}
        ``"complete"`` requires every status to be 1; ``"cure"`` adds the
        cured fraction ``eta`` as a second parameter.
    data : SurvivalDataset
    start : sequence of float, optional
        Natural-scale starting values. Defaults to the moment estimate of
        beta (DB) or a coarse likelihood scan (other families), and the
        Kaplan-Meier plateau for ``eta``.
    tol : float
        Convergence when ``||score|| < tol * (1 + |loglik|)``.
    max_iter : int
    ci_level : float
        Confidence level of the Wald intervals.

    Returns
    -------
    FitResult
        ``converged`` is False when ``max_iter`` Newton steps did not reach
        ``tol``; the last iterate is still reported.
    """
    if data is None:
        raise TypeError("data is required")
    fam = get_family(family)
    setting = Setting(setting)
    data.require_events()
    if setting is Setting.COMPLETE and not data.is_complete:
        raise DataError("setting 'complete' requires every status == 1")
    if not 0.0 < ci_level < 1.0:
        raise ValueError("ci_level must lie in (0, 1)")
    obj = _Objective(fam, setting, data)
    fit_warnings: list[str] = []
    if setting is Setting.CURE and data.n_censored == 0:
        msg = "cure model fitted to data without censoring; eta is expected at 0"
        fit_warnings.append(msg)
        warnings.warn(msg, stacklevel=2)

    x0 = _default_start(obj) if start is None else np.atleast_1d(np.asarray(start, dtype=float))
    if x0.size != len(obj.domains) or not obj.in_domain(x0):
        raise ValueError(f"invalid start {np.asarray(start).tolist()} for {fam.label} ({setting.value})")

    x, ll, g, h, ok, it, notes = _newton(obj, x0, tol, max_iter)
    message = "; ".join(notes)
    if setting is Setting.CURE and x[1] < 1e-6 and g[1] <= 0.0:
        x, ll, g, h, ok, it2, notes2 = _boundary_eta(obj, x, tol, max_iter)
        it += it2
        message = "; ".join(notes + notes2 + ["eta at the boundary 0"])
        score_norm = float(abs(g[0]))
    else:
        score_norm = float(np.linalg.norm(g))

    k = len(obj.domains)
    cov = np.full((k, k), math.nan)
    se = np.full(k, math.nan)
    try:
        info = -np.asarray(h, dtype=float)
        np.linalg.cholesky(info)
        cov = np.linalg.inv(info)
        cov = 0.5 * (cov + cov.T)
        se = np.sqrt(np.diag(cov))
    except (np.linalg.LinAlgError, ValueError):
        fit_warnings.append("observed information is not positive definite; standard errors unavailable")

    crit = information_criteria(ll, k, data.n)
    bounds = [(0.0, 1.0) if d == "unit" else (0.0, math.inf) for d in obj.domains]
    ci = [wald_ci(x[i], se[i], ci_level, bounds[i]) for i in range(k)]
    names = (fam.param_name,) + (("eta",) if setting is Setting.CURE else ())
    if not ok:
        log.warning("%s (%s) fit did not converge after %d iterations", fam.label, setting.value, it)
    return FitResult(
        family=fam.name,
        setting=setting,
        param_names=names,
        estimates=x,
        std_errors=se,
        covariance=cov,
        loglik=ll,
        aic=crit.aic,
        bic=crit.bic,
        aicc=crit.aicc,
        ci=ci,
        ci_level=ci_level,
        converged=bool(ok),
        iterations=it,
        n=data.n,
        score_norm=score_norm,
        message=message,
        warnings=fit_warnings,
    )
