"""Random-walk Metropolis sampling of DB and cure-DB posteriors.

Priors are ``beta ~ Gamma(a, b)`` (shape/rate, mean ``a / b``) and, in the
cure setting, ``eta ~ Beta(a, b)``. The sampler proposes Gaussian steps on
``(log beta, logit eta)`` and includes the Jacobian of that transform in the
acceptance ratio, so the stationary law is the posterior on the natural
scale. During burn-in the proposal scale is tuned towards an acceptance
rate between 0.2 and 0.5; it is frozen afterwards.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.special import betaln, gammaln

from discrete_bilal import likelihood as lik
from discrete_bilal.data import SurvivalDataset
from discrete_bilal.mle import Setting, _fd_grad_hess, _km_plateau, moment_start

__all__ = [
    "PriorSpec",
    "McmcConfig",
    "PosteriorChain",
    "log_posterior",
    "run_mcmc",
    "hdi",
    "geweke",
    "acf",
]

DIVERGENCE_THRESHOLD = 1e-6
_ADAPT_WINDOW = 200


@dataclass(frozen=True)
class PriorSpec:
    """Gamma prior on ``beta`` (shape, rate) and Beta prior on ``eta``."""

    beta_prior: tuple[float, float] = (0.001, 0.001)
    eta_prior: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self):
        for name in ("beta_prior", "eta_prior"):
            pair = tuple(float(v) for v in getattr(self, name))
            if len(pair) != 2 or not all(math.isfinite(v) and v > 0.0 for v in pair):
                raise ValueError(f"{name} needs two finite hyperparameters > 0, got {pair!r}")
            object.__setattr__(self, name, pair)

    def log_beta_density(self, beta: float) -> float:
        a, b = self.beta_prior
        return (a - 1.0) * math.log(beta) - b * beta + a * math.log(b) - gammaln(a)

    def log_eta_density(self, eta: float) -> float:
        a, b = self.eta_prior
        # written so that a == 1 (or b == 1) never evaluates 0 * log(0)
        out = -betaln(a, b)
        if a != 1.0:
            out += (a - 1.0) * math.log(eta) if eta > 0.0 else (-math.inf if a > 1.0 else math.inf)
        if b != 1.0:
            out += (b - 1.0) * math.log1p(-eta)
        return out


@dataclass(frozen=True)
class McmcConfig:
    """Sampling schedule. ``iterations`` counts all steps, burn-in included."""

    iterations: int = 110_000
    burn_in: int = 10_000
    thin: int = 20
    seed: int = 0
    proposal_scale: float | None = None  # None means automatic

    def __post_init__(self):
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        if self.iterations <= self.burn_in:
            raise ValueError("iterations must exceed burn_in")
        if self.n_retained < 100:
            raise ValueError(f"schedule keeps {self.n_retained} draws; at least 100 are required")
        if self.proposal_scale is not None and not (
            math.isfinite(self.proposal_scale) and self.proposal_scale > 0.0
        ):
            raise ValueError("proposal_scale must be a positive number or None")

    @property
    def n_retained(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


@dataclass(frozen=True)
class PosteriorChain:
    """Thinned draws on the natural scale with summary diagnostics."""

    param_names: tuple[str, ...]
    draws: np.ndarray
    acceptance_rate: float
    geweke_z: np.ndarray
    acf: np.ndarray
    posterior_mean: np.ndarray
    posterior_sd: np.ndarray
    hdi: np.ndarray
    hdi_prob: float
    setting: Setting
    config: McmcConfig
    prior: PriorSpec
    proposal_scale: float
    warnings: tuple[str, ...] = field(default_factory=tuple)

    @property
    def converged(self) -> bool:
        """Geweke |z| < 1.96 for every parameter."""
        return bool(np.all(np.abs(self.geweke_z) < 1.96))

    def summary(self) -> dict:
        out = {}
        for j, name in enumerate(self.param_names):
            out[name] = {
                "posterior_mean": float(self.posterior_mean[j]),
                "posterior_sd": float(self.posterior_sd[j]),
                "hdi": [float(self.hdi[j, 0]), float(self.hdi[j, 1])],
                "geweke_z": float(self.geweke_z[j]),
            }
        return out

    def to_dict(self, include_draws: bool = False) -> dict:
        out = {
            "setting": self.setting.value,
            "param_names": list(self.param_names),
            "n_draws": int(self.draws.shape[0]),
            "acceptance_rate": self.acceptance_rate,
            "proposal_scale": self.proposal_scale,
            "hdi_prob": self.hdi_prob,
            "parameters": self.summary(),
            "acf": {n: self.acf[j].tolist() for j, n in enumerate(self.param_names)},
            "converged": self.converged,
            "warnings": list(self.warnings),
        }
        if include_draws:
            out["draws"] = self.draws.tolist()
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.param_names)
        for row in self.draws:
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()


# posterior -------------------------------------------------------------------------------


def _as_setting(setting) -> Setting:
    return setting if isinstance(setting, Setting) else Setting(str(setting).lower())


def log_posterior(params, data: SurvivalDataset, prior: PriorSpec | None = None, setting="censored") -> float:
    """Unnormalised log posterior on the natural scale.

    ``params`` is ``beta`` (or a 1-sequence) for the complete and censored
    settings, ``(beta, eta)`` for the cure setting. Points outside
    ``beta > 0``, ``0 <= eta < 1`` give ``-inf``.
    """
    prior = prior or PriorSpec()
    setting = _as_setting(setting)
    x = np.atleast_1d(np.asarray(params, dtype=float))
    beta = float(x[0])
    if not (math.isfinite(beta) and beta > 0.0):
        return -math.inf
    lp = prior.log_beta_density(beta)
    if setting is Setting.CURE:
        eta = float(x[1])
        if not (math.isfinite(eta) and 0.0 <= eta < 1.0):
            return -math.inf
        lp += prior.log_eta_density(eta)
        ll = lik.loglik_cure((beta, eta), data)
    elif setting is Setting.COMPLETE:
        ll = lik.loglik_complete(beta, data)
    else:
        ll = lik.loglik_censored(beta, data)
    out = ll + lp
    return out if not math.isnan(out) else -math.inf


def _z_target(data: SurvivalDataset, prior: PriorSpec, setting: Setting):
    """Log target on ``z = (log beta[, logit eta])``, Jacobian included.

    Data arrays are split once up front; each call then costs a handful of
    vector operations.
    """
    if setting is Setting.COMPLETE:
        lik._require_complete(data)
    te, tc = lik._split(data)
    n_events = te.size
    cure = setting is Setting.CURE

    def target(z: np.ndarray) -> float:
        zb = z[0]
        # outside this box the masses (or their derivatives) under/overflow
        if not -300.0 < zb < 6.5:
            return -math.inf
        beta = math.exp(zb)
        logf = lik._event_terms(beta, te)[0]
        logs = lik._censored_terms(beta, tc)[0]
        val = prior.log_beta_density(beta) + zb + float(np.sum(lik._guard(logf)))
        if cure:
            ze = z[1]
            # log eta and log(1 - eta) without cancellation
            log_eta = -np.logaddexp(0.0, -ze)
            log_1m = -np.logaddexp(0.0, ze)
            eta = math.exp(log_eta)
            if not 0.0 < eta < 1.0:
                return -math.inf
            val += prior.log_eta_density(eta) + log_eta + log_1m
            val += n_events * log_1m + float(np.sum(lik._guard(np.logaddexp(log_eta, log_1m + logs))))
        else:
            val += float(np.sum(lik._guard(logs)))
        return val if math.isfinite(val) else -math.inf

    return target


def _start_and_cov(target, data: SurvivalDataset, setting: Setting):
    """Posterior mode on the z scale and the inverse negative Hessian there."""
    beta0 = moment_start(data) if data.n_events else 1.0 / (1.0 + float(np.mean(data.time)))
    z0 = [math.log(beta0)]
    if setting is Setting.CURE:
        eta0 = _km_plateau(data)
        z0.append(math.log(eta0 / (1.0 - eta0)))
    z0 = np.array(z0)
    d = z0.size

    def neg(z):
        v = target(z)
        return -v if math.isfinite(v) else 1e300

    res = optimize.minimize(neg, z0, method="Nelder-Mead", options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 4000})
    z_mode = res.x if np.isfinite(res.fun) and res.fun < neg(z0) else z0
    try:
        _, h = _fd_grad_hess(target, z_mode, np.full(d, 1e-3))
        cov = np.linalg.inv(-h)
        np.linalg.cholesky(cov)
        if not np.all(np.isfinite(cov)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        cov = np.eye(d) * 0.25
    return z_mode, cov


def run_mcmc(
    data: SurvivalDataset,
    prior: PriorSpec | None = None,
    config: McmcConfig | None = None,
    setting="censored",
    *,
    hdi_prob: float = 0.95,
    max_lag: int = 40,
) -> PosteriorChain:
    """Sample the posterior by random-walk Metropolis.

    The chain starts at the posterior mode (located on the transformed
    scale) and proposes ``z' = z + s * L e`` where ``L L^T`` is the inverse
    negative Hessian at the mode and ``e`` is standard normal. ``s`` starts
    at ``2.38 / sqrt(d)`` unless ``config.proposal_scale`` is given, and is
    adjusted every 200 burn-in steps. The same seed always reproduces the
    same chain.

    Returns
    -------
    PosteriorChain
        Thinned draws after burn-in, with posterior means, standard
        deviations, HDIs, Geweke z-scores and autocorrelations. A warning
        is attached (and emitted) when ``beta`` drifts below ``1e-6``.
    """
    prior = prior or PriorSpec()
    config = config or McmcConfig()
    setting = _as_setting(setting)
    target = _z_target(data, prior, setting)
    z, cov = _start_and_cov(target, data, setting)
    chol = np.linalg.cholesky(cov)
    d = z.size

    scale = config.proposal_scale if config.proposal_scale is not None else 2.38 / math.sqrt(d)
    rng = np.random.default_rng(config.seed)
    steps = rng.standard_normal((config.iterations, d)) @ chol.T
    log_u = np.log(rng.random(config.iterations))

    m = config.n_retained
    kept = np.empty((m, d))
    lp = target(z)
    accepted_after = 0
    window_acc = 0
    tune = config.proposal_scale is None
    first_kept = config.burn_in + config.thin - 1
    k = 0
    for i in range(config.iterations):
        cand = z + scale * steps[i]
        lp_c = target(cand)
        if log_u[i] < lp_c - lp:
            z, lp = cand, lp_c
            if i >= config.burn_in:
                accepted_after += 1
            else:
                window_acc += 1
        if i < config.burn_in:
            if tune and (i + 1) % _ADAPT_WINDOW == 0:
                rate = window_acc / _ADAPT_WINDOW
                if rate < 0.2:
                    scale *= 0.75
                elif rate > 0.5:
                    scale *= 1.3
                window_acc = 0
        elif i >= first_kept and (i - first_kept) % config.thin == 0 and k < m:
            kept[k] = z
            k += 1

    draws = np.empty_like(kept)
    draws[:, 0] = np.exp(kept[:, 0])
    names = ("beta",)
    if setting is Setting.CURE:
        draws[:, 1] = 1.0 / (1.0 + np.exp(-kept[:, 1]))
        names = ("beta", "eta")

    notes = []
    if np.any(draws[:, 0] < DIVERGENCE_THRESHOLD):
        notes.append(
            f"beta drifted below {DIVERGENCE_THRESHOLD:g}; the posterior may be improper for these data"
        )
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)

    lag = min(max_lag, m - 1)
    return PosteriorChain(
        param_names=names,
        draws=draws,
        acceptance_rate=accepted_after / (config.iterations - config.burn_in),
        geweke_z=np.array([geweke(draws[:, j]) for j in range(d)]),
        acf=np.array([acf(draws[:, j], lag) for j in range(d)]),
        posterior_mean=draws.mean(axis=0),
        posterior_sd=draws.std(axis=0, ddof=1),
        hdi=np.array([hdi(draws[:, j], hdi_prob) for j in range(d)]),
        hdi_prob=hdi_prob,
        setting=setting,
        config=config,
        prior=prior,
        proposal_scale=float(scale),
        warnings=tuple(notes),
    )


# chain summaries -------------------------------------------------------------------------


def hdi(samples, prob: float = 0.95) -> tuple[float, float]:
    """Shortest interval holding ``ceil(prob * m)`` of the sorted draws.

    Only meaningful for unimodal posteriors.
    """
    if not 0.0 < prob < 1.0:
        raise ValueError(f"prob must lie in (0, 1), got {prob!r}")
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    m = x.size
    if m < 10:
        raise ValueError(f"HDI needs at least 10 draws, got {m}")
    k = min(math.ceil(prob * m), m)
    widths = x[k - 1 :] - x[: m - k + 1]
    i = int(np.argmin(widths))
    return float(x[i]), float(x[i + k - 1])


def _batch_se(x: np.ndarray, n_batches: int) -> float:
    # short segments get fewer, but never single-draw, batches
    n_batches = max(2, min(n_batches, x.size // 2))
    size = x.size // n_batches
    means = x[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(np.var(means, ddof=1) / n_batches)


def geweke(samples, frac_first: float = 0.1, frac_last: float = 0.5, n_batches: int = 20) -> float:
    """Geweke z-score comparing the early and late parts of a chain.

    Each segment's variance of the mean is estimated by batch means. For a
    constant chain the score is 0.
    """
    x = np.asarray(samples, dtype=float).ravel()
    m = x.size
    if m < 100:
        raise ValueError(f"Geweke diagnostic needs at least 100 draws, got {m}")
    if not (0.0 < frac_first and 0.0 < frac_last and frac_first + frac_last <= 1.0):
        raise ValueError("segment fractions must be positive and sum to at most 1")
    a = x[: int(frac_first * m)]
    b = x[m - int(frac_last * m) :]
    var = _batch_se(a, n_batches) + _batch_se(b, n_batches)
    diff = a.mean() - b.mean()
    if var == 0.0:
        return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    return float(diff / math.sqrt(var))


def acf(samples, max_lag: int) -> np.ndarray:
    """Sample autocorrelations for lags ``0..max_lag`` (entry 0 is 1)."""
    x = np.asarray(samples, dtype=float).ravel()
    m = x.size
    if not 0 <= max_lag < m:
        raise ValueError(f"max_lag must be in [0, {m - 1}], got {max_lag}")
    c = x - x.mean()
    c0 = float(c @ c)
    out = np.zeros(max_lag + 1)
    out[0] = 1.0
    if c0 == 0.0:
        return out
    for k in range(1, max_lag + 1):
        out[k] = float(c[:-k] @ c[k:]) / c0
    return out
