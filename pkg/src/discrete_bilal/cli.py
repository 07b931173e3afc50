"""Command-line front end.

Subcommands
-----------
fit        maximum-likelihood fit of one family (or ``--family all``)
bayes      posterior sampling for DB / cure-DB
diagnose   fit plus residuals, Kaplan-Meier curve and a family comparison
simulate   draw a DB dataset, optionally with a cure fraction and censoring
km         Kaplan-Meier estimate only

Exit codes: 0 success, 2 input error, 3 convergence failure, 4 internal
invariant violation. Failures print a JSON object ``{"error": {...}}`` to
stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from discrete_bilal import __version__
from discrete_bilal import distribution as db
from discrete_bilal.bayes import McmcConfig, PriorSpec, run_mcmc
from discrete_bilal.competitors import FAMILIES, FamilyName, get_family
from discrete_bilal.data import DataError, SurvivalDataset, read_csv, write_csv
from discrete_bilal.datasets import load_builtin
from discrete_bilal.diagnostics import fitted_survival_table, kaplan_meier, quantile_residuals, table_to_csv
from discrete_bilal.mle import Setting, fit_ml

__all__ = ["RunConfig", "ingest_csv", "compare_families", "run", "main", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONVERGENCE = 3
EXIT_INTERNAL = 4

# each randomised component draws from seed + offset
SEED_OFFSETS = {"simulate": 0, "mcmc": 1_000, "residuals": 2_000}

_COMMANDS = ("fit", "bayes", "diagnose", "simulate", "km")
_FORMATS = ("json", "csv", "text")


class ConvergenceFailure(RuntimeError):
    def __init__(self, message: str, report: dict):
        super().__init__(message)
        self.report = report


class InvariantViolation(RuntimeError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    data: str | None = None
    time_col: str | int = "time"
    status_col: str | int = "status"
    status_censored_value: int | None = None
    family: str = "db"
    setting: str = "censored"
    output: str = "json"
    out: str | None = None
    seed: int = 0
    mcmc: McmcConfig | None = None
    prior: PriorSpec | None = None
    include_draws: bool = False
    beta: float | None = None
    n: int | None = None
    censor_admin: int | None = None
    eta: float = 0.0

    def __post_init__(self):
        if self.command not in _COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if self.output not in _FORMATS:
            raise ValueError(f"unknown output format {self.output!r}")
        if (self.mcmc is not None or self.prior is not None) and self.command != "bayes":
            raise ValueError("MCMC settings only apply to the bayes command")
        if self.command != "simulate" and self.data is None:
            raise ValueError(f"{self.command} needs --data")
        if self.family != "all":
            get_family(self.family)
        Setting(self.setting)
        if self.command == "bayes" and self.family != "db":
            raise ValueError("Bayesian estimation is available for the db family only")
        if self.command == "simulate":
            if self.family != "db":
                raise ValueError("simulation is available for the db family only")
            if self.beta is None or self.n is None:
                raise ValueError("simulate needs --beta and --n")
            if not 0.0 <= self.eta < 1.0:
                raise ValueError("--eta must lie in [0, 1)")
            if self.eta > 0.0 and self.censor_admin is None:
                raise ValueError("--eta needs --censor-admin so cured subjects are observed as censored")
            if self.censor_admin is not None and self.censor_admin < 0:
                raise ValueError("--censor-admin must be >= 0")

    def echo(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if dataclasses.is_dataclass(v):
                v = dataclasses.asdict(v)
            out[f.name] = v
        out["seed_offsets"] = dict(SEED_OFFSETS)
        return out


# data ------------------------------------------------------------------------------------


def ingest_csv(path, time_col="time", status_col="status", status_censored_value=None) -> SurvivalDataset:
    """Read and validate a survival CSV (see :func:`discrete_bilal.data.read_csv`)."""
    return read_csv(path, time_col, status_col, status_censored_value)


def _load(cfg: RunConfig) -> SurvivalDataset:
    if cfg.data.startswith("builtin:"):
        name = cfg.data.split(":", 1)[1]
        try:
            return load_builtin(name).data
        except KeyError as exc:
            raise DataError(exc.args[0]) from None
    try:
        return ingest_csv(cfg.data, cfg.time_col, cfg.status_col, cfg.status_censored_value)
    except FileNotFoundError:
        raise DataError(f"file not found: {cfg.data}") from None


def _simulate(cfg: RunConfig) -> SurvivalDataset:
    rng = np.random.default_rng(cfg.seed + SEED_OFFSETS["simulate"])
    t = db.sample(cfg.beta, rng, cfg.n)
    status = np.ones(cfg.n, dtype=np.int8)
    if cfg.eta > 0.0:
        cured = rng.random(cfg.n) < cfg.eta
        t = np.where(cured, np.iinfo(np.int64).max, t)
    if cfg.censor_admin is not None:
        late = t > cfg.censor_admin
        t = np.where(late, cfg.censor_admin, t)
        status[late] = 0
    return SurvivalDataset(t, status)


# orchestration -----------------------------------------------------------------------------


def compare_families(data: SurvivalDataset, setting="censored", families=None) -> list[dict]:
    """Fit each family and rank the results by AIC.

    Families whose fit raises or does not converge stay in the table with a
    ``status`` of ``"failed"`` or ``"not_converged"``; failures sort last.
    """
    names = [get_family(f).name for f in families] if families else list(FAMILIES)
    rows = []
    for name in names:
        fam = get_family(name)
        row = {"family": fam.name.value, "label": fam.label}
        try:
            fit = fit_ml(fam.name, setting, data)
        except (ValueError, ArithmeticError) as exc:
            row.update(status="failed", error=str(exc), aic=None, bic=None, aicc=None, loglik=None)
            rows.append(row)
            continue
        d = fit.to_dict()
        row.update(
            status="ok" if fit.converged else "not_converged",
            loglik=d["loglik"],
            aic=d["aic"],
            bic=d["bic"],
            aicc=d["aicc"],
            parameters={k: v["estimate"] for k, v in d["parameters"].items()},
            message=fit.message,
        )
        rows.append(row)
    rows.sort(key=lambda r: (r["aic"] is None, r["aic"] if r["aic"] is not None else 0.0))
    for rank, row in enumerate(rows, start=1):
        row["rank"] = rank
    return rows


def _residual_block(fit, data: SurvivalDataset, seed: int):
    if data.n < 5:
        return None, {"ks_statistic": None, "ks_p_value": None, "note": "fewer than 5 observations"}
    res = quantile_residuals(fit, data, seed + SEED_OFFSETS["residuals"])
    return res, {
        "seed": res.seed,
        "ks_statistic": res.ks_statistic,
        "ks_p_value": res.ks_p_value,
        "residuals": res.residuals.tolist(),
    }


def _km_dict(data: SurvivalDataset) -> dict:
    km = kaplan_meier(data)
    if np.any(np.diff(km.survival) > 0) or np.any((km.survival < 0) | (km.survival > 1)):
        raise InvariantViolation("Kaplan-Meier estimate is not a non-increasing probability")
    return {
        "times": km.times.tolist(),
        "survival": km.survival.tolist(),
        "at_risk": km.at_risk.tolist(),
        "events": km.events.tolist(),
    }


def _base_report(cfg: RunConfig, data: SurvivalDataset | None) -> dict:
    return {
        "config": cfg.echo(),
        "data_summary": data.summary() if data is not None else None,
        "fit": None,
        "diagnostics": None,
        "version": {"package": __version__, "schema": SCHEMA_VERSION},
    }


def _check_fit(fit) -> None:
    if not np.all(np.isfinite(fit.estimates)):
        raise InvariantViolation("non-finite parameter estimate")
    if fit.setting is Setting.CURE and not 0.0 <= fit.eta < 1.0:
        raise InvariantViolation("cure fraction outside [0, 1)")


def run(cfg: RunConfig) -> tuple[int, dict, str | None]:
    """Execute ``cfg``; returns (exit code, JSON report, CSV text or None)."""
    if cfg.command == "simulate":
        data = _simulate(cfg)
        report = _base_report(cfg, data)
        report["data"] = [list(r) for r in data.records()]
        return EXIT_OK, report, write_csv(data)

    data = _load(cfg)
    report = _base_report(cfg, data)

    if cfg.command == "km":
        km = _km_dict(data)
        report["diagnostics"] = {"kaplan_meier": km}
        return EXIT_OK, report, table_to_csv(list(zip(km["times"], km["survival"])))

    if cfg.command == "bayes":
        config = cfg.mcmc or McmcConfig()
        config = dataclasses.replace(config, seed=cfg.seed + SEED_OFFSETS["mcmc"])
        chain = run_mcmc(data, cfg.prior or PriorSpec(), config, cfg.setting)
        if np.any(chain.draws[:, 0] <= 0) or (chain.draws.shape[1] > 1 and np.any(chain.draws[:, 1] >= 1)):
            raise InvariantViolation("posterior draw outside the parameter domain")
        report["fit"] = chain.summary()
        report["diagnostics"] = {
            "acceptance_rate": chain.acceptance_rate,
            "geweke_z": dict(zip(chain.param_names, chain.geweke_z.tolist())),
            "converged": chain.converged,
            "warnings": list(chain.warnings),
        }
        report["chains"] = chain.to_dict(include_draws=cfg.include_draws)
        return EXIT_OK, report, chain.to_csv()

    if cfg.family == "all":
        table = compare_families(data, cfg.setting)
        report["fit"] = {"comparison": table}
        csv_rows = [(r["family"], r["aic"] if r["aic"] is not None else math.nan) for r in table]
        return EXIT_OK, report, table_to_csv(csv_rows, header=("family", "aic"))

    fit = fit_ml(cfg.family, cfg.setting, data)
    _check_fit(fit)
    report["fit"] = fit.to_dict()
    res, res_block = _residual_block(fit, data, cfg.seed)
    diag = {"quantile_residuals": res_block}
    csv_text = None
    if cfg.command == "diagnose":
        t_max = int(data.time.max())
        diag["kaplan_meier"] = _km_dict(data)
        diag["fitted_survival"] = [list(r) for r in fitted_survival_table(fit, t_max)]
        diag["comparison"] = compare_families(data, cfg.setting)
        csv_text = res.to_csv() if res is not None else None
    else:
        csv_text = table_to_csv(
            [(name, fit.estimates[i], fit.std_errors[i], *fit.ci[i]) for i, name in enumerate(fit.param_names)],
            header=("parameter", "estimate", "std_error", "ci_lower", "ci_upper"),
        )
    report["diagnostics"] = diag
    if not fit.converged:
        raise ConvergenceFailure(fit.message or "optimiser did not converge", report)
    return EXIT_OK, report, csv_text


# rendering ---------------------------------------------------------------------------------


def _fmt(x) -> str:
    return "nan" if x is None else f"{x:.6g}"


def render_text(report: dict) -> str:
    cmd = report["config"]["command"]
    lines = []
    ds = report.get("data_summary")
    if ds:
        lines.append(f"n = {ds['n']}, events = {ds['events']}, censored = {ds['censored']}")
    fit = report.get("fit")
    if cmd in ("fit", "diagnose") and fit and "comparison" not in fit:
        lines.append(f"{fit['family']} ({fit['setting']}), converged = {fit['converged']}")
        level = round(100 * fit["ci_level"])
        lines.append(f"{'param':<8}{'estimate':>12}{'SE':>12}   {level}% CI")
        for name, p in fit["parameters"].items():
            lo, hi = p["ci"]
            lines.append(f"{name:<8}{_fmt(p['estimate']):>12}{_fmt(p['std_error']):>12}   ({_fmt(lo)}, {_fmt(hi)})")
        lines.append(f"logLik = {_fmt(fit['loglik'])}  AIC = {_fmt(fit['aic'])}  BIC = {_fmt(fit['bic'])}  AICC = {_fmt(fit['aicc'])}")
    if fit and "comparison" in fit or cmd == "diagnose":
        table = fit["comparison"] if "comparison" in fit else report["diagnostics"]["comparison"]
        lines.append(f"{'rank':<6}{'family':<14}{'AIC':>12}{'BIC':>12}  status")
        for r in table:
            lines.append(f"{r['rank']:<6}{r['family']:<14}{_fmt(r['aic']):>12}{_fmt(r['bic']):>12}  {r['status']}")
    if cmd == "bayes":
        lines.append(f"{'param':<8}{'mean':>12}{'SD':>12}   HDI{'':9}Geweke z")
        for name, p in fit.items():
            lo, hi = p["hdi"]
            lines.append(
                f"{name:<8}{_fmt(p['posterior_mean']):>12}{_fmt(p['posterior_sd']):>12}   "
                f"({_fmt(lo)}, {_fmt(hi)})  {p['geweke_z']:.3f}"
            )
        lines.append(f"acceptance rate = {report['diagnostics']['acceptance_rate']:.3f}")
    if cmd == "km":
        km = report["diagnostics"]["kaplan_meier"]
        lines.append(f"{'t':>6}{'at risk':>9}{'events':>8}{'S(t)':>10}")
        for row in zip(km["times"], km["at_risk"], km["events"], km["survival"]):
            lines.append(f"{row[0]:>6}{row[1]:>9}{row[2]:>8}{row[3]:>10.4f}")
    if cmd == "simulate":
        lines.append(write_csv(SurvivalDataset.from_records(report["data"])).rstrip("\n"))
    if report.get("diagnostics") and "quantile_residuals" in report["diagnostics"]:
        q = report["diagnostics"]["quantile_residuals"]
        lines.append(f"K-S on quantile residuals: D = {_fmt(q['ks_statistic'])}, p = {_fmt(q['ks_p_value'])}")
    return "\n".join(lines) + "\n"


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (FamilyName, Setting)):
        return o.value
    raise TypeError(f"not serialisable: {type(o).__name__}")


def _clean(o):
    # non-finite floats become null so the output is strict JSON
    if isinstance(o, float):
        return o if math.isfinite(o) else None
    if isinstance(o, dict):
        return {k: _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    return o


def to_json(report: dict) -> str:
    return json.dumps(_clean(json.loads(json.dumps(report, default=_json_default))), indent=2, allow_nan=False) + "\n"


# argument parsing ----------------------------------------------------------------------------


def _column(text: str):
    return int(text) if text.isdigit() else text


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="discrete-bilal", description="Discrete Bilal lifetime models.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, data=True):
        if data:
            p.add_argument("--data", required=True, help="CSV path or builtin:ID (leukemia, pelvic)")
            p.add_argument("--time-col", type=_column, default="time", help="name or 0-based index")
            p.add_argument("--status-col", type=_column, default="status", help="name or 0-based index")
            p.add_argument("--status-censored-value", type=int, default=None,
                           help="status value meaning censored; all other values are events")
        p.add_argument("--output", choices=_FORMATS, default="json")
        p.add_argument("--out", default=None, help="write output here instead of stdout")
        p.add_argument("--seed", type=int, default=0)

    families = [f.value for f in FamilyName]
    settings = [s.value for s in Setting]
    for name in ("fit", "diagnose"):
        p = sub.add_parser(name)
        common(p)
        p.add_argument("--family", choices=families + (["all"] if name == "fit" else []), default="db")
        p.add_argument("--setting", choices=settings, default="censored")

    p = sub.add_parser("bayes")
    common(p)
    p.add_argument("--family", choices=["db"], default="db")
    p.add_argument("--setting", choices=settings, default="censored")
    p.add_argument("--iterations", type=int, default=McmcConfig.iterations)
    p.add_argument("--burn-in", type=int, default=McmcConfig.burn_in)
    p.add_argument("--thin", type=int, default=McmcConfig.thin)
    p.add_argument("--proposal-scale", type=float, default=None)
    p.add_argument("--prior-beta", type=float, nargs=2, metavar=("SHAPE", "RATE"), default=(0.001, 0.001))
    p.add_argument("--prior-eta", type=float, nargs=2, metavar=("A", "B"), default=(1.0, 1.0))
    p.add_argument("--include-draws", action="store_true")

    p = sub.add_parser("simulate")
    common(p, data=False)
    p.add_argument("--family", choices=["db"], default="db")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--censor-admin", type=int, default=None, help="censor every time above this value")
    p.add_argument("--eta", type=float, default=0.0, help="cured fraction")

    p = sub.add_parser("km")
    common(p)
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    kw = {k: v for k, v in vars(ns).items() if k in {f.name for f in dataclasses.fields(RunConfig)}}
    if ns.command == "bayes":
        kw["mcmc"] = McmcConfig(ns.iterations, ns.burn_in, ns.thin, ns.seed, ns.proposal_scale)
        kw["prior"] = PriorSpec(tuple(ns.prior_beta), tuple(ns.prior_eta))
    if ns.command == "simulate":
        kw["setting"] = "censored"
    return RunConfig(**kw)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _error(category: str, exc: BaseException, code: int) -> int:
    err = {"category": category, "type": type(exc).__name__, "message": str(exc)}
    for attr in ("line", "row"):
        if getattr(exc, attr, None) is not None:
            err[attr] = getattr(exc, attr)
    sys.stderr.write(json.dumps({"error": err}) + "\n")
    return code


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = config_from_args(ns)
        code, report, csv_text = run(cfg)
    except ConvergenceFailure as exc:
        # the partial report is still useful; emit it before the error
        if cfg.output == "json":
            _emit(to_json(exc.report), cfg.out)
        return _error("convergence_failure", exc, EXIT_CONVERGENCE)
    except (DataError, ValueError, OSError) as exc:
        return _error("input_error", exc, EXIT_INPUT)
    except InvariantViolation as exc:
        return _error("invariant_violation", exc, EXIT_INTERNAL)
    except Exception as exc:  # noqa: BLE001 - anything else is a bug
        return _error("internal_error", exc, EXIT_INTERNAL)

    if cfg.output == "json":
        text = to_json(report)
    elif cfg.output == "text":
        text = render_text(report)
    else:
        text = csv_text if csv_text is not None else ""
    _emit(text, cfg.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
