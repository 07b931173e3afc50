"""Discrete Bilal lifetime distribution: estimation, diagnostics and a CLI."""

__version__ = "0.1.0"

from discrete_bilal.data import CureParams, DataError, SurvivalDataset, read_csv, write_csv  # noqa: E402
from discrete_bilal.distribution import (  # noqa: E402
    DbParam,
    cdf,
    hazard,
    logpmf,
    mean,
    pmf,
    sample,
    survival,
    variance,
)
from discrete_bilal.mle import FitResult, Setting, fit_ml  # noqa: E402
from discrete_bilal.bayes import McmcConfig, PosteriorChain, PriorSpec, run_mcmc  # noqa: E402

__all__ = [
    "__version__",
    "CureParams",
    "DataError",
    "SurvivalDataset",
    "read_csv",
    "write_csv",
    "DbParam",
    "pmf",
    "logpmf",
    "survival",
    "cdf",
    "hazard",
    "mean",
    "variance",
    "sample",
    "FitResult",
    "Setting",
    "fit_ml",
    "McmcConfig",
    "PriorSpec",
    "PosteriorChain",
    "run_mcmc",
]
