"""Bundled example datasets.

``leukemia``
    Remission times in weeks of the 21 placebo patients in the
    6-mercaptopurine trial of Freireich et al. (1963). No censoring.

``pelvic``
    Months to recurrence of pelvic tumours resected with marginal or
    intracapsular margins (Wang et al., 2015); 7 recurrences and 14
    censored follow-ups. The plateau of its Kaplan-Meier curve makes it a
    cure-fraction example.

A COVID-19 ventilation cohort (Paranjpe et al., 2020) is sometimes used with
these two. It is not bundled: the only public values were read off
published figures, so there is no authoritative listing to ship.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources

from discrete_bilal.data import SurvivalDataset, read_csv

__all__ = ["NamedDataset", "load_builtin", "builtin_ids", "fixture_sha256"]


@dataclass(frozen=True)
class NamedDataset:
    id: str
    description: str
    source_citation: str
    data: SurvivalDataset


_REGISTRY = {
    "leukemia": (
        "Remission times (weeks), acute leukaemia placebo arm, n=21, no censoring",
        "Freireich et al. (1963), 6-mercaptopurine remission-maintenance trial, placebo arm",
    ),
    "pelvic": (
        "Recurrence times (months), pelvic tumours with marginal/intracapsular margins, n=21",
        "Wang et al. (2015), modular hemipelvic endoprosthesis series, Sun Yat-Sen University, 2003-2013",
    ),
}


def builtin_ids() -> list[str]:
    return sorted(_REGISTRY)


def _fixture(dataset_id: str):
    if dataset_id not in _REGISTRY:
        raise KeyError(f"unknown dataset {dataset_id!r}; available: {', '.join(builtin_ids())}")
    return resources.files(__name__).joinpath(f"{dataset_id}.csv")


def fixture_sha256(dataset_id: str) -> str:
    return hashlib.sha256(_fixture(dataset_id).read_bytes()).hexdigest()


def load_builtin(dataset_id: str) -> NamedDataset:
    """Load a bundled dataset by id (``"leukemia"`` or ``"pelvic"``)."""
    path = _fixture(dataset_id)
    description, citation = _REGISTRY[dataset_id]
    with path.open("r", newline="") as fh:
        data = read_csv(fh)
    return NamedDataset(dataset_id, description, citation, data)
