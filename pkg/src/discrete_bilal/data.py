"""Right-censored discrete survival data and its CSV representation."""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import Iterable

import numpy as np

__all__ = ["DataError", "SurvivalDataset", "CureParams", "read_csv", "write_csv"]


class DataError(ValueError):
    """Malformed or invalid survival data.

    ``line`` is the 1-based file line and ``row`` the 1-based data row
    (header excluded), when known.
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        self.row = line - 1 if line is not None and line > 1 else None
        if self.row is not None:
            message = f"row {self.row} (line {line}): {message}"
        elif line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class SurvivalDataset:
    """Integer event/censoring times with indicators (1 = event, 0 = censored)."""

    time: np.ndarray
    status: np.ndarray

    def __post_init__(self) -> None:
        time = np.asarray(self.time)
        status = np.asarray(self.status)
        if time.ndim != 1 or status.shape != time.shape:
            raise DataError("time and status must be 1-d arrays of equal length")
        if time.size == 0:
            raise DataError("dataset is empty")
        if time.dtype.kind == "f":
            if not np.all(np.isfinite(time)) or np.any(time != np.round(time)):
                raise DataError("times must be integers")
        elif time.dtype.kind not in "iu":
            raise DataError(f"times must be integers, got dtype {time.dtype}")
        if np.any(time < 0):
            raise DataError("times must be non-negative")
        if not np.all(np.isin(status, (0, 1))):
            raise DataError("status values must be 0 or 1")
        time = time.astype(np.int64)
        status = status.astype(np.int8)
        time.setflags(write=False)
        status.setflags(write=False)
        object.__setattr__(self, "time", time)
        object.__setattr__(self, "status", status)

    @classmethod
    def from_records(cls, records: Iterable[tuple[int, int]]) -> "SurvivalDataset":
        records = list(records)
        return cls(np.array([r[0] for r in records]), np.array([r[1] for r in records]))

    @classmethod
    def complete(cls, times) -> "SurvivalDataset":
        times = np.asarray(times)
        return cls(times, np.ones(times.shape, dtype=np.int8))

    @property
    def n(self) -> int:
        return int(self.time.size)

    @property
    def n_events(self) -> int:
        return int(self.status.sum())

    @property
    def n_censored(self) -> int:
        return self.n - self.n_events

    @property
    def is_complete(self) -> bool:
        return self.n_events == self.n

    def require_events(self) -> None:
        """Raise if the data cannot identify a lifetime parameter."""
        if self.n_events == 0:
            raise DataError("all observations are censored; the parameter is not identifiable")

    def records(self) -> list[tuple[int, int]]:
        return list(zip(self.time.tolist(), self.status.tolist()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, SurvivalDataset):
            return NotImplemented
        return np.array_equal(self.time, other.time) and np.array_equal(self.status, other.status)

    def __len__(self) -> int:
        return self.n

    def summary(self) -> dict:
        return {
            "n": self.n,
            "events": self.n_events,
            "censored": self.n_censored,
            "min_time": int(self.time.min()),
            "max_time": int(self.time.max()),
        }


@dataclass(frozen=True)
class CureParams:
    """Cure-mixture parameters: DB ``beta > 0`` and cured fraction ``0 <= eta < 1``."""

    beta: float
    eta: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be finite and > 0, got {self.beta!r}")
        if not (math.isfinite(self.eta) and 0.0 <= self.eta < 1.0):
            raise ValueError(f"eta must lie in [0, 1), got {self.eta!r}")


def _resolve_column(header: list[str], col: str | int, what: str) -> int:
    if isinstance(col, int):
        idx = col
    elif col in header:
        return header.index(col)
    else:
        try:
            idx = int(col)
        except ValueError:
            raise DataError(f"{what} column {col!r} not found in header {header}", line=1) from None
    if not 0 <= idx < len(header):
        raise DataError(f"{what} column index {idx} out of range for {len(header)} columns", line=1)
    return idx


def _parse_int(text: str, what: str, line: int) -> int:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"{what} value {text!r} is not a number", line=line) from None
    if not math.isfinite(value) or value != int(value):
        raise DataError(f"{what} value {text!r} is not an integer", line=line)
    return int(value)


def read_csv(
    source,
    time_col: str | int = "time",
    status_col: str | int = "status",
    status_censored_value: int | None = None,
) -> SurvivalDataset:
    """Read a dataset from a CSV file path or text stream.

    The first row is a header; columns are chosen by name or 0-based index.
    Times must be written as integers (``3`` or ``3.0``, never ``3.5``).
    Status is ``1`` for an event and ``0`` for censoring unless
    ``status_censored_value`` is given, in which case that value marks
    censoring and every other value an event.

    Errors carry the 1-based line number of the offending row in the file.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="") as fh:
            return read_csv(fh, time_col, status_col, status_censored_value)

    reader = csv.reader(source)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError("file is empty", line=1) from None
    ti = _resolve_column(header, time_col, "time")
    si = _resolve_column(header, status_col, "status")

    times, status = [], []
    for line, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) <= max(ti, si):
            raise DataError(f"expected at least {max(ti, si) + 1} columns, got {len(row)}", line=line)
        t = _parse_int(row[ti], "time", line)
        if t < 0:
            raise DataError(f"time value {t} is negative", line=line)
        s = _parse_int(row[si], "status", line)
        if status_censored_value is not None:
            s = 0 if s == status_censored_value else 1
        elif s not in (0, 1):
            raise DataError(f"status value {s} is not 0 or 1", line=line)
        times.append(t)
        status.append(s)
    if not times:
        raise DataError("no data rows")
    return SurvivalDataset(np.array(times, dtype=np.int64), np.array(status, dtype=np.int8))


def write_csv(data: SurvivalDataset, dest=None) -> str | None:
    """Write ``time,status`` rows. Returns the text if ``dest`` is None."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["time", "status"])
    writer.writerows(data.records())
    text = buf.getvalue()
    if dest is None:
        return text
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="") as fh:
            fh.write(text)
    else:
        dest.write(text)
    return None
