"""CSV and JSON serialization.

Panels are stored time-major: the first row is a header of series ids, the
first column holds time labels, and the body is T rows by N columns.
Floats are written with `repr`, the shortest decimal that parses back to
the same double, so write-then-read is lossless and writing a file we read
reproduces it byte for byte.  Missing data is not supported: any cell that
does not parse as a finite number is rejected with its location.
"""

from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path

import numpy as np

from .exceptions import DegenerateDataError
from .projection import PanelData


def format_value(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _parse_cell(cell: str, row: int, col: int, path) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise DegenerateDataError(
            f"{path}: cell at row {row}, column {col} is not numeric: {cell!r}"
        ) from None
    if not math.isfinite(value):
        raise DegenerateDataError(
            f"{path}: non-finite cell at row {row}, column {col}: {cell!r} "
            "(missing data is not supported)"
        )
    return value


def read_panel(path) -> PanelData:
    """Read a time-major panel CSV into the internal N x T layout."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise DegenerateDataError(f"{path}: file is empty")
    header = rows[0]
    series_ids = [c.strip() for c in header[1:]]
    if len(rows) == 1:
        raise DegenerateDataError(f"{path}: header only, the panel has no observations")
    if not series_ids:
        raise DegenerateDataError(f"{path}: header names no series")
    n = len(series_ids)
    time_ids = []
    body = np.empty((len(rows) - 1, n))
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != n + 1:
            raise DegenerateDataError(
                f"{path}: row {i} has {len(row)} cells, expected {n + 1}"
            )
        time_ids.append(row[0].strip())
        for j, cell in enumerate(row[1:], start=2):
            body[i - 2, j - 2] = _parse_cell(cell, i, j, path)
    return PanelData(X=body.T, series_ids=series_ids, time_ids=time_ids)


def write_panel(path, panel: PanelData) -> None:
    """Write a panel in the time-major CSV layout read by :func:`read_panel`."""
    path = Path(path)
    n, t = panel.n_series, panel.n_periods
    series = panel.series_ids or [f"s{i + 1}" for i in range(n)]
    times = panel.time_ids or [str(j + 1) for j in range(t)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", *series])
        for j in range(t):
            writer.writerow([times[j], *(format_value(v) for v in panel.X[:, j])])


def read_series(path):
    """Read a (time, value) CSV; returns (labels, values)."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DegenerateDataError(f"{path}: file is empty")
    if len(rows) == 1:
        raise DegenerateDataError(f"{path}: header only, the series has no observations")
    labels, values = [], []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise DegenerateDataError(f"{path}: row {i} has {len(row)} cells, expected 2")
        labels.append(row[0].strip())
        values.append(_parse_cell(row[1], i, 2, path))
    return labels, np.asarray(values)


def write_series(path, values, labels=None, value_name: str = "value") -> None:
    values = np.asarray(values, dtype=float).ravel()
    labels = labels or [str(j + 1) for j in range(values.size)]
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["time", value_name])
        for lab, v in zip(labels, values):
            writer.writerow([lab, format_value(v)])


def write_matrix(path, values, row_labels=None, col_labels=None, corner: str = "row") -> None:
    """Write a labelled dense matrix CSV."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    n, k = values.shape
    row_labels = row_labels or [f"r{i + 1}" for i in range(n)]
    col_labels = col_labels or [f"c{j + 1}" for j in range(k)]
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([corner, *col_labels])
        for i in range(n):
            writer.writerow([row_labels[i], *(format_value(v) for v in values[i])])


def write_sparse_triplets(path, values) -> None:
    """Write the nonzero entries of a matrix as (i, j, value) rows, 1-based."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "value"])
        for i, j in zip(*np.nonzero(values)):
            writer.writerow([int(i) + 1, int(j) + 1, format_value(values[i, j])])


def write_rows_csv(path, fieldnames, rows) -> None:
    """Write a list of dict rows with deterministic formatting."""
    with open(Path(path), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([format_value(row[name]) for name in fieldnames])


def write_json(path, payload) -> None:
    def default(obj):
        if isinstance(obj, np.ndarray):
            return obj.tolist()
        if isinstance(obj, (np.integer,)):
            return int(obj)
        if isinstance(obj, (np.floating,)):
            return float(obj)
        if isinstance(obj, (np.bool_,)):
            return bool(obj)
        raise TypeError(f"cannot serialize {type(obj)!r}")

    with open(Path(path), "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=default)
        fh.write("\n")


def ensure_outdir(out) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise DegenerateDataError(f"output directory {path} is not writable")
    return path
