"""File formats: parameter JSON documents and returns CSV.

Returns CSV: header row of asset names, one row per period, decimal
floats, comma-separated; an optional leading date column is ignored for
the math but preserved on round trips.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .exceptions import DataError
from .model import GhMstParams, params_from_dict, params_to_dict
from .nonparam import ReturnsMatrix

SCHEMA = "hop/v1"


def save_params(params: GhMstParams, path) -> None:
    doc = {"schema": SCHEMA, **params_to_dict(params)}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_params(path) -> GhMstParams:
    doc = json.loads(Path(path).read_text())
    return params_from_dict(doc)


def _looks_like_date(token: str) -> bool:
    try:
        float(token)
        return False
    except ValueError:
        return True


def read_returns_csv(path) -> ReturnsMatrix:
    """Parse a returns CSV; raises DataError with row/column diagnostics
    on malformed content."""
    path = Path(path)
    with path.open(newline="") as handle:
        rows = list(csv.reader(handle))
    rows = [row for row in rows if row and any(cell.strip() for cell in row)]
    if not rows:
        raise DataError(f"{path}: empty CSV")
    header = [cell.strip() for cell in rows[0]]
    body = rows[1:]
    if not body:
        raise DataError(f"{path}: no data rows")
    has_dates = bool(body) and _looks_like_date(body[0][0].strip())
    start_col = 1 if has_dates else 0
    names = header[start_col:]
    data = []
    dates = []
    for r, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DataError(
                f"{path}: row {r} has {len(row)} fields, expected {len(header)}"
            )
        if has_dates:
            dates.append(row[0].strip())
        values = []
        for c, cell in enumerate(row[start_col:], start=start_col + 1):
            try:
                values.append(float(cell))
            except ValueError:
                raise DataError(
                    f"{path}: row {r}, column {c}: not a number: {cell!r}"
                ) from None
        data.append(values)
    arr = np.asarray(data, dtype=float)
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise DataError(
            f"{path}: non-finite value at row {bad[0] + 2}, "
            f"column {bad[1] + start_col + 1}"
        )
    if arr.shape[0] < 2:
        raise DataError(f"{path}: need at least 2 data rows")
    rm = ReturnsMatrix(data=arr, asset_names=names or None)
    if dates:
        object.__setattr__(rm, "_dates", dates)
    return rm


def write_returns_csv(returns: ReturnsMatrix, path,
                      dates: list[str] | None = None) -> None:
    path = Path(path)
    n = returns.data.shape[1]
    names = returns.asset_names or [f"A{i + 1}" for i in range(n)]
    if dates is None:
        dates = getattr(returns, "_dates", None)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        if dates is not None:
            writer.writerow(["date", *names])
            for date, row in zip(dates, returns.data):
                writer.writerow([date, *(repr(float(v)) for v in row)])
        else:
            writer.writerow(names)
            for row in returns.data:
                writer.writerow([repr(float(v)) for v in row])


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def json_digest(obj) -> str:
    canonical = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
