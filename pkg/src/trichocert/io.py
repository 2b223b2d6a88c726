"""JSON and CSV formats used by the command line."""

from __future__ import annotations

import csv
import json
import sys

import numpy as np

from .qubit import Scenario, ValidationError
from .validation import check_correlation_matrix


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def write_json(obj, path=None):
    text = dumps(obj)
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _load(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from None


def correlation_to_dict(P) -> dict:
    return {"matrix": np.asarray(P, dtype=float).tolist()}


def read_correlation_json(path) -> np.ndarray:
    """Read ``{"matrix": [[...], [...], [...]]}``."""
    data = _load(path)
    if not isinstance(data, dict) or "matrix" not in data:
        raise ValidationError(f"{path}: expected an object with key 'matrix'")
    return check_correlation_matrix(data["matrix"])


def read_scenario_json(path) -> Scenario:
    return Scenario.from_dict(_load(path))


def write_csv(path, header, rows):
    fh = sys.stdout if path is None or path == "-" else open(path, "w", newline="")
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                             for v in row])
    finally:
        if fh is not sys.stdout:
            fh.close()


def read_data_csv(path) -> np.ndarray:
    """Numeric matrix from a CSV file whose first row is a header."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ValidationError(f"{path}: need a header row and at least one data row")
    try:
        data = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
    except ValueError as exc:
        raise ValidationError(f"{path}: non-numeric entry ({exc})") from None
    if data.ndim != 2 or data.shape[1] != len(rows[0]):
        raise ValidationError(f"{path}: rows do not match the header width {len(rows[0])}")
    return data
