"""CSV/JSON ingestion and atomic export."""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .model import Dataset


def _is_number(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def _rows(path) -> list[list[str]]:
    with open(path, newline="") as fh:
        rows = [[c.strip() for c in r] for r in csv.reader(fh) if any(c.strip() for c in r)]
    if not rows:
        raise ValueError(f"{path}: file is empty")
    return rows


def read_dataset(path) -> Dataset:
    """Comma-separated numeric table; a non-numeric first row is taken as the header."""
    rows = _rows(path)
    names = None
    if not all(_is_number(c) for c in rows[0]):
        names, rows = rows[0], rows[1:]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise ValueError(f"{path}: row {i} has {len(r)} fields, expected {width}")
    try:
        Y = np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric entry ({exc})") from None
    if names is not None and len(names) != width:
        raise ValueError(f"{path}: header has {len(names)} names for {width} columns")
    return Dataset(Y, names)


def read_labels(path) -> np.ndarray:
    """First column of a label file (header optional); ints when possible."""
    rows = _rows(path)
    col = [r[0] for r in rows]
    if not _is_number(col[0]) and len(col) > 1 and all(_is_number(c) for c in col[1:]):
        col = col[1:]
    elif not _is_number(col[0]) and col[0].lower() in ("label", "labels", "class", "truth", "species", "y"):
        col = col[1:]
    if all(_is_number(c) and float(c).is_integer() for c in col):
        return np.array([int(float(c)) for c in col])
    return np.array(col)


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _atomic_write(path: Path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header, rows):
    lines = [",".join(header)] if header else []
    lines += [",".join(_fmt(v) for v in r) for r in rows]
    _atomic_write(path, "\n".join(lines) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj):
    _atomic_write(path, json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
