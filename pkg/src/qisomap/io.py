"""CSV readers and writers for matrices and point sets."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return "%.17g" % v


def write_matrix(path, M) -> None:
    """Comma-separated rows, no header, ``inf`` for non-edges."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in M:
            w.writerow([_fmt(v) for v in row])


def read_matrix(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [[float(x) for x in row] for row in csv.reader(fh) if row]
    return np.array(rows, dtype=float)


def write_points(path, X) -> None:
    X = np.asarray(X, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{k}" for k in range(X.shape[1])])
        for row in X:
            w.writerow([_fmt(v) for v in row])


def read_points(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader if row]
    X = np.array(rows, dtype=float).reshape(-1, len(header))
    return X


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
