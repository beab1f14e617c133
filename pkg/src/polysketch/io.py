"""Text matrix formats: a native whitespace layout and plain CSV.

Native format: first line ``d n``, then d lines of n space-separated reals
(row i of the d x n matrix).  CSV holds one data point per row (n rows of d
values) and is transposed on load.  Floats are written with 17 significant
digits, which round-trips float64 exactly.
"""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .data import DataMatrix
from .errors import MatrixParseError

__all__ = ["load_matrix", "load_vector", "save_matrix", "save_vector"]


def _parse_float(token: str, line_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise MatrixParseError(f"not a number: {token!r}", line_no) from None
    if not math.isfinite(value):
        raise MatrixParseError(f"non-finite value: {token!r}", line_no)
    return value


def _load_native(lines: list[str]) -> np.ndarray:
    if not lines:
        raise MatrixParseError("empty file", 1)
    header = lines[0].split()
    if len(header) != 2:
        raise MatrixParseError("expected header 'd n'", 1)
    try:
        d, n = int(header[0]), int(header[1])
    except ValueError:
        raise MatrixParseError("expected integer header 'd n'", 1) from None
    if d < 1 or n < 1:
        raise MatrixParseError("dimensions must be positive", 1)
    if len(lines) < d + 1:
        raise MatrixParseError(f"expected {d} data rows, found {len(lines) - 1}", len(lines))
    out = np.empty((d, n))
    for i in range(d):
        line_no = i + 2
        tokens = lines[i + 1].split()
        if len(tokens) != n:
            raise MatrixParseError(
                f"expected {n} values, found {len(tokens)}", line_no
            )
        out[i] = [_parse_float(t, line_no) for t in tokens]
    return out


def _load_csv(lines: list[str]) -> np.ndarray:
    rows: list[list[float]] = []
    width = None
    for line_no, record in enumerate(csv.reader(lines), start=1):
        if not record or all(not f.strip() for f in record):
            continue
        values = [_parse_float(f.strip(), line_no) for f in record]
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise MatrixParseError(
                f"expected {width} values, found {len(values)}", line_no
            )
        rows.append(values)
    if not rows:
        raise MatrixParseError("empty file", 1)
    # one data point per CSV row: transpose to columns-as-points
    return np.array(rows).T


def load_matrix(path: str | Path) -> DataMatrix:
    """Load a data matrix; CSV when the suffix is .csv, native otherwise."""
    path = Path(path)
    lines = path.read_text().splitlines()
    if path.suffix.lower() == ".csv":
        return DataMatrix(_load_csv(lines))
    return DataMatrix(_load_native(lines))


def save_matrix(X: DataMatrix, path: str | Path) -> None:
    """Write the native format with full float64 precision."""
    path = Path(path)
    rows = [f"{X.d} {X.n}"]
    for i in range(X.d):
        rows.append(" ".join(f"{v:.17g}" for v in X.values[i]))
    path.write_text("\n".join(rows) + "\n")


def load_vector(path: str | Path, expected_len: int | None = None) -> np.ndarray:
    """Load a whitespace-separated vector of reals."""
    tokens = Path(path).read_text().split()
    values = [_parse_float(t, 1) for t in tokens]
    if expected_len is not None and len(values) != expected_len:
        raise MatrixParseError(
            f"expected {expected_len} values, found {len(values)}", 1
        )
    return np.array(values)


def save_vector(v: np.ndarray, path: str | Path) -> None:
    Path(path).write_text(" ".join(f"{x:.17g}" for x in np.asarray(v)) + "\n")
