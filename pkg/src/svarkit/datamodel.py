"""Dataset representation, CSV ingestion, and deterministic column transforms.

Conventions fixed here and relied on everywhere else:

* rows are time (oldest first), columns are variables;
* values are finite floats; any gap or non-numeric cell is an error,
  never imputed;
* mixed transforms align by truncating every column to the shortest
  post-transform length from the top, which preserves contemporaneous
  alignment.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, IoError, ParseError, ShapeError


@dataclass(frozen=True)
class TimeSeriesDataset:
    """A T-by-d observation matrix with variable names and an optional time index."""

    values: np.ndarray
    names: tuple[str, ...]
    index: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ShapeError(f"values must be 2-dimensional, got shape {values.shape}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))
        t, d = values.shape
        if t < 1 or d < 1:
            raise ShapeError(f"need at least one row and one column, got {values.shape}")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise ShapeError(f"non-finite entry at row {bad[0]}, column {bad[1]}")
        if len(self.names) != d:
            raise ShapeError(f"{len(self.names)} names for {d} columns")
        if len(set(self.names)) != d:
            raise ShapeError("variable names must be unique")
        if self.index is not None:
            object.__setattr__(self, "index", tuple(str(i) for i in self.index))
            if len(self.index) != t:
                raise ShapeError(f"index length {len(self.index)} != {t} rows")

    @property
    def nobs(self) -> int:
        return self.values.shape[0]

    @property
    def nvar(self) -> int:
        return self.values.shape[1]

    def column(self, name: str) -> int:
        """Position of a named variable."""
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(name) from None


_SIMPLE_OPS = ("none", "log", "demean")


@dataclass(frozen=True)
class TransformSpec:
    """Per-column operations: ``none``, ``log``, ``demean``, or ``diff`` of order k.

    ``ops`` holds one ``(tag, order)`` pair per column; ``order`` is only
    meaningful for ``diff`` and must be >= 1.
    """

    ops: tuple[tuple[str, int], ...]

    def __post_init__(self):
        norm = []
        for op in self.ops:
            tag, order = op
            if tag in _SIMPLE_OPS:
                norm.append((tag, 0))
            elif tag == "diff":
                if order < 1:
                    raise ShapeError(f"diff order must be >= 1, got {order}")
                norm.append(("diff", int(order)))
            else:
                raise ShapeError(f"unknown transform {tag!r}")
        object.__setattr__(self, "ops", tuple(norm))

    @classmethod
    def parse(cls, text: str) -> "TransformSpec":
        """Parse a comma-separated spec such as ``"log,diff,none"`` or ``"diff:2,demean"``."""
        ops = []
        for token in text.split(","):
            token = token.strip()
            if token in _SIMPLE_OPS:
                ops.append((token, 0))
            elif token == "diff":
                ops.append(("diff", 1))
            elif token.startswith("diff:"):
                ops.append(("diff", int(token.split(":", 1)[1])))
            else:
                raise ShapeError(f"unknown transform token {token!r}")
        return cls(tuple(ops))

    @classmethod
    def none(cls, d: int) -> "TransformSpec":
        return cls(tuple(("none", 0) for _ in range(d)))


def load_csv(path: str, has_header: bool = True, index_col: int | None = None) -> TimeSeriesDataset:
    """Read a UTF-8, comma-separated file into a dataset.

    The optional leftmost index column is kept as opaque row labels and
    never parsed as data. Every data cell must parse as a finite real;
    ragged rows raise ``ShapeError`` and bad cells ``ParseError`` with
    their 0-based data-matrix coordinates.
    """
    if not os.path.isfile(path):
        raise IoError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ShapeError(f"{path} contains no rows")

    header: list[str] | None = None
    if has_header:
        header = rows[0]
        rows = rows[1:]
        if not rows:
            raise ShapeError(f"{path} has a header but no data rows")

    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ShapeError(f"row {i} has {len(row)} cells, expected {width}")

    index: list[str] | None = None
    data_rows = rows
    if index_col is not None:
        if index_col != 0:
            raise ShapeError("only a leftmost index column is supported")
        index = [row[0] for row in rows]
        data_rows = [row[1:] for row in rows]
        if header is not None:
            header = header[1:]
        width -= 1
    if width < 1:
        raise ShapeError("no data columns")

    values = np.empty((len(data_rows), width), dtype=float)
    for i, row in enumerate(data_rows):
        for j, cell in enumerate(row):
            try:
                x = float(cell)
            except ValueError:
                raise ParseError(f"cell {cell!r} at row {i}, column {j} is not numeric", i, j) from None
            if not math.isfinite(x):
                raise ParseError(f"non-finite cell {cell!r} at row {i}, column {j}", i, j)
            values[i, j] = x

    if header is not None:
        names = tuple(h.strip() for h in header)
    else:
        names = tuple(f"v{j + 1}" for j in range(width))
    return TimeSeriesDataset(values, names, tuple(index) if index is not None else None)


def transform(ds: TimeSeriesDataset, spec: TransformSpec) -> TimeSeriesDataset:
    """Apply per-column transforms and re-align rows.

    Differencing shortens a column from the top; all columns are then
    truncated to the common (shortest) length before demeaning, so
    demeaned columns have exactly zero mean in the returned dataset.
    """
    if len(spec.ops) != ds.nvar:
        raise ShapeError(f"spec has {len(spec.ops)} ops for {ds.nvar} columns")

    max_drop = max((k for tag, k in spec.ops if tag == "diff"), default=0)
    if max_drop >= ds.nobs:
        raise ShapeError(f"diff order {max_drop} leaves no rows out of {ds.nobs}")

    t_out = ds.nobs - max_drop
    out = np.empty((t_out, ds.nvar), dtype=float)
    for j, (tag, k) in enumerate(spec.ops):
        col = ds.values[:, j]
        if tag == "log":
            if np.any(col <= 0.0):
                raise DomainError(f"log of non-positive value in column {ds.names[j]!r}")
            col = np.log(col)
        elif tag == "diff":
            col = np.diff(col, n=k)
        out[:, j] = col[-t_out:]
    for j, (tag, _) in enumerate(spec.ops):
        if tag == "demean":
            out[:, j] -= out[:, j].mean()

    index = ds.index[-t_out:] if ds.index is not None else None
    return TimeSeriesDataset(out, ds.names, index)
