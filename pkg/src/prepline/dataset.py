"""Tabular datasets: CSV ingestion, column statistics, seeded splitting.

Cells are finite floats (numeric columns), text tokens (categorical
columns), or ``None`` for missing.  Missingness is first-class; no NaN
sentinels ever live inside a dataset.  Datasets are immutable after
construction and safe to share across threads.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSplit, FormatError, IoError
from .rng import SeededRng

NUMERIC = "numeric"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class Column:
    name: str
    kind: str
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise ValueError(f"unknown column kind {self.kind!r}")
        if self.kind == NUMERIC:
            for v in self.values:
                if v is None:
                    continue
                if not isinstance(v, float) or not math.isfinite(v):
                    raise ValueError(
                        f"numeric column {self.name!r} holds non-finite or non-float cell {v!r}"
                    )


@dataclass(frozen=True)
class Dataset:
    name: str
    columns: tuple[Column, ...]
    row_count: int

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate column names in dataset {self.name!r}")
        for c in self.columns:
            if len(c.values) != self.row_count:
                raise ValueError(
                    f"column {c.name!r} has {len(c.values)} values, expected {self.row_count}"
                )

    def column(self, name):
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def has_column(self, name):
        return any(c.name == name for c in self.columns)

    @property
    def column_names(self):
        return [c.name for c in self.columns]


@dataclass(frozen=True)
class ColumnStats:
    missing_ratio: float = 0.0
    zero_ratio: float = 0.0
    mean: float = 0.0
    std: float = 0.0
    min: float = 0.0
    q25: float = 0.0
    median: float = 0.0
    q75: float = 0.0
    max: float = 0.0
    skewness: float = 0.0
    kurtosis: float = 0.0
    distinct_ratio: float = 0.0
    outlier_ratio: float = 0.0

    FIELDS = (
        "missing_ratio", "zero_ratio", "mean", "std", "min", "q25",
        "median", "q75", "max", "skewness", "kurtosis", "distinct_ratio",
        "outlier_ratio",
    )


def make_dataset(name, columns):
    cols = tuple(columns)
    n = len(cols[0].values) if cols else 0
    return Dataset(name=name, columns=cols, row_count=n)


def numeric_values(col: Column) -> np.ndarray:
    """Non-missing cells of a numeric column as a float64 array."""
    return np.array([v for v in col.values if v is not None], dtype=np.float64)


def _parse_float(text):
    try:
        v = float(text)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def _infer_column(name, raw_cells):
    parsed = []
    numeric = True
    for cell in raw_cells:
        if cell == "":
            parsed.append(None)
            continue
        v = _parse_float(cell)
        if v is None:
            numeric = False
            break
        parsed.append(v)
    if numeric:
        return Column(name=name, kind=NUMERIC, values=tuple(parsed))
    values = tuple(None if c == "" else c for c in raw_cells)
    return Column(name=name, kind=CATEGORICAL, values=values)


def _coerce_column(name, raw_cells, kind):
    if kind == CATEGORICAL:
        return Column(name, CATEGORICAL, tuple(None if c == "" else c for c in raw_cells))
    values = []
    for cell in raw_cells:
        if cell == "":
            values.append(None)
            continue
        v = _parse_float(cell)
        if v is None:
            raise FormatError(f"column {name!r} declared numeric but holds {cell!r}")
        values.append(v)
    return Column(name, NUMERIC, tuple(values))


def from_csv_text(text, name="dataset", label_hint=None, kinds=None):
    """Parse CSV text; ``kinds`` (aligned to the header) skips inference."""
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise FormatError("empty CSV: header row is mandatory")
    header = rows[0]
    if len(set(header)) != len(header):
        raise FormatError("duplicate header names")
    width = len(header)
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise FormatError(f"ragged row {i}: expected {width} cells, got {len(row)}")
    body = rows[1:]
    if kinds is not None and len(kinds) != width:
        raise FormatError(f"{len(kinds)} column kinds for {width} columns")
    columns = [
        _infer_column(h, [row[j] for row in body])
        if kinds is None
        else _coerce_column(h, [row[j] for row in body], kinds[j])
        for j, h in enumerate(header)
    ]
    ds = make_dataset(name, columns)
    if label_hint is not None and not ds.has_column(label_hint):
        raise FormatError(f"label column {label_hint!r} not present")
    return ds


def load_csv(path, label_hint=None):
    """Ingest an RFC-4180-style CSV with a mandatory header row.

    A column is numeric iff every non-empty cell parses as a finite
    float; empty cells become missing; row and column order preserved.
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror or exc}") from exc
    name = os.path.splitext(os.path.basename(str(path)))[0]
    return from_csv_text(text, name=name, label_hint=label_hint)


def _format_cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv_text(d: Dataset) -> str:
    """Serialize with round-trip-safe float formatting (repr)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(d.column_names)
    for i in range(d.row_count):
        writer.writerow([_format_cell(c.values[i]) for c in d.columns])
    return buf.getvalue()


def write_csv(d: Dataset, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(to_csv_text(d))


def csv_byte_size(d: Dataset) -> int:
    return len(to_csv_text(d).encode("utf-8"))


def _quantile(sorted_vals, p):
    """Linear interpolation between closest ranks."""
    n = len(sorted_vals)
    if n == 1:
        return float(sorted_vals[0])
    pos = p * (n - 1)
    lo = int(math.floor(pos))
    hi = int(math.ceil(pos))
    if lo == hi:
        return float(sorted_vals[lo])
    frac = pos - lo
    return float(sorted_vals[lo] * (1.0 - frac) + sorted_vals[hi] * frac)


def column_stats(col: Column) -> ColumnStats:
    """Moments over non-missing cells; population variance convention.

    Degenerate rules: all-missing yields all-zero stats with
    missing_ratio 1; skewness/kurtosis are 0 when std is 0; kurtosis is
    excess (normal -> 0); outlier_ratio counts |z| > 3.
    """
    total = len(col.values)
    present = [v for v in col.values if v is not None]
    n = len(present)
    missing_ratio = (total - n) / total if total else 0.0
    if n == 0:
        return ColumnStats(missing_ratio=1.0 if total else 0.0)
    distinct_ratio = len(set(present)) / n
    if col.kind == CATEGORICAL:
        return ColumnStats(missing_ratio=missing_ratio, distinct_ratio=distinct_ratio)

    # moments run over the sorted array so stats are bit-identical
    # under any permutation of the rows
    arr = np.sort(np.array(present, dtype=np.float64))
    mean = float(arr.mean())
    var = float(((arr - mean) ** 2).mean())
    std = math.sqrt(var)
    srt = arr
    if std > 0.0:
        z = (arr - mean) / std
        skewness = float((z ** 3).mean())
        kurtosis = float((z ** 4).mean()) - 3.0
        outlier_ratio = float((np.abs(z) > 3.0).mean())
    else:
        skewness = kurtosis = outlier_ratio = 0.0
    return ColumnStats(
        missing_ratio=missing_ratio,
        zero_ratio=float((arr == 0.0).mean()),
        mean=mean,
        std=std,
        min=float(srt[0]),
        q25=_quantile(srt, 0.25),
        median=_quantile(srt, 0.5),
        q75=_quantile(srt, 0.75),
        max=float(srt[-1]),
        skewness=skewness,
        kurtosis=kurtosis,
        distinct_ratio=distinct_ratio,
        outlier_ratio=outlier_ratio,
    )


def split_indices(n, test_ratio, seed):
    """Fisher-Yates shuffle of row indices; last ceil(ratio*n) are test."""
    if not 0.0 < test_ratio < 1.0:
        raise DegenerateSplit(f"test_ratio {test_ratio} outside (0, 1)")
    if n < 2:
        raise DegenerateSplit(f"need at least 2 rows, got {n}")
    order = SeededRng(seed).shuffle(list(range(n)))
    n_test = math.ceil(test_ratio * n)
    if n_test >= n or n_test == 0:
        raise DegenerateSplit(f"split of {n} rows at ratio {test_ratio} leaves a side empty")
    return order[: n - n_test], order[n - n_test:]


def _take_rows(d: Dataset, idx):
    cols = [
        Column(name=c.name, kind=c.kind, values=tuple(c.values[i] for i in idx))
        for c in d.columns
    ]
    return make_dataset(d.name, cols)


def split(d: Dataset, test_ratio, seed):
    """Deterministic disjoint, exhaustive train/test row partition."""
    train_idx, test_idx = split_indices(d.row_count, test_ratio, seed)
    return _take_rows(d, train_idx), _take_rows(d, test_idx)
