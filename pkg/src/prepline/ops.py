"""Two-level operation catalog: logical families and physical operations.

Physical operations act on numeric columns only (categorical columns
pass through untouched), never mutate their input, and never produce a
non-finite float.  Degenerate denominators (std = 0, IQR = 0,
max = min) all map to 0 by convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import (
    CATEGORICAL,
    NUMERIC,
    Column,
    Dataset,
    _quantile,
    make_dataset,
    numeric_values,
)
from .errors import BadParam, EmptyResult
from .script import format_literal

IMPUTER = "Imputer"
OUTLIER_HANDLER = "OutlierHandler"
SCALER = "Scaler"
DISCRETIZER = "Discretizer"
FEATURE_GENERATOR = "FeatureGenerator"
FEATURE_SELECTOR = "FeatureSelector"

FAMILY_IDS = (
    IMPUTER, OUTLIER_HANDLER, SCALER, DISCRETIZER, FEATURE_GENERATOR, FEATURE_SELECTOR,
)


@dataclass(frozen=True)
class Prompt:
    text: str
    kind: str = "fine"  # fine | coarse | refinement | error_feedback

    def __post_init__(self):
        if not self.text:
            raise ValueError("prompt text must be non-empty")


@dataclass(frozen=True)
class LogicalFamily:
    id: str
    description: str
    coarse_prompt: str


@dataclass(frozen=True)
class PhysicalOperation:
    name: str
    family: str
    params: tuple  # (name, default) pairs
    dsl_template: str
    prompt_template: str

    def defaults(self):
        return dict(self.params)


FAMILIES = {
    IMPUTER: LogicalFamily(
        IMPUTER,
        "Fill in missing cells",
        "Impute the missing values",
    ),
    OUTLIER_HANDLER: LogicalFamily(
        OUTLIER_HANDLER,
        "Neutralize outlier cells",
        "Handle the outlier values",
    ),
    SCALER: LogicalFamily(
        SCALER,
        "Rescale feature magnitudes",
        "Scale the features",
    ),
    DISCRETIZER: LogicalFamily(
        DISCRETIZER,
        "Bucket continuous features",
        "Discretize the features",
    ),
    FEATURE_GENERATOR: LogicalFamily(
        FEATURE_GENERATOR,
        "Derive new feature columns",
        "Generate interaction features",
    ),
    FEATURE_SELECTOR: LogicalFamily(
        FEATURE_SELECTOR,
        "Drop uninformative feature columns",
        "Select the informative features",
    ),
}


def _op(name, family, params, prompt_template):
    return PhysicalOperation(
        name=name,
        family=family,
        params=tuple(params),
        dsl_template=f"{name}({{target}})",
        prompt_template=prompt_template,
    )


PHYSICAL_OPERATIONS = (
    _op("mean_impute", IMPUTER, (),
        "Impute missing values with the mean of each column"),
    _op("median_impute", IMPUTER, (),
        "Impute missing values with the median of each column"),
    _op("mode_impute", IMPUTER, (),
        "Impute missing values with the most frequent value of each column"),
    _op("const_impute", IMPUTER, (("v", 0),),
        "Impute missing values with the constant {v}"),
    _op("replace_value", OUTLIER_HANDLER, (("v", 0), ("stat", "median")),
        "Remove the outlier value {v} in columns {columns}, replacing it with the {stat} of each column"),
    _op("iqr_clip", OUTLIER_HANDLER, (("k", 1.5),),
        "Clip outliers outside {k} times the interquartile range"),
    _op("zscore_clip", OUTLIER_HANDLER, (("z", 3),),
        "Clip values more than {z} standard deviations from the mean"),
    _op("min_max_scale", SCALER, (),
        "Scale each feature to the [0, 1] range"),
    _op("standard_scale", SCALER, (),
        "Standardize features by removing the mean and scaling to unit variance"),
    _op("max_abs_scale", SCALER, (),
        "Scale each feature by its maximum absolute value"),
    _op("robust_scale", SCALER, (),
        "Scale features using the median and interquartile range"),
    _op("equal_width_bins", DISCRETIZER, (("k", 5),),
        "Discretize each feature into {k} equal-width bins"),
    _op("quantile_bins", DISCRETIZER, (("k", 5),),
        "Discretize each feature into {k} quantile bins"),
    _op("custom_bins", DISCRETIZER,
        (("edges", (0.0, 0.25, 0.5, 0.75, 1.0)), ("labels", ("b1", "b2", "b3", "b4"))),
        "Cut the features into bins with edges {edges} labeled {labels}"),
    _op("poly_features", FEATURE_GENERATOR, (("degree", 2),),
        "Generate polynomial features of degree {degree}"),
    _op("interactions_only", FEATURE_GENERATOR, (),
        "Generate pairwise interaction features"),
    _op("variance_threshold", FEATURE_SELECTOR, (("t", 0.0),),
        "Remove features with variance at or below {t}"),
    _op("correlation_filter", FEATURE_SELECTOR, (("r", 0.95),),
        "Remove one of each pair of features with correlation at least {r}"),
)

OPS_BY_NAME = {op.name: op for op in PHYSICAL_OPERATIONS}

# Canonical physical op per family, used when a coarse prompt must be
# realized deterministically (template backend).
FAMILY_DEFAULT_OP = {
    IMPUTER: "median_impute",
    OUTLIER_HANDLER: "replace_value",
    SCALER: "standard_scale",
    DISCRETIZER: "quantile_bins",
    FEATURE_GENERATOR: "poly_features",
    FEATURE_SELECTOR: "variance_threshold",
}

_PROMPT_CONTEXT_DEFAULTS = {"columns": "that contain it"}


def catalog():
    """The fixed catalog: (family, physical operations) in stable order."""
    return [
        (FAMILIES[fid], [op for op in PHYSICAL_OPERATIONS if op.family == fid])
        for fid in FAMILY_IDS
    ]


def all_ops():
    return list(PHYSICAL_OPERATIONS)


def family_of(op_name):
    op = OPS_BY_NAME.get(op_name)
    return op.family if op else None


def prompt_for(op_or_family, refinement=None, context=None) -> Prompt:
    """Render the fine prompt of a physical op or a family's coarse prompt.

    ``context`` supplies dataset-derived placeholders (e.g. {columns});
    refinement text is appended verbatim after a single space.
    """
    if isinstance(op_or_family, LogicalFamily):
        text = op_or_family.coarse_prompt
        kind = "coarse"
    else:
        fields = dict(_PROMPT_CONTEXT_DEFAULTS)
        fields.update(op_or_family.defaults())
        for key in ("edges", "labels"):
            if key in fields:
                fields[key] = format_literal(fields[key])
        if context:
            fields.update(context)
        text = op_or_family.prompt_template.format(**fields)
        kind = "fine"
    if refinement:
        text = f"{text} {refinement}"
        kind = "refinement"
    return Prompt(text=text, kind=kind)


# ---------------------------------------------------------------------------
# execution semantics


def _numeric_columns(d: Dataset):
    return [c for c in d.columns if c.kind == NUMERIC]


def _replace_column(d: Dataset, new_col: Column):
    cols = [new_col if c.name == new_col.name else c for c in d.columns]
    return make_dataset(d.name, cols)


def _map_present(col: Column, transform):
    """Apply an array transform to non-missing cells, preserving missing."""
    arr = numeric_values(col)
    if arr.size == 0:
        return col
    out = transform(arr)
    it = iter(np.asarray(out, dtype=np.float64).tolist())
    values = tuple(None if v is None else next(it) for v in col.values)
    return Column(col.name, NUMERIC, values)


def _fill_missing(col: Column, fill):
    values = tuple(fill if v is None else v for v in col.values)
    return Column(col.name, NUMERIC, values)


def _column_mean(arr):
    return float(arr.mean()) if arr.size else 0.0


def _column_median(arr):
    return _quantile(np.sort(arr), 0.5) if arr.size else 0.0


def _column_mode(arr):
    if not arr.size:
        return 0.0
    counts = {}
    for v in arr.tolist():
        counts[v] = counts.get(v, 0) + 1
    best = max(counts.items(), key=lambda kv: (kv[1], -kv[0]))
    return float(best[0])


def _stat_value(arr, stat):
    if stat == "mean":
        return _column_mean(arr)
    if stat == "median":
        return _column_median(arr)
    raise BadParam(f"unknown replacement statistic {stat!r}")


def _apply_imputer(d, fill_of):
    cols = []
    for c in d.columns:
        if c.kind != NUMERIC or all(v is not None for v in c.values):
            cols.append(c)
            continue
        cols.append(_fill_missing(c, fill_of(numeric_values(c))))
    return make_dataset(d.name, cols)


def op_mean_impute(d):
    return _apply_imputer(d, _column_mean)


def op_median_impute(d):
    return _apply_imputer(d, _column_median)


def op_mode_impute(d):
    return _apply_imputer(d, _column_mode)


def op_const_impute(d, v):
    return _apply_imputer(d, lambda arr: float(v))


def op_replace_value(d, v, stat):
    sentinel = float(v)
    cols = []
    for c in d.columns:
        if c.kind != NUMERIC:
            cols.append(c)
            continue
        others = np.array([x for x in c.values if x is not None and x != sentinel])
        replacement = _stat_value(others, stat) if others.size else None
        values = tuple(
            replacement if (x is not None and x == sentinel) else x for x in c.values
        )
        cols.append(Column(c.name, NUMERIC, values))
    return make_dataset(d.name, cols)


def _clip_transform(lo, hi):
    return lambda arr: np.clip(arr, lo, hi)


def op_iqr_clip(d, k):
    k = float(k)
    cols = []
    for c in d.columns:
        if c.kind != NUMERIC:
            cols.append(c)
            continue
        arr = numeric_values(c)
        if arr.size == 0:
            cols.append(c)
            continue
        srt = np.sort(arr)
        q25, q75 = _quantile(srt, 0.25), _quantile(srt, 0.75)
        iqr = q75 - q25
        cols.append(_map_present(c, _clip_transform(q25 - k * iqr, q75 + k * iqr)))
    return make_dataset(d.name, cols)


def op_zscore_clip(d, z):
    z = float(z)
    cols = []
    for c in d.columns:
        if c.kind != NUMERIC:
            cols.append(c)
            continue
        arr = numeric_values(c)
        if arr.size == 0:
            cols.append(c)
            continue
        mean = arr.mean()
        std = math.sqrt(((arr - mean) ** 2).mean())
        cols.append(_map_present(c, _clip_transform(mean - z * std, mean + z * std)))
    return make_dataset(d.name, cols)


def _scale_dataset(d, make_transform):
    cols = []
    for c in d.columns:
        if c.kind != NUMERIC:
            cols.append(c)
            continue
        arr = numeric_values(c)
        if arr.size == 0:
            cols.append(c)
            continue
        cols.append(_map_present(c, make_transform(arr)))
    return make_dataset(d.name, cols)


def op_min_max_scale(d):
    def make(arr):
        lo, hi = arr.min(), arr.max()
        if hi == lo:
            return lambda a: np.zeros_like(a)
        return lambda a: (a - lo) / (hi - lo)

    return _scale_dataset(d, make)


def op_standard_scale(d):
    def make(arr):
        mean = arr.mean()
        std = math.sqrt(((arr - mean) ** 2).mean())
        if std == 0.0:
            return lambda a: np.zeros_like(a)
        return lambda a: (a - mean) / std

    return _scale_dataset(d, make)


def op_max_abs_scale(d):
    def make(arr):
        m = np.abs(arr).max()
        if m == 0.0:
            return lambda a: np.zeros_like(a)
        return lambda a: a / m

    return _scale_dataset(d, make)


def op_robust_scale(d):
    def make(arr):
        srt = np.sort(arr)
        med = _quantile(srt, 0.5)
        iqr = _quantile(srt, 0.75) - _quantile(srt, 0.25)
        if iqr == 0.0:
            return lambda a: np.zeros_like(a)
        return lambda a: (a - med) / iqr

    return _scale_dataset(d, make)


def _check_bin_count(k):
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise BadParam(f"bin count must be a positive integer, got {k!r}")
    return k


def op_equal_width_bins(d, k):
    k = _check_bin_count(k)

    def make(arr):
        lo, hi = arr.min(), arr.max()
        if hi == lo:
            return lambda a: np.zeros_like(a)
        width = (hi - lo) / k
        return lambda a: np.clip(np.floor((a - lo) / width), 0, k - 1)

    return _scale_dataset(d, make)


def op_quantile_bins(d, k):
    k = _check_bin_count(k)

    def make(arr):
        srt = np.sort(arr)
        edges = np.array([_quantile(srt, i / k) for i in range(1, k)])

        def transform(a):
            codes = (a[:, None] >= edges[None, :]).sum(axis=1).astype(np.float64)
            return np.clip(codes, 0, k - 1)

        return transform

    return _scale_dataset(d, make)


def _check_custom_bins(edges, labels):
    edges = tuple(float(e) for e in edges)
    labels = tuple(str(x) for x in labels)
    if len(edges) < 2 or len(labels) != len(edges) - 1:
        raise BadParam("custom_bins needs len(labels) == len(edges) - 1 >= 1")
    if any(edges[i] >= edges[i + 1] for i in range(len(edges) - 1)):
        raise BadParam("custom_bins edges must be strictly increasing")
    return edges, labels


def op_custom_bins(d, edges, labels):
    edges, labels = _check_custom_bins(edges, labels)
    cols = []
    for c in d.columns:
        if c.kind != NUMERIC:
            cols.append(c)
            continue

        def label_of(x):
            if x is None:
                return None
            idx = 0
            for i in range(1, len(edges) - 1):
                if x >= edges[i]:
                    idx = i
            # out-of-range values are clamped to the end bins
            return labels[idx]

        cols.append(Column(c.name, CATEGORICAL, tuple(label_of(v) for v in c.values)))
    return make_dataset(d.name, cols)


def _unique_name(base, existing):
    if base not in existing:
        return base
    i = 2
    while f"{base}_{i}" in existing:
        i += 1
    return f"{base}_{i}"


def _cellwise_product(a: Column, b: Column, name):
    values = tuple(
        None if (x is None or y is None) else x * y
        for x, y in zip(a.values, b.values)
    )
    return Column(name, NUMERIC, values)


def _generated_columns(d, squares):
    numeric = _numeric_columns(d)
    existing = set(d.column_names)
    new_cols = []
    if squares:
        for c in numeric:
            name = _unique_name(f"{c.name}^2", existing)
            existing.add(name)
            new_cols.append(_cellwise_product(c, c, name))
    for i in range(len(numeric)):
        for j in range(i + 1, len(numeric)):
            name = _unique_name(f"{numeric[i].name}*{numeric[j].name}", existing)
            existing.add(name)
            new_cols.append(_cellwise_product(numeric[i], numeric[j], name))
    return make_dataset(d.name, list(d.columns) + new_cols)


def op_poly_features(d, degree):
    if degree != 2:
        raise BadParam(f"poly_features supports degree 2 only, got {degree!r}")
    return _generated_columns(d, squares=True)


def op_interactions_only(d):
    return _generated_columns(d, squares=False)


def _population_variance(col):
    arr = numeric_values(col)
    if arr.size == 0:
        return 0.0
    mean = arr.mean()
    return float(((arr - mean) ** 2).mean())


def _selector_result(d, kept):
    if not kept:
        raise EmptyResult("selector removed all feature columns")
    return make_dataset(d.name, kept)


def op_variance_threshold(d, t):
    t = float(t)
    kept = [
        c for c in d.columns
        if c.kind != NUMERIC or _population_variance(c) > t
    ]
    return _selector_result(d, kept)


def _pearson(a: Column, b: Column):
    pairs = [
        (x, y) for x, y in zip(a.values, b.values) if x is not None and y is not None
    ]
    if len(pairs) < 2:
        return 0.0
    xs = np.array([p[0] for p in pairs])
    ys = np.array([p[1] for p in pairs])
    sx = xs.std()
    sy = ys.std()
    if sx == 0.0 or sy == 0.0:
        return 0.0
    return float(((xs - xs.mean()) * (ys - ys.mean())).mean() / (sx * sy))


def op_correlation_filter(d, r):
    r = float(r)
    kept_numeric = []
    drop = set()
    for c in d.columns:
        if c.kind != NUMERIC:
            continue
        if any(abs(_pearson(c, k)) >= r for k in kept_numeric):
            drop.add(c.name)
        else:
            kept_numeric.append(c)
    kept = [c for c in d.columns if c.name not in drop]
    return _selector_result(d, kept)


_IMPLS = {
    "mean_impute": op_mean_impute,
    "median_impute": op_median_impute,
    "mode_impute": op_mode_impute,
    "const_impute": op_const_impute,
    "replace_value": op_replace_value,
    "iqr_clip": op_iqr_clip,
    "zscore_clip": op_zscore_clip,
    "min_max_scale": op_min_max_scale,
    "standard_scale": op_standard_scale,
    "max_abs_scale": op_max_abs_scale,
    "robust_scale": op_robust_scale,
    "equal_width_bins": op_equal_width_bins,
    "quantile_bins": op_quantile_bins,
    "custom_bins": op_custom_bins,
    "poly_features": op_poly_features,
    "interactions_only": op_interactions_only,
    "variance_threshold": op_variance_threshold,
    "correlation_filter": op_correlation_filter,
}


def resolve_params(op: PhysicalOperation, args=None):
    """Merge caller args over defaults; reject unknown parameter names."""
    params = op.defaults()
    for name, value in (args or {}).items():
        if name not in params:
            raise BadParam(f"{op.name} has no parameter {name!r}")
        params[name] = value
    return params


def apply_physical(op, args, d: Dataset) -> Dataset:
    """Execute a physical operation; pure, input dataset untouched."""
    if isinstance(op, str):
        resolved = OPS_BY_NAME.get(op)
        if resolved is None:
            raise BadParam(f"unknown physical operation {op!r}")
        op = resolved
    params = resolve_params(op, args)
    return _IMPLS[op.name](d, **params)
