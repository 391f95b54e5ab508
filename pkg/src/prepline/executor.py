"""Execute pipeline graphs on real data and score them.

Nodes run in topological (source) order.  The first failing node aborts
execution with its error text folded into the result: downstream repair
loops consume the message verbatim, so its rendering
(``<Kind>: <detail> at line <n>``) is a stable contract.

The reward model is a fixed deterministic logistic regression, trained
by full-batch gradient descent (lr 0.05, 300 iterations, L2 1e-3,
per-step gradient-norm clip 10, threshold 0.5), so identical inputs
yield bit-identical metrics.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels, ops
from .dataset import (
    CATEGORICAL,
    NUMERIC,
    Column,
    Dataset,
    csv_byte_size,
    load_csv,
    make_dataset,
    split_indices,
)
from .errors import (
    BadParam,
    NonBinaryLabel,
    PreplineError,
    UndefinedOperation,
    UnimputedMissing,
)
from .script import PipelineGraph

LOAD = "load"
COMPUTE = "compute"
PRUNE = "prune"


@dataclass(frozen=True)
class NodeReport:
    node_id: int
    micros: int
    byte_size: int
    trace_hash: int
    action: str = COMPUTE  # compute | load


@dataclass
class ExecResult:
    status: str  # ok | error
    metric: float | None = None
    error_message: str | None = None
    node_reports: list = field(default_factory=list)
    env: dict = field(default_factory=dict)

    @property
    def ok(self):
        return self.status == "ok"


def _ordinal_codes(col: Column):
    tokens = sorted({v for v in col.values if v is not None})
    code = {t: float(i) for i, t in enumerate(tokens)}
    return [None if v is None else code[v] for v in col.values]


def design_matrix(X: Dataset):
    """Numeric matrix for training; categorical columns are
    ordinal-coded by sorted token order; missing cells are an error."""
    cols = []
    for c in X.columns:
        values = _ordinal_codes(c) if c.kind == CATEGORICAL else list(c.values)
        for v in values:
            if v is None:
                raise UnimputedMissing(f"column {c.name!r} has missing cells")
        cols.append(values)
    if not cols:
        return np.zeros((X.row_count, 0))
    return np.array(cols, dtype=np.float64).T


def binary_labels(y: Column):
    """Map the two distinct non-missing label values to {0, 1} by sorted order."""
    for v in y.values:
        if v is None:
            raise UnimputedMissing(f"label column {y.name!r} has missing cells")
    distinct = sorted(set(y.values))
    if len(distinct) != 2:
        raise NonBinaryLabel(
            f"label column {y.name!r} has {len(distinct)} distinct values, need exactly 2"
        )
    positive = distinct[1]
    return np.array([1.0 if v == positive else 0.0 for v in y.values])


def f1_score(y_true, y_pred):
    tp = float(np.sum((y_pred == 1.0) & (y_true == 1.0)))
    fp = float(np.sum((y_pred == 1.0) & (y_true == 0.0)))
    fn = float(np.sum((y_pred == 0.0) & (y_true == 1.0)))
    if tp == 0.0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2.0 * precision * recall / (precision + recall)


def train_eval(X: Dataset, y: Column, metric="f1", test_ratio=0.25, seed=0):
    """Split, fit the built-in classifier, score on the held-out rows."""
    if metric not in ("f1", "accuracy"):
        raise BadParam(f"metric must be 'f1' or 'accuracy', got {metric!r}")
    if X.row_count != len(y.values):
        raise BadParam("feature matrix and label column disagree on row count")
    labels = binary_labels(y)
    matrix = design_matrix(X)
    train_idx, test_idx = split_indices(X.row_count, test_ratio, seed)
    w, b = kernels.logreg_fit(matrix[train_idx], labels[train_idx])
    probs = kernels.sigmoid(matrix[test_idx] @ w + b)
    preds = (probs >= 0.5).astype(np.float64)
    truth = labels[test_idx]
    if metric == "accuracy":
        return float((preds == truth).mean())
    return f1_score(truth, preds)


def _as_dataset(value, what, line):
    if not isinstance(value, Dataset):
        raise BadParam(f"{what} expects a dataset argument", line=line)
    return value


def _single_column(value, what, line):
    d = _as_dataset(value, what, line)
    if len(d.columns) != 1:
        raise BadParam(f"{what} expects a single-column dataset", line=line)
    return d.columns[0]


def _builtin_drop_column(d: Dataset, name):
    if not d.has_column(name):
        raise BadParam(f"no column named {name!r}")
    return make_dataset(d.name, [c for c in d.columns if c.name != name])


def _builtin_get_column(d: Dataset, name):
    if not d.has_column(name):
        raise BadParam(f"no column named {name!r}")
    return make_dataset(d.name, [d.column(name)])


def _builtin_pairwise_spread(d: Dataset):
    cols = []
    for c in d.columns:
        if c.kind != NUMERIC:
            cols.append(c)
            continue
        present = np.array([v for v in c.values if v is not None])
        if present.size == 0:
            cols.append(c)
            continue
        out = iter(kernels.pairwise_spread(present).tolist())
        values = tuple(None if v is None else next(out) for v in c.values)
        cols.append(Column(c.name, NUMERIC, values))
    return make_dataset(d.name, cols)


class Executor:
    """Binds a data directory; reentrant, one sequential pass per call."""

    def __init__(self, data_dir="."):
        self.data_dir = str(data_dir)

    def _resolve_path(self, rel):
        path = os.path.normpath(os.path.join(self.data_dir, rel))
        root = os.path.abspath(self.data_dir)
        if not os.path.abspath(path).startswith(root):
            raise BadParam(f"path {rel!r} escapes the data directory")
        return path

    def _run_node(self, node, pos_args, kwargs):
        op_name = node.op_name
        if op_name == "load_csv":
            if len(pos_args) != 1 or not isinstance(pos_args[0], str):
                raise BadParam("load_csv takes a single path literal")
            return load_csv(self._resolve_path(pos_args[0]), kwargs.get("label_hint"))
        if op_name == "drop_column":
            if len(pos_args) != 2:
                raise BadParam("drop_column takes (dataset, column)")
            return _builtin_drop_column(
                _as_dataset(pos_args[0], "drop_column", node.source_line), pos_args[1]
            )
        if op_name == "get_column":
            if len(pos_args) != 2:
                raise BadParam("get_column takes (dataset, column)")
            return _builtin_get_column(
                _as_dataset(pos_args[0], "get_column", node.source_line), pos_args[1]
            )
        if op_name == "train_eval":
            if len(pos_args) != 2:
                raise BadParam("train_eval takes (features, labels)")
            X = _as_dataset(pos_args[0], "train_eval", node.source_line)
            y = _single_column(pos_args[1], "train_eval labels", node.source_line)
            params = {"metric": "f1", "test_ratio": 0.25, "seed": 0}
            for key, value in kwargs.items():
                if key not in params:
                    raise BadParam(f"train_eval has no parameter {key!r}")
                params[key] = value
            return train_eval(X, y, **params)
        if op_name == "pairwise_spread":
            if len(pos_args) != 1:
                raise BadParam("pairwise_spread takes (dataset)")
            return _builtin_pairwise_spread(
                _as_dataset(pos_args[0], "pairwise_spread", node.source_line)
            )
        op = ops.OPS_BY_NAME.get(op_name)
        if op is None:
            raise UndefinedOperation(op_name)
        if not pos_args or not isinstance(pos_args[0], Dataset):
            raise BadParam(f"{op_name} expects a dataset as first argument")
        d = pos_args[0]
        args = {}
        names = [name for name, _ in op.params]
        extra = pos_args[1:]
        if len(extra) > len(names):
            raise BadParam(f"{op_name} takes at most {len(names)} parameters")
        for name, value in zip(names, extra):
            args[name] = value
        for key, value in kwargs.items():
            if key in args:
                raise BadParam(f"{op_name} got duplicate parameter {key!r}")
            args[key] = value
        return ops.apply_physical(op, args, d)

    def run(self, g: PipelineGraph, plan=None, store=None) -> ExecResult:
        """Execute the graph; honor a cache plan when one is supplied.

        ``metric`` is the last train_eval result (None when the program
        trains no model).  Caching is semantically invisible: a run with
        any feasible plan matches the plan-free run bit for bit.
        """
        env = {}
        reports = []
        metric = None
        assignment = plan.assignment if plan is not None else {}
        for node in g.nodes:
            decision = assignment.get(node.id, COMPUTE)
            if decision == PRUNE:
                continue
            node_hash = g.trace[node.output]
            if decision == LOAD:
                start = time.perf_counter_ns()
                entry = store.entry(node_hash)
                value = store.load_dataset(node_hash)
                micros = (time.perf_counter_ns() - start) // 1000
                env[node.output] = value
                reports.append(
                    NodeReport(node.id, micros, entry.storage_bytes, node_hash, LOAD)
                )
                continue
            pos_args = []
            for kind, val in node.args:
                pos_args.append(env[val] if kind == "var" else val)
            start = time.perf_counter_ns()
            try:
                value = self._run_node(node, pos_args, node.kwargs_dict())
            except PreplineError as exc:
                if exc.line is None:
                    exc.line = node.source_line
                return ExecResult(
                    status="error",
                    error_message=exc.render(),
                    node_reports=reports,
                    env=env,
                )
            micros = (time.perf_counter_ns() - start) // 1000
            env[node.output] = value
            if isinstance(value, Dataset):
                byte_size = csv_byte_size(value)
            else:
                byte_size = len(repr(value).encode("utf-8"))
            reports.append(NodeReport(node.id, micros, byte_size, node_hash, COMPUTE))
            if node.op_name == "train_eval":
                metric = float(value)
        return ExecResult(status="ok", metric=metric, node_reports=reports, env=env)


def insertion_dataset(g: PipelineGraph, env):
    """Dataset flowing into the eval node's feature input, if present."""
    from .script import find_eval_node

    eval_node = find_eval_node(g)
    if eval_node is not None and eval_node.inputs:
        value = env.get(eval_node.inputs[0])
        if isinstance(value, Dataset):
            return value
    for node in reversed(g.nodes):
        value = env.get(node.output)
        if isinstance(value, Dataset):
            return value
    return None


def baseline_program(csv_name, label, metric="f1", test_ratio=0.25, seed=0):
    """The synthesized root program for a fresh session."""
    from .script import ScriptSource, format_literal

    lines = [
        f'df = load_csv({format_literal(csv_name)})',
        f'X = drop_column(df, {format_literal(label)})',
        f'y = get_column(df, {format_literal(label)})',
        f'score = train_eval(X, y, metric={format_literal(metric)}, '
        f'test_ratio={format_literal(test_ratio)}, seed={format_literal(seed)})',
    ]
    return ScriptSource.from_lines(lines)
