"""State featurization: dataset and pipeline embeddings.

The RL state is ``s = concat(psi, upsilon)`` where psi packs per-column
statistics into 12 stats x 32 zero-padded column slots (384 floats) and
upsilon folds per-node vertex embeddings through a fixed seeded
recurrent cell into 64 floats.

Vertex embedding = 32-dim token-hash bag (FNV-1a mod 32 over the
statement's lexical tokens, counts L2-normalized) concatenated with an
8-dim category one-hot (6 operation families + load/other + eval).
The fold is h <- tanh(W_h h + W_x x) with both matrices drawn once from
SeededRng(0xC0DE), uniform [-1, 1) scaled by 0.1, W_h first then W_x,
row-major.
"""

from __future__ import annotations

import math

import numpy as np

from . import ops
from .dataset import Dataset, column_stats
from .rng import SeededRng
from .script import PipelineGraph, emit, fnv1a64_text, lex_line

PSI_DIM = 384
UPSILON_DIM = 64
STATE_DIM = PSI_DIM + UPSILON_DIM
COLUMN_SLOTS = 32
TOKEN_DIM = 32
CATEGORY_DIM = 8
VERTEX_DIM = TOKEN_DIM + CATEGORY_DIM
FOLD_SEED = 0xC0DE

# 12 per-column stats in featurization order.  ColumnStats carries 13
# fields; the median is dropped here as redundant with q25/q75/mean.
STAT_FIELDS = (
    "missing_ratio", "zero_ratio", "mean", "std", "min", "q25",
    "q75", "max", "skewness", "kurtosis", "distinct_ratio", "outlier_ratio",
)
_RATIO_FIELDS = {"missing_ratio", "zero_ratio", "distinct_ratio", "outlier_ratio"}
STATS_PER_COLUMN = len(STAT_FIELDS)

assert STATS_PER_COLUMN * COLUMN_SLOTS == PSI_DIM


def signed_log1p(x):
    return math.copysign(math.log1p(abs(x)), x)


def featurize_dataset(d: Dataset) -> np.ndarray:
    """psi: first 32 columns' stats, unbounded moments through signed
    log1p, remaining slots exactly zero."""
    psi = np.zeros(PSI_DIM)
    for slot, col in enumerate(d.columns[:COLUMN_SLOTS]):
        stats = column_stats(col)
        for k, field in enumerate(STAT_FIELDS):
            value = getattr(stats, field)
            if field not in _RATIO_FIELDS:
                value = signed_log1p(value)
            psi[slot * STATS_PER_COLUMN + k] = value
    return psi


def _node_category(op_name):
    family = ops.family_of(op_name)
    if family is not None:
        return ops.FAMILY_IDS.index(family)
    if op_name == "train_eval":
        return 7
    return 6  # load / other plumbing


_FOLD_CACHE = {}


def _fold_weights():
    if "w" not in _FOLD_CACHE:
        rng = SeededRng(FOLD_SEED)
        w_h = np.array(
            [[rng.uniform(-1.0, 1.0) for _ in range(UPSILON_DIM)] for _ in range(UPSILON_DIM)]
        ) * 0.1
        w_x = np.array(
            [[rng.uniform(-1.0, 1.0) for _ in range(VERTEX_DIM)] for _ in range(UPSILON_DIM)]
        ) * 0.1
        _FOLD_CACHE["w"] = (w_h, w_x)
    return _FOLD_CACHE["w"]


def vertex_vector(line_text, op_name) -> np.ndarray:
    bag = np.zeros(TOKEN_DIM)
    tokens = lex_line(line_text, 1) or []
    for tok in tokens:
        text = tok.value if isinstance(tok.value, str) else repr(tok.value)
        bag[fnv1a64_text(text) % TOKEN_DIM] += 1.0
    norm = np.linalg.norm(bag)
    if norm > 0.0:
        bag /= norm
    one_hot = np.zeros(CATEGORY_DIM)
    one_hot[_node_category(op_name)] = 1.0
    return np.concatenate([bag, one_hot])


def featurize_pipeline(g: PipelineGraph) -> np.ndarray:
    """upsilon: sequence fold of vertex embeddings; empty pipeline -> 0."""
    h = np.zeros(UPSILON_DIM)
    if not g.nodes:
        return h
    w_h, w_x = _fold_weights()
    lines = emit(g).lines
    for node, line in zip(g.nodes, lines):
        x = vertex_vector(line, node.op_name)
        h = np.tanh(w_h @ h + w_x @ x)
    return h


def state_vector(d: Dataset, g: PipelineGraph) -> np.ndarray:
    return np.concatenate([featurize_dataset(d), featurize_pipeline(g)])
