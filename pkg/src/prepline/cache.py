"""Intermediate-result materialization and load/compute/prune planning.

Materialization decisions come from a logistic cost model over
[log1p(bytes), log1p(micros), pipeline depth, historical reuse count,
downstream metric]; an artifact is cached when its score clears 0.5 and
fits the byte budget, evicting lowest score/byte density first.

Re-execution planning minimizes total cost (load costs for cached
artifacts, compute costs otherwise) subject to: computing a node
requires its parents available, targets must be available, and loads
require a valid cache entry.  Solved as a min s-t cut; the exhaustive
assignment search in the test suite is the normative oracle.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dataset import Dataset, from_csv_text, to_csv_text
from .errors import DegenerateLabels, Infeasible, StorageError
from .executor import COMPUTE, LOAD, PRUNE
from .script import PipelineGraph

BYTES_PER_MICRO = 200.0  # modeled disk throughput for load costs
DEFAULT_BUDGET_BYTES = 256 * 1024 * 1024

DEFAULT_WEIGHTS = (-0.2, 0.8, 0.1, 0.5, 0.3)
DEFAULT_BIAS = -0.5


@dataclass(frozen=True)
class CacheEntry:
    trace_hash: int
    storage_bytes: int
    compute_micros: int
    path: str
    created_version: int
    hits: int = 0
    score: float = 0.5
    name: str = "dataset"
    kinds: tuple = ()


@dataclass(frozen=True)
class CostModel:
    weights: tuple = DEFAULT_WEIGHTS
    bias: float = DEFAULT_BIAS

    def score(self, features) -> float:
        z = float(np.dot(self.weights, np.asarray(features, dtype=np.float64)) + self.bias)
        return float(kernels.sigmoid(np.array([z]))[0])


def cache_features(storage_bytes, compute_micros, depth, reuse_count, metric):
    return (
        math.log1p(max(0.0, float(storage_bytes))),
        math.log1p(max(0.0, float(compute_micros))),
        float(depth),
        float(reuse_count),
        float(metric),
    )


def decide_materialize(features, model: CostModel) -> bool:
    """Score > 0.5 says the artifact is worth materializing."""
    return model.score(features) > 0.5


def fit_cost_model(traces) -> CostModel:
    """Deterministic logistic fit (lr 0.1, 500 iterations, L2 1e-4)."""
    if not traces:
        raise DegenerateLabels("no training traces")
    X = np.array([list(f) for f, _ in traces], dtype=np.float64)
    y = np.array([1.0 if label else 0.0 for _, label in traces])
    if len(set(y.tolist())) < 2:
        raise DegenerateLabels("need at least one example of each label")
    w, b = kernels.logreg_fit(X, y, lr=0.1, iters=500, l2=1e-4, clip=math.inf)
    return CostModel(weights=tuple(float(v) for v in w), bias=float(b))


class CacheStore:
    """On-disk artifact store: <dir>/<hash>.csv plus <hash>.meta.json."""

    def __init__(self, directory):
        self.directory = str(directory)
        os.makedirs(self.directory, exist_ok=True)
        self.entries = {}
        for name in sorted(os.listdir(self.directory)):
            if not name.endswith(".meta.json"):
                continue
            try:
                with open(os.path.join(self.directory, name), "r", encoding="utf-8") as fh:
                    meta = json.load(fh)
                entry = CacheEntry(
                    trace_hash=int(meta["trace_hash"], 16),
                    storage_bytes=meta["storage_bytes"],
                    compute_micros=meta["compute_micros"],
                    path=os.path.join(self.directory, meta["payload"]),
                    created_version=meta["created_version"],
                    hits=meta.get("hits", 0),
                    score=meta.get("score", 0.5),
                    name=meta.get("name", "dataset"),
                    kinds=tuple(meta.get("kinds", ())),
                )
            except (OSError, KeyError, ValueError) as exc:
                raise StorageError(f"corrupt cache meta {name}: {exc}") from exc
            self.entries[entry.trace_hash] = entry

    def has(self, trace_hash):
        return trace_hash in self.entries

    def entry(self, trace_hash) -> CacheEntry:
        return self.entries[trace_hash]

    def total_bytes(self):
        return sum(e.storage_bytes for e in self.entries.values())

    def _paths(self, trace_hash):
        stem = f"{trace_hash:016x}"
        return (
            os.path.join(self.directory, stem + ".csv"),
            os.path.join(self.directory, stem + ".meta.json"),
        )

    def _write_meta(self, entry: CacheEntry):
        _, meta_path = self._paths(entry.trace_hash)
        meta = {
            "trace_hash": f"{entry.trace_hash:016x}",
            "payload": os.path.basename(entry.path),
            "storage_bytes": entry.storage_bytes,
            "compute_micros": entry.compute_micros,
            "created_version": entry.created_version,
            "hits": entry.hits,
            "score": entry.score,
            "name": entry.name,
            "kinds": list(entry.kinds),
        }
        tmp = meta_path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(meta, fh, sort_keys=True, indent=2)
            fh.write("\n")
        os.replace(tmp, meta_path)

    def put(self, d: Dataset, trace_hash, compute_micros, created_version, score=0.5):
        csv_text = to_csv_text(d)
        payload_path, _ = self._paths(trace_hash)
        with open(payload_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(csv_text)
        entry = CacheEntry(
            trace_hash=trace_hash,
            storage_bytes=len(csv_text.encode("utf-8")),
            compute_micros=int(compute_micros),
            path=payload_path,
            created_version=created_version,
            hits=0,
            score=float(score),
            name=d.name,
            kinds=tuple(c.kind for c in d.columns),
        )
        self.entries[trace_hash] = entry
        self._write_meta(entry)
        return entry

    def load_dataset(self, trace_hash) -> Dataset:
        entry = self.entries[trace_hash]
        with open(entry.path, "r", encoding="utf-8", newline="") as fh:
            text = fh.read()
        d = from_csv_text(text, name=entry.name, kinds=entry.kinds or None)
        updated = dataclasses.replace(entry, hits=entry.hits + 1)
        self.entries[trace_hash] = updated
        self._write_meta(updated)
        return d

    def evict(self, trace_hash):
        entry = self.entries.pop(trace_hash, None)
        if entry is None:
            return
        payload_path, meta_path = self._paths(trace_hash)
        for p in (payload_path, meta_path):
            try:
                os.remove(p)
            except OSError:
                pass

    def admit(self, d: Dataset, trace_hash, compute_micros, created_version,
              score, budget_bytes) -> bool:
        """Admit under the byte budget, evicting lowest score/byte first."""
        new_bytes = len(to_csv_text(d).encode("utf-8"))
        if new_bytes > budget_bytes:
            return False
        while self.total_bytes() + new_bytes > budget_bytes and self.entries:
            victim = min(
                self.entries.values(),
                key=lambda e: (e.score / max(1, e.storage_bytes), e.trace_hash),
            )
            self.evict(victim.trace_hash)
        if self.total_bytes() + new_bytes > budget_bytes:
            return False
        self.put(d, trace_hash, compute_micros, created_version, score)
        return True


@dataclass
class CachePlan:
    assignment: dict = field(default_factory=dict)  # node id -> load|compute|prune
    total_cost: float = 0.0

    def validate(self, g: PipelineGraph, costs, targets):
        """Structural feasibility: raises AssertionError on violation."""
        children = _children_of(g)
        for node in g.nodes:
            action = self.assignment[node.id]
            if action == COMPUTE:
                for parent, child in g.edges:
                    if child == node.id:
                        assert self.assignment[parent] != PRUNE, (
                            f"compute node {node.id} has pruned parent {parent}"
                        )
            if action == LOAD:
                assert costs[node.id][0] != math.inf, (
                    f"load of node {node.id} without a cache entry"
                )
            if node.id in targets:
                assert action != PRUNE, f"target node {node.id} pruned"
            if action == PRUNE:
                assert not any(
                    self.assignment[c] == COMPUTE for c in children[node.id]
                ), f"pruned node {node.id} has computed children"


def _children_of(g: PipelineGraph):
    children = {node.id: [] for node in g.nodes}
    for parent, child in g.edges:
        children[parent].append(child)
    return children


def _max_flow(capacity, source, sink, n_vertices):
    """Edmonds-Karp on an adjacency-matrix residual network."""
    residual = [row[:] for row in capacity]
    adj = [[] for _ in range(n_vertices)]
    for u in range(n_vertices):
        for v in range(n_vertices):
            if capacity[u][v] > 0:
                adj[u].append(v)
                adj[v].append(u)
    flow = 0.0
    while True:
        parent = [-1] * n_vertices
        parent[source] = source
        queue = deque([source])
        while queue:
            u = queue.popleft()
            if u == sink:
                break
            for v in adj[u]:
                if parent[v] == -1 and residual[u][v] > 1e-12:
                    parent[v] = u
                    queue.append(v)
        if parent[sink] == -1:
            break
        bottleneck = math.inf
        v = sink
        while v != source:
            u = parent[v]
            bottleneck = min(bottleneck, residual[u][v])
            v = u
        v = sink
        while v != source:
            u = parent[v]
            residual[u][v] -= bottleneck
            residual[v][u] += bottleneck
            v = u
        flow += bottleneck
    reachable = {source}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in reachable and residual[u][v] > 1e-12:
                reachable.add(v)
                queue.append(v)
    return flow, reachable


def plan(g: PipelineGraph, costs, targets) -> CachePlan:
    """Optimal load/compute/prune assignment via min s-t cut.

    costs: node id -> (load cost or math.inf, compute cost);
    targets: node ids whose outputs must be available.
    """
    nodes = [node.id for node in g.nodes]
    for nid in nodes:
        load_cost, compute_cost = costs[nid]
        if not math.isfinite(compute_cost):
            raise Infeasible(f"node {nid} has non-finite compute cost")
    children = _children_of(g)
    finite_total = sum(c for _, c in costs.values())
    finite_total += sum(l for l, _ in costs.values() if math.isfinite(l))
    big = finite_total + 1.0

    index = {}
    source, sink = 0, 1
    next_id = 2
    for nid in nodes:
        index[("n", nid)] = next_id
        next_id += 1
    for nid in nodes:
        index[("d", nid)] = next_id
        next_id += 1
    n_vertices = next_id
    capacity = [[0.0] * n_vertices for _ in range(n_vertices)]

    def cap_load(nid):
        load_cost = costs[nid][0]
        return big if not math.isfinite(load_cost) else load_cost

    # Availability demand (being a target, or feeding a computed child)
    # routes through one auxiliary node per graph node, so a load is
    # charged exactly once no matter how many demands it serves.
    for nid in nodes:
        u = index[("n", nid)]
        d = index[("d", nid)]
        capacity[u][sink] += costs[nid][1]
        needs_d = bool(children[nid]) or nid in targets
        if needs_d:
            capacity[d][u] += cap_load(nid)
        if nid in targets:
            capacity[source][d] += big
        for child in children[nid]:
            capacity[index[("n", child)]][d] += big

    _, reachable = _max_flow(capacity, source, sink, n_vertices)

    assignment = {}
    for nid in nodes:
        if index[("n", nid)] in reachable:
            assignment[nid] = COMPUTE
    for nid in nodes:
        if nid in assignment:
            continue
        computed_child = any(assignment.get(c) == COMPUTE for c in children[nid])
        if nid in targets or computed_child:
            assignment[nid] = LOAD
        else:
            assignment[nid] = PRUNE
    total = sum(
        costs[nid][1] if assignment[nid] == COMPUTE
        else costs[nid][0] if assignment[nid] == LOAD
        else 0.0
        for nid in nodes
    )
    result = CachePlan(assignment=assignment, total_cost=total)
    result.validate(g, costs, targets)
    return result


def default_targets(g: PipelineGraph):
    """Sinks plus each eval node's feature input (kept for featurization)."""
    has_out = {parent for parent, _ in g.edges}
    targets = {node.id for node in g.nodes if node.id not in has_out}
    for node in g.nodes:
        if node.op_name == "train_eval" and node.inputs:
            targets.add(g.var_defs[node.inputs[0]])
    return targets


def build_costs(g: PipelineGraph, store: CacheStore | None, history_micros,
                default_micros=1000.0, bytes_per_micro=BYTES_PER_MICRO):
    """Per-node (load, compute) costs from cache entries and timing history."""
    costs = {}
    for node in g.nodes:
        node_hash = g.trace[node.output]
        if store is not None and store.has(node_hash):
            load_cost = store.entry(node_hash).storage_bytes / bytes_per_micro
        else:
            load_cost = math.inf
        compute_cost = float(history_micros.get(node_hash, default_micros))
        costs[node.id] = (load_cost, compute_cost)
    return costs
