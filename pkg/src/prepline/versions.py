"""Version tree persistence and provenance-aware semantic diff.

Diffing uses Ratcliff-Obershelp (gestalt pattern matching) over line
sequences with a relaxed line equality so that pure renamings vanish
from the diff:

* lines that are byte-identical are equal;
* otherwise, lines are equal when they match after every variable
  identifier is replaced by a positional placeholder AND each paired
  identifier's provenance hash matches - i.e. the variables are
  produced by identical pipelines.  A pair whose names coincide but
  whose provenance differs compares unequal.

The store is a single JSON file per session with atomic replace-on-
write; durability precedes every commit return.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

from .errors import StorageError, UnknownParent, UnknownVersion
from .script import PipelineGraph, parse, parse_statement


@dataclass
class Version:
    id: int
    parent_id: int | None
    program: str
    prompt: str | None
    metric: float | None
    created_at: int  # unix milliseconds
    trace_map: dict = field(default_factory=dict)  # SSA variable -> hash

    def to_record(self):
        # field order is part of the on-disk schema
        return {
            "id": self.id,
            "parent_id": self.parent_id,
            "program": self.program,
            "prompt": self.prompt,
            "metric": self.metric,
            "created_at": self.created_at,
        }


def _trace_map(program: str):
    try:
        return dict(parse(program).trace)
    except Exception:
        return {}


@dataclass(frozen=True)
class Change:
    kind: str  # insert | delete
    index: int  # line index in v2 for inserts, in v1 for deletes
    text: str


@dataclass
class EditScript:
    changes: list = field(default_factory=list)

    def __len__(self):
        return len(self.changes)

    def is_empty(self):
        return not self.changes


class VersionStore:
    """One JSON file per session; single writer, durable commits."""

    def __init__(self, path):
        self.path = str(path)
        self.versions = {}
        self.current_id = None
        self._next_id = 1
        if os.path.exists(self.path):
            self._load()

    def _load(self):
        try:
            with open(self.path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, ValueError) as exc:
            raise StorageError(f"cannot load version store {self.path}: {exc}") from exc
        for rec in doc.get("versions", []):
            version = Version(
                id=rec["id"],
                parent_id=rec["parent_id"],
                program=rec["program"],
                prompt=rec.get("prompt"),
                metric=rec.get("metric"),
                created_at=rec.get("created_at", 0),
                trace_map=_trace_map(rec["program"]),
            )
            self.versions[version.id] = version
        self.current_id = doc.get("current")
        self._next_id = max(self.versions, default=0) + 1

    def _save(self):
        doc = {
            "versions": [
                self.versions[vid].to_record() for vid in sorted(self.versions)
            ],
            "current": self.current_id,
        }
        tmp = self.path + ".tmp"
        try:
            os.makedirs(os.path.dirname(self.path) or ".", exist_ok=True)
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump(doc, fh, ensure_ascii=False, indent=2)
                fh.write("\n")
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.path)
        except OSError as exc:
            raise StorageError(f"cannot persist version store {self.path}: {exc}") from exc

    def __len__(self):
        return len(self.versions)

    def get(self, version_id) -> Version:
        if version_id not in self.versions:
            raise UnknownVersion(f"no version with id {version_id}")
        return self.versions[version_id]

    @property
    def current(self) -> Version | None:
        return self.versions.get(self.current_id)

    def commit(self, parent_id, program, prompt=None, metric=None) -> Version:
        if parent_id is not None and parent_id not in self.versions:
            raise UnknownParent(f"no version with id {parent_id}")
        if parent_id is None and self.versions:
            raise UnknownParent("store already has a root; commits need a parent")
        version = Version(
            id=self._next_id,
            parent_id=parent_id,
            program=program,
            prompt=prompt,
            metric=metric,
            created_at=int(time.time() * 1000),
            trace_map=_trace_map(program),
        )
        self._next_id += 1
        self.versions[version.id] = version
        self.current_id = version.id
        self._save()
        return version

    def rollback(self, version_id) -> Version:
        """Move the current pointer; deletes nothing; idempotent."""
        version = self.get(version_id)
        self.current_id = version.id
        self._save()
        return version

    def delete(self, version_id):
        """Leaf-only delete; interior deletes would orphan children."""
        version = self.get(version_id)
        if any(v.parent_id == version_id for v in self.versions.values()):
            raise StorageError(f"version {version_id} has children; only leaves can go")
        del self.versions[version_id]
        if self.current_id == version_id:
            self.current_id = version.parent_id
        self._save()

    def tree(self):
        return [self.versions[vid] for vid in sorted(self.versions)]


# ---------------------------------------------------------------------------
# gestalt matching


def find_longest_match(a, b, alo, ahi, blo, bhi, eq):
    """Longest contiguous block of pairwise-equal elements; earliest in
    a, then earliest in b, on ties."""
    besti, bestj, bestsize = alo, blo, 0
    j2len = {}
    for i in range(alo, ahi):
        newj2len = {}
        for j in range(blo, bhi):
            if eq(i, j):
                k = newj2len[j] = j2len.get(j - 1, 0) + 1
                if k > bestsize:
                    besti, bestj, bestsize = i - k + 1, j - k + 1, k
        j2len = newj2len
    return besti, bestj, bestsize


def matching_blocks(a, b, eq=None):
    if eq is None:
        eq = lambda i, j: a[i] == b[j]
    blocks = []

    def recurse(alo, ahi, blo, bhi):
        i, j, k = find_longest_match(a, b, alo, ahi, blo, bhi, eq)
        if k == 0:
            return
        recurse(alo, i, blo, j)
        blocks.append((i, j, k))
        recurse(i + k, ahi, j + k, bhi)

    recurse(0, len(a), 0, len(b))
    return blocks


def similarity(a, b, eq=None) -> float:
    """Gestalt ratio 2M / (|a| + |b|); identical empty sequences -> 1."""
    total = len(a) + len(b)
    if total == 0:
        return 1.0
    matched = sum(k for _, _, k in matching_blocks(a, b, eq))
    return 2.0 * matched / total


def _line_profile(line, lineno, graph: PipelineGraph | None):
    """(skeleton, hash tuple) for relaxed equality, or None if the line
    is not a parseable statement bound to the given graph."""
    if graph is None:
        return None
    try:
        stmt = parse_statement(line, lineno)
    except Exception:
        return None
    if stmt is None:
        return None
    node = None
    for cand in graph.nodes:
        if cand.source_line == lineno:
            node = cand
            break
    if node is None:
        return None
    pieces = []
    cursor = 0
    for start, end in stmt.var_spans:
        pieces.append(line[cursor:start])
        pieces.append("\x00")
        cursor = end
    pieces.append(line[cursor:])
    skeleton = "".join(pieces)
    hashes = [graph.trace[node.output]]
    hashes.extend(graph.trace[ssa] for ssa in node.inputs)
    return skeleton, tuple(hashes)


def _program_profiles(program: str):
    lines = program.split("\n")
    try:
        graph = parse(program)
    except Exception:
        graph = None
    profiles = [
        _line_profile(line, i + 1, graph) for i, line in enumerate(lines)
    ]
    return lines, profiles


def diff_lines(program_a: str, program_b: str) -> EditScript:
    """Shortest edit script (inserts/deletes) under relaxed equality."""
    a_lines, a_prof = _program_profiles(program_a)
    b_lines, b_prof = _program_profiles(program_b)

    def eq(i, j):
        if a_lines[i] == b_lines[j]:
            return True
        pa, pb = a_prof[i], b_prof[j]
        return pa is not None and pb is not None and pa == pb

    changes = []
    ia = ib = 0
    blocks = matching_blocks(a_lines, b_lines, eq) + [
        (len(a_lines), len(b_lines), 0)
    ]
    for sa, sb, size in blocks:
        for i in range(ia, sa):
            changes.append(Change("delete", i, a_lines[i]))
        for j in range(ib, sb):
            changes.append(Change("insert", j, b_lines[j]))
        ia, ib = sa + size, sb + size
    return EditScript(changes=changes)


def diff(v1: Version, v2: Version) -> EditScript:
    return diff_lines(v1.program, v2.program)


def apply_edit_script(lines_a, script: EditScript):
    """Replay an edit script against v1's lines, reproducing v2's."""
    deleted = {c.index for c in script.changes if c.kind == "delete"}
    inserts = {c.index: c.text for c in script.changes if c.kind == "insert"}
    kept = [line for i, line in enumerate(lines_a) if i not in deleted]
    out = []
    it = iter(kept)
    total = len(kept) + len(inserts)
    for j in range(total):
        if j in inserts:
            out.append(inserts[j])
        else:
            out.append(next(it))
    return out
