import pytest
from hypothesis import given, settings, strategies as st

from prepline.errors import StorageError, UnknownParent, UnknownVersion
from prepline.rng import SeededRng
from prepline.versions import (
    VersionStore,
    apply_edit_script,
    diff,
    diff_lines,
    similarity,
)

BASE = """df = load_csv("diabetes.csv")
X = drop_column(df, "Outcome")
y = get_column(df, "Outcome")
score = train_eval(X, y, metric="f1", test_ratio=0.25, seed=0)"""

OP_NAMES = [
    "median_impute", "mean_impute", "min_max_scale", "standard_scale",
    "max_abs_scale", "robust_scale", "iqr_clip", "zscore_clip",
]


def random_program(rng: SeededRng):
    lines = ['df = load_csv("data.csv")', 'X = drop_column(df, "label")']
    for _ in range(rng.randint(5)):
        lines.append(f"X = {OP_NAMES[rng.randint(len(OP_NAMES))]}(X)")
    lines.append('y = get_column(df, "label")')
    lines.append("score = train_eval(X, y)")
    return "\n".join(lines)


def random_edit(rng: SeededRng, program: str):
    lines = program.split("\n")
    kind = rng.randint(3)
    if kind == 0 and len(lines) > 3:  # delete a middle prep line
        candidates = [i for i, l in enumerate(lines) if l.startswith("X = ") and "drop" not in l]
        if candidates:
            del lines[candidates[rng.randint(len(candidates))]]
    elif kind == 1:  # insert a prep line before the eval statement
        op = OP_NAMES[rng.randint(len(OP_NAMES))]
        lines.insert(len(lines) - 1, f"X = {op}(X)")
    else:  # replace an op
        candidates = [i for i, l in enumerate(lines) if l.startswith("X = ") and "drop" not in l]
        if candidates:
            i = candidates[rng.randint(len(candidates))]
            lines[i] = f"X = {OP_NAMES[rng.randint(len(OP_NAMES))]}(X)"
    return "\n".join(lines)


def rename_variables(program: str, mapping):
    import re

    def sub(match):
        return mapping.get(match.group(0), match.group(0))

    return re.sub(r"[A-Za-z_][A-Za-z0-9_]*", sub, program)


class TestSimilarity:
    def test_abc_abd_two_thirds(self):
        assert similarity("abc", "abd") == pytest.approx(2.0 / 3.0)
        assert similarity("abc", "abd") == 2.0 * 2.0 / 6.0

    def test_identical(self):
        assert similarity(list("hello"), list("hello")) == 1.0
        assert similarity([], []) == 1.0

    def test_disjoint(self):
        assert similarity("abc", "xyz") == 0.0

    @given(st.text(alphabet="abcd", max_size=16), st.text(alphabet="abcd", max_size=16))
    @settings(max_examples=100, deadline=None, derandomize=True)
    def test_ratio_bounds(self, a, b):
        ratio = similarity(a, b)
        assert 0.0 <= ratio <= 1.0
        assert similarity(a, a) == 1.0

    @given(st.lists(st.text(alphabet="xyz =()", max_size=10), max_size=8))
    @settings(max_examples=100, deadline=None, derandomize=True)
    def test_self_diff_empty_on_arbitrary_text(self, lines):
        program = "\n".join(lines)
        assert diff_lines(program, program).is_empty()


class TestDiff:
    def test_self_diff_empty(self):
        assert diff_lines(BASE, BASE).is_empty()

    def test_single_insert(self):
        v2 = BASE.replace(
            'y = get_column(df, "Outcome")',
            'y = get_column(df, "Outcome")\nX = standard_scale(X)',
        )
        script = diff_lines(BASE, v2)
        assert len(script) == 1
        change = script.changes[0]
        assert change.kind == "insert"
        assert change.text == "X = standard_scale(X)"

    def test_insert_before_eval_one_change(self):
        # the downstream eval line reads a different pipeline but is
        # verbatim identical, so it must not appear in the diff
        lines = BASE.split("\n")
        lines.insert(3, "X = min_max_scale(X)")
        script = diff_lines(BASE, "\n".join(lines))
        assert [c.kind for c in script.changes] == ["insert"]

    def test_alpha_rename_invisible(self):
        renamed = rename_variables(BASE, {"df": "frame", "X": "feats", "y": "target"})
        assert renamed != BASE
        assert diff_lines(BASE, renamed).is_empty()

    def test_same_name_different_provenance_unequal(self):
        # X in v2 is scaled differently upstream; the renamed-but-equal
        # line pairs with mismatched provenance so it is a real change
        a = 'df = load_csv("d.csv")\nA = min_max_scale(df)\nX = poly_features(A, degree=2)'
        b = 'df = load_csv("d.csv")\nB = standard_scale(df)\nX = poly_features(B, degree=2)'
        script = diff_lines(a, b)
        kinds = sorted(c.kind for c in script.changes)
        assert kinds == ["delete", "delete", "insert", "insert"]

    def test_round_trip_randomized_corpus(self):
        rng = SeededRng(0xD1FF)
        for _ in range(300):
            p1 = random_program(rng)
            p2 = random_edit(rng, p1)
            script = diff_lines(p1, p2)
            assert apply_edit_script(p1.split("\n"), script) == p2.split("\n")
            assert len(script) <= len(p1.split("\n")) + len(p2.split("\n"))

    def test_alpha_renaming_invariance_randomized(self):
        rng = SeededRng(0xA1FA)
        names = ["df", "X", "y", "score"]
        pool = ["v%d" % i for i in range(10)]
        for _ in range(50):
            program = random_program(rng)
            mapping = {}
            used = set()
            for name in names:
                while True:
                    cand = pool[rng.randint(len(pool))]
                    if cand not in used:
                        used.add(cand)
                        mapping[name] = cand
                        break
            assert diff_lines(program, rename_variables(program, mapping)).is_empty()


class TestVersionStore:
    def test_root_commit(self, tmp_path):
        store = VersionStore(tmp_path / "versions.json")
        v = store.commit(None, BASE, prompt=None, metric=0.5)
        assert v.id == 1
        assert v.parent_id is None
        assert store.current.id == 1

    def test_branching(self, tmp_path):
        store = VersionStore(tmp_path / "versions.json")
        root = store.commit(None, BASE)
        a = store.commit(root.id, BASE + "\n# a")
        b = store.commit(root.id, BASE + "\n# b")
        assert a.parent_id == b.parent_id == root.id
        assert a.id != b.id

    def test_durability_across_reload(self, tmp_path):
        path = tmp_path / "versions.json"
        store = VersionStore(path)
        store.commit(None, BASE, metric=0.7)
        store.commit(1, BASE + "\n# child", prompt="scale it", metric=0.8)
        reloaded = VersionStore(path)
        assert len(reloaded) == 2
        assert reloaded.get(2).prompt == "scale it"
        assert reloaded.get(2).metric == 0.8
        assert reloaded.current.id == 2
        assert reloaded.get(1).trace_map  # recomputed on load

    def test_unknown_parent(self, tmp_path):
        store = VersionStore(tmp_path / "versions.json")
        with pytest.raises(UnknownParent):
            store.commit(99, BASE)

    def test_rollback(self, tmp_path):
        store = VersionStore(tmp_path / "versions.json")
        root = store.commit(None, BASE)
        store.commit(root.id, BASE + "\n# child")
        store.rollback(root.id)
        assert store.current.id == root.id
        store.rollback(root.id)  # idempotent
        assert store.current.id == root.id
        child = store.commit(root.id, BASE + "\n# branch")
        assert child.parent_id == root.id

    def test_rollback_unknown(self, tmp_path):
        store = VersionStore(tmp_path / "versions.json")
        store.commit(None, BASE)
        with pytest.raises(UnknownVersion):
            store.rollback(42)

    def test_leaf_delete_only(self, tmp_path):
        store = VersionStore(tmp_path / "versions.json")
        root = store.commit(None, BASE)
        leaf = store.commit(root.id, BASE + "\n# leaf")
        with pytest.raises(StorageError):
            store.delete(root.id)
        store.delete(leaf.id)
        assert store.current.id == root.id
        with pytest.raises(UnknownVersion):
            store.rollback(leaf.id)

    def test_schema_field_order(self, tmp_path):
        import json

        path = tmp_path / "versions.json"
        store = VersionStore(path)
        store.commit(None, BASE, metric=0.6)
        doc = json.loads(path.read_text())
        assert list(doc) == ["versions", "current"]
        assert list(doc["versions"][0]) == [
            "id", "parent_id", "program", "prompt", "metric", "created_at",
        ]

    def test_diff_of_versions(self, tmp_path):
        store = VersionStore(tmp_path / "versions.json")
        root = store.commit(None, BASE)
        lines = BASE.split("\n")
        lines.insert(3, "X = standard_scale(X)")
        child = store.commit(root.id, "\n".join(lines))
        script = diff(store.get(root.id), store.get(child.id))
        assert [c.kind for c in script.changes] == ["insert"]
