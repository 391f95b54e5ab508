import filecmp
import os

from prepline.corpus import (
    EVAL_SEEDS,
    TRAIN_SEEDS,
    build_corpus,
    make_diabetes_standin,
    make_synth_dataset,
    program_corpus,
)
from prepline.dataset import NUMERIC, load_csv
from prepline.script import parse

CORPUS = os.path.join(os.path.dirname(__file__), "..", "corpus")


class TestGenerators:
    def test_synth_deterministic(self):
        assert make_synth_dataset(123) == make_synth_dataset(123)

    def test_synth_structure(self):
        d = make_synth_dataset(123)
        assert d.column_names == [
            "big_mag", "zero_inflated", "clean", "const", "noise", "label",
        ]
        labels = set(d.column("label").values)
        assert labels == {0.0, 1.0}
        assert 0.0 in d.column("zero_inflated").values
        assert set(d.column("const").values) == {5.0}
        big = [abs(v) for v in d.column("big_mag").values]
        assert max(big) > 1000.0

    def test_diabetes_standin_schema(self):
        d = make_diabetes_standin()
        assert d.row_count == 768
        assert len(d.columns) == 9
        assert all(c.kind == NUMERIC for c in d.columns)
        assert 0.0 in d.column("Insulin").values


class TestBundledCorpus:
    def test_matches_regeneration(self, tmp_path):
        # the committed corpus is exactly what the generators produce
        build_corpus(tmp_path)
        for rel in ["diabetes.csv", "diabetes_base.ps"]:
            assert filecmp.cmp(tmp_path / rel, os.path.join(CORPUS, rel), shallow=False), rel
        for seed in TRAIN_SEEDS:
            rel = f"synth/train_{seed}.csv"
            assert filecmp.cmp(tmp_path / rel, os.path.join(CORPUS, rel), shallow=False), rel
        for seed in EVAL_SEEDS:
            rel = f"synth/eval_{seed}.csv"
            assert filecmp.cmp(tmp_path / rel, os.path.join(CORPUS, rel), shallow=False), rel
        for name in program_corpus():
            rel = f"programs/{name}"
            assert filecmp.cmp(tmp_path / rel, os.path.join(CORPUS, rel), shallow=False), rel

    def test_programs_all_parse(self):
        programs = program_corpus()
        assert len(programs) >= 20
        for name, text in programs.items():
            parse(text)

    def test_synth_csvs_load_binary_labels(self):
        for seed in TRAIN_SEEDS + EVAL_SEEDS:
            sub = "train" if seed in TRAIN_SEEDS else "eval"
            d = load_csv(os.path.join(CORPUS, "synth", f"{sub}_{seed}.csv"))
            values = set(d.column("label").values)
            assert values == {0.0, 1.0}, seed
