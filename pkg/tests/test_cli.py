import subprocess
import sys

import pytest

from prepline.cli import main
from prepline.corpus import make_synth_dataset
from prepline.dataset import write_csv

BASE = """df = load_csv("data.csv")
X = drop_column(df, "label")
y = get_column(df, "label")
score = train_eval(X, y)"""


@pytest.fixture
def dataset_path(tmp_path):
    path = tmp_path / "task.csv"
    write_csv(make_synth_dataset(91, name="task"), path)
    return str(path)


def run_cli(args, cwd=None):
    return subprocess.run(
        [sys.executable, "-m", "prepline.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )


class TestDiffCommand:
    def test_identical_files_no_output(self, tmp_path):
        a = tmp_path / "a.ps"
        a.write_text(BASE + "\n")
        result = run_cli(["diff", str(a), str(a)])
        assert result.returncode == 0
        assert result.stdout == ""

    def test_insert_printed(self, tmp_path):
        a = tmp_path / "a.ps"
        b = tmp_path / "b.ps"
        a.write_text(BASE + "\n")
        lines = BASE.split("\n")
        lines.insert(3, "X = standard_scale(X)")
        b.write_text("\n".join(lines) + "\n")
        result = run_cli(["diff", str(a), str(b)])
        assert result.returncode == 0
        assert result.stdout.strip() == "+ X = standard_scale(X)"

    def test_missing_file_nonzero_exit(self, tmp_path):
        result = run_cli(["diff", str(tmp_path / "x.ps"), str(tmp_path / "y.ps")])
        assert result.returncode == 1
        assert result.stderr


class TestRunCommand:
    def test_zero_steps_prints_baseline_only(self, dataset_path):
        result = run_cli(["run", "--dataset", dataset_path, "--label", "label",
                          "--auto-steps", "0"])
        assert result.returncode == 0, result.stderr
        lines = result.stdout.strip().split("\n")
        assert len(lines) == 1
        assert lines[0].startswith("step 0: op=baseline metric=")

    def test_three_steps_deterministic(self, dataset_path):
        args = ["run", "--dataset", dataset_path, "--label", "label", "--auto-steps", "3"]
        r1 = run_cli(args)
        r2 = run_cli(args)
        assert r1.returncode == r2.returncode == 0, r1.stderr
        assert r1.stdout == r2.stdout
        lines = r1.stdout.strip().split("\n")
        assert len(lines) == 4
        for i, line in enumerate(lines):
            assert line.startswith(f"step {i}: op=")

    def test_in_process_entry_point(self, dataset_path, capsys):
        code = main(["run", "--dataset", dataset_path, "--label", "label",
                     "--auto-steps", "0"])
        assert code == 0
        assert "step 0" in capsys.readouterr().out


class TestTrainCommand:
    def test_byte_identical_model_files(self, tmp_path, dataset_path):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        for i in range(2):
            write_csv(make_synth_dataset(700 + i), corpus / f"d{i}.csv")
        out1, out2 = tmp_path / "m1", tmp_path / "m2"
        for out in (out1, out2):
            result = run_cli([
                "train", "--corpus", str(corpus), "--episodes", "1",
                "--seed", "7", "--out", str(out),
            ])
            assert result.returncode == 0, result.stderr
        for name in ("logical.qnet", "physical.qnet", "logical.qnet.json", "physical.qnet.json"):
            b1 = (out1 / name).read_bytes()
            b2 = (out2 / name).read_bytes()
            assert b1 == b2, name

    def test_trained_models_loadable_by_run(self, tmp_path, dataset_path):
        corpus = tmp_path / "corpus"
        corpus.mkdir()
        write_csv(make_synth_dataset(800), corpus / "d.csv")
        models = tmp_path / "models"
        result = run_cli([
            "train", "--corpus", str(corpus), "--episodes", "1",
            "--seed", "1", "--out", str(models),
        ])
        assert result.returncode == 0, result.stderr
        result = run_cli([
            "run", "--dataset", dataset_path, "--label", "label",
            "--auto-steps", "1", "--models", str(models),
        ])
        assert result.returncode == 0, result.stderr
        assert "step 1: op=" in result.stdout

    def test_empty_corpus_fails(self, tmp_path):
        corpus = tmp_path / "empty"
        corpus.mkdir()
        result = run_cli(["train", "--corpus", str(corpus), "--episodes", "1"])
        assert result.returncode == 1
