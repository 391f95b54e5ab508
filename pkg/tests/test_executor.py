import numpy as np
import pytest

from prepline import executor as ex
from prepline.dataset import CATEGORICAL, NUMERIC, Column, make_dataset, write_csv
from prepline.errors import NonBinaryLabel, UnimputedMissing
from prepline.script import parse


def num_col(name, values):
    return Column(name, NUMERIC, tuple(float(v) if v is not None else None for v in values))


def separable_dataset(n_per_class=20):
    xs, ys = [], []
    for i in range(n_per_class):
        xs.append(-5.0 - i * 0.1)
        ys.append(0.0)
        xs.append(5.0 + i * 0.1)
        ys.append(1.0)
    return make_dataset("toy", [num_col("f", xs)]), num_col("label", ys)


@pytest.fixture
def data_dir(tmp_path):
    X, y = separable_dataset()
    d = make_dataset("toy", list(X.columns) + [y])
    write_csv(d, tmp_path / "toy.csv")
    return tmp_path


class TestTrainEval:
    def test_separable_reaches_perfect_f1(self):
        X, y = separable_dataset()
        assert ex.train_eval(X, y) == 1.0

    def test_accuracy_metric(self):
        X, y = separable_dataset()
        assert ex.train_eval(X, y, metric="accuracy") == 1.0

    def test_metric_bounds(self):
        X, y = separable_dataset()
        for seed in range(5):
            m = ex.train_eval(X, y, seed=seed)
            assert 0.0 <= m <= 1.0

    def test_non_binary_label(self):
        X, _ = separable_dataset()
        y = num_col("label", [1.0] * X.row_count)
        with pytest.raises(NonBinaryLabel):
            ex.train_eval(X, y)

    def test_missing_features_rejected(self):
        X, y = separable_dataset()
        holed = make_dataset(
            "toy", [num_col("f", [None] + list(X.column("f").values[1:]))]
        )
        with pytest.raises(UnimputedMissing):
            ex.train_eval(holed, y)

    def test_missing_label_rejected(self):
        X, y = separable_dataset()
        holey = num_col("label", [None] + list(y.values[1:]))
        with pytest.raises(UnimputedMissing):
            ex.train_eval(X, holey)

    def test_categorical_features_ordinal_coded(self):
        X, y = separable_dataset(10)
        tokens = tuple("lo" if v < 0 else "hi" for v in X.column("f").values)
        cat = make_dataset("toy", [Column("f", CATEGORICAL, tokens)])
        metric = ex.train_eval(cat, y)
        assert 0.0 <= metric <= 1.0

    def test_deterministic(self):
        X, y = separable_dataset()
        assert ex.train_eval(X, y, seed=3) == ex.train_eval(X, y, seed=3)


class TestF1:
    def test_hand_computed(self):
        y_true = np.array([1, 1, 0, 0, 1], dtype=float)
        y_pred = np.array([1, 0, 1, 0, 1], dtype=float)
        # tp=2 fp=1 fn=1 -> p=2/3 r=2/3 -> f1=2/3
        assert ex.f1_score(y_true, y_pred) == pytest.approx(2.0 / 3.0)

    def test_no_positive_predictions(self):
        assert ex.f1_score(np.array([1.0, 0.0]), np.array([0.0, 0.0])) == 0.0


class TestExecute:
    def test_baseline_ok(self, data_dir):
        g = parse(ex.baseline_program("toy.csv", "label"))
        result = ex.Executor(data_dir).run(g)
        assert result.ok
        assert result.metric == 1.0
        assert len(result.node_reports) == 4
        assert all(r.byte_size > 0 for r in result.node_reports)

    def test_status_metric_invariant(self, data_dir):
        g = parse(ex.baseline_program("toy.csv", "label"))
        result = ex.Executor(data_dir).run(g)
        assert result.ok and result.metric is not None
        assert result.error_message is None

    def test_unknown_operation_error_format(self, data_dir):
        g = parse(
            'df = load_csv("toy.csv")\n'
            "X = polynomial_feat(df)\n"
            'y = get_column(df, "label")\n'
            "score = train_eval(X, y)"
        )
        result = ex.Executor(data_dir).run(g)
        assert result.status == "error"
        assert result.error_message == "UndefinedOperation: polynomial_feat at line 2"
        assert result.metric is None

    def test_bit_identical_reruns(self, data_dir):
        g = parse(ex.baseline_program("toy.csv", "label"))
        runner = ex.Executor(data_dir)
        assert runner.run(g).metric == runner.run(g).metric

    def test_missing_file_error(self, tmp_path):
        g = parse('df = load_csv("absent.csv")')
        result = ex.Executor(tmp_path).run(g)
        assert result.status == "error"
        assert result.error_message.startswith("IoError:")
        assert result.error_message.endswith("at line 1")

    def test_env_holds_intermediate_datasets(self, data_dir):
        g = parse(ex.baseline_program("toy.csv", "label"))
        result = ex.Executor(data_dir).run(g)
        assert set(result.env) == {"df.1", "X.1", "y.1", "score.1"}
        assert ex.insertion_dataset(g, result.env).column_names == ["f"]

    def test_physical_op_in_pipeline(self, data_dir):
        g = parse(
            'df = load_csv("toy.csv")\n'
            'X = drop_column(df, "label")\n'
            "X = min_max_scale(X)\n"
            'y = get_column(df, "label")\n'
            "score = train_eval(X, y)"
        )
        result = ex.Executor(data_dir).run(g)
        assert result.ok
        values = result.env["X.2"].column("f").values
        assert min(values) == 0.0 and max(values) == 1.0

    def test_replace_value_positional_params(self, data_dir):
        g = parse(
            'df = load_csv("toy.csv")\n'
            'X = drop_column(df, "label")\n'
            'X = replace_value(X, 5.0, "median")\n'
            'y = get_column(df, "label")\n'
            "score = train_eval(X, y)"
        )
        result = ex.Executor(data_dir).run(g)
        assert result.ok
        assert 5.0 not in result.env["X.2"].column("f").values

    def test_timing_reports_monotone(self, data_dir):
        g = parse(ex.baseline_program("toy.csv", "label"))
        result = ex.Executor(data_dir).run(g)
        assert all(r.micros >= 0 for r in result.node_reports)
