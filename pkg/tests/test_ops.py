import math

import numpy as np
import pytest

from prepline import ops
from prepline.dataset import CATEGORICAL, NUMERIC, Column, make_dataset
from prepline.errors import BadParam, EmptyResult


def num_col(name, values):
    return Column(name, NUMERIC, tuple(float(v) if v is not None else None for v in values))


def one_col(values, name="x"):
    return make_dataset("d", [num_col(name, values)])


def vals(d, name="x"):
    return d.column(name).values


def apply(name, values, **params):
    return vals(ops.apply_physical(name, params, one_col(values)))


class TestCatalog:
    def test_families_and_ops(self):
        cat = ops.catalog()
        assert [fam.id for fam, _ in cat] == list(ops.FAMILY_IDS)
        assert len(cat) == 6
        assert sum(len(members) for _, members in cat) == 18
        for fam, members in cat:
            for op in members:
                assert op.family == fam.id

    def test_family_of_min_max(self):
        assert ops.family_of("min_max_scale") == ops.SCALER

    def test_outlier_handler_contains_replace_value(self):
        handler_ops = dict(ops.catalog())[ops.FAMILIES[ops.OUTLIER_HANDLER]]
        replace = [op for op in handler_ops if op.name == "replace_value"]
        assert len(replace) == 1
        assert replace[0].defaults() == {"v": 0, "stat": "median"}

    def test_every_family_has_default_op(self):
        for fam_id in ops.FAMILY_IDS:
            name = ops.FAMILY_DEFAULT_OP[fam_id]
            assert ops.OPS_BY_NAME[name].family == fam_id


class TestImputers:
    def test_mean_impute(self):
        assert apply("mean_impute", [1, None, 3]) == (1.0, 2.0, 3.0)

    def test_median_impute(self):
        assert apply("median_impute", [1, 2, None, 9]) == (1.0, 2.0, 2.0, 9.0)

    def test_mode_impute_tie_smallest(self):
        assert apply("mode_impute", [2, 2, 1, 1, None]) == (2.0, 2.0, 1.0, 1.0, 1.0)

    def test_const_impute(self):
        assert apply("const_impute", [None, 4], v=7) == (7.0, 4.0)

    def test_all_missing_fills_zero(self):
        assert apply("mean_impute", [None, None]) == (0.0, 0.0)


class TestOutlierHandlers:
    def test_replace_value_median_of_rest(self):
        assert apply("replace_value", [0, 2, 4, 6]) == (4.0, 2.0, 4.0, 6.0)

    def test_replace_value_no_others_yields_missing(self):
        assert apply("replace_value", [0, 0]) == (None, None)

    def test_replace_value_mean(self):
        assert apply("replace_value", [0, 2, 4], stat="mean") == (3.0, 2.0, 4.0)

    def test_replace_value_bad_stat(self):
        with pytest.raises(BadParam):
            apply("replace_value", [0, 1], stat="max")

    def test_iqr_clip(self):
        values = [1.0, 2.0, 3.0, 4.0, 100.0]
        arr = np.array(values)
        q25, q75 = np.quantile(arr, 0.25), np.quantile(arr, 0.75)
        hi = q75 + 1.5 * (q75 - q25)
        out = apply("iqr_clip", values)
        assert out[-1] == pytest.approx(hi)
        assert out[:4] == tuple(values[:4])

    def test_zscore_clip(self):
        values = [0.0] * 10 + [100.0]
        arr = np.array(values)
        hi = arr.mean() + 3 * arr.std()
        out = apply("zscore_clip", values, z=3)
        assert out[-1] == pytest.approx(hi)


class TestScalers:
    def test_min_max(self):
        assert apply("min_max_scale", [0, 5, 10]) == (0.0, 0.5, 1.0)

    def test_min_max_constant_column(self):
        assert apply("min_max_scale", [3, 3, 3]) == (0.0, 0.0, 0.0)

    def test_standard(self):
        out = np.array(apply("standard_scale", [1, 2, 3]))
        expected = (np.array([1, 2, 3]) - 2.0) / np.array([1, 2, 3]).std()
        assert out == pytest.approx(expected)

    def test_max_abs(self):
        assert apply("max_abs_scale", [-4, 2]) == (-1.0, 0.5)
        assert apply("max_abs_scale", [0, 0]) == (0.0, 0.0)

    def test_robust(self):
        values = [1.0, 2.0, 3.0, 4.0, 5.0]
        arr = np.array(values)
        med = np.quantile(arr, 0.5)
        iqr = np.quantile(arr, 0.75) - np.quantile(arr, 0.25)
        assert apply("robust_scale", values) == pytest.approx(tuple((arr - med) / iqr))

    def test_missing_preserved(self):
        assert apply("min_max_scale", [0, None, 10]) == (0.0, None, 1.0)


class TestDiscretizers:
    def test_equal_width_max_maps_to_last(self):
        out = apply("equal_width_bins", [0, 2.5, 5, 7.5, 10], k=4)
        assert out == (0.0, 1.0, 2.0, 3.0, 3.0)

    def test_quantile_bins_balanced(self):
        out = apply("quantile_bins", list(range(10)), k=2)
        assert out == (0.0,) * 5 + (1.0,) * 5

    def test_bad_bin_count(self):
        with pytest.raises(BadParam):
            apply("equal_width_bins", [1, 2], k=0)

    def test_custom_bins_bmi(self):
        d = one_col([22.0, 17.0, 27.5, 35.0, 150.0, -3.0], name="BMI")
        out = ops.apply_physical(
            "custom_bins",
            {"edges": [0, 18.5, 25, 30, 100],
             "labels": ["underweight", "normal", "overweight", "obese"]},
            d,
        )
        col = out.column("BMI")
        assert col.kind == CATEGORICAL
        assert col.values == (
            "normal", "underweight", "overweight", "obese", "obese", "underweight"
        )

    def test_custom_bins_validation(self):
        with pytest.raises(BadParam):
            apply("custom_bins", [1], edges=[0, 1], labels=["a", "b"])
        with pytest.raises(BadParam):
            apply("custom_bins", [1], edges=[1, 0], labels=["a"])


class TestGenerators:
    def test_poly_features_two_columns(self):
        d = make_dataset("d", [num_col("A", [1, 2]), num_col("B", [3, 4])])
        out = ops.apply_physical("poly_features", {}, d)
        assert out.column_names == ["A", "B", "A^2", "B^2", "A*B"]
        assert out.column("A^2").values == (1.0, 4.0)
        assert out.column("A*B").values == (3.0, 8.0)

    def test_interactions_only(self):
        d = make_dataset("d", [num_col("A", [1]), num_col("B", [5]), num_col("C", [2])])
        out = ops.apply_physical("interactions_only", {}, d)
        assert out.column_names == ["A", "B", "C", "A*B", "A*C", "B*C"]

    def test_poly_rejects_other_degrees(self):
        with pytest.raises(BadParam):
            apply("poly_features", [1], degree=3)

    def test_missing_propagates_through_products(self):
        d = make_dataset("d", [num_col("A", [1, None]), num_col("B", [3, 4])])
        out = ops.apply_physical("interactions_only", {}, d)
        assert out.column("A*B").values == (3.0, None)


class TestSelectors:
    def test_variance_threshold_drops_constant(self):
        d = make_dataset("d", [num_col("A", [1, 2, 3]), num_col("B", [5, 5, 5])])
        out = ops.apply_physical("variance_threshold", {}, d)
        assert out.column_names == ["A"]

    def test_variance_threshold_empty_result(self):
        d = make_dataset("d", [num_col("A", [5, 5])])
        with pytest.raises(EmptyResult):
            ops.apply_physical("variance_threshold", {}, d)

    def test_correlation_filter_drops_later(self):
        a = [1.0, 2.0, 3.0, 4.0]
        d = make_dataset(
            "d",
            [num_col("A", a), num_col("B", [2 * v for v in a]), num_col("C", [1, -1, 1, -1])],
        )
        out = ops.apply_physical("correlation_filter", {}, d)
        assert out.column_names == ["A", "C"]

    def test_correlation_filter_keeps_uncorrelated(self):
        d = make_dataset("d", [num_col("A", [1, 2, 3, 4]), num_col("B", [1, -2, 3, -4])])
        out = ops.apply_physical("correlation_filter", {"r": 0.999}, d)
        assert out.column_names == ["A", "B"]


class TestContracts:
    """Shape/finiteness/idempotence contracts over the whole catalog."""

    def _sample(self):
        return make_dataset(
            "d",
            [
                num_col("a", [0.0, 1.5, -2.0, 7.0, 7.0, None]),
                num_col("b", [10.0, 0.0, 3.0, 5.0, -1.0, 2.0]),
                Column("c", CATEGORICAL, ("u", "v", "u", None, "w", "v")),
            ],
        )

    def test_no_non_finite_outputs(self):
        for op in ops.all_ops():
            out = ops.apply_physical(op, {}, self._sample())
            for col in out.columns:
                if col.kind != NUMERIC:
                    continue
                for v in col.values:
                    assert v is None or math.isfinite(v), (op.name, col.name, v)

    def test_input_never_mutated(self):
        d = self._sample()
        snapshot = tuple((c.name, c.kind, c.values) for c in d.columns)
        for op in ops.all_ops():
            ops.apply_physical(op, {}, d)
        assert tuple((c.name, c.kind, c.values) for c in d.columns) == snapshot

    def test_shape_contracts(self):
        d = self._sample()
        for op in ops.all_ops():
            out = ops.apply_physical(op, {}, d)
            assert out.row_count == d.row_count, op.name
            if op.family == ops.SCALER:
                assert out.column_names == d.column_names
            elif op.family == ops.FEATURE_SELECTOR:
                assert set(out.column_names) <= set(d.column_names)
            elif op.family == ops.FEATURE_GENERATOR:
                assert set(d.column_names) <= set(out.column_names)
            elif op.family in (ops.IMPUTER, ops.OUTLIER_HANDLER, ops.DISCRETIZER):
                assert out.column_names == d.column_names

    def test_idempotence_where_claimed(self):
        d = self._sample()
        for name in ("min_max_scale", "max_abs_scale", "variance_threshold"):
            once = ops.apply_physical(name, {}, d)
            twice = ops.apply_physical(name, {}, once)
            assert once == twice, name

    def test_standard_scale_idempotent_within_tolerance(self):
        d = self._sample()
        once = ops.apply_physical("standard_scale", {}, d)
        twice = ops.apply_physical("standard_scale", {}, once)
        for c1, c2 in zip(once.columns, twice.columns):
            if c1.kind != NUMERIC:
                continue
            for v1, v2 in zip(c1.values, c2.values):
                if v1 is None:
                    assert v2 is None
                else:
                    assert abs(v1 - v2) < 1e-9

    def test_poly_features_not_idempotent(self):
        d = make_dataset("d", [num_col("a", [1, 2]), num_col("b", [3, 4])])
        once = ops.apply_physical("poly_features", {}, d)
        twice = ops.apply_physical("poly_features", {}, once)
        assert len(twice.columns) > len(once.columns)

    def test_unknown_param_rejected(self):
        with pytest.raises(BadParam):
            ops.apply_physical("min_max_scale", {"bogus": 1}, self._sample())


class TestPrompts:
    def test_standard_scale_exact_text(self):
        p = ops.prompt_for(ops.OPS_BY_NAME["standard_scale"])
        assert p.text == "Standardize features by removing the mean and scaling to unit variance"
        assert p.kind == "fine"

    def test_feature_generator_coarse(self):
        p = ops.prompt_for(ops.FAMILIES[ops.FEATURE_GENERATOR])
        assert p.text == "Generate interaction features"
        assert p.kind == "coarse"

    def test_discretizer_coarse(self):
        assert ops.prompt_for(ops.FAMILIES[ops.DISCRETIZER]).text == "Discretize the features"

    def test_replace_value_with_columns_and_refinement(self):
        p = ops.prompt_for(
            ops.OPS_BY_NAME["replace_value"],
            refinement="Use the per-column median computed without the zeros.",
            context={"columns": "Glucose, BloodPressure"},
        )
        assert p.text.startswith("Remove the outlier value 0 in columns Glucose")
        assert p.text.endswith("Use the per-column median computed without the zeros.")
        assert p.kind == "refinement"

    def test_param_substitution(self):
        p = ops.prompt_for(ops.OPS_BY_NAME["equal_width_bins"])
        assert p.text == "Discretize each feature into 5 equal-width bins"
