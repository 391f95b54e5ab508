"""Bundled data/program corpus generators.

Synthetic classification datasets are constructed so that specific prep
families provably matter to the built-in classifier:

* one informative feature carries a huge magnitude (scalers fix the
  gradient conditioning),
* one strictly-positive informative feature is zero-inflated (replacing
  the sentinel with the median repairs it, but only while the raw 0.0
  cells are still present),
* one column is constant (selectors remove it),
* one column is pure noise.

The diabetes-schema dataset mirrors the well-known eight-measurement
task (768 rows, zero-inflated Glucose/BloodPressure/SkinThickness/
Insulin/BMI, ~35% positive rate); it is generated deterministically
here because the original file cannot be fetched offline.
"""

from __future__ import annotations

import math
import os

from .dataset import NUMERIC, Column, Dataset, make_dataset, write_csv
from .rng import SeededRng

TRAIN_SEEDS = tuple(range(100, 106))
EVAL_SEEDS = tuple(range(200, 210))


def _round(v, digits=4):
    return float(round(v, digits))


def make_synth_dataset(seed, name=None) -> Dataset:
    """One synthetic binary task; label column is ``label``."""
    rng = SeededRng(seed)
    n = 260 + rng.randint(81)  # 260..340 rows
    scale = 2000.0 + rng.randint(8001)  # magnitude of the unscaled feature
    zero_frac = 0.25 + 0.15 * rng.random()
    coef = (1.4 * (2.5 + rng.random()), 1.4 * (2.0 + rng.random()), 1.0)
    rows = []
    for _ in range(n):
        z0 = rng.uniform(-1.0, 1.0)
        z1 = rng.random()  # strictly positive latent
        z2 = rng.uniform(-1.0, 1.0)
        noise = rng.uniform(-0.3, 0.3)
        zero = rng.random() < zero_frac
        logit = coef[0] * z0 + coef[1] * (2.0 * z1 - 1.0) + coef[2] * z2
        label = 1.0 if logit + noise > 0.0 else 0.0
        rows.append(
            (
                _round(z0 * scale),
                0.0 if zero else _round(50.0 + 150.0 * z1),
                _round(z2),
                5.0,
                _round(rng.uniform(-2.0, 2.0)),
                label,
            )
        )
    names = ("big_mag", "zero_inflated", "clean", "const", "noise", "label")
    return make_dataset(
        name or f"synth_{seed}",
        [
            Column(nm, NUMERIC, tuple(r[i] for r in rows))
            for i, nm in enumerate(names)
        ],
    )


DIABETES_COLUMNS = (
    "Pregnancies", "Glucose", "BloodPressure", "SkinThickness", "Insulin",
    "BMI", "DiabetesPedigreeFunction", "Age", "Outcome",
)


def make_diabetes_standin(seed=0xD1AB, rows=768) -> Dataset:
    """Deterministic stand-in with the classic diabetes schema.

    Measurements are expressed in rescaled units (raw clinical ranges
    divided by 25) so the fixed-step classifier operates in its working
    regime; the zero sentinels in Glucose/BloodPressure/SkinThickness/
    Insulin/BMI keep their outlier role.
    """
    rng = SeededRng(seed)
    div = 25.0
    records = []
    for _ in range(rows):
        risk = rng.random()
        age = 21.0 + math.floor(40.0 * rng.random() ** 2)
        pregnancies = float(rng.randint(9)) if rng.random() < 0.85 else float(9 + rng.randint(6))
        glucose = 88.0 + 55.0 * risk + rng.uniform(-18.0, 18.0)
        blood_pressure = 62.0 + 18.0 * risk + rng.uniform(-12.0, 12.0)
        skin = 18.0 + 14.0 * rng.random() + 6.0 * risk
        insulin = 60.0 + 130.0 * risk + rng.uniform(-35.0, 35.0)
        bmi = 25.0 + 13.0 * risk + rng.uniform(-5.0, 5.0)
        pedigree = 0.1 + 1.2 * rng.random() ** 2 + 0.3 * risk
        logit = (
            0.055 * (glucose - 115.0)
            + 0.09 * (bmi - 31.0)
            + 0.035 * (age - 33.0)
            + 0.9 * (pedigree - 0.6)
            + 0.012 * (insulin - 125.0)
            + rng.uniform(-1.4, 1.4)
        )
        outcome = 1.0 if logit > 0.55 else 0.0
        # zero-inflation echoes the familiar public file
        if rng.random() < 0.02:
            glucose = 0.0
        if rng.random() < 0.06:
            blood_pressure = 0.0
        if rng.random() < 0.29:
            skin = 0.0
        if rng.random() < 0.48:
            insulin = 0.0
        if rng.random() < 0.014:
            bmi = 0.0
        records.append(
            (
                _round(pregnancies / 5.0),
                _round(glucose / div),
                _round(blood_pressure / div),
                _round(skin / div),
                _round(insulin / div),
                _round(bmi / div),
                _round(pedigree, 3),
                _round(age / div),
                outcome,
            )
        )
    columns = [
        Column(name, NUMERIC, tuple(rec[i] for rec in records))
        for i, name in enumerate(DIABETES_COLUMNS)
    ]
    return make_dataset("diabetes", columns)


BASE_PROGRAM = """df = load_csv("diabetes.csv")
X = drop_column(df, "Outcome")
y = get_column(df, "Outcome")
score = train_eval(X, y, metric="f1", test_ratio=0.25, seed=0)"""


def _synth_base(csv_name, extra_lines=()):
    lines = [
        f'df = load_csv("{csv_name}")',
        'X = drop_column(df, "label")',
        *extra_lines,
        'y = get_column(df, "label")',
        "score = train_eval(X, y, metric=\"f1\", test_ratio=0.25, seed=0)",
    ]
    return "\n".join(lines)


def program_corpus():
    """>= 20 grammar-valid PrepScript programs for the parser suite."""
    programs = {
        "p01_base.ps": BASE_PROGRAM,
        "p02_impute.ps": _synth_base("synth/train_100.csv", ["X = median_impute(X)"]),
        "p03_scale_chain.ps": _synth_base(
            "synth/train_101.csv",
            ["X = replace_value(X, v=0, stat=\"median\")", "X = standard_scale(X)"],
        ),
        "p04_six_line.ps": "\n".join(
            [
                'df = load_csv("diabetes.csv")',
                'X = drop_column(df, "Outcome")',
                "X = median_impute(X)",
                "X = min_max_scale(X)",
                'y = get_column(df, "Outcome")',
                'score = train_eval(X, y, metric="f1", test_ratio=0.25, seed=0)',
            ]
        ),
        "p05_comments.ps": "\n".join(
            [
                "# load the raw table",
                'df = load_csv("synth/train_102.csv")',
                "",
                'X = drop_column(df, "label")',
                "# clip the extremes",
                "X = iqr_clip(X, k=1.5)",
                'y = get_column(df, "label")',
                "score = train_eval(X, y)",
            ]
        ),
        "p06_custom_bins.ps": _synth_base(
            "synth/train_103.csv",
            ['X = custom_bins(X, edges=[0, 18.5, 25, 30, 100], '
             'labels=["underweight", "normal", "overweight", "obese"])'],
        ),
        "p07_poly.ps": _synth_base(
            "synth/train_104.csv",
            ["X = min_max_scale(X)", "X = poly_features(X, degree=2)"],
        ),
        "p08_selectors.ps": _synth_base(
            "synth/train_105.csv",
            ["X = variance_threshold(X, t=0.0)", "X = correlation_filter(X, r=0.95)"],
        ),
        "p09_rebind_many.ps": "\n".join(
            [
                'df = load_csv("synth/eval_200.csv")',
                'X = drop_column(df, "label")',
                "X = mean_impute(X)",
                "X = zscore_clip(X, z=3)",
                "X = max_abs_scale(X)",
                "X = quantile_bins(X, k=5)",
                'y = get_column(df, "label")',
                "score = train_eval(X, y, metric=\"accuracy\", test_ratio=0.25, seed=0)",
            ]
        ),
        "p10_two_sources.ps": "\n".join(
            [
                'a = load_csv("synth/eval_201.csv")',
                'b = load_csv("synth/eval_202.csv")',
                'Xa = drop_column(a, "label")',
                'Xb = drop_column(b, "label")',
                "Xa = standard_scale(Xa)",
                "Xb = standard_scale(Xb)",
                'ya = get_column(a, "label")',
                "score = train_eval(Xa, ya)",
            ]
        ),
        "p11_renamed.ps": "\n".join(
            [
                'frame = load_csv("diabetes.csv")',
                'features = drop_column(frame, "Outcome")',
                "features = robust_scale(features)",
                'target = get_column(frame, "Outcome")',
                "result = train_eval(features, target, metric=\"f1\", "
                "test_ratio=0.25, seed=0)",
            ]
        ),
        "p12_shadowing.ps": "\n".join(
            [
                'x = load_csv("synth/eval_203.csv")',
                'x = drop_column(x, "label")',
                "x = min_max_scale(x)",
                "x = min_max_scale(x)",
                'y = load_csv("synth/eval_203.csv")',
                'y = get_column(y, "label")',
                "score = train_eval(x, y)",
            ]
        ),
        "p13_no_eval.ps": "\n".join(
            [
                'df = load_csv("synth/eval_204.csv")',
                'X = drop_column(df, "label")',
                "X = standard_scale(X)",
                "X = poly_features(X, degree=2)",
            ]
        ),
        "p14_pairwise.ps": "\n".join(
            [
                'df = load_csv("synth/eval_205.csv")',
                'X = drop_column(df, "label")',
                "X = pairwise_spread(X)",
                'y = get_column(df, "label")',
                "score = train_eval(X, y)",
            ]
        ),
        "p15_kwargs_everywhere.ps": _synth_base(
            "synth/eval_206.csv",
            [
                "X = const_impute(X, v=0)",
                "X = replace_value(X, v=0, stat=\"mean\")",
                "X = equal_width_bins(X, k=7)",
            ],
        ),
        "p16_interactions.ps": _synth_base(
            "synth/eval_207.csv",
            ["X = standard_scale(X)", "X = interactions_only(X)"],
        ),
        "p17_mode.ps": _synth_base("synth/eval_208.csv", ["X = mode_impute(X)"]),
        "p18_longest.ps": "\n".join(
            [
                'df = load_csv("diabetes.csv")',
                'X = drop_column(df, "Outcome")',
                "X = median_impute(X)",
                "X = replace_value(X, v=0, stat=\"median\")",
                "X = iqr_clip(X, k=2.0)",
                "X = standard_scale(X)",
                "X = poly_features(X, degree=2)",
                "X = variance_threshold(X, t=0.0)",
                "X = correlation_filter(X, r=0.98)",
                'y = get_column(df, "Outcome")',
                'score = train_eval(X, y, metric="f1", test_ratio=0.2, seed=3)',
            ]
        ),
        "p19_accuracy_metric.ps": _synth_base(
            "synth/eval_209.csv", ["X = zscore_clip(X, z=2)"]
        ),
        "p20_negative_literals.ps": _synth_base(
            "synth/train_100.csv",
            ["X = custom_bins(X, edges=[-10.5, -1, 0.5, 2e3], labels=[\"lo\", \"mid\", \"hi\"])"],
        ),
        "p21_blank_heavy.ps": "\n".join(
            [
                "",
                'df = load_csv("synth/train_101.csv")',
                "",
                "",
                'X = drop_column(df, "label")',
                "",
                'y = get_column(df, "label")',
                "score = train_eval(X, y)",
                "",
            ]
        ),
        "p22_reuse_mid.ps": "\n".join(
            [
                'df = load_csv("synth/train_102.csv")',
                'X = drop_column(df, "label")',
                "Z = standard_scale(X)",
                "W = min_max_scale(X)",
                'y = get_column(df, "label")',
                "score = train_eval(Z, y)",
                "alt = train_eval(W, y, metric=\"accuracy\")",
            ]
        ),
    }
    return programs


def build_corpus(dest):
    """Write the full bundled corpus under ``dest``."""
    dest = str(dest)
    synth_dir = os.path.join(dest, "synth")
    programs_dir = os.path.join(dest, "programs")
    os.makedirs(synth_dir, exist_ok=True)
    os.makedirs(programs_dir, exist_ok=True)
    write_csv(make_diabetes_standin(), os.path.join(dest, "diabetes.csv"))
    for seed in TRAIN_SEEDS:
        write_csv(make_synth_dataset(seed), os.path.join(synth_dir, f"train_{seed}.csv"))
    for seed in EVAL_SEEDS:
        write_csv(make_synth_dataset(seed), os.path.join(synth_dir, f"eval_{seed}.csv"))
    with open(os.path.join(dest, "diabetes_base.ps"), "w", encoding="utf-8") as fh:
        fh.write(BASE_PROGRAM + "\n")
    for name, text in program_corpus().items():
        with open(os.path.join(programs_dir, name), "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return dest


def corpus_root():
    """The bundled corpus directory at the repository root."""
    here = os.path.dirname(os.path.abspath(__file__))
    for candidate in (
        os.path.join(here, "..", "..", "corpus"),
        os.path.join(os.getcwd(), "corpus"),
    ):
        path = os.path.normpath(candidate)
        if os.path.isdir(path):
            return path
    raise FileNotFoundError("bundled corpus directory not found")


def train_corpus_paths(root=None, label="label"):
    root = root or corpus_root()
    return [
        (os.path.join(root, "synth", f"train_{seed}.csv"), label) for seed in TRAIN_SEEDS
    ]


def eval_corpus_paths(root=None, label="label"):
    root = root or corpus_root()
    return [
        (os.path.join(root, "synth", f"eval_{seed}.csv"), label) for seed in EVAL_SEEDS
    ]
