"""Metric arithmetic, confusion matrices, and cross-validation."""

import numpy as np
import pytest

from ferpipe.errors import InvalidInputError
from ferpipe.evalharness import (
    CLASS_NAMES,
    class_metrics,
    class_metrics_from_counts,
    confusion_matrix,
    cross_validate,
    format_report,
    macro_average,
    report_from_predictions,
    round2,
    stratified_folds,
)

# reference per-class counts and displayed percentages (Gabor-feature run)
GABOR_ROWS = [
    (14, 0, 0, 84, 100.00, 100.00, 100.00),
    (10, 4, 4, 80, 71.43, 95.24, 91.84),
    (11, 5, 3, 79, 78.57, 94.05, 91.84),
    (9, 4, 5, 80, 64.29, 95.24, 90.82),
    (11, 4, 3, 80, 78.57, 95.24, 92.86),
    (11, 1, 3, 83, 78.57, 98.81, 95.92),
    (9, 5, 5, 79, 64.29, 94.05, 89.80),
]
GABOR_AVR = (76.53, 96.09, 93.29)

# the same run's full confusion matrix (rows: truth, columns: predicted)
GABOR_CM = [
    [14, 0, 0, 0, 0, 0, 0],
    [0, 10, 0, 2, 1, 0, 1],
    [0, 0, 11, 0, 1, 1, 1],
    [0, 1, 2, 9, 0, 0, 2],
    [0, 0, 2, 0, 11, 0, 1],
    [0, 1, 1, 0, 1, 11, 0],
    [0, 2, 0, 2, 1, 0, 9],
]

# texture-feature run counts and percentages
LBP_ROWS = [
    (12, 3, 2, 81, 85.71, 96.43, 94.90),
    (7, 3, 7, 81, 50.00, 96.43, 89.80),
    (9, 5, 5, 79, 64.29, 94.05, 89.80),
    (7, 3, 7, 81, 50.00, 96.43, 89.80),
    (8, 4, 6, 80, 57.14, 95.24, 89.80),
    (9, 9, 5, 75, 64.29, 89.29, 85.71),
    (7, 11, 7, 73, 50.00, 86.90, 81.63),
]
LBP_AVR = (60.20, 93.54, 88.78)


class TestRounding:
    def test_half_up(self):
        assert round2(95.238095) == 95.24
        assert round2(71.428571) == 71.43
        assert round2(2.005) == 2.01
        assert round2(2.675) == 2.68


class TestClassMetrics:
    @pytest.mark.parametrize("row", GABOR_ROWS)
    def test_gabor_rows(self, row):
        tp, fp, fn, tn, sen, spe, ace = row
        m = class_metrics_from_counts(tp, fp, fn, tn)
        assert m.display() == (sen, spe, ace)

    @pytest.mark.parametrize("row", LBP_ROWS)
    def test_lbp_rows(self, row):
        tp, fp, fn, tn, sen, spe, ace = row
        m = class_metrics_from_counts(tp, fp, fn, tn)
        assert m.display() == (sen, spe, ace)

    def test_counts_sum(self):
        for row in GABOR_ROWS:
            assert sum(row[:4]) == 98

    def test_negative_rejected(self):
        with pytest.raises(InvalidInputError):
            class_metrics_from_counts(-1, 0, 0, 10)


class TestMacroAverage:
    def test_gabor_average(self):
        ms = [class_metrics_from_counts(*row[:4]) for row in GABOR_ROWS]
        avg = macro_average(ms)
        assert tuple(round2(v) for v in avg) == GABOR_AVR

    def test_lbp_average(self):
        ms = [class_metrics_from_counts(*row[:4]) for row in LBP_ROWS]
        avg = macro_average(ms)
        assert tuple(round2(v) for v in avg) == LBP_AVR

    def test_identical_rows(self):
        m = class_metrics_from_counts(10, 4, 4, 80)
        avg = macro_average([m, m, m])
        assert avg == (m.sen, m.spe, m.ace)

    def test_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            macro_average([])


class TestConfusionMatrix:
    def test_all_correct_diagonal(self):
        truth = [0, 0, 1, 2, 2, 2]
        cm = confusion_matrix(truth, truth, 3)
        assert np.array_equal(cm.counts, np.diag([2, 1, 3]))

    def test_happy_row(self):
        truth = [0] * 14
        pred = [0] * 14
        cm = confusion_matrix(truth, pred, 7)
        assert cm.counts[0].tolist() == [14, 0, 0, 0, 0, 0, 0]
        assert cm.class_names == CLASS_NAMES

    def test_matches_tally_oracle(self):
        rng = np.random.default_rng(30)
        truth = rng.integers(0, 4, 30)
        pred = rng.integers(0, 4, 30)
        cm = confusion_matrix(truth, pred, 4)
        manual = np.zeros((4, 4), dtype=int)
        for t, p in zip(truth, pred):
            manual[t, p] += 1
        assert np.array_equal(cm.counts, manual)

    def test_full_matrix_reproduces_count_columns(self):
        cm = confusion_matrix(
            [i for i in range(7) for _ in range(14)],
            [j for i in range(7) for j in range(7) for _ in range(GABOR_CM[i][j])],
            7,
        )
        assert cm.counts.tolist() == GABOR_CM
        for i, row in enumerate(GABOR_ROWS):
            m = class_metrics(cm, i)
            assert (m.tp, m.fp, m.fn, m.tn) == row[:4]

    def test_tp_sum_equals_trace(self):
        rng = np.random.default_rng(31)
        cm = confusion_matrix(rng.integers(0, 3, 40), rng.integers(0, 3, 40), 3)
        ms = [class_metrics(cm, i) for i in range(3)]
        assert sum(m.tp for m in ms) == int(np.trace(cm.counts))
        for i, m in enumerate(ms):
            assert m.tp + m.fn == int(cm.counts[i].sum())
            assert m.tp + m.fp == int(cm.counts[:, i].sum())

    def test_validation(self):
        with pytest.raises(InvalidInputError):
            confusion_matrix([0, 1], [0], 2)
        with pytest.raises(InvalidInputError):
            confusion_matrix([0, 5], [0, 1], 2)
        with pytest.raises(InvalidInputError):
            confusion_matrix([], [], 2)


class TestCrossValidate:
    def test_loo_separable(self):
        X = np.array([[0.0, 1.0], [0.1, 1.0], [1.0, 0.0], [1.0, 0.1]])
        y = [0, 0, 1, 1]

        def fit_predict(Xtr, ytr, Xte):
            from ferpipe.classify import classify_batch, mean_prototypes

            return classify_batch(mean_prototypes(Xtr, ytr), Xte)

        report = cross_validate(X, y, fit_predict, scheme="leave-one-out")
        assert report.accuracy == 1.0

    def test_partition_property(self):
        rng = np.random.default_rng(32)
        X = rng.normal(size=(35, 3))
        y = np.repeat(np.arange(5), 7)

        def fit_predict(Xtr, ytr, Xte):
            return np.zeros(len(Xte), dtype=int)

        for scheme, k in (("k-fold", 7), ("leave-one-out", 0)):
            report = cross_validate(X, y, fit_predict, scheme=scheme, k=max(k, 2))
            assert report.matrix.total == 35

    def test_deterministic_reports(self):
        rng = np.random.default_rng(33)
        X = rng.normal(size=(28, 4))
        y = np.repeat(np.arange(4), 7)

        def fit_predict(Xtr, ytr, Xte):
            from ferpipe.classify import KnnModel, knn_batch

            return knn_batch(KnnModel(Xtr, ytr, k=1), Xte)

        r1 = cross_validate(X, y, fit_predict, k=7, seed=42)
        r2 = cross_validate(X, y, fit_predict, k=7, seed=42)
        assert format_report(r1) == format_report(r2)
        assert np.array_equal(r1.matrix.counts, r2.matrix.counts)

    def test_stratified_fold_sizes(self):
        y = np.repeat(np.arange(7), 14)
        folds = stratified_folds(y, 7, seed=42)
        assert sorted(np.concatenate(folds).tolist()) == list(range(98))
        for f in folds:
            vals, counts = np.unique(y[f], return_counts=True)
            assert np.all(counts == 2)  # 14 / 7 per class per fold

    def test_class_smaller_than_k(self):
        y = [0, 0, 1]
        with pytest.raises(InvalidInputError):
            stratified_folds(y, 3, seed=1)


class TestReportFormat:
    def test_contains_reference_layout(self):
        truth = [i for i in range(7) for _ in range(14)]
        pred = [j for i in range(7) for j in range(7) for _ in range(GABOR_CM[i][j])]
        report = report_from_predictions(truth, pred, 7)
        text = format_report(report)
        assert "AVR" in text
        assert "100.00" in text and "76.53" in text and "93.29" in text
        assert "happy" in text and "calm" in text

    def test_macro_matches_reference(self):
        truth = [i for i in range(7) for _ in range(14)]
        pred = [j for i in range(7) for j in range(7) for _ in range(GABOR_CM[i][j])]
        report = report_from_predictions(truth, pred, 7)
        assert tuple(round2(v) for v in report.macro) == GABOR_AVR
