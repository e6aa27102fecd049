"""Confusion matrices, one-vs-rest metrics, and cross-validation.

Percentages are kept at full precision internally; display rounding is
half-up to 2 decimals (the convention that reproduces the reference
tables exactly).
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .errors import InvalidInputError

CLASS_NAMES = ("happy", "sad", "fear", "anger", "surprise", "disgust", "calm")


def round2(x: float) -> float:
    """Half-up rounding to 2 decimals (display convention)."""
    return float(Decimal(repr(float(x))).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray  # C x C, cell (i, j): true class i predicted as j
    class_names: tuple

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise InvalidInputError("confusion matrix must be square")
        if counts.min() < 0:
            raise InvalidInputError("confusion matrix counts must be non-negative")
        if len(self.class_names) != counts.shape[0]:
            raise InvalidInputError("class-name count must match matrix size")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "class_names", tuple(self.class_names))

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClassMetrics:
    tp: int
    fp: int
    fn: int
    tn: int
    sen: float  # 100*TP/(TP+FN), full precision
    spe: float  # 100*TN/(TN+FP)
    ace: float  # 100*(TP+TN)/total

    def display(self) -> tuple:
        return (round2(self.sen), round2(self.spe), round2(self.ace))


def class_metrics_from_counts(tp: int, fp: int, fn: int, tn: int) -> ClassMetrics:
    for name, v in (("tp", tp), ("fp", fp), ("fn", fn), ("tn", tn)):
        if v < 0:
            raise InvalidInputError(f"{name} must be >= 0")
    total = tp + fp + fn + tn
    if total == 0:
        raise InvalidInputError("all counts are zero")
    sen = 100.0 * tp / (tp + fn) if tp + fn else 0.0
    spe = 100.0 * tn / (tn + fp) if tn + fp else 0.0
    ace = 100.0 * (tp + tn) / total
    return ClassMetrics(tp, fp, fn, tn, sen, spe, ace)


def confusion_matrix(truth, predicted, n_classes=None, class_names=None) -> ConfusionMatrix:
    truth = np.asarray(truth).ravel().astype(np.int64)
    predicted = np.asarray(predicted).ravel().astype(np.int64)
    if truth.shape != predicted.shape:
        raise InvalidInputError("truth and prediction lengths differ")
    if truth.size == 0:
        raise InvalidInputError("empty label sequences")
    if n_classes is None:
        n_classes = int(max(truth.max(), predicted.max())) + 1
    if truth.min() < 0 or predicted.min() < 0 or max(truth.max(), predicted.max()) >= n_classes:
        raise InvalidInputError(f"labels must lie in [0, {n_classes})")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (truth, predicted), 1)
    if class_names is None:
        class_names = (
            CLASS_NAMES if n_classes == len(CLASS_NAMES)
            else tuple(f"class{i}" for i in range(n_classes))
        )
    return ConfusionMatrix(counts, tuple(class_names))


def class_metrics(cm: ConfusionMatrix, class_index: int) -> ClassMetrics:
    """One-vs-rest counts for one class (rows of the matrix are truth)."""
    c = cm.n_classes
    if not 0 <= class_index < c:
        raise InvalidInputError(f"class index must lie in [0, {c})")
    m = cm.counts
    tp = int(m[class_index, class_index])
    fn = int(m[class_index].sum()) - tp
    fp = int(m[:, class_index].sum()) - tp
    tn = cm.total - tp - fn - fp
    return class_metrics_from_counts(tp, fp, fn, tn)


def all_class_metrics(cm: ConfusionMatrix) -> list[ClassMetrics]:
    return [class_metrics(cm, i) for i in range(cm.n_classes)]


def macro_average(metrics) -> tuple:
    """Unweighted full-precision means of (SEN, SPE, ACE)."""
    metrics = list(metrics)
    if not metrics:
        raise InvalidInputError("cannot average an empty metric list")
    n = len(metrics)
    return (
        sum(m.sen for m in metrics) / n,
        sum(m.spe for m in metrics) / n,
        sum(m.ace for m in metrics) / n,
    )


@dataclass(frozen=True)
class EvalReport:
    matrix: ConfusionMatrix
    per_class: tuple  # ClassMetrics per class
    macro: tuple  # (SEN, SPE, ACE), full precision

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.matrix.counts)) / self.matrix.total


def format_report(report: EvalReport) -> str:
    """Deterministic text table: per-class counts and percentages plus the
    average row, mirroring the standard TP/FP/FN/TN | SEN/SPE/ACE layout."""
    cm = report.matrix
    name_w = max(5, max(len(n) for n in cm.class_names))
    lines = [
        f"{'class':<{name_w}}  {'TP':>4} {'FP':>4} {'FN':>4} {'TN':>4}"
        f"  {'SEN':>7} {'SPE':>7} {'ACE':>7}"
    ]
    for name, m in zip(cm.class_names, report.per_class):
        sen, spe, ace = m.display()
        lines.append(
            f"{name:<{name_w}}  {m.tp:>4} {m.fp:>4} {m.fn:>4} {m.tn:>4}"
            f"  {sen:>7.2f} {spe:>7.2f} {ace:>7.2f}"
        )
    sen, spe, ace = (round2(v) for v in report.macro)
    lines.append(
        f"{'AVR':<{name_w}}  {'':>4} {'':>4} {'':>4} {'':>4}"
        f"  {sen:>7.2f} {spe:>7.2f} {ace:>7.2f}"
    )
    lines.append("")
    lines.append("confusion matrix (rows: truth, cols: predicted)")
    header = " ".join(f"{n[:4]:>4}" for n in cm.class_names)
    lines.append(f"{'':<{name_w}}  {header}")
    for i, name in enumerate(cm.class_names):
        row = " ".join(f"{int(v):>4}" for v in cm.counts[i])
        lines.append(f"{name:<{name_w}}  {row}")
    lines.append("")
    lines.append(f"overall accuracy: {round2(100.0 * report.accuracy):.2f}%")
    return "\n".join(lines) + "\n"


def report_from_predictions(truth, predicted, n_classes=None, class_names=None) -> EvalReport:
    cm = confusion_matrix(truth, predicted, n_classes, class_names)
    per_class = tuple(all_class_metrics(cm))
    return EvalReport(cm, per_class, macro_average(per_class))


def stratified_folds(labels, k: int, seed: int) -> list[np.ndarray]:
    """Per-class seeded shuffle, then round-robin assignment to k folds."""
    labels = np.asarray(labels).ravel()
    if k < 2:
        raise InvalidInputError("k-fold needs k >= 2")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    for c in np.unique(labels):
        idx = np.nonzero(labels == c)[0]
        if idx.size < k:
            raise InvalidInputError(
                f"class {c} has {idx.size} samples, fewer than {k} folds"
            )
        idx = idx[rng.permutation(idx.size)]
        for f in range(k):
            folds[f].extend(int(i) for i in idx[f::k])
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def cross_validate(
    X,
    labels,
    fit_predict,
    scheme: str = "k-fold",
    k: int = 7,
    seed: int = 42,
    class_names=None,
) -> EvalReport:
    """Evaluate `fit_predict(X_train, y_train, X_test) -> y_pred` under
    stratified k-fold or leave-one-out splitting; deterministic per seed."""
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels).ravel().astype(np.int64)
    if X.ndim != 2 or X.shape[0] != labels.shape[0]:
        raise InvalidInputError("features and labels must align")
    n = X.shape[0]
    if scheme == "k-fold":
        folds = stratified_folds(labels, k, seed)
    elif scheme == "leave-one-out":
        folds = [np.array([i], dtype=np.int64) for i in range(n)]
    else:
        raise InvalidInputError(f"unknown scheme {scheme!r}")
    n_classes = int(labels.max()) + 1
    truth_all: list[int] = []
    pred_all: list[int] = []
    for test_idx in folds:
        mask = np.ones(n, dtype=bool)
        mask[test_idx] = False
        pred = np.asarray(fit_predict(X[mask], labels[mask], X[test_idx])).ravel()
        if pred.shape[0] != test_idx.shape[0]:
            raise InvalidInputError("fit_predict returned wrong number of labels")
        truth_all.extend(int(t) for t in labels[test_idx])
        pred_all.extend(int(p) for p in pred)
    return report_from_predictions(truth_all, pred_all, n_classes, class_names)
