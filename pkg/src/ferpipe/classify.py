"""Nearest-neighbor baseline and prototype classifiers.

Prototype generation offers three refinement levels: per-class means,
per-class k-means centers, and error-driven refinement of the means
(attract the correct prototype, repel the wrongly winning one). Decisions
compare the query against prototypes by cosine-based similarity (default)
or Euclidean distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .manifold import similarity


def _check_xy(X, labels):
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels).ravel().astype(np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise InvalidInputError("training matrix must be 2D and non-empty")
    if labels.shape[0] != X.shape[0]:
        raise InvalidInputError("label count does not match sample count")
    if not np.all(np.isfinite(X)):
        raise InvalidInputError("training matrix contains non-finite entries")
    return X, labels


def _check_query(x, dim):
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != dim:
        raise InvalidInputError(f"query dimension {x.shape[0]} != model dimension {dim}")
    return x


# ---------------------------------------------------------------------------
# KNN
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KnnModel:
    X: np.ndarray
    labels: np.ndarray
    k: int

    def __post_init__(self):
        X, labels = _check_xy(self.X, self.labels)
        if not 1 <= self.k <= X.shape[0]:
            raise InvalidInputError(f"k must be in [1, {X.shape[0]}], got {self.k}")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "labels", labels)


def knn_classify(model: KnnModel, x) -> int:
    """Majority label of the k nearest training points (Euclidean); vote
    ties go to the class with the smaller summed distance, then the lower
    class index."""
    x = _check_query(x, model.X.shape[1])
    d = np.linalg.norm(model.X - x, axis=1)
    near = np.argsort(d, kind="stable")[: model.k]
    votes: dict[int, int] = {}
    sums: dict[int, float] = {}
    for idx in near:
        c = int(model.labels[idx])
        votes[c] = votes.get(c, 0) + 1
        sums[c] = sums.get(c, 0.0) + float(d[idx])
    best = max(votes.values())
    tied = [c for c, v in votes.items() if v == best]
    return min(tied, key=lambda c: (sums[c], c))


# ---------------------------------------------------------------------------
# prototype sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PrototypeSet:
    classes: tuple  # sorted class indices
    prototypes: tuple  # per class: (k_c, m) array
    method: str  # mean | cluster | feedback
    measure: str = "similarity"  # similarity | euclidean

    def __post_init__(self):
        if self.measure not in ("similarity", "euclidean"):
            raise InvalidInputError("measure must be 'similarity' or 'euclidean'")
        dims = {p.shape[1] for p in self.prototypes}
        if len(self.prototypes) == 0 or len(dims) != 1:
            raise InvalidInputError("prototype set needs uniform non-empty prototypes")

    @property
    def dim(self) -> int:
        return self.prototypes[0].shape[1]


def mean_prototypes(X, labels, measure: str = "similarity") -> PrototypeSet:
    """One prototype per class: the arithmetic mean of its samples."""
    X, labels = _check_xy(X, labels)
    classes = tuple(int(c) for c in np.unique(labels))
    protos = tuple(X[labels == c].mean(axis=0, keepdims=True) for c in classes)
    return PrototypeSet(classes, protos, "mean", measure)


def cluster_prototypes(
    X, labels, k_per_class: int = 2, measure: str = "similarity"
) -> PrototypeSet:
    """Per-class k-means centers (Lloyd, deterministic farthest-point
    seeding); an emptied cluster keeps its previous center."""
    X, labels = _check_xy(X, labels)
    if k_per_class < 1:
        raise InvalidInputError("k_per_class must be >= 1")
    classes = tuple(int(c) for c in np.unique(labels))
    protos = []
    for c in classes:
        Xc = X[labels == c]
        if Xc.shape[0] < k_per_class:
            raise InvalidInputError(
                f"class {c} has {Xc.shape[0]} samples, fewer than k_per_class={k_per_class}"
            )
        protos.append(_kmeans(Xc, k_per_class))
    return PrototypeSet(classes, tuple(protos), "cluster", measure)


def _kmeans(Xc: np.ndarray, k: int, max_iter: int = 300, rel_tol: float = 1e-8) -> np.ndarray:
    centers = _farthest_point_init(Xc, k)
    prev = math.inf
    for _ in range(max_iter):
        d2 = ((Xc[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        assign = d2.argmin(axis=1)
        obj = float(d2[np.arange(len(Xc)), assign].sum())
        if obj > prev + 1e-12 * max(prev, 1.0):
            raise AssertionError("k-means objective increased")
        for j in range(k):
            members = Xc[assign == j]
            if members.shape[0]:
                centers[j] = members.mean(axis=0)
        if prev - obj <= rel_tol * max(prev, 1e-30):
            break
        prev = obj
    return centers


def _farthest_point_init(Xc: np.ndarray, k: int) -> np.ndarray:
    # first center: sample closest to the class mean (lowest index on ties),
    # then repeatedly the sample farthest from all chosen centers
    mu = Xc.mean(axis=0)
    first = int(np.argmin(np.linalg.norm(Xc - mu, axis=1)))
    chosen = [first]
    min_d = np.linalg.norm(Xc - Xc[first], axis=1)
    while len(chosen) < k:
        nxt = int(np.argmax(min_d))
        chosen.append(nxt)
        min_d = np.minimum(min_d, np.linalg.norm(Xc - Xc[nxt], axis=1))
    return Xc[chosen].copy()


def feedback_prototypes(
    X,
    labels,
    rate: float = 0.05,
    epochs: int = 50,
    measure: str = "similarity",
    seed: int = 0,
) -> PrototypeSet:
    """Mean prototypes refined by error feedback: for each misclassified
    training sample, attract the correct-class prototype by rate*(x - proto)
    and repel the winning wrong-class prototype by the same magnitude.

    The state with the best training accuracy across epochs is returned
    (the untouched mean initialization is epoch 0, so the result never
    scores below the means on the training set). Stops early after an
    errorless epoch; sample order is a seeded shuffle.
    """
    X, labels = _check_xy(X, labels)
    if not 0.0 < rate <= 1.0:
        raise InvalidInputError("rate must lie in (0, 1]")
    if epochs < 1:
        raise InvalidInputError("epochs must be >= 1")
    base = mean_prototypes(X, labels, measure)
    classes = list(base.classes)
    protos = {c: base.prototypes[i][0].copy() for i, c in enumerate(classes)}
    rng = np.random.default_rng(seed)

    def train_acc():
        hits = sum(
            _best_class(protos, classes, X[i], measure) == int(labels[i])
            for i in range(X.shape[0])
        )
        return hits / X.shape[0]

    best_acc = train_acc()
    best = {c: p.copy() for c, p in protos.items()}
    for _ in range(epochs):
        errors = 0
        order = rng.permutation(X.shape[0])
        for idx in order:
            x, truth = X[idx], int(labels[idx])
            win = _best_class(protos, classes, x, measure)
            if win != truth:
                errors += 1
                protos[truth] += rate * (x - protos[truth])
                protos[win] -= rate * (x - protos[win])
        if errors == 0:
            break
        cur = train_acc()
        if cur > best_acc:
            best_acc = cur
            best = {c: p.copy() for c, p in protos.items()}
    if train_acc() < best_acc:
        protos = best
    return PrototypeSet(
        tuple(classes), tuple(protos[c][None, :] for c in classes), "feedback", measure
    )


def _best_class(protos: dict, classes: list, x: np.ndarray, measure: str) -> int:
    best_c = None
    best_score = -math.inf
    for c in classes:
        for p in np.atleast_2d(protos[c]):
            if measure == "similarity":
                score = similarity(x, p)
            else:
                score = -float(np.linalg.norm(x - p))
            if score > best_score:
                best_score, best_c = score, c
    return best_c


def prototype_decision(protos: PrototypeSet, x) -> tuple:
    """(class, winning score) of the best-matching prototype; the score is
    the similarity (or negated Euclidean distance) that won. Exact ties go
    to the lower class index."""
    x = _check_query(x, protos.dim)
    table = {c: protos.prototypes[i] for i, c in enumerate(protos.classes)}
    best_c = None
    best_score = -math.inf
    for c in sorted(protos.classes):
        for p in np.atleast_2d(table[c]):
            if protos.measure == "similarity":
                score = similarity(x, p)
            else:
                score = -float(np.linalg.norm(x - p))
            if score > best_score:
                best_score, best_c = score, c
    return best_c, float(best_score)


def nearest_prototype_classify(protos: PrototypeSet, x) -> int:
    """Class of the best-matching prototype."""
    return prototype_decision(protos, x)[0]


def classify_batch(protos: PrototypeSet, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.array([nearest_prototype_classify(protos, row) for row in X], dtype=np.int64)


def knn_batch(model: KnnModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    return np.array([knn_classify(model, row) for row in X], dtype=np.int64)
