"""Boosted sliding-window face detector.

Rectangular difference features over integral images feed decision-stump
weak learners; boosting rounds build per-stage strong classifiers whose
thresholds are tuned to a detection-rate target; stages chain into a
cascade that rejects non-faces early. Detection slides the window over
scales and merges overlapping hits.

All feature kinds have balanced positive/negative weighted areas, so
values are invariant under adding a constant to every pixel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BundleError, InvalidInputError, TrainingFailure
from .imaging import GrayImage, integral_image, rect_sum

BASE_WINDOW = 24

FEATURE_KINDS = ("two-rect-horizontal", "two-rect-vertical", "three-rect", "four-rect")


@dataclass(frozen=True)
class HaarFeature:
    kind: str
    x: int  # left column of the feature rect, base-window coordinates
    y: int  # top row
    w: int  # total width
    h: int  # total height

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise InvalidInputError(f"unknown feature kind {self.kind!r}")
        if self.w < 1 or self.h < 1 or self.x < 0 or self.y < 0:
            raise InvalidInputError("feature rect must have positive size and position")
        if self.kind in ("two-rect-horizontal", "four-rect") and self.w % 2:
            raise InvalidInputError(f"{self.kind} needs even width")
        if self.kind in ("two-rect-vertical", "four-rect") and self.h % 2:
            raise InvalidInputError(f"{self.kind} needs even height")
        if self.kind == "three-rect" and self.w % 3:
            raise InvalidInputError("three-rect needs width divisible by 3")

    def regions(self):
        """(weight, x, y, w, h) parts; weighted areas sum to zero."""
        x, y, w, h = self.x, self.y, self.w, self.h
        if self.kind == "two-rect-horizontal":
            half = w // 2
            return ((+1, x, y, half, h), (-1, x + half, y, half, h))
        if self.kind == "two-rect-vertical":
            half = h // 2
            return ((+1, x, y, w, half), (-1, x, y + half, w, half))
        if self.kind == "three-rect":
            third = w // 3
            return (
                (+1, x, y, third, h),
                (-2, x + third, y, third, h),
                (+1, x + 2 * third, y, third, h),
            )
        half_w, half_h = w // 2, h // 2
        return (
            (+1, x, y, half_w, half_h),
            (-1, x + half_w, y, half_w, half_h),
            (-1, x, y + half_h, half_w, half_h),
            (+1, x + half_w, y + half_h, half_w, half_h),
        )


@dataclass(frozen=True)
class DetectionBox:
    x: int
    y: int
    side: int
    score: float = 0.0

    def __post_init__(self):
        if self.side < 1 or self.x < 0 or self.y < 0:
            raise InvalidInputError("detection box needs positive size and position")

    def iou(self, other: "DetectionBox") -> float:
        x0 = max(self.x, other.x)
        y0 = max(self.y, other.y)
        x1 = min(self.x + self.side, other.x + other.side)
        y1 = min(self.y + self.side, other.y + other.side)
        inter = max(0, x1 - x0) * max(0, y1 - y0)
        return inter / (self.side**2 + other.side**2 - inter)


@dataclass(frozen=True)
class WeakClassifier:
    feature_index: int
    threshold: float
    polarity: int  # +1: face when value < threshold; -1: face when value > threshold
    alpha: float
    feature: HaarFeature | None = None

    def __post_init__(self):
        if self.polarity not in (-1, 1):
            raise InvalidInputError("polarity must be +1 or -1")
        if self.alpha < 0:
            raise InvalidInputError("alpha must be >= 0")

    def predict(self, value: float) -> int:
        return 1 if self.polarity * (value - self.threshold) < 0 else -1


@dataclass(frozen=True)
class Cascade:
    stages: tuple  # ((weak classifiers...), stage threshold) pairs
    base_window: int = BASE_WINDOW

    def __post_init__(self):
        if not self.stages or any(len(cs) == 0 for cs, _ in self.stages):
            raise InvalidInputError("cascade needs >= 1 stage, each non-empty")


# ---------------------------------------------------------------------------
# feature evaluation
# ---------------------------------------------------------------------------

def _scaled_regions(feature: HaarFeature, scale: float, side: int):
    """Window-relative (coef, y0, x0, y1, x1) per region at the given scale.

    Coordinates round half-to-even and clamp inside the window; coef folds
    in the region weight and the base-area/actual-area normalization so a
    plain weighted sum of integral lookups yields the feature value.
    """
    out = []
    for weight, fx, fy, fw, fh in feature.regions():
        x0 = int(round(fx * scale))
        y0 = int(round(fy * scale))
        x1 = min(max(int(round((fx + fw) * scale)), x0 + 1), side)
        y1 = min(max(int(round((fy + fh) * scale)), y0 + 1), side)
        area = (x1 - x0) * (y1 - y0)
        out.append((weight * fw * fh / area, y0, x0, y1, x1))
    return tuple(out)


def haar_value(ii: np.ndarray, feature: HaarFeature, window: DetectionBox,
               base_window: int = BASE_WINDOW) -> float:
    """White-minus-black region sum inside `window` via 4-lookup queries.

    Each region sum is rescaled by its base-window area over its actual
    scaled pixel count, which keeps values comparable across window sizes
    and reduces to plain sums when window.side == base_window.
    """
    img_h, img_w = ii.shape[0] - 1, ii.shape[1] - 1
    if window.x + window.side > img_w or window.y + window.side > img_h:
        raise InvalidInputError("window extends outside the image")
    scale = window.side / base_window
    total = 0.0
    for coef, y0, x0, y1, x1 in _scaled_regions(feature, scale, window.side):
        total += coef * rect_sum(ii, window.y + y0, window.x + x0,
                                 window.y + y1, window.x + x1)
    return total


def feature_pool(base_window: int = BASE_WINDOW, cap: int = 20000,
                 min_side: int = 4, step: int = 2) -> list[HaarFeature]:
    """Deterministic exhaustive pool (positions and sizes on a `step` grid),
    uniformly stride-subsampled down to at most `cap` features."""
    unit_w = {"two-rect-horizontal": 2, "two-rect-vertical": 1, "three-rect": 3, "four-rect": 2}
    unit_h = {"two-rect-horizontal": 1, "two-rect-vertical": 2, "three-rect": 1, "four-rect": 2}
    feats: list[HaarFeature] = []
    for kind in FEATURE_KINDS:
        dw, dh = unit_w[kind] * step, unit_h[kind] * step
        w0 = min_side + (-min_side) % unit_w[kind]
        h0 = min_side + (-min_side) % unit_h[kind]
        for w in range(w0, base_window + 1, dw):
            for h in range(h0, base_window + 1, dh):
                for y in range(0, base_window - h + 1, step):
                    for x in range(0, base_window - w + 1, step):
                        feats.append(HaarFeature(kind, x, y, w, h))
    if len(feats) > cap:
        stride = math.ceil(len(feats) / cap)
        feats = feats[::stride]
    return feats


def feature_table(images, features, base_window: int = BASE_WINDOW) -> np.ndarray:
    """n_images x n_features value matrix for base-window-sized crops."""
    iis = []
    for img in images:
        if img.height != base_window or img.width != base_window:
            raise InvalidInputError(f"training crops must be {base_window}x{base_window}")
        iis.append(integral_image(img))
    stack = np.stack(iis)
    table = np.empty((len(images), len(features)))
    for j, feat in enumerate(features):
        col = np.zeros(len(images))
        for coef, y0, x0, y1, x1 in _scaled_regions(feat, 1.0, base_window):
            col += coef * (stack[:, y1, x1] - stack[:, y0, x1]
                           - stack[:, y1, x0] + stack[:, y0, x0])
        table[:, j] = col
    return table


# ---------------------------------------------------------------------------
# boosting
# ---------------------------------------------------------------------------

class _StumpSearch:
    """Sorted-scan weighted-error stump search with sort orders precomputed
    once per value table (orders never change across boosting rounds).
    Feature columns are processed in blocks to bound memory."""

    def __init__(self, values: np.ndarray, labels: np.ndarray, block: int = 4096):
        self.values = values
        self.labels = labels
        self.blocks = []
        n, n_feat = values.shape
        for start in range(0, n_feat, block):
            cols = values[:, start:start + block]
            order = np.argsort(cols, axis=0, kind="stable")
            v = np.take_along_axis(cols, order, axis=0)
            distinct = np.diff(v, axis=0) > 0  # valid cut between rows k, k+1
            thr = (v[:-1] + v[1:]) / 2.0
            self.blocks.append((start, order, labels[order] == 1, distinct, thr))

    def best(self, weights: np.ndarray):
        """(feature_index, threshold, polarity, error); ties go to the lowest
        feature index, then the earliest cut, then polarity +1."""
        pos_total = float(weights[self.labels == 1].sum())
        neg_total = float(weights[self.labels == -1].sum())
        best = (math.inf, -1, 0.0, 1)
        for start, order, is_pos, distinct, thr in self.blocks:
            w = weights[order]
            wpos = np.cumsum(np.where(is_pos, w, 0.0), axis=0)[:-1]
            wneg = np.cumsum(np.where(is_pos, 0.0, w), axis=0)[:-1]
            # polarity +1 errs on negatives below the cut and positives above
            ep = np.where(distinct, wneg + (pos_total - wpos), np.inf)
            em = np.where(distinct, wpos + (neg_total - wneg), np.inf)
            if ep.size == 0:
                continue
            m = np.minimum(ep.min(axis=0), em.min(axis=0))
            j_rel = int(np.argmin(m))
            err = float(m[j_rel])
            if not math.isfinite(err):
                continue
            if err < best[0] - 1e-15:
                kp = int(np.argmin(ep[:, j_rel]))
                km = int(np.argmin(em[:, j_rel]))
                if ep[kp, j_rel] <= em[km, j_rel]:
                    best = (err, start + j_rel, float(thr[kp, j_rel]), 1)
                else:
                    best = (err, start + j_rel, float(thr[km, j_rel]), -1)
        err, j, threshold, pol = best
        if j < 0:
            raise TrainingFailure("no usable stump: all feature columns are constant")
        return j, threshold, pol, err


def best_stump(values: np.ndarray, labels, weights):
    """One-shot exhaustive stump search over a feature-value table."""
    values = np.asarray(values, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64).ravel()
    weights = np.asarray(weights, dtype=np.float64).ravel()
    return _StumpSearch(values, labels).best(weights)


def _as_table(samples):
    """Stacks (feature-value vector, label ±1) pairs into arrays."""
    rows, labels = [], []
    for vec, label in samples:
        rows.append(np.asarray(vec, dtype=np.float64).ravel())
        labels.append(int(label))
    values = np.vstack(rows)
    lab = np.asarray(labels, dtype=np.int64)
    if not np.all(np.isin(lab, (-1, 1))):
        raise InvalidInputError("labels must be +1 or -1")
    return values, lab


def adaboost_train(samples, rounds: int, alpha_max: float = 10.0,
                   features=None) -> list[WeakClassifier]:
    """Boost decision stumps over (feature-value vector, label ±1) samples.

    Each round requires weighted error < 0.5; weights of misclassified
    samples grow relative to correct ones and renormalize to sum 1.
    """
    values, labels = _as_table(samples)
    if not (np.any(labels == 1) and np.any(labels == -1)):
        raise InvalidInputError("both labels (+1 and -1) must be present")
    if rounds < 1:
        raise InvalidInputError("rounds must be >= 1")
    search = _StumpSearch(values, labels)
    weights = np.full(labels.size, 1.0 / labels.size)
    learners: list[WeakClassifier] = []
    for rnd in range(rounds):
        learner, weights = _boost_round(search, values, labels, weights,
                                        alpha_max, features, rnd)
        learners.append(learner)
    return learners


def _boost_round(search, values, labels, weights, alpha_max, features, rnd):
    j, thr, pol, err = search.best(weights)
    if err >= 0.5:
        raise TrainingFailure(f"round {rnd}: best weak-learner error {err:.4f} is not < 0.5")
    alpha = alpha_for(err, alpha_max)
    feat = features[j] if features is not None else None
    learner = WeakClassifier(j, thr, pol, alpha, feat)
    pred = np.where(pol * (values[:, j] - thr) < 0, 1, -1)
    weights = weights * np.exp(-alpha * labels * pred)
    return learner, weights / weights.sum()


def alpha_for(err: float, alpha_max: float = 10.0) -> float:
    if err <= 0.0:
        return alpha_max
    return min(0.5 * math.log((1.0 - err) / err), alpha_max)


def strong_scores(learners, values: np.ndarray) -> np.ndarray:
    """Sum of alpha-weighted stump votes per row of the value table."""
    values = np.asarray(values, dtype=np.float64)
    out = np.zeros(values.shape[0])
    for wc in learners:
        vote = np.where(wc.polarity * (values[:, wc.feature_index] - wc.threshold) < 0, 1, -1)
        out += wc.alpha * vote
    return out


def training_error(learners, values: np.ndarray, labels) -> float:
    labels = np.asarray(labels, dtype=np.int64).ravel()
    pred = np.where(strong_scores(learners, values) >= 0.0, 1, -1)
    return float((pred != labels).mean())


# ---------------------------------------------------------------------------
# cascade
# ---------------------------------------------------------------------------

def cascade_build(
    positives,
    negatives,
    stage_targets=((0.999, 0.40), (0.999, 0.12), (0.999, 0.03),
                   (0.998, 0.008), (0.998, 0.002)),
    max_rounds_per_stage: int = 80,
    base_window: int = BASE_WINDOW,
    feature_cap: int = 20000,
    alpha_max: float = 10.0,
) -> Cascade:
    """Train attentional stages sequentially.

    Each stage adds boosting rounds until, at the highest threshold that
    keeps the stage detection rate at or above target, the false-positive
    rate on the surviving negatives meets the stage target. Negatives that
    still pass feed the next stage; training stops early when none remain.
    """
    if not positives or not negatives:
        raise InvalidInputError("need non-empty positive and negative sets")
    features = feature_pool(base_window, feature_cap)
    pos_table = feature_table(positives, features, base_window)
    neg_table = feature_table(negatives, features, base_window)
    stages = []
    for det_target, fpr_target in stage_targets:
        if neg_table.shape[0] == 0:
            break
        values = np.vstack([pos_table, neg_table])
        labels = np.concatenate([np.ones(pos_table.shape[0], dtype=np.int64),
                                 -np.ones(neg_table.shape[0], dtype=np.int64)])
        search = _StumpSearch(values, labels)
        weights = np.full(labels.size, 1.0 / labels.size)
        learners: list[WeakClassifier] = []
        met = False
        for rnd in range(max_rounds_per_stage):
            learner, weights = _boost_round(search, values, labels, weights,
                                            alpha_max, features, rnd)
            learners.append(learner)
            pos_scores = strong_scores(learners, pos_table)
            neg_scores = strong_scores(learners, neg_table)
            threshold = det_rate_threshold(pos_scores, det_target)
            fpr = float((neg_scores >= threshold).mean())
            if fpr <= fpr_target:
                met = True
                break
        if not met:
            raise TrainingFailure(
                f"stage {len(stages)}: false-positive rate {fpr:.4f} did not reach "
                f"{fpr_target} within {max_rounds_per_stage} rounds"
            )
        stages.append((tuple(learners), float(threshold)))
        neg_table = neg_table[neg_scores >= threshold]
    return Cascade(tuple(stages), base_window)


def det_rate_threshold(pos_scores: np.ndarray, det_target: float) -> float:
    """Highest threshold keeping at least det_target of the positives."""
    srt = np.sort(pos_scores)
    idx = min(int(math.floor((1.0 - det_target) * srt.size)), srt.size - 1)
    return float(srt[idx])


def cascade_window_score(cascade: Cascade, ii: np.ndarray, window: DetectionBox):
    """Accumulated stage margin, or None as soon as any stage rejects."""
    total = 0.0
    for learners, threshold in cascade.stages:
        score = 0.0
        for wc in learners:
            v = haar_value(ii, wc.feature, window, cascade.base_window)
            score += wc.alpha * (1 if wc.polarity * (v - wc.threshold) < 0 else -1)
        if score < threshold:
            return None
        total += score - threshold
    return total


def _grid_stage_scores(ii, learners, xs, ys, scale, side):
    """Stage scores for every window origin (xs, ys) at one scale."""
    score = np.zeros(xs.size)
    for wc in learners:
        vals = np.zeros(xs.size)
        for coef, y0, x0, y1, x1 in _scaled_regions(wc.feature, scale, side):
            vals += coef * (ii[ys + y1, xs + x1] - ii[ys + y0, xs + x1]
                            - ii[ys + y1, xs + x0] + ii[ys + y0, xs + x0])
        score += wc.alpha * np.where(wc.polarity * (vals - wc.threshold) < 0, 1, -1)
    return score


def sweep_windows(img: GrayImage, cascade: Cascade, scale_step: float = 1.25,
                  min_window: int = BASE_WINDOW) -> list[DetectionBox]:
    """Raw multi-scale sliding-window pass: every window surviving all
    cascade stages, unmerged, scored by accumulated stage margin."""
    if scale_step <= 1.0:
        raise InvalidInputError("scale_step must be > 1")
    if min_window < cascade.base_window:
        raise InvalidInputError("min_window must be >= the cascade base window")
    ii = integral_image(img)
    limit = min(img.height, img.width)
    hits: list[DetectionBox] = []
    side = min_window
    while side <= limit:
        stride = max(1, side // 12)
        ys0 = np.arange(0, img.height - side + 1, stride)
        xs0 = np.arange(0, img.width - side + 1, stride)
        yg, xg = np.meshgrid(ys0, xs0, indexing="ij")
        xs, ys = xg.ravel(), yg.ravel()
        scale = side / cascade.base_window
        total = np.zeros(xs.size)
        alive = np.ones(xs.size, dtype=bool)
        for learners, threshold in cascade.stages:
            if not alive.any():
                break
            score = _grid_stage_scores(ii, learners, xs[alive], ys[alive], scale, side)
            passed = score >= threshold
            idx = np.nonzero(alive)[0]
            total[idx[passed]] += score[passed] - threshold
            alive[idx[~passed]] = False
        for i in np.nonzero(alive)[0]:
            hits.append(DetectionBox(int(xs[i]), int(ys[i]), side, float(total[i])))
        nxt = int(math.floor(side * scale_step))
        side = nxt if nxt > side else side + 1
    return hits


def detect(img: GrayImage, cascade: Cascade, scale_step: float = 1.25,
           min_window: int = BASE_WINDOW) -> list[DetectionBox]:
    """Multi-scale sliding-window evaluation plus overlap merging.

    Windows rejected at a stage are dropped before later stages run;
    survivors of the full cascade merge whenever IoU > 0.3, by
    score-weighted coordinate averaging.
    """
    hits = sweep_windows(img, cascade, scale_step, min_window)
    return merge_boxes(hits, img.width, img.height)


def merge_boxes(hits, img_w: int, img_h: int, iou_threshold: float = 0.3):
    """Transitive overlap grouping (any chain of pairwise IoU > 0.3 joins a
    group); each group collapses to the score-weighted average box, clamped
    inside the image. Output is ordered by descending group score."""
    order = sorted(hits, key=lambda b: (-b.score, b.y, b.x, b.side))
    n = len(order)
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(n):
        for j in range(i + 1, n):
            if order[i].iou(order[j]) > iou_threshold:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[DetectionBox]] = {}
    for i, b in enumerate(order):
        groups.setdefault(find(i), []).append(b)
    merged: list[DetectionBox] = []
    for root in sorted(groups):  # roots follow score order
        group = groups[root]
        weights = [b.score for b in group]
        wsum = sum(weights)
        if wsum <= 0:
            weights = [1.0] * len(group)
            wsum = float(len(group))
        mx = sum(w * b.x for w, b in zip(weights, group)) / wsum
        my = sum(w * b.y for w, b in zip(weights, group)) / wsum
        ms = sum(w * b.side for w, b in zip(weights, group)) / wsum
        side = max(1, int(round(ms)))
        x = min(max(0, int(round(mx))), max(0, img_w - side))
        y = min(max(0, int(round(my))), max(0, img_h - side))
        merged.append(DetectionBox(x, y, side, max(b.score for b in group)))
    return merged


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

CASCADE_VERSION = "ferpipe-cascade v1"


def cascade_lines(cascade: Cascade) -> list:
    """Text encoding of a cascade, one token row per learner. Floats use
    repr so parsing restores them bit-exactly."""
    lines = [CASCADE_VERSION, f"base_window {cascade.base_window}", f"stages {len(cascade.stages)}"]
    for learners, threshold in cascade.stages:
        lines.append(f"stage {len(learners)} {threshold!r}")
        for wc in learners:
            f = wc.feature
            if f is None:
                raise InvalidInputError("cannot persist a learner without its feature geometry")
            lines.append(
                f"learner {f.kind} {f.x} {f.y} {f.w} {f.h} "
                f"{wc.feature_index} {wc.threshold!r} {wc.polarity} {wc.alpha!r}"
            )
    return lines


def parse_cascade(lines) -> Cascade:
    """Inverse of cascade_lines; malformed input raises a bundle error."""
    rows = [ln.strip() for ln in lines if ln.strip()]
    try:
        if rows[0] != CASCADE_VERSION:
            raise BundleError(f"unsupported cascade version line {rows[0]!r}")
        if not rows[1].startswith("base_window ") or not rows[2].startswith("stages "):
            raise BundleError("cascade header must give base_window and stages")
        base_window = int(rows[1].split()[1])
        n_stages = int(rows[2].split()[1])
        pos = 3
        stages = []
        for _ in range(n_stages):
            head = rows[pos].split()
            if head[0] != "stage" or len(head) != 3:
                raise BundleError(f"expected a stage row, got {rows[pos]!r}")
            count, threshold = int(head[1]), float(head[2])
            pos += 1
            learners = []
            for _ in range(count):
                tok = rows[pos].split()
                if tok[0] != "learner" or len(tok) != 10:
                    raise BundleError(f"expected a learner row, got {rows[pos]!r}")
                feature = HaarFeature(tok[1], int(tok[2]), int(tok[3]), int(tok[4]), int(tok[5]))
                learners.append(WeakClassifier(int(tok[6]), float(tok[7]), int(tok[8]),
                                               float(tok[9]), feature))
                pos += 1
            stages.append((tuple(learners), threshold))
        if pos != len(rows):
            raise BundleError(f"{len(rows) - pos} trailing cascade rows")
        return Cascade(tuple(stages), base_window)
    except BundleError:
        raise
    except (IndexError, ValueError, InvalidInputError) as exc:
        raise BundleError(f"malformed cascade text: {exc}") from exc


def save_cascade(path, cascade: Cascade) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(cascade_lines(cascade)) + "\n")


def load_cascade(path) -> Cascade:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_cascade(fh)
    except OSError as exc:
        raise BundleError(f"cannot read cascade file {path}: {exc}") from exc
