"""End-to-end orchestration: the per-image face chain (enhance, optional
detect, normalize, extract), model training into a persistable bundle,
single-image prediction, cross-validated evaluation, and the per-stage
timing bench.

Per-image feature extraction fans out across a thread pool; every fit stage
runs sequentially on the gathered results.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import facedetect as fd
from .bundle import ModelBundle, bundle_checksum, save_bundle
from .classify import (
    KnnModel,
    classify_batch,
    cluster_prototypes,
    feedback_prototypes,
    knn_batch,
    mean_prototypes,
    prototype_decision,
)
from .config import PipelineConfig
from .dataset import DatasetManifest
from .errors import ConfigError, InvalidInputError, NormalizationFailure
from .evalharness import EvalReport, cross_validate, format_report
from .gabor import extract_gabor_features
from .imaging import (
    GrayImage,
    geometric_normalize,
    hist_equalize,
    homomorphic_filter,
    integral_image,
    locate_reference_line,
)
from .lbp import extract_lbp_features
from .manifold import build_graph, edge_weights, le_embed, sdle_fit, sdle_transform
from .synth import detector_corpus

BENCH_STAGES = ("Ada", "Geometric", "Gabor", "LBP", "SDLE", "Classifier")


@dataclass(frozen=True)
class TrainResult:
    bundle: ModelBundle
    timings: tuple  # (stage, seconds) pairs in chain order
    checksum: str


def enhance(img: GrayImage, mode: str) -> GrayImage:
    """Configured contrast/illumination pass; 'both' runs equalization then
    the homomorphic filter, matching the order of the face chain."""
    if mode == "none":
        return img
    if mode == "equalize":
        return hist_equalize(img)
    if mode == "homomorphic":
        return homomorphic_filter(img)
    if mode == "both":
        return homomorphic_filter(hist_equalize(img))
    raise ConfigError(f"unknown enhancement {mode!r}")


def _crop_detected(img: GrayImage, cascade: fd.Cascade) -> GrayImage:
    boxes = fd.detect(img, cascade)
    if not boxes:
        raise NormalizationFailure("no face detected; supply pre-cropped input")
    b = boxes[0]  # highest merged score
    return GrayImage(img.pixels[b.y : b.y + b.side, b.x : b.x + b.side].copy())


def normalized_face(img: GrayImage, config: PipelineConfig,
                    cascade: fd.Cascade | None = None) -> GrayImage:
    """Enhance, optionally detect-and-crop, and map to the canonical face."""
    img = enhance(img, config.enhancement)
    if config.detector:
        if cascade is None:
            raise InvalidInputError("detector is enabled but no cascade was provided")
        img = _crop_detected(img, cascade)
    try:
        line = locate_reference_line(img)
        return geometric_normalize(img, line)
    except NormalizationFailure as exc:
        raise NormalizationFailure(f"{exc}; supply pre-cropped input") from exc


def _extract_from_face(face: GrayImage, config: PipelineConfig) -> np.ndarray:
    if config.feature == "gabor":
        return extract_gabor_features(face, config.gabor)
    if config.feature == "lbp":
        return extract_lbp_features(face, "lbp")
    return extract_lbp_features(face, "cbp", config.cbp)


def extract_feature_vector(img: GrayImage, config: PipelineConfig,
                           cascade: fd.Cascade | None = None) -> np.ndarray:
    return _extract_from_face(normalized_face(img, config, cascade), config)


def extract_features(images, config: PipelineConfig,
                     cascade: fd.Cascade | None = None) -> np.ndarray:
    """Feature matrix for a list of images, preserving order."""
    images = list(images)
    if not images:
        raise InvalidInputError("no images to extract features from")
    workers = min(8, os.cpu_count() or 1, len(images))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda im: extract_feature_vector(im, config, cascade), images))
    else:
        rows = [extract_feature_vector(im, config, cascade) for im in images]
    return np.vstack(rows)


def _build_prototypes(E: np.ndarray, labels: np.ndarray, config: PipelineConfig):
    if config.classifier == "mean":
        return mean_prototypes(E, labels)
    if config.classifier == "cluster":
        return cluster_prototypes(E, labels, k_per_class=config.clusters_per_class)
    return feedback_prototypes(E, labels, rate=config.feedback_rate,
                               epochs=config.feedback_epochs, seed=config.seed)


def train(config: PipelineConfig, manifest: DatasetManifest, images,
          out_path=None, cascade: fd.Cascade | None = None) -> TrainResult:
    """Fit the configured chain on a labeled image set.

    The persisted model is the supervised projection plus prototypes, so
    training rejects the evaluation-only lanes up front, and the embedding
    dimension is checked against the sample count before any heavy work.
    """
    if config.classifier == "knn":
        raise ConfigError("classifier 'knn' is an evaluation lane; training persists prototypes")
    if config.reduction != "sdle":
        raise ConfigError(f"training requires the 'sdle' reduction, got {config.reduction!r}")
    images = list(images)
    n = len(images)
    if len(manifest.entries) != n:
        raise InvalidInputError(f"manifest has {len(manifest.entries)} rows for {n} images")
    if config.embed_dim > n - 1:
        raise InvalidInputError(
            f"embedding dimension {config.embed_dim} needs more than {config.embed_dim} "
            f"samples, got {n}"
        )
    labels = np.asarray(manifest.labels_as_indices())

    timings = []

    def timed(stage, fn):
        start = time.perf_counter()
        out = fn()
        timings.append((stage, time.perf_counter() - start))
        return out

    enhanced = timed("preprocess", lambda: [enhance(im, config.enhancement) for im in images])
    if config.detector:
        if cascade is None:
            raise InvalidInputError("detector is enabled but no cascade was provided")
        enhanced = timed("detect", lambda: [_crop_detected(im, cascade) for im in enhanced])

    def run_normalize():
        try:
            return [geometric_normalize(im, locate_reference_line(im)) for im in enhanced]
        except NormalizationFailure as exc:
            raise NormalizationFailure(f"{exc}; supply pre-cropped input") from exc

    faces = timed("normalize", run_normalize)
    X = timed("extract", lambda: np.vstack([_extract_from_face(f, config) for f in faces]))
    model = timed("sdle_fit", lambda: sdle_fit(X, labels, m=config.embed_dim, params=config.sdle))
    E = sdle_transform(model, X)
    protos = timed("prototypes", lambda: _build_prototypes(E, labels, config))

    bundle = ModelBundle(config, manifest.class_names, model, protos,
                         cascade if config.detector else None)
    checksum = bundle_checksum(bundle)
    if out_path is not None:
        save_bundle(out_path, bundle)
    return TrainResult(bundle, tuple(timings), checksum)


def predict(bundle: ModelBundle, img: GrayImage) -> tuple:
    """(class label, winning similarity) for one image under a fitted model."""
    x = extract_feature_vector(img, bundle.config, bundle.cascade)
    e = sdle_transform(bundle.sdle, x[None, :])[0]
    c, score = prototype_decision(bundle.prototypes, e)
    return bundle.class_names[c], score


def _fit_predict_for(config: PipelineConfig):
    """fit_predict(X_train, y_train, X_test) implementing the configured
    reduction and classifier lanes."""

    def decide(Etr, ytr, Ete):
        if config.classifier == "knn":
            return knn_batch(KnnModel(Etr, ytr, k=config.knn_k), Ete)
        return classify_batch(_build_prototypes(Etr, ytr, config), Ete)

    def fit_predict(Xtr, ytr, Xte):
        if config.reduction == "none":
            return decide(Xtr, ytr, Xte)
        if config.reduction == "sdle":
            m = min(config.embed_dim, len(Xtr) - 1)
            model = sdle_fit(Xtr, ytr, m=m, params=config.sdle)
            return decide(sdle_transform(model, Xtr), ytr, sdle_transform(model, Xte))
        # LE has no out-of-sample map; embed train and test jointly
        Xall = np.vstack([Xtr, Xte])
        graph = build_graph(Xall, "n-nearest", config.graph_neighbors)
        W = edge_weights(graph, Xall, config.weight_scheme, t=config.heat_t)
        emb = le_embed(W, min(config.le_dim, Xall.shape[0] - 1)).embedding
        return decide(emb[: len(Xtr)], ytr, emb[len(Xtr):])

    return fit_predict


def evaluate(config: PipelineConfig, manifest: DatasetManifest, images,
             out_path=None, cascade: fd.Cascade | None = None):
    """Cross-validate the configured chain; returns (EvalReport, report text)
    and optionally writes the text to a file."""
    images = list(images)
    if len(manifest.entries) != len(images):
        raise InvalidInputError(
            f"manifest has {len(manifest.entries)} rows for {len(images)} images"
        )
    X = extract_features(images, config, cascade)
    labels = np.asarray(manifest.labels_as_indices())
    report = cross_validate(X, labels, _fit_predict_for(config),
                            scheme=config.cv_scheme, k=config.cv_folds,
                            seed=config.seed, class_names=manifest.class_names)
    text = format_report(report) + "\n"
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return report, text


def train_detector(seed: int = 3, **corpus_kwargs):
    """Build the planted-pattern corpus and boost a cascade on it; returns
    (cascade, training detection rate, training false-positive rate)."""
    positives, negatives = detector_corpus(seed, **corpus_kwargs)
    cascade = fd.cascade_build(positives, negatives)
    det, fp = cascade_rates(cascade, positives, negatives)
    return cascade, det, fp


def cascade_rates(cascade: fd.Cascade, positives, negatives):
    """(detection rate, false-positive rate) on base-window sample patches."""

    def passes(img):
        box = fd.DetectionBox(0, 0, cascade.base_window)
        return fd.cascade_window_score(cascade, integral_image(img), box) is not None

    det = sum(passes(p) for p in positives) / len(positives)
    fp = sum(passes(n) for n in negatives) / len(negatives)
    return det, fp


def bench(config: PipelineConfig, manifest: DatasetManifest, images) -> tuple:
    """Per-image wall-clock seconds for the six runtime stages of the chain.

    The detector stage sweeps a small freshly boosted cascade, the feature
    stages run on normalized faces, and the reduction/decision stages use a
    model fitted (untimed) on the benched images themselves.
    """
    images = list(images)
    if not images:
        raise InvalidInputError("bench needs at least one image")
    labels = np.asarray(manifest.labels_as_indices())[: len(images)]

    def per_image(items, fn):
        start = time.perf_counter()
        for it in items:
            fn(it)
        return (time.perf_counter() - start) / len(items)

    # small corpus, no mining, single lenient stage: enough to time the sweep
    pos, neg = detector_corpus(config.seed, n_pos=40, n_neg=160, mined_fraction=0.0)
    tiny = fd.cascade_build(pos, neg, stage_targets=((0.98, 0.5),), max_rounds_per_stage=8)
    ada_set = [enhance(im, config.enhancement) for im in images[:4]]
    t_ada = per_image(ada_set, lambda im: fd.detect(im, tiny))

    bench_set = [enhance(im, config.enhancement) for im in images[:16]]
    t_geo = per_image(bench_set, lambda im: geometric_normalize(im, locate_reference_line(im)))
    faces = [geometric_normalize(im, locate_reference_line(im)) for im in bench_set]
    t_gabor = per_image(faces, lambda f: extract_gabor_features(f, config.gabor))
    t_lbp = per_image(faces, lambda f: extract_lbp_features(f, "lbp"))

    X = np.vstack([_extract_from_face(f, config) for f in faces])
    y = labels[: len(faces)]
    m = min(config.embed_dim, X.shape[0] - 1)
    model = sdle_fit(X, y, m=m, params=config.sdle)
    t_sdle = per_image(list(X), lambda row: sdle_transform(model, row[None, :]))
    E = sdle_transform(model, X)
    protos = mean_prototypes(E, y)
    t_cls = per_image(list(E), lambda e: prototype_decision(protos, e))

    times = (t_ada, t_geo, t_gabor, t_lbp, t_sdle, t_cls)
    return tuple(zip(BENCH_STAGES, times))
