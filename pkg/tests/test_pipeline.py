"""End-to-end pipeline layer: feature extraction, training, prediction,
evaluation, and the stage benchmark."""

import numpy as np
import pytest

from ferpipe import pipeline
from ferpipe.bundle import bundle_lines, load_bundle
from ferpipe.config import PipelineConfig
from ferpipe.dataset import DatasetManifest
from ferpipe.errors import ConfigError, InvalidInputError, NormalizationFailure
from ferpipe.facedetect import Cascade, HaarFeature, WeakClassifier
from ferpipe.imaging import GrayImage


def subset(manifest, images, per_class):
    """First per_class entries of every class, keeping manifest/images aligned."""
    seen = {}
    keep = []
    for i, e in enumerate(manifest.entries):
        seen.setdefault(e.label, 0)
        if seen[e.label] < per_class:
            keep.append(i)
            seen[e.label] += 1
    sub = DatasetManifest(tuple(manifest.entries[i] for i in keep), manifest.class_names)
    return sub, [images[i] for i in keep]


def reject_all_cascade() -> Cascade:
    wc = WeakClassifier(0, 0.0, 1, 1.0, HaarFeature("two-rect-horizontal", 0, 0, 2, 2))
    return Cascade((((wc,), 1e9),))


class TestEnhance:
    def test_none_is_identity(self, expression_dataset):
        img = expression_dataset[1][0]
        assert np.array_equal(pipeline.enhance(img, "none").pixels, img.pixels)

    @pytest.mark.parametrize("mode", ["equalize", "homomorphic", "both"])
    def test_modes_keep_range_and_shape(self, expression_dataset, mode):
        img = expression_dataset[1][0]
        out = pipeline.enhance(img, mode)
        assert out.pixels.shape == img.pixels.shape
        assert 0.0 <= out.pixels.min() and out.pixels.max() <= 1.0

    def test_unknown_mode(self, expression_dataset):
        with pytest.raises(ConfigError, match="enhancement"):
            pipeline.enhance(expression_dataset[1][0], "sharpen")


class TestExtraction:
    def test_gabor_dimension(self, expression_dataset):
        manifest, images = expression_dataset
        X = pipeline.extract_features(images[:3], PipelineConfig())
        assert X.shape == (3, 14400)

    @pytest.mark.parametrize("feature", ["lbp", "cbp"])
    def test_histogram_dimension(self, expression_dataset, feature):
        _, images = expression_dataset
        X = pipeline.extract_features(images[:3], PipelineConfig(feature=feature))
        assert X.shape == (3, 14400)

    def test_matches_single_image_path(self, expression_dataset):
        _, images = expression_dataset
        cfg = PipelineConfig(feature="lbp")
        X = pipeline.extract_features(images[:2], cfg)
        assert np.array_equal(X[1], pipeline.extract_feature_vector(images[1], cfg))

    def test_detector_requires_cascade(self, expression_dataset):
        _, images = expression_dataset
        cfg = PipelineConfig(detector=True)
        with pytest.raises(InvalidInputError, match="cascade"):
            pipeline.extract_feature_vector(images[0], cfg)

    def test_no_detection_names_the_remedy(self, expression_dataset):
        _, images = expression_dataset
        cfg = PipelineConfig(detector=True)
        with pytest.raises(NormalizationFailure, match="supply pre-cropped input"):
            pipeline.normalized_face(images[0], cfg, reject_all_cascade())


class TestTrain:
    def test_stage_timings(self, trained_default):
        assert tuple(s for s, _ in trained_default.timings) == (
            "preprocess", "normalize", "extract", "sdle_fit", "prototypes")
        assert all(t >= 0 for _, t in trained_default.timings)

    def test_bundle_shape(self, trained_default, expression_dataset):
        bundle = trained_default.bundle
        manifest, _ = expression_dataset
        assert bundle.class_names == manifest.class_names
        assert bundle.sdle.out_dim == 83
        assert bundle.sdle.input_dim == 14400
        assert bundle.prototypes.method == "feedback"
        assert bundle.prototypes.classes == tuple(range(7))
        assert bundle.prototypes.dim == 83
        assert bundle.cascade is None
        assert len(trained_default.checksum) == 64

    def test_retrain_is_deterministic(self, expression_dataset):
        manifest, images = expression_dataset
        sub_m, sub_i = subset(manifest, images, 4)
        cfg = PipelineConfig(embed_dim=12, classifier="mean")
        r1 = pipeline.train(cfg, sub_m, sub_i)
        r2 = pipeline.train(cfg, sub_m, sub_i)
        assert r1.checksum == r2.checksum
        assert bundle_lines(r1.bundle) == bundle_lines(r2.bundle)

    def test_saved_bundle_reloads(self, expression_dataset, tmp_path):
        manifest, images = expression_dataset
        sub_m, sub_i = subset(manifest, images, 4)
        cfg = PipelineConfig(embed_dim=12, classifier="cluster", feature="lbp")
        out = tmp_path / "m.ferb"
        result = pipeline.train(cfg, sub_m, sub_i, out_path=out)
        back = load_bundle(out)
        assert back.config == cfg
        assert np.array_equal(back.sdle.projection, result.bundle.sdle.projection)
        assert back.prototypes.method == "cluster"

    def test_embed_dim_checked_before_work(self, expression_dataset):
        manifest, images = expression_dataset
        sub_m, sub_i = subset(manifest, images, 1)
        with pytest.raises(InvalidInputError, match="embedding dimension"):
            pipeline.train(PipelineConfig(), sub_m, sub_i)

    def test_knn_cannot_be_persisted(self, expression_dataset):
        manifest, images = expression_dataset
        with pytest.raises(ConfigError, match="knn"):
            pipeline.train(PipelineConfig(classifier="knn"), manifest, images)

    @pytest.mark.parametrize("reduction", ["le", "none"])
    def test_train_requires_supervised_reduction(self, expression_dataset, reduction):
        manifest, images = expression_dataset
        with pytest.raises(ConfigError, match="reduction"):
            pipeline.train(PipelineConfig(reduction=reduction), manifest, images)

    def test_length_mismatch(self, expression_dataset):
        manifest, images = expression_dataset
        with pytest.raises(InvalidInputError, match="rows"):
            pipeline.train(PipelineConfig(embed_dim=5), manifest, images[:-1])


class TestPredict:
    def test_training_images_come_back_labelled(self, trained_default, expression_dataset):
        manifest, images = expression_dataset
        hits = 0
        probe = range(0, len(images), 7)
        for i in probe:
            label, score = pipeline.predict(trained_default.bundle, images[i])
            assert 0.0 <= score <= 1.0
            hits += label == manifest.entries[i].label
        assert hits / len(list(probe)) >= 0.9

    def test_prediction_is_deterministic(self, trained_default, expression_dataset):
        _, images = expression_dataset
        assert pipeline.predict(trained_default.bundle, images[3]) == \
            pipeline.predict(trained_default.bundle, images[3])

    def test_unnormalizable_input_names_the_remedy(self, trained_default):
        flat = GrayImage(np.full((120, 120), 0.5))
        with pytest.raises(NormalizationFailure, match="supply pre-cropped input"):
            pipeline.predict(trained_default.bundle, flat)


@pytest.fixture(scope="module")
def fast_cfg():
    return PipelineConfig(feature="lbp", reduction="none", classifier="knn")


class TestEvaluate:

    def test_report_and_text(self, expression_dataset, fast_cfg, tmp_path):
        manifest, images = expression_dataset
        out = tmp_path / "report.txt"
        report, text = pipeline.evaluate(fast_cfg, manifest, images, out_path=out)
        assert 0.0 <= report.accuracy <= 1.0
        assert text.endswith("\n") and "AVR" in text
        for name in manifest.class_names:
            assert name in text
        assert out.read_text(encoding="utf-8") == text

    def test_repeat_runs_byte_identical(self, expression_dataset, fast_cfg):
        manifest, images = expression_dataset
        _, t1 = pipeline.evaluate(fast_cfg, manifest, images)
        _, t2 = pipeline.evaluate(fast_cfg, manifest, images)
        assert t1 == t2

    def test_le_lane_runs(self, expression_dataset):
        manifest, images = expression_dataset
        cfg = PipelineConfig(feature="lbp", reduction="le", classifier="knn")
        report, _ = pipeline.evaluate(cfg, manifest, images)
        assert report.accuracy >= 3.0 / 7.0

    def test_length_mismatch(self, expression_dataset, fast_cfg):
        manifest, images = expression_dataset
        with pytest.raises(InvalidInputError, match="rows"):
            pipeline.evaluate(fast_cfg, manifest, images[:-2])


class TestBench:
    def test_six_stages_in_order(self, expression_dataset):
        manifest, images = expression_dataset
        rows = pipeline.bench(PipelineConfig(), manifest, images)
        assert tuple(s for s, _ in rows) == pipeline.BENCH_STAGES
        assert all(t > 0 for _, t in rows)

    def test_empty_input(self, expression_dataset):
        manifest, _ = expression_dataset
        with pytest.raises(InvalidInputError, match="at least one"):
            pipeline.bench(PipelineConfig(), manifest, [])


class TestDetectorHelpers:
    def test_cascade_rates_bounds(self, detector_samples, detector_cascade):
        positives, negatives = detector_samples
        det, fp = pipeline.cascade_rates(detector_cascade, positives, negatives)
        assert 0.0 <= fp < det <= 1.0
