"""Schematic expression renderer and detector training corpus."""

import numpy as np
import pytest

from ferpipe.errors import InvalidInputError
from ferpipe.evalharness import CLASS_NAMES
from ferpipe import synth


class TestExpressionImage:
    def test_shape_and_range(self):
        img = synth.expression_image(0)
        assert img.pixels.shape == (120, 120)
        assert img.pixels.min() >= 0.0
        assert img.pixels.max() <= 1.0

    def test_noiseless_render_is_deterministic(self):
        for c in range(7):
            a = synth.expression_image(c)
            b = synth.expression_image(c)
            assert np.array_equal(a.pixels, b.pixels)

    def test_classes_differ_without_noise(self):
        templates = [synth.expression_image(c).pixels for c in range(7)]
        for i in range(7):
            for j in range(i + 1, 7):
                assert np.abs(templates[i] - templates[j]).max() > 0.05

    def test_within_class_tighter_than_between_at_zero_noise(self):
        # zero noise collapses each class to a single template
        templates = [synth.expression_image(c).pixels for c in range(7)]
        within = max(
            float(np.abs(synth.expression_image(c).pixels - templates[c]).max())
            for c in range(7))
        between = min(
            float(np.abs(templates[i] - templates[j]).mean())
            for i in range(7) for j in range(7) if i != j)
        assert within == 0.0
        assert between > 0.0

    def test_noise_jitters_render(self):
        rng = np.random.default_rng(4)
        a = synth.expression_image(2, rng, noise=0.5)
        b = synth.expression_image(2, np.random.default_rng(4), noise=0.5)
        c = synth.expression_image(2, np.random.default_rng(5), noise=0.5)
        assert np.array_equal(a.pixels, b.pixels)
        assert not np.array_equal(a.pixels, c.pixels)

    def test_negative_noise_rejected(self):
        with pytest.raises(InvalidInputError):
            synth.expression_image(0, noise=-0.1)

    def test_extra_classes_get_distinct_labels(self):
        label7, params7 = synth.class_parameters(7)
        label0, params0 = synth.class_parameters(0)
        assert label0 == CLASS_NAMES[0]
        assert label7 == "class7"
        assert params7 != params0


class TestSynthDataset:
    def test_default_layout(self):
        manifest, images = synth.synth_dataset(42)
        assert len(manifest) == 98
        assert len(images) == 98
        assert manifest.class_names == CLASS_NAMES
        assert len({e.path for e in manifest.entries}) == 98
        labels = [e.label for e in manifest.entries]
        for name in CLASS_NAMES:
            assert labels.count(name) == 14

    def test_reproducible_bit_identical(self):
        m1, im1 = synth.synth_dataset(7, per_class=3, classes=4, noise=0.4)
        m2, im2 = synth.synth_dataset(7, per_class=3, classes=4, noise=0.4)
        assert m1 == m2
        assert all(np.array_equal(a.pixels, b.pixels) for a, b in zip(im1, im2))

    def test_seed_changes_pixels(self):
        _, im1 = synth.synth_dataset(1, per_class=2, classes=2, noise=0.4)
        _, im2 = synth.synth_dataset(2, per_class=2, classes=2, noise=0.4)
        assert not np.array_equal(im1[0].pixels, im2[0].pixels)

    def test_counts_validated(self):
        with pytest.raises(InvalidInputError):
            synth.synth_dataset(0, per_class=0)
        with pytest.raises(InvalidInputError):
            synth.synth_dataset(0, classes=0)

    def test_subject_ids_cycle_within_class(self):
        manifest, _ = synth.synth_dataset(3, per_class=4, classes=2)
        subjects = [e.subject for e in manifest.entries]
        assert subjects == ["s00", "s01", "s02", "s03"] * 2


class TestDetectorCorpus:
    def test_small_corpus_reproducible(self):
        p1, n1 = synth.detector_corpus(9, n_pos=25, n_neg=80, mined_fraction=0.25)
        p2, n2 = synth.detector_corpus(9, n_pos=25, n_neg=80, mined_fraction=0.25)
        assert len(p1) == 25 and len(n1) == 80
        assert all(np.array_equal(a.pixels, b.pixels) for a, b in zip(p1 + n1, p2 + n2))

    def test_patch_geometry(self):
        rng = np.random.default_rng(0)
        patch = synth.face_patch(rng)
        assert patch.pixels.shape == (24, 24)
        assert 0.0 <= patch.pixels.min() and patch.pixels.max() <= 1.0
        clutter = synth.clutter_patch(rng)
        assert clutter.pixels.shape == (24, 24)

    def test_full_corpus_sizes(self, detector_samples):
        positives, negatives = detector_samples
        assert len(positives) == 150
        assert len(negatives) == 2000
        assert all(p.pixels.shape == (24, 24) for p in positives)
        assert all(n.pixels.shape == (24, 24) for n in negatives)

    def test_corpus_size_validation(self):
        with pytest.raises(InvalidInputError):
            synth.detector_corpus(0, n_pos=0)
        with pytest.raises(InvalidInputError):
            synth.detector_corpus(0, n_neg=0)
        with pytest.raises(InvalidInputError):
            synth.detector_corpus(0, mined_fraction=1.0)


class TestScenes:
    def test_planted_scene_truth_box(self):
        scene, truth = synth.planted_noise_scene(100)
        assert scene.pixels.shape == (200, 200)
        assert truth.x >= 0 and truth.y >= 0
        assert truth.x + truth.side <= 200
        assert truth.y + truth.side <= 200
        assert 40 <= truth.side <= 80

    def test_scene_determinism(self):
        a, ta = synth.planted_noise_scene(5)
        b, tb = synth.planted_noise_scene(5)
        assert np.array_equal(a.pixels, b.pixels)
        assert ta == tb
        assert np.array_equal(synth.noise_scene(5).pixels, synth.noise_scene(5).pixels)
        assert np.array_equal(synth.clutter_scene(5).pixels, synth.clutter_scene(5).pixels)

    def test_planted_region_matches_pattern_stats(self):
        # the planted crop is darker mid-gray with a bright oval; noise
        # background sits near 0.5 everywhere
        scene, truth = synth.planted_noise_scene(101)
        crop = scene.pixels[truth.y:truth.y + truth.side, truth.x:truth.x + truth.side]
        assert crop.std() > 0.15
