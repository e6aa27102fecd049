"""Shared fixtures. The detector corpus and its trained cascade take tens of
seconds to build, so they are constructed once per session."""

import pytest

from ferpipe import facedetect, synth


@pytest.fixture(scope="session")
def detector_samples():
    return synth.detector_corpus(3)


@pytest.fixture(scope="session")
def detector_cascade(detector_samples):
    positives, negatives = detector_samples
    return facedetect.cascade_build(positives, negatives)


@pytest.fixture(scope="session")
def expression_dataset():
    """(manifest, images) of the default synthetic expression set."""
    return synth.synth_dataset(42)


@pytest.fixture(scope="session")
def trained_default(expression_dataset):
    """TrainResult of the default config on the default synthetic set."""
    from ferpipe import pipeline
    from ferpipe.config import PipelineConfig

    manifest, images = expression_dataset
    return pipeline.train(PipelineConfig(), manifest, images)
