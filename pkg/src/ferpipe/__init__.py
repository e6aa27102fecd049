"""Facial expression recognition pipeline.

Stages: image enhancement, boosted face detection, geometric/intensity
normalization, Gabor and local-binary-pattern features, supervised spectral
embedding, and prototype classifiers, plus an evaluation harness and a
synthetic data generator for end-to-end exercises.
"""

__version__ = "0.1.0"

from .errors import (
    BundleError,
    ConfigError,
    DisconnectedGraphError,
    FerError,
    GraphConstructionError,
    IngestError,
    InvalidInputError,
    NormalizationFailure,
    NumericError,
    TrainingFailure,
)
from .imaging import GrayImage, Point2D, ReferenceLine

__all__ = [
    "__version__",
    "BundleError",
    "ConfigError",
    "DisconnectedGraphError",
    "FerError",
    "GraphConstructionError",
    "GrayImage",
    "IngestError",
    "InvalidInputError",
    "NormalizationFailure",
    "NumericError",
    "Point2D",
    "ReferenceLine",
    "TrainingFailure",
]
