"""Pipeline configuration: a validated bag of every tunable the chain uses,
with JSON persistence.

Loading is strict: unknown keys, wrong types, and out-of-range values all
raise a config error naming the offender, so a bad file never makes it to
pipeline start.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError, InvalidInputError
from .gabor import GaborParams
from .lbp import CbpParams
from .manifold import SdleParams

FEATURE_MODES = ("gabor", "lbp", "cbp")
ENHANCEMENTS = ("none", "equalize", "homomorphic", "both")
REDUCTIONS = ("sdle", "le", "none")
CLASSIFIERS = ("mean", "cluster", "feedback", "knn")
CV_SCHEMES = ("k-fold", "leave-one-out")
WEIGHT_SCHEMES = ("heat", "simple")


@dataclass(frozen=True)
class PipelineConfig:
    feature: str = "gabor"
    enhancement: str = "none"  # contrast/illumination pass before the face chain
    detector: bool = False  # off for pre-cropped datasets
    seed: int = 42
    embed_dim: int = 83  # SDLE output dimension
    reduction: str = "sdle"
    classifier: str = "feedback"
    knn_k: int = 1
    clusters_per_class: int = 2
    feedback_rate: float = 0.05
    feedback_epochs: int = 50
    graph_neighbors: int = 15  # LE reduction: n-nearest graph size
    weight_scheme: str = "heat"
    heat_t: float | None = None  # None: mean squared pairwise distance
    le_dim: int = 8
    cv_scheme: str = "k-fold"
    cv_folds: int = 7
    gabor: GaborParams = field(default_factory=GaborParams)
    cbp: CbpParams = field(default_factory=CbpParams)
    sdle: SdleParams = field(default_factory=SdleParams)

    def __post_init__(self):
        def enum(name, value, allowed):
            if value not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}, got {value!r}")

        enum("feature", self.feature, FEATURE_MODES)
        enum("enhancement", self.enhancement, ENHANCEMENTS)
        enum("reduction", self.reduction, REDUCTIONS)
        enum("classifier", self.classifier, CLASSIFIERS)
        enum("cv_scheme", self.cv_scheme, CV_SCHEMES)
        enum("weight_scheme", self.weight_scheme, WEIGHT_SCHEMES)
        if not isinstance(self.detector, bool):
            raise ConfigError("detector must be true or false")
        for name in ("seed", "embed_dim", "knn_k", "clusters_per_class",
                     "feedback_epochs", "graph_neighbors", "le_dim", "cv_folds"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise ConfigError(f"{name} must be an integer, got {v!r}")
        if self.embed_dim < 1:
            raise ConfigError("embed_dim must be >= 1")
        if self.knn_k < 1:
            raise ConfigError("knn_k must be >= 1")
        if self.clusters_per_class < 1:
            raise ConfigError("clusters_per_class must be >= 1")
        if self.feedback_epochs < 1:
            raise ConfigError("feedback_epochs must be >= 1")
        if not (isinstance(self.feedback_rate, float) and 0.0 < self.feedback_rate < 1.0):
            raise ConfigError("feedback_rate must lie in (0, 1)")
        if self.graph_neighbors < 1:
            raise ConfigError("graph_neighbors must be >= 1")
        if self.heat_t is not None and not (
            isinstance(self.heat_t, (int, float)) and math.isfinite(self.heat_t) and self.heat_t > 0
        ):
            raise ConfigError("heat_t must be null or a positive number")
        if self.le_dim < 1:
            raise ConfigError("le_dim must be >= 1")
        if self.cv_folds < 2:
            raise ConfigError("cv_folds must be >= 2")


def config_to_dict(config: PipelineConfig) -> dict:
    d = asdict(config)
    d["gabor"]["orientations"] = list(config.gabor.orientations)
    d["gabor"]["scales"] = list(config.gabor.scales)
    return d


def config_from_dict(data: dict) -> PipelineConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    known = {f.name for f in fields(PipelineConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    kwargs = dict(data)
    try:
        for key, cls in (("gabor", GaborParams), ("cbp", CbpParams), ("sdle", SdleParams)):
            if key in kwargs:
                section = kwargs[key]
                if not isinstance(section, dict):
                    raise ConfigError(f"{key} section must be a JSON object")
                allowed = {f.name for f in fields(cls)}
                bad = sorted(set(section) - allowed)
                if bad:
                    raise ConfigError(f"unknown {key} keys: {', '.join(bad)}")
                kwargs[key] = cls(**section)
        return PipelineConfig(**kwargs)
    except ConfigError:
        raise
    except InvalidInputError as exc:
        raise ConfigError(str(exc)) from exc
    except TypeError as exc:
        raise ConfigError(f"malformed config: {exc}") from exc


def load_config(path) -> PipelineConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def save_config(config: PipelineConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(config), fh, indent=2, sort_keys=True)
        fh.write("\n")


def config_json(config: PipelineConfig) -> str:
    """Canonical single-line JSON used inside persisted bundles."""
    return json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
