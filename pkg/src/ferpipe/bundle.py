"""Model persistence: one text file holding the config snapshot, the class
table, an optional detector cascade, the fitted projection, and the class
prototypes, ending in a sha256 checksum over everything above it.

All numerics are written with repr, so a load restores them bit-exactly and
the same model always produces the same bytes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .classify import PrototypeSet
from .config import PipelineConfig, config_from_dict, config_json
from .errors import BundleError, InvalidInputError
from .facedetect import Cascade, cascade_lines, parse_cascade
from .manifold import SdleModel, SdleParams

BUNDLE_VERSION = "ferpipe-bundle v1"


@dataclass(frozen=True)
class ModelBundle:
    config: PipelineConfig
    class_names: tuple  # index order matches the label indices in prototypes
    sdle: SdleModel
    prototypes: PrototypeSet
    cascade: Cascade | None = None
    version: str = BUNDLE_VERSION

    def __post_init__(self):
        if self.version != BUNDLE_VERSION:
            raise BundleError(f"unsupported bundle version {self.version!r}")
        if not self.class_names or len(set(self.class_names)) != len(self.class_names):
            raise BundleError("bundle needs a non-empty table of distinct class names")
        if any(c < 0 or c >= len(self.class_names) for c in self.prototypes.classes):
            raise BundleError("prototype class indices fall outside the class table")


def _matrix_lines(name: str, array: np.ndarray) -> list:
    a = np.atleast_2d(np.asarray(array, dtype=np.float64))
    lines = [f"matrix {name} {a.shape[0]} {a.shape[1]}"]
    for row in a:
        lines.append(" ".join(repr(float(v)) for v in row))
    return lines


def _parse_matrix(rows, pos, name):
    head = rows[pos].split()
    if len(head) != 4 or head[0] != "matrix" or head[1] != name:
        raise BundleError(f"expected matrix {name!r}, got {rows[pos]!r}")
    r, c = int(head[2]), int(head[3])
    out = np.empty((r, c))
    for i in range(r):
        vals = rows[pos + 1 + i].split()
        if len(vals) != c:
            raise BundleError(f"matrix {name} row {i} has {len(vals)} of {c} values")
        out[i] = [float(v) for v in vals]
    return out, pos + 1 + r


def bundle_lines(bundle: ModelBundle) -> list:
    lines = [BUNDLE_VERSION, "[config]", config_json(bundle.config), "[classes]"]
    for i, name in enumerate(bundle.class_names):
        lines.append(f"{i} {name}")
    if bundle.cascade is not None:
        lines.append("[cascade]")
        lines.extend(cascade_lines(bundle.cascade))
    sd = bundle.sdle
    p = sd.params
    lines.append("[sdle]")
    lines.append(
        f"params {p.p!r} {p.a!r} {'none' if p.penalty is None else repr(p.penalty)} "
        f"{p.t!r} {p.weight_map} {p.ridge!r}"
    )
    lines.extend(_matrix_lines("eigenvalues", sd.eigenvalues))
    lines.extend(_matrix_lines("basis", sd.basis))
    lines.extend(_matrix_lines("projection", sd.projection))
    pr = bundle.prototypes
    lines.append("[prototypes]")
    lines.append(f"method {pr.method} {pr.measure}")
    for c, block in zip(pr.classes, pr.prototypes):
        lines.extend(_matrix_lines(f"class{c}", block))
    return lines


def bundle_checksum(bundle: ModelBundle) -> str:
    body = "\n".join(bundle_lines(bundle)) + "\n"
    return hashlib.sha256(body.encode("utf-8")).hexdigest()


def save_bundle(path, bundle: ModelBundle) -> str:
    """Write the bundle; returns the checksum it was sealed with."""
    body = "\n".join(bundle_lines(bundle)) + "\n"
    digest = hashlib.sha256(body.encode("utf-8")).hexdigest()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(body + "[checksum]\nsha256 " + digest + "\n")
    return digest


def _split_sections(body_lines):
    if not body_lines or body_lines[0] != BUNDLE_VERSION:
        head = body_lines[0] if body_lines else "<empty>"
        raise BundleError(f"unsupported bundle version line {head!r}")
    sections = {}
    current = None
    for ln in body_lines[1:]:
        if ln.startswith("[") and ln.endswith("]"):
            current = ln[1:-1]
            if current in sections:
                raise BundleError(f"duplicate bundle section [{current}]")
            sections[current] = []
        elif current is None:
            raise BundleError(f"content before first bundle section: {ln!r}")
        else:
            sections[current].append(ln)
    missing = [s for s in ("config", "classes", "sdle", "prototypes") if s not in sections]
    if missing:
        raise BundleError(f"bundle is missing sections: {', '.join(missing)}")
    unknown = set(sections) - {"config", "classes", "cascade", "sdle", "prototypes"}
    if unknown:
        raise BundleError(f"unknown bundle sections: {', '.join(sorted(unknown))}")
    return sections


def _parse_sdle(rows) -> SdleModel:
    tok = rows[0].split()
    if len(tok) != 7 or tok[0] != "params":
        raise BundleError(f"expected sdle params row, got {rows[0]!r}")
    params = SdleParams(
        p=float(tok[1]),
        a=float(tok[2]),
        penalty=None if tok[3] == "none" else float(tok[3]),
        t=float(tok[4]),
        weight_map=tok[5],
        ridge=float(tok[6]),
    )
    eigenvalues, pos = _parse_matrix(rows, 1, "eigenvalues")
    basis, pos = _parse_matrix(rows, pos, "basis")
    projection, pos = _parse_matrix(rows, pos, "projection")
    if pos != len(rows):
        raise BundleError(f"{len(rows) - pos} trailing rows in the sdle section")
    return SdleModel(basis, projection, eigenvalues.ravel(), params)


def _parse_prototypes(rows) -> PrototypeSet:
    tok = rows[0].split()
    if len(tok) != 3 or tok[0] != "method":
        raise BundleError(f"expected prototype method row, got {rows[0]!r}")
    method, measure = tok[1], tok[2]
    classes = []
    blocks = []
    pos = 1
    while pos < len(rows):
        head = rows[pos].split()
        if len(head) != 4 or head[0] != "matrix" or not head[1].startswith("class"):
            raise BundleError(f"expected a class matrix, got {rows[pos]!r}")
        c = int(head[1][len("class"):])
        block, pos = _parse_matrix(rows, pos, head[1])
        classes.append(c)
        blocks.append(block)
    return PrototypeSet(tuple(classes), tuple(blocks), method, measure)


def load_bundle(path) -> ModelBundle:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise BundleError(f"cannot read bundle file {path}: {exc}") from exc
    lines = text.split("\n")
    try:
        marker = len(lines) - 1 - lines[::-1].index("[checksum]")
    except ValueError:
        raise BundleError("bundle has no checksum section") from None
    body = "\n".join(lines[:marker]) + "\n"
    tail = [ln for ln in lines[marker + 1:] if ln.strip()]
    if len(tail) != 1 or len(tail[0].split()) != 2 or tail[0].split()[0] != "sha256":
        raise BundleError("checksum section must hold a single sha256 row")
    stated = tail[0].split()[1]
    actual = hashlib.sha256(body.encode("utf-8")).hexdigest()
    if stated != actual:
        raise BundleError(f"bundle checksum mismatch: stated {stated[:12]}.., actual {actual[:12]}..")

    sections = _split_sections(lines[:marker])
    try:
        if len(sections["config"]) != 1:
            raise BundleError("config section must be a single JSON line")
        config = config_from_dict(json.loads(sections["config"][0]))
        names = []
        for i, row in enumerate(sections["classes"]):
            tok = row.split(maxsplit=1)
            if len(tok) != 2 or tok[0] != str(i):
                raise BundleError(f"class table row {i} is malformed: {row!r}")
            names.append(tok[1])
        cascade = parse_cascade(sections["cascade"]) if "cascade" in sections else None
        sdle = _parse_sdle(sections["sdle"])
        prototypes = _parse_prototypes(sections["prototypes"])
        return ModelBundle(config, tuple(names), sdle, prototypes, cascade)
    except BundleError:
        raise
    except (InvalidInputError, ValueError, IndexError, json.JSONDecodeError) as exc:
        raise BundleError(f"malformed bundle content: {exc}") from exc
