"""Dataset manifests: delimiter-separated text listing image path, class
label, and subject id, validated at ingest time."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .errors import IngestError
from .evalharness import CLASS_NAMES
from .imgio import read_image

MANIFEST_HEADER = ("path", "label", "subject")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: str
    subject: str = ""


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple
    class_names: tuple

    def __post_init__(self):
        seen = set()
        for e in self.entries:
            if e.path in seen:
                raise IngestError(f"duplicate path {e.path!r} in manifest")
            seen.add(e.path)
            if e.label not in self.class_names:
                raise IngestError(f"label {e.label!r} not in class table {self.class_names}")

    def __len__(self):
        return len(self.entries)

    def labels_as_indices(self) -> list[int]:
        index = {name: i for i, name in enumerate(self.class_names)}
        return [index[e.label] for e in self.entries]


def class_table(labels) -> tuple:
    """Deterministic class ordering: the canonical expression order when all
    labels are canonical names, lexicographic otherwise."""
    unique = set(labels)
    if unique <= set(CLASS_NAMES):
        return tuple(name for name in CLASS_NAMES if name in unique)
    return tuple(sorted(unique))


def manifest_from_rows(rows) -> DatasetManifest:
    entries = tuple(ManifestEntry(p, l, s) for p, l, s in rows)
    return DatasetManifest(entries, class_table([e.label for e in entries]))


def read_manifest(manifest_path, delimiter: str = ",") -> DatasetManifest:
    """Parse a manifest file; malformed rows raise IngestError naming the
    1-based line number."""
    path = Path(manifest_path)
    if not path.is_file():
        raise IngestError(f"manifest file {path} does not exist")
    text = path.read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines()]
    if not lines:
        raise IngestError(f"manifest {path} is empty")
    header = tuple(col.strip() for col in lines[0].split(delimiter))
    if header != MANIFEST_HEADER:
        raise IngestError(
            f"manifest header must be {delimiter.join(MANIFEST_HEADER)!r}, got {lines[0]!r}"
        )
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cols = [c.strip() for c in line.split(delimiter)]
        if len(cols) != 3:
            raise IngestError(f"row {lineno}: expected 3 columns, got {len(cols)}")
        if not cols[0]:
            raise IngestError(f"row {lineno}: empty path")
        if not cols[1]:
            raise IngestError(f"row {lineno}: empty label")
        rows.append((cols[0], cols[1], cols[2]))
    if not rows:
        raise IngestError(f"manifest {path} has no data rows")
    paths = [r[0] for r in rows]
    dup = {p for p in paths if paths.count(p) > 1}
    if dup:
        lineno = 2 + paths.index(sorted(dup)[0])
        raise IngestError(f"row {lineno}: duplicate path {sorted(dup)[0]!r}")
    return manifest_from_rows(rows)


def write_manifest(manifest: DatasetManifest, out_path, delimiter: str = ",") -> None:
    lines = [delimiter.join(MANIFEST_HEADER)]
    for e in manifest.entries:
        lines.append(delimiter.join((e.path, e.label, e.subject)))
    Path(out_path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def ingest_dataset(root, manifest_path, delimiter: str = ",") -> DatasetManifest:
    """Validate a manifest against a dataset root: every referenced image
    must exist and be readable."""
    manifest = read_manifest(manifest_path, delimiter)
    rootp = Path(root)
    for rowno, entry in enumerate(manifest.entries, start=2):
        img_path = rootp / entry.path
        if not img_path.is_file():
            raise IngestError(f"row {rowno}: missing image file {entry.path!r}")
        try:
            read_image(img_path)
        except Exception as exc:
            raise IngestError(f"row {rowno}: unreadable image {entry.path!r}: {exc}") from exc
    return manifest


def load_images(root, manifest: DatasetManifest):
    """Images in manifest row order."""
    rootp = Path(root)
    return [read_image(rootp / e.path) for e in manifest.entries]
