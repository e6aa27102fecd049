"""Image file I/O: binary PGM (P5) read/write and PNG/JPEG read via Pillow.

PGM is the pipeline's native interchange format and is parsed by hand so
round-trips are bit-exact. Color inputs collapse to luma (Rec. 601).
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import IngestError
from .imaging import GrayImage

_LUMA = np.array([0.299, 0.587, 0.114])


def read_image(path) -> GrayImage:
    """Load a grayscale image from .pgm (native) or anything Pillow reads."""
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"no such image file: {path}")
    if path.suffix.lower() == ".pgm":
        return read_pgm(path)
    try:
        with PILImage.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.float64)
    except Exception as exc:
        raise IngestError(f"cannot decode {path}: {exc}") from exc
    gray = arr @ _LUMA
    return GrayImage(np.clip(gray / 255.0, 0.0, 1.0))


def read_pgm(path) -> GrayImage:
    data = Path(path).read_bytes()
    try:
        magic, rest = _token(data, 0)
        if magic != b"P5":
            raise ValueError(f"not a binary PGM (magic {magic!r})")
        wtok, rest = _token(data, rest)
        htok, rest = _token(data, rest)
        mtok, rest = _token(data, rest)
        w, h, maxval = int(wtok), int(htok), int(mtok)
        if w < 1 or h < 1:
            raise ValueError("non-positive dimensions")
        if not 0 < maxval < 256:
            raise ValueError(f"unsupported maxval {maxval}")
        raster = data[rest : rest + w * h]
        if len(raster) != w * h:
            raise ValueError("truncated raster")
        levels = np.frombuffer(raster, dtype=np.uint8).reshape(h, w)
    except ValueError as exc:
        raise IngestError(f"malformed PGM {path}: {exc}") from exc
    return GrayImage(levels.astype(np.float64) / float(maxval))


def write_pgm(path, img: GrayImage) -> None:
    levels = img.levels().astype(np.uint8)
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + levels.tobytes())


def pgm_bytes(img: GrayImage) -> bytes:
    buf = io.BytesIO()
    levels = img.levels().astype(np.uint8)
    buf.write(f"P5\n{img.width} {img.height}\n255\n".encode("ascii"))
    buf.write(levels.tobytes())
    return buf.getvalue()


def _token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Next whitespace-delimited token, skipping '#' comment lines.

    Returns (token, index one past the single whitespace that ends it);
    for the maxval token that index is the start of the raster.
    """
    n = len(data)
    while pos < n:
        ch = data[pos : pos + 1]
        if ch == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    if pos >= n:
        raise ValueError("unexpected end of header")
    start = pos
    while pos < n and not data[pos : pos + 1].isspace():
        pos += 1
    if pos >= n:
        raise ValueError("unexpected end of header")
    return data[start:pos], pos + 1
