"""Local binary patterns and the centre-symmetric noise-robust variant.

Bit n compares neighbor n against the center: LBP sets it when the
difference is positive, CBP when its magnitude exceeds a threshold C
(in 0-255 level units). Neighbor 0 is the right neighbor; numbering then
proceeds counter-clockwise (up-right, up, up-left, left, ...).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .imaging import GrayImage

# (drow, dcol) for bits 0..7: right, then counter-clockwise
NEIGHBOR_OFFSETS = ((0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1))


@dataclass(frozen=True)
class CbpParams:
    threshold: float = 6.0

    def __post_init__(self):
        if not (math.isfinite(self.threshold) and self.threshold >= 0):
            raise InvalidInputError("CBP threshold must be finite and >= 0")


def lbp_code(patch) -> int:
    """Code for the center of a 3x3 patch; s(x) = 1 iff x > 0."""
    p = _check_patch(patch)
    code = 0
    for n, (dy, dx) in enumerate(NEIGHBOR_OFFSETS):
        if p[1 + dy, 1 + dx] - p[1, 1] > 0:
            code |= 1 << n
    return code


def cbp_code(patch, params: CbpParams = CbpParams()) -> int:
    """Code for the center of a 3x3 patch; s(x) = 1 iff |x| > C."""
    p = _check_patch(patch)
    code = 0
    for n, (dy, dx) in enumerate(NEIGHBOR_OFFSETS):
        if abs(p[1 + dy, 1 + dx] - p[1, 1]) > params.threshold:
            code |= 1 << n
    return code


def _check_patch(patch) -> np.ndarray:
    p = np.asarray(patch, dtype=np.float64)
    if p.shape != (3, 3):
        raise InvalidInputError(f"patch must be 3x3, got {p.shape}")
    return p


def code_image(img: GrayImage, mode: str = "lbp", params: CbpParams = CbpParams()) -> GrayImage:
    """Per-pixel code image, edge-replicated borders, codes as levels 0-255."""
    if mode not in ("lbp", "cbp"):
        raise InvalidInputError(f"mode must be 'lbp' or 'cbp', got {mode!r}")
    if img.height < 3 or img.width < 3:
        raise InvalidInputError("image must be at least 3x3 for code extraction")
    levels = img.levels().astype(np.float64)
    padded = np.pad(levels, 1, mode="edge")
    h, w = levels.shape
    codes = np.zeros((h, w), dtype=np.int64)
    for n, (dy, dx) in enumerate(NEIGHBOR_OFFSETS):
        neighbor = padded[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w]
        diff = neighbor - levels
        if mode == "lbp":
            bit = diff > 0
        else:
            bit = np.abs(diff) > params.threshold
        codes |= bit.astype(np.int64) << n
    return GrayImage.from_levels(codes)


def extract_lbp_features(
    img: GrayImage, mode: str = "lbp", params: CbpParams = CbpParams()
) -> np.ndarray:
    """Row-major flattened code image, codes rescaled to [0,1] by /255."""
    return code_image(img, mode, params).pixels.ravel().copy()
