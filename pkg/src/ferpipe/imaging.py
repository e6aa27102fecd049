"""Grayscale image type, enhancement filters, and face normalization.

Intensities are stored as float64 in [0, 1]; histogram-style operations
work on a quantized 0..255 level view. All functions are pure: they never
mutate their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidInputError, NormalizationFailure

# Canonical face frame and where the eye line lands inside it.
CANONICAL_FACE_SIDE = 120
LINE_X0_FRAC = 0.2
LINE_X1_FRAC = 0.8
LINE_Y_FRAC = 0.35


@dataclass(frozen=True)
class GrayImage:
    """Single-channel image; float64 intensities in [0, 1], row-major."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float64, copy=True)
        if px.ndim != 2 or px.size == 0:
            raise InvalidInputError("image must be a non-empty 2D array")
        if not np.all(np.isfinite(px)):
            raise InvalidInputError("image intensities must be finite")
        if px.min() < -1e-9 or px.max() > 1.0 + 1e-9:
            raise InvalidInputError("image intensities must lie in [0, 1]")
        np.clip(px, 0.0, 1.0, out=px)
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def levels(self) -> np.ndarray:
        """0..255 integer level view (half-up quantization)."""
        return np.floor(self.pixels * 255.0 + 0.5).astype(np.int64)

    @staticmethod
    def from_levels(levels) -> "GrayImage":
        arr = np.asarray(levels, dtype=np.float64)
        return GrayImage(arr / 255.0)


@dataclass(frozen=True)
class Point2D:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidInputError("point coordinates must be finite")


@dataclass(frozen=True)
class ReferenceLine:
    p0: Point2D
    p1: Point2D

    def __post_init__(self):
        if self.p0.x == self.p1.x and self.p0.y == self.p1.y:
            raise InvalidInputError("reference line endpoints must differ")

    @property
    def length(self) -> float:
        return math.hypot(self.p1.x - self.p0.x, self.p1.y - self.p0.y)

    @property
    def angle_degrees(self) -> float:
        """Angle of p0->p1 against the +x axis, image coordinates."""
        return math.degrees(math.atan2(self.p1.y - self.p0.y, self.p1.x - self.p0.x))


# ---------------------------------------------------------------------------
# denoising / enhancement
# ---------------------------------------------------------------------------

def mean_filter(img: GrayImage, radius: int) -> GrayImage:
    """Box average over (2*radius+1)^2 windows, borders edge-replicated."""
    if radius < 1:
        raise InvalidInputError("mean filter radius must be >= 1")
    padded = np.pad(img.pixels, radius, mode="edge")
    ii = _cumulative_table(padded)
    size = 2 * radius + 1
    h, w = img.pixels.shape
    sums = (
        ii[size : size + h, size : size + w]
        - ii[0:h, size : size + w]
        - ii[size : size + h, 0:w]
        + ii[0:h, 0:w]
    )
    return GrayImage(np.clip(sums / float(size * size), 0.0, 1.0))


def mean_filter_1d(values: np.ndarray, radius: int) -> np.ndarray:
    """1D box average with edge replication; used to smooth projections."""
    if radius < 1:
        raise InvalidInputError("mean filter radius must be >= 1")
    v = np.asarray(values, dtype=np.float64)
    padded = np.pad(v, radius, mode="edge")
    csum = np.concatenate([[0.0], np.cumsum(padded)])
    size = 2 * radius + 1
    return (csum[size:] - csum[:-size]) / float(size)


def hist_equalize(img: GrayImage) -> GrayImage:
    """256-level CDF remap: out = round(255 * CDF(level)), half-up."""
    levels = img.levels()
    hist = np.bincount(levels.ravel(), minlength=256)
    cdf = np.cumsum(hist) / float(levels.size)
    mapping = np.floor(255.0 * cdf + 0.5)
    return GrayImage(mapping[levels] / 255.0)


def equalization_map(img: GrayImage) -> np.ndarray:
    """The 256-entry level mapping hist_equalize applies to this image."""
    levels = img.levels()
    hist = np.bincount(levels.ravel(), minlength=256)
    cdf = np.cumsum(hist) / float(levels.size)
    return np.floor(255.0 * cdf + 0.5).astype(np.int64)


def homomorphic_response(
    img: GrayImage,
    low_gain: float = 0.5,
    high_gain: float = 1.5,
    cutoff: float = 0.05,
) -> np.ndarray:
    """Pre-rescale surface of the homomorphic filter (exp of filtered log).

    Log-transform with a +1e-6 offset, Gaussian high-emphasis filter in the
    frequency domain (gain low_gain at DC rising to high_gain), inverse
    transform, exponentiate. `cutoff` is a normalized frequency in (0, 0.5).
    """
    for name, val in (("low_gain", low_gain), ("high_gain", high_gain), ("cutoff", cutoff)):
        if not math.isfinite(val):
            raise InvalidInputError(f"{name} must be finite")
    if not 0.0 < cutoff < 0.5:
        raise InvalidInputError("cutoff must lie in (0, 0.5)")
    if not low_gain < high_gain:
        raise InvalidInputError("low_gain must be < high_gain")
    eps = 1e-6
    log_im = np.log(img.pixels + eps)
    spectrum = np.fft.fft2(log_im)
    fy = np.fft.fftfreq(img.height)
    fx = np.fft.fftfreq(img.width)
    d2 = fy[:, None] ** 2 + fx[None, :] ** 2
    gain = high_gain - (high_gain - low_gain) * np.exp(-d2 / (2.0 * cutoff * cutoff))
    filtered = np.real(np.fft.ifft2(spectrum * gain))
    return np.exp(filtered)


def homomorphic_filter(
    img: GrayImage,
    low_gain: float = 0.5,
    high_gain: float = 1.5,
    cutoff: float = 0.05,
) -> GrayImage:
    """Suppress multiplicative illumination; output min-max rescaled to [0,1].

    A degenerate (flat) response returns the input unchanged.
    """
    raw = homomorphic_response(img, low_gain, high_gain, cutoff)
    span = raw.max() - raw.min()
    if span < 1e-12:
        return GrayImage(img.pixels)
    return GrayImage((raw - raw.min()) / span)


# ---------------------------------------------------------------------------
# integral image and projections
# ---------------------------------------------------------------------------

def _cumulative_table(pixels: np.ndarray) -> np.ndarray:
    h, w = pixels.shape
    table = np.zeros((h + 1, w + 1), dtype=np.float64)
    np.cumsum(np.cumsum(pixels, axis=0), axis=1, out=table[1:, 1:])
    return table


def integral_image(img: GrayImage) -> np.ndarray:
    """(h+1) x (w+1) table; entry (i, j) = sum of pixels with row<i, col<j."""
    return _cumulative_table(img.pixels)


def rect_sum(table: np.ndarray, r0: int, c0: int, r1: int, c1: int) -> float:
    """Pixel sum over rows [r0, r1) x cols [c0, c1) in 4 lookups."""
    return float(table[r1, c1] - table[r0, c1] - table[r1, c0] + table[r0, c0])


def integral_projection(img: GrayImage, axis: str) -> np.ndarray:
    """Row sums ("horizontal") or column sums ("vertical") of intensity."""
    if axis == "horizontal":
        return img.pixels.sum(axis=1)
    if axis == "vertical":
        return img.pixels.sum(axis=0)
    raise InvalidInputError(f"axis must be 'horizontal' or 'vertical', got {axis!r}")


# ---------------------------------------------------------------------------
# Harris corners
# ---------------------------------------------------------------------------

def harris_response(img: GrayImage, window_sigma: float = 1.5, k: float = 0.04) -> np.ndarray:
    """Corner response det(C) - k*trace(C)^2 from the smoothed gradient
    autocorrelation matrix C (Gaussian window, edge-replicated)."""
    if img.height < 3 or img.width < 3:
        raise InvalidInputError("image must be at least 3x3 for corner detection")
    iy, ix = np.gradient(img.pixels)
    sxx = ndimage.gaussian_filter(ix * ix, window_sigma, mode="nearest")
    syy = ndimage.gaussian_filter(iy * iy, window_sigma, mode="nearest")
    sxy = ndimage.gaussian_filter(ix * iy, window_sigma, mode="nearest")
    return (sxx * syy - sxy * sxy) - k * (sxx + syy) ** 2


def harris_corners(
    img: GrayImage,
    window_sigma: float = 1.5,
    k: float = 0.04,
    threshold: float = 1e-8,
    nms_radius: int = 3,
) -> list[Point2D]:
    """Local response maxima above `threshold` after non-maximum suppression.

    Returned points are sorted by (y, x). May be empty.
    """
    response = harris_response(img, window_sigma, k)
    return _nms_peaks(response, threshold, nms_radius)


def _nms_peaks(response: np.ndarray, threshold: float, nms_radius: int) -> list[Point2D]:
    size = 2 * nms_radius + 1
    local_max = response >= ndimage.maximum_filter(response, size=size, mode="nearest")
    ys, xs = np.nonzero(local_max & (response > threshold))
    if ys.size == 0:
        return []
    # plateau ties: keep the strongest, drop anything within nms_radius of a keeper
    order = np.lexsort((xs, ys, -response[ys, xs]))
    kept: list[tuple[int, int]] = []
    for idx in order:
        y, x = int(ys[idx]), int(xs[idx])
        if all(max(abs(y - ky), abs(x - kx)) > nms_radius for ky, kx in kept):
            kept.append((y, x))
    kept.sort()
    return [Point2D(x + _subpixel(response[y, max(x - 1, 0):x + 2]) if 0 < x < response.shape[1] - 1 else float(x),
                    y + _subpixel(response[max(y - 1, 0):y + 2, x]) if 0 < y < response.shape[0] - 1 else float(y))
            for y, x in kept]


def _subpixel(triple: np.ndarray) -> float:
    """Parabolic peak offset in [-0.5, 0.5] from three samples around a max."""
    a, b, c = (float(v) for v in triple)
    denom = a - 2.0 * b + c
    if denom >= 0.0:  # flat or non-concave; keep the grid position
        return 0.0
    return float(np.clip(0.5 * (a - c) / denom, -0.5, 0.5))


# ---------------------------------------------------------------------------
# reference line and geometric normalization
# ---------------------------------------------------------------------------

def locate_reference_line(face: GrayImage) -> ReferenceLine:
    """Find the eye-to-eye line of a face crop.

    The eye band rows come from the first significant valley of the smoothed
    horizontal integral projection (skipping the top 15% of the crop); the
    band columns come from the dark span of the vertical projection inside
    those rows. The outermost left/right Harris corners inside the bracketed
    band become the endpoints.
    """
    h, w = face.height, face.width
    if h < 8 or w < 8:
        raise NormalizationFailure("face crop too small to locate a reference line")
    proj = integral_projection(face, "horizontal")
    smooth = mean_filter_1d(proj, max(1, h // 40))

    top = int(math.ceil(0.15 * h))
    search = smooth[top : h - 1]
    span = search.max() - search.min()
    if span < 1e-9:
        raise NormalizationFailure("projection curve is flat; no eye valley found")
    significant = search.min() + 0.35 * span

    valley = -1
    for i in range(1, len(search) - 1):
        if search[i] <= search[i - 1] and search[i] <= search[i + 1] and search[i] <= significant:
            valley = top + i
            break
    if valley < 0:
        raise NormalizationFailure("no significant valley in the projection curve")

    # grow the band while the projection stays close to the valley floor
    baseline = float(np.median(search))
    rise = smooth[valley] + 0.3 * max(baseline - smooth[valley], 1e-12)
    lo = valley
    while lo - 1 >= top and smooth[lo - 1] <= rise:
        lo -= 1
    hi = valley
    while hi + 1 <= h - 1 and smooth[hi + 1] <= rise:
        hi += 1
    lo = max(0, lo - 2)
    hi = min(h - 1, hi + 2)

    # second projection, across the band rows: the dark eye span brackets the
    # band horizontally, which keeps corners from background clutter or noise
    # speckle outside the face from posing as eye tips
    cols = mean_filter_1d(face.pixels[lo : hi + 1, :].mean(axis=0), max(1, w // 60))
    cmin, cmed = float(cols.min()), float(np.median(cols))
    if cmed - cmin < 1e-9:
        raise NormalizationFailure("eye band has no dark span")
    dark = np.flatnonzero(cols <= cmin + 0.5 * (cmed - cmin))
    x0 = max(0, int(dark[0]) - 3)
    x1 = min(w - 1, int(dark[-1]) + 3)

    # smoothing before the corner pass suppresses speckle responses that
    # would otherwise out-rank the structural eye corners
    response = harris_response(mean_filter(face, max(1, h // 40)))
    peaks = _nms_peaks(response, 0.01 * float(response.max()), 3)
    band = [p for p in peaks if lo <= p.y <= hi and x0 <= p.x <= x1]
    if len(band) < 2:
        raise NormalizationFailure("fewer than 2 corner points inside the eye band")
    left = min(band, key=lambda p: (p.x, p.y))
    right = max(band, key=lambda p: (p.x, -p.y))
    if abs(right.x - left.x) < 4:
        raise NormalizationFailure("eye-band corners are degenerate (too close)")
    return ReferenceLine(left, right)


def geometric_normalize(
    img: GrayImage, line: ReferenceLine, target: int = CANONICAL_FACE_SIDE
) -> GrayImage:
    """Similarity-warp `img` so `line` lands on the canonical horizontal
    segment; output is exactly target x target, bilinear, edge-replicated."""
    if target < 2:
        raise InvalidInputError("target side must be >= 2")
    for p in (line.p0, line.p1):
        if not (0 <= p.x <= img.width - 1 and 0 <= p.y <= img.height - 1):
            raise InvalidInputError("reference line endpoints must lie inside the image")
    if line.length < 2.0:
        raise NormalizationFailure("reference line is degenerate (length < 2 px)")

    z0 = complex(line.p0.x, line.p0.y)
    z1 = complex(line.p1.x, line.p1.y)
    w0 = complex(LINE_X0_FRAC * target, LINE_Y_FRAC * target)
    w1 = complex(LINE_X1_FRAC * target, LINE_Y_FRAC * target)
    alpha = (w1 - w0) / (z1 - z0)
    beta = w0 - alpha * z0

    xs, ys = np.meshgrid(np.arange(target, dtype=np.float64), np.arange(target, dtype=np.float64))
    src = (xs + 1j * ys - beta) / alpha
    return GrayImage(bilinear_sample(img.pixels, src.real, src.imag))


def bilinear_sample(pixels: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear lookup at float coords; out-of-bounds clamps to the edge."""
    h, w = pixels.shape
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    wx = xs - x0
    wy = ys - y0
    top = pixels[y0, x0] * (1.0 - wx) + pixels[y0, x1] * wx
    bot = pixels[y1, x0] * (1.0 - wx) + pixels[y1, x1] * wx
    return top * (1.0 - wy) + bot * wy


def rotate_about(img: GrayImage, degrees: float, center: Point2D) -> GrayImage:
    """Rotate by `degrees` (counter-clockwise in image coords) about
    `center`, same output size, bilinear with edge replication."""
    theta = math.radians(degrees)
    rot = complex(math.cos(theta), math.sin(theta))
    c = complex(center.x, center.y)
    xs, ys = np.meshgrid(
        np.arange(img.width, dtype=np.float64), np.arange(img.height, dtype=np.float64)
    )
    src = (xs + 1j * ys - c) / rot + c
    return GrayImage(bilinear_sample(img.pixels, src.real, src.imag))


def resize_bilinear(img: GrayImage, out_h: int, out_w: int) -> GrayImage:
    """Plain bilinear resize (corner-aligned sampling grid)."""
    if out_h < 1 or out_w < 1:
        raise InvalidInputError("output size must be positive")
    sy = (img.height - 1) / max(out_h - 1, 1)
    sx = (img.width - 1) / max(out_w - 1, 1)
    xs, ys = np.meshgrid(np.arange(out_w) * sx, np.arange(out_h) * sy)
    return GrayImage(bilinear_sample(img.pixels, xs, ys))
