"""Gabor kernel bank, convolution, and the downsampled texture features.

Kernels follow

    psi_{u,v}(z) = (|k|^2 / sigma^2) * exp(-|k|^2 |z|^2 / sigma^2)
                   * [exp(i k.z) - exp(-sigma^2 / 2)]

with center frequency k_{u,v} = (k_v cos phi_u, k_v sin phi_u),
k_v = k_max / lambda^v, phi_u = pi*u/8. The bracketed term subtracts the
DC response so kernels ignore constant offsets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .errors import InvalidInputError
from .imaging import GrayImage

CANONICAL_SIDE = 120


@dataclass(frozen=True)
class GaborParams:
    orientations: tuple = tuple(range(8))
    scales: tuple = (0, 2)
    sigma: float = math.pi
    k_max: float = math.pi / 2.0
    lam: float = math.sqrt(2.0)
    template: int = 21
    downsample: int = 30

    def __post_init__(self):
        object.__setattr__(self, "orientations", tuple(self.orientations))
        object.__setattr__(self, "scales", tuple(self.scales))
        if not self.orientations or not set(self.orientations) <= set(range(8)):
            raise InvalidInputError("orientations must be a non-empty subset of 0..7")
        if not self.scales or not set(self.scales) <= set(range(5)):
            raise InvalidInputError("scales must be a non-empty subset of 0..4")
        if self.template < 3 or self.template % 2 == 0:
            raise InvalidInputError("template side must be odd and >= 3")
        if self.downsample < 1:
            raise InvalidInputError("downsample side must be >= 1")
        for name in ("sigma", "k_max", "lam"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidInputError(f"{name} must be finite and positive")


@dataclass(frozen=True)
class GaborBank:
    params: GaborParams
    kernels: tuple = field(default=())  # ((u, v), complex grid) pairs

    def __len__(self):
        return len(self.kernels)


def make_kernel(u: int, v: int, params: GaborParams = GaborParams()) -> np.ndarray:
    """Complex template x template kernel evaluated at integer offsets."""
    if u not in range(8) or v not in range(5):
        raise InvalidInputError("u must be in 0..7 and v in 0..4")
    k_v = params.k_max / params.lam**v
    phi = math.pi * u / 8.0
    kx, ky = k_v * math.cos(phi), k_v * math.sin(phi)
    knorm2 = k_v * k_v
    half = params.template // 2
    ys, xs = np.mgrid[-half : half + 1, -half : half + 1].astype(np.float64)
    envelope = (knorm2 / params.sigma**2) * np.exp(
        -knorm2 * (xs * xs + ys * ys) / params.sigma**2
    )
    carrier = np.exp(1j * (kx * xs + ky * ys)) - math.exp(-params.sigma**2 / 2.0)
    return envelope * carrier


def make_bank(params: GaborParams = GaborParams()) -> GaborBank:
    """All kernels in fixed (scale ascending, orientation ascending) order."""
    kernels = []
    for v in sorted(params.scales):
        for u in sorted(params.orientations):
            kernels.append(((u, v), make_kernel(u, v, params)))
    return GaborBank(params, tuple(kernels))


def convolve_edge(pixels: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """True 2D convolution with edge-replicated borders, same-size output."""
    kh, kw = kernel.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise InvalidInputError("kernel sides must be odd")
    padded = np.pad(pixels, ((kh // 2, kh // 2), (kw // 2, kw // 2)), mode="edge")
    return fftconvolve(padded, kernel, mode="valid")


def convolve_bank(img: GrayImage, bank: GaborBank) -> list[np.ndarray]:
    """Per-kernel complex-modulus grids for the normalized face."""
    if img.height != CANONICAL_SIDE or img.width != CANONICAL_SIDE:
        raise InvalidInputError(
            f"expected {CANONICAL_SIDE}x{CANONICAL_SIDE} face, got {img.height}x{img.width}"
        )
    return [np.abs(convolve_edge(img.pixels, kern)) for _, kern in bank.kernels]


def downsample_normalize(grid: np.ndarray, out_side: int) -> np.ndarray:
    """Block-average to out_side x out_side, then zero-mean unit-variance.

    Population variance; a degenerate (constant) grid maps to all zeros.
    """
    h, w = grid.shape
    if h != w:
        raise InvalidInputError("magnitude grid must be square")
    if out_side < 1 or h % out_side != 0:
        raise InvalidInputError(f"output side {out_side} must divide grid side {h}")
    b = h // out_side
    blocks = grid.reshape(out_side, b, out_side, b).mean(axis=(1, 3))
    mu = blocks.mean()
    var = blocks.var()
    if var <= 1e-24 * (1.0 + mu * mu):
        return np.zeros_like(blocks)
    return (blocks - mu) / math.sqrt(var)


def extract_gabor_features(img: GrayImage, params: GaborParams = GaborParams()) -> np.ndarray:
    """Concatenated normalized blocks over the whole bank (1D float64)."""
    bank = make_bank(params)
    grids = convolve_bank(img, bank)
    parts = [downsample_normalize(g, params.downsample) for g in grids]
    return np.concatenate([p.ravel() for p in parts])
