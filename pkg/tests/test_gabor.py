"""Gabor kernel bank, convolution, and feature assembly."""

import math

import numpy as np
import pytest

from ferpipe.errors import InvalidInputError
from ferpipe.gabor import (
    GaborParams,
    convolve_bank,
    convolve_edge,
    downsample_normalize,
    extract_gabor_features,
    make_bank,
    make_kernel,
)
from ferpipe.imaging import GrayImage


class TestKernel:
    def test_center_value_real(self):
        k = make_kernel(0, 0)
        c = k[10, 10]
        assert c.imag == 0.0
        assert c.real == pytest.approx(0.25 * (1.0 - math.exp(-math.pi**2 / 2.0)), abs=1e-12)
        assert c.real == pytest.approx(0.2482, abs=5e-5)

    def test_frozen_scalar_values(self):
        # independent per-point evaluation of the formula (no vectorization)
        k00 = make_kernel(0, 0)
        assert k00[10, 11] == pytest.approx(
            -0.0014002610973189327 + 0.19470019576785122j, abs=1e-12
        )
        assert k00[11, 10] == pytest.approx(0.19329993467053228 + 0j, abs=1e-12)
        k13 = make_kernel(1, 3)
        assert k13[10 - 1, 10 + 2] == pytest.approx(
            0.018167053377492668 + 0.019426911503877695j, abs=1e-12
        )
        k72 = make_kernel(7, 2)
        assert k72[10 + 4, 10 - 3] == pytest.approx(
            -0.012827236381402032 - 0.0030820301740472344j, abs=1e-12
        )

    def test_template_shape(self):
        assert make_kernel(3, 1).shape == (21, 21)
        small = make_kernel(3, 1, GaborParams(template=9))
        assert small.shape == (9, 9)

    def test_full_bank_has_40_kernels(self):
        bank = make_bank(GaborParams(scales=tuple(range(5))))
        assert len(bank) == 40

    def test_default_bank_16_kernels_ordered(self):
        bank = make_bank()
        assert len(bank) == 16
        keys = [k for k, _ in bank.kernels]
        assert keys == [(u, v) for v in (0, 2) for u in range(8)]

    def test_param_validation(self):
        with pytest.raises(InvalidInputError):
            GaborParams(template=20)
        with pytest.raises(InvalidInputError):
            GaborParams(scales=(5,))
        with pytest.raises(InvalidInputError):
            GaborParams(orientations=(8,))
        with pytest.raises(InvalidInputError):
            GaborParams(sigma=0.0)
        with pytest.raises(InvalidInputError):
            make_kernel(9, 0)


class TestConvolution:
    def test_zero_image(self):
        img = GrayImage(np.zeros((120, 120)))
        for grid in convolve_bank(img, make_bank()):
            assert np.all(grid == 0.0)

    def test_wrong_size_rejected(self):
        with pytest.raises(InvalidInputError):
            convolve_bank(GrayImage(np.zeros((60, 60))), make_bank())

    def test_impulse_reproduces_kernel_magnitude(self):
        px = np.zeros((120, 120))
        px[60, 60] = 1.0
        img = GrayImage(px)
        bank = make_bank()
        grids = convolve_bank(img, bank)
        for ((u, v), kern), grid in zip(bank.kernels, grids):
            patch = grid[60 - 10 : 60 + 11, 60 - 10 : 60 + 11]
            # |psi(-z)| = |psi(z)|, so the reflection question is moot for moduli
            assert np.abs(patch - np.abs(kern)).max() <= 1e-9

    def test_matches_naive_convolution(self):
        # frozen from the nested-loop oracle: rng(9) 8x8 image, 3x3 complex kernel
        rng = np.random.default_rng(9)
        img = rng.random((8, 8))
        kern = rng.random((3, 3)) + 1j * rng.random((3, 3))
        out = convolve_edge(img, kern)
        assert out[0, 0] == pytest.approx(2.0335054261757968 + 2.5439233043923957j, abs=1e-9)
        assert out[3, 5] == pytest.approx(1.5769935486550457 + 2.672475999181314j, abs=1e-9)
        assert out[7, 7] == pytest.approx(1.986862066788197 + 2.8560555235880694j, abs=1e-9)
        assert np.abs(out).sum() == pytest.approx(224.55902932444775, abs=1e-7)

    def test_even_kernel_rejected(self):
        with pytest.raises(InvalidInputError):
            convolve_edge(np.zeros((8, 8)), np.zeros((2, 2)))


class TestDownsampleNormalize:
    def test_constant_grid_zeros(self):
        out = downsample_normalize(np.full((120, 120), 3.7), 30)
        assert out.shape == (30, 30)
        assert np.all(out == 0.0)

    def test_block_means_4x4_to_2x2(self):
        g = np.arange(16, dtype=float).reshape(4, 4)
        b = g.reshape(2, 2, 2, 2).mean(axis=(1, 3))
        # oracle block means: [[2.5, 4.5], [10.5, 12.5]]
        assert b.tolist() == [[2.5, 4.5], [10.5, 12.5]]
        out = downsample_normalize(g, 2)
        expected = (b - b.mean()) / b.std()
        assert np.allclose(out, expected, atol=1e-12)

    def test_moments(self):
        rng = np.random.default_rng(10)
        out = downsample_normalize(rng.random((120, 120)), 30)
        assert abs(out.mean()) <= 1e-9
        assert abs(out.var() - 1.0) <= 1e-6

    def test_non_divisible_rejected(self):
        with pytest.raises(InvalidInputError):
            downsample_normalize(np.zeros((120, 120)), 7)


class TestFeatureVector:
    def test_default_dimension_14400(self):
        img = GrayImage(np.random.default_rng(1).random((120, 120)))
        feats = extract_gabor_features(img)
        assert feats.shape == (14400,)

    def test_full_bank_dimension_36000(self):
        img = GrayImage(np.random.default_rng(1).random((120, 120)))
        feats = extract_gabor_features(img, GaborParams(scales=tuple(range(5))))
        assert feats.shape == (36000,)

    def test_zero_image_zero_vector(self):
        feats = extract_gabor_features(GrayImage(np.zeros((120, 120))))
        assert np.all(feats == 0.0)

    def test_deterministic(self):
        img = GrayImage(np.random.default_rng(2).random((120, 120)))
        a = extract_gabor_features(img)
        b = extract_gabor_features(img)
        assert np.array_equal(a, b)

    def test_magnitudes_non_negative(self):
        img = GrayImage(np.random.default_rng(3).random((120, 120)))
        for grid in convolve_bank(img, make_bank()):
            assert grid.min() >= 0.0
