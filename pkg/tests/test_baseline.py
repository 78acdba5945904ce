"""Geometric and standard intensity transforms."""

from __future__ import annotations

import numpy as np
import pytest

from voxelaug import RngStream, Sample
from voxelaug.baseline import (
    BlurParams,
    BrightnessContrastParams,
    GammaParams,
    LowResParams,
    NoiseParams,
    SpatialParams,
    brightness_contrast,
    gamma_correction,
    gaussian_blur,
    gaussian_noise,
    random_spatial,
    simulate_low_resolution,
)
from conftest import make_sample, make_volume


def _stream(i=0):
    return RngStream(1234, i)


# ---------------------------------------------------------------------------
# parameter validation


def test_param_validation():
    with pytest.raises(ValueError):
        SpatialParams(rotation_prob=1.5)
    with pytest.raises(ValueError):
        SpatialParams(scale_range=(1.4, 0.7))
    with pytest.raises(ValueError):
        NoiseParams(sigma_range=(-0.1, 0.1))
    with pytest.raises(ValueError):
        LowResParams(factor_range=(0.5, 2.0))
    with pytest.raises(ValueError):
        GammaParams(gamma_range=(0.0, 1.5))
    with pytest.raises(ValueError):
        BlurParams(sigma_range=(0.5, 0.1))
    with pytest.raises(ValueError):
        BrightnessContrastParams(contrast_range=(2.0, 1.0))


# ---------------------------------------------------------------------------
# random_spatial


def test_spatial_all_gates_closed_is_identity():
    s = make_sample((8, 9, 10))
    params = SpatialParams(rotation_prob=0.0, scale_prob=0.0, flip_prob=(0.0, 0.0, 0.0))
    out = random_spatial(s, _stream(), params)
    assert out is s


def test_spatial_pure_flip_is_exact_involution():
    s = make_sample((6, 7, 8))
    params = SpatialParams(rotation_prob=0.0, scale_prob=0.0, flip_prob=(1.0, 1.0, 1.0))
    once = random_spatial(s, _stream(1), params)
    assert not np.array_equal(once.image.voxels, s.image.voxels)
    twice = random_spatial(once, _stream(2), params)
    assert np.array_equal(twice.image.voxels, s.image.voxels)
    assert np.array_equal(twice.labels.voxels, s.labels.voxels)


def test_spatial_flip_matches_numpy():
    s = make_sample((5, 6, 7))
    params = SpatialParams(rotation_prob=0.0, scale_prob=0.0, flip_prob=(1.0, 0.0, 0.0))
    out = random_spatial(s, _stream(3), params)
    assert np.array_equal(out.image.voxels, np.flip(s.image.voxels, axis=0))
    assert np.array_equal(out.labels.voxels, np.flip(s.labels.voxels, axis=0))


def test_spatial_preserves_geometry_and_labels_values():
    s = make_sample((10, 11, 12))
    params = SpatialParams(rotation_prob=1.0, scale_prob=1.0, flip_prob=(0.5, 0.5, 0.5))
    out = random_spatial(s, _stream(4), params)
    assert out.image.dims == s.image.dims
    assert np.array_equal(out.image.affine, s.image.affine)
    assert set(np.unique(out.labels.voxels)) <= set(np.unique(s.labels.voxels)) | {0}
    assert out.image.voxels.min() >= s.image.voxels.min() - 1e-3
    assert out.image.voxels.max() <= s.image.voxels.max() + 1e-3


def test_spatial_determinism():
    s = make_sample((9, 9, 9))
    params = SpatialParams(rotation_prob=1.0, scale_prob=1.0, flip_prob=(0.5, 0.5, 0.5))
    a = random_spatial(s, _stream(7), params)
    b = random_spatial(s, _stream(7), params)
    assert np.array_equal(a.image.voxels, b.image.voxels)
    assert np.array_equal(a.labels.voxels, b.labels.voxels)


def test_spatial_rotation_moves_content():
    s = make_sample((12, 12, 12))
    params = SpatialParams(
        rotation_prob=1.0, max_angle_deg=(25.0, 25.0, 25.0), scale_prob=0.0,
        flip_prob=(0.0, 0.0, 0.0),
    )
    out = random_spatial(s, _stream(8), params)
    assert not np.array_equal(out.image.voxels, s.image.voxels)


def test_spatial_fill_is_image_minimum():
    s = make_sample((10, 10, 10))
    params = SpatialParams(
        rotation_prob=0.0, scale_prob=1.0, scale_range=(0.5, 0.5),  # zoom out 2×
        flip_prob=(0.0, 0.0, 0.0),
    )
    out = random_spatial(s, _stream(9), params)
    # zooming out shrinks the content, so the output corners read source
    # coordinates outside the grid: image takes its minimum, labels take 0
    assert out.image.voxels[0, 0, 0] == s.image.voxels.min()
    assert out.labels.voxels[0, 0, 0] == 0
    # the shrunken content itself survives in the interior
    assert (out.image.voxels != s.image.voxels.min()).any()


# ---------------------------------------------------------------------------
# intensity transforms


def test_noise_zero_sigma_identity():
    v = make_volume()
    out = gaussian_noise(v, _stream(), sigma_range=(0.0, 0.0))
    assert out is v


def test_noise_statistics():
    v = make_volume((24, 24, 24), lo=0.0, hi=0.0)  # zero image isolates the noise
    out = gaussian_noise(v, _stream(1), sigma_range=(0.5, 0.5))
    assert abs(float(out.voxels.std()) - 0.5) < 0.02
    assert abs(float(out.voxels.mean())) < 0.02


def test_noise_draw_order_sigma_then_field():
    v = make_volume((4, 4, 4))
    rng = _stream(2)
    sigma = rng.uniform(0.1, 0.3)
    field = rng.standard_normal((4, 4, 4), dtype=np.float32)
    expected = v.voxels + np.float32(sigma) * field
    out = gaussian_noise(v, _stream(2), sigma_range=(0.1, 0.3))
    assert np.array_equal(out.voxels, expected)


def test_blur_reduces_variance_keeps_mean():
    v = make_volume((16, 16, 16), seed=5)
    out = gaussian_blur(v, _stream(3), sigma_range=(1.0, 1.0))
    assert float(out.voxels.std()) < float(v.voxels.std())
    assert abs(float(out.voxels.mean()) - float(v.voxels.mean())) < 2.0


def test_lowres_identity_factor():
    v = make_volume()
    out = simulate_low_resolution(v, _stream(4), factor_range=(1.0, 1.0))
    assert out is v


def test_lowres_blocks_values_from_input():
    v = make_volume((12, 12, 12), seed=6)
    out = simulate_low_resolution(v, _stream(5), factor_range=(2.0, 2.0))
    assert out.dims == v.dims
    # downsample keeps a subset of original values; upsample interpolates
    # within their hull
    assert out.voxels.min() >= v.voxels.min() - 1e-3
    assert out.voxels.max() <= v.voxels.max() + 1e-3
    assert not np.array_equal(out.voxels, v.voxels)


def test_brightness_contrast_formula():
    v = make_volume((6, 6, 6), seed=7)
    rng = _stream(6)
    b = rng.uniform(-0.25, 0.25)
    c = rng.uniform(0.75, 1.25)
    arr = v.voxels
    mean = float(arr.mean(dtype=np.float64))
    vr = float(arr.max()) - float(arr.min())
    expected = (arr - np.float32(mean)) * np.float32(c) + np.float32(mean + b * vr)
    out = brightness_contrast(v, _stream(6))
    assert np.array_equal(out.voxels, expected)


def test_brightness_shifts_mean():
    v = make_volume((10, 10, 10), lo=0.0, hi=100.0)
    out = brightness_contrast(
        v, _stream(8), brightness_range=(0.5, 0.5), contrast_range=(1.0, 1.0)
    )
    vr = float(v.voxels.max() - v.voxels.min())
    assert abs(float(out.voxels.mean() - v.voxels.mean()) - 0.5 * vr) < 0.1


def test_gamma_monotone_and_range_preserving():
    v = make_volume((8, 8, 8), seed=9)
    out = gamma_correction(v, _stream(9))
    flat_in = v.voxels.ravel()
    flat_out = out.voxels.ravel()
    order = np.argsort(flat_in, kind="stable")
    assert np.all(np.diff(flat_out[order]) >= 0.0)
    assert np.isclose(float(out.voxels.min()), float(v.voxels.min()), atol=1e-3)
    assert np.isclose(float(out.voxels.max()), float(v.voxels.max()), atol=1e-3)


def test_gamma_constant_volume_identity():
    v = make_volume(lo=5.0, hi=5.0)
    out = gamma_correction(v, _stream(10))
    assert out is v
