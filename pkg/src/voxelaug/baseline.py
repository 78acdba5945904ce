"""Baseline augmentations: geometric warps and classic intensity corruptions.

These are the retained defaults of a standard training setup — random
rotation/flip/scale, Gaussian noise and blur, simulated low resolution,
brightness/contrast, gamma — expressed as pure seeded functions.  Every
intensity transform touches only the image; the geometric transform applies
one shared spatial map to image (trilinear) and labels (nearest) without
changing dims, spacing, or affine (content moves within the same grid).

Draw order within each transform is part of its reproducibility contract and
is documented per function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from ._checks import check_interval, check_prob, check_triple
from .rng import RngStream
from .volume import Sample, Volume


@dataclass(frozen=True)
class SpatialParams:
    """Parameters of the shared geometric transform.

    Rotation and flip gates are evaluated per axis; scaling is isotropic.
    """

    rotation_prob: float = 0.2
    max_angle_deg: tuple[float, float, float] = (30.0, 30.0, 30.0)
    flip_prob: tuple[float, float, float] = (0.5, 0.5, 0.5)
    scale_prob: float = 0.2
    scale_range: tuple[float, float] = (0.7, 1.4)

    def __post_init__(self) -> None:
        check_prob("rotation_prob", self.rotation_prob)
        check_prob("scale_prob", self.scale_prob)
        object.__setattr__(
            self, "max_angle_deg", check_triple("max_angle_deg", self.max_angle_deg, nonnegative=True)
        )
        object.__setattr__(self, "flip_prob", check_triple("flip_prob", self.flip_prob, probs=True))
        object.__setattr__(
            self, "scale_range", check_interval("scale_range", self.scale_range, positive=True)
        )


@dataclass(frozen=True)
class NoiseParams:
    sigma_range: tuple[float, float] = (0.0, 0.1)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "sigma_range", check_interval("sigma_range", self.sigma_range, minimum=0.0)
        )


@dataclass(frozen=True)
class BlurParams:
    sigma_range: tuple[float, float] = (0.5, 1.0)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "sigma_range", check_interval("sigma_range", self.sigma_range, minimum=0.0)
        )


@dataclass(frozen=True)
class LowResParams:
    factor_range: tuple[float, float] = (1.0, 2.0)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "factor_range", check_interval("factor_range", self.factor_range, minimum=1.0)
        )


@dataclass(frozen=True)
class BrightnessContrastParams:
    brightness_range: tuple[float, float] = (-0.25, 0.25)
    contrast_range: tuple[float, float] = (0.75, 1.25)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "brightness_range", check_interval("brightness_range", self.brightness_range)
        )
        object.__setattr__(
            self, "contrast_range", check_interval("contrast_range", self.contrast_range)
        )


@dataclass(frozen=True)
class GammaParams:
    gamma_range: tuple[float, float] = (0.7, 1.5)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "gamma_range", check_interval("gamma_range", self.gamma_range, positive=True)
        )


@dataclass(frozen=True)
class IntensityBaselineParams:
    """Grouped defaults for the five baseline intensity transforms, with the
    per-transform application probabilities used by the default pipeline."""

    noise_sigma_range: tuple[float, float] = (0.0, 0.1)
    noise_prob: float = 0.1
    blur_sigma_range: tuple[float, float] = (0.5, 1.0)
    blur_prob: float = 0.2
    lowres_factor_range: tuple[float, float] = (1.0, 2.0)
    lowres_prob: float = 0.25
    brightness_range: tuple[float, float] = (-0.25, 0.25)
    contrast_range: tuple[float, float] = (0.75, 1.25)
    brightness_contrast_prob: float = 0.15
    gamma_range: tuple[float, float] = (0.7, 1.5)
    gamma_prob: float = 0.3

    def __post_init__(self) -> None:
        check_interval("noise_sigma_range", self.noise_sigma_range, minimum=0.0)
        check_interval("blur_sigma_range", self.blur_sigma_range, minimum=0.0)
        check_interval("lowres_factor_range", self.lowres_factor_range, minimum=1.0)
        check_interval("brightness_range", self.brightness_range)
        check_interval("contrast_range", self.contrast_range)
        check_interval("gamma_range", self.gamma_range, positive=True)
        for nm in ("noise_prob", "blur_prob", "lowres_prob", "brightness_contrast_prob", "gamma_prob"):
            check_prob(nm, getattr(self, nm))


# ---------------------------------------------------------------------------
# geometric


def _rotation_matrix(angles_rad) -> np.ndarray:
    a0, a1, a2 = angles_rad
    c, s = math.cos(a0), math.sin(a0)
    r0 = np.array([[1, 0, 0], [0, c, -s], [0, s, c]], dtype=np.float64)
    c, s = math.cos(a1), math.sin(a1)
    r1 = np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]], dtype=np.float64)
    c, s = math.cos(a2), math.sin(a2)
    r2 = np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]], dtype=np.float64)
    return r0 @ r1 @ r2


def random_spatial(sample: Sample, rng: RngStream, params: SpatialParams = SpatialParams()) -> Sample:
    """Apply one sampled spatial map (rotation ∘ scale ∘ flips, about the grid
    center) to image and labels alike.

    Draw order: per-axis rotation gate then angle (axes 0,1,2), scale gate
    then factor, per-axis flip gates.  Out-of-grid image voxels take the image
    minimum; labels take 0.  Dims, spacing, and affine are unchanged — the
    content is resampled within the same grid.
    """
    angles = [0.0, 0.0, 0.0]
    for ax in range(3):
        if rng.random() < params.rotation_prob:
            m = params.max_angle_deg[ax]
            angles[ax] = math.radians(rng.uniform(-m, m))
    scale = 1.0
    if rng.random() < params.scale_prob:
        scale = rng.uniform(*params.scale_range)
    flips = [rng.random() < params.flip_prob[ax] for ax in range(3)]

    rotated = any(a != 0.0 for a in angles)
    scaled = scale != 1.0
    if not rotated and not scaled:
        if not any(flips):
            return sample
        # pure flips: exact (and an exact involution), no interpolation needed
        axes = tuple(ax for ax, f in enumerate(flips) if f)
        img = np.ascontiguousarray(np.flip(sample.image.voxels, axis=axes))
        lab = np.ascontiguousarray(np.flip(sample.labels.voxels, axis=axes))
        return Sample(sample.image.with_voxels(img), sample.labels.with_voxels(lab))

    forward = _rotation_matrix(angles) * scale
    for ax, f in enumerate(flips):
        if f:
            forward[:, ax] *= -1.0
    matrix = np.linalg.inv(forward)
    center = (np.asarray(sample.dims, dtype=np.float64) - 1.0) / 2.0
    offset = center - matrix @ center
    fill = float(sample.image.voxels.min())
    out_img, out_lab = kernels.affine_pull(
        sample.image.voxels, sample.labels.voxels, matrix, offset, fill
    )
    return Sample(
        sample.image.with_voxels(out_img),
        sample.labels.with_voxels(out_lab),
    )


# ---------------------------------------------------------------------------
# intensity


def gaussian_noise(vol: Volume, rng: RngStream, sigma_range=(0.0, 0.1)) -> Volume:
    """Add i.i.d. zero-mean Gaussian noise with σ drawn from ``sigma_range``.

    Draw order: σ, then the noise field.  σ = 0 returns the input unchanged.
    """
    lo, hi = check_interval("sigma_range", sigma_range, minimum=0.0)
    sigma = rng.uniform(lo, hi)
    if sigma == 0.0:
        return vol
    noise = rng.standard_normal(vol.dims, dtype=np.float32)
    return vol.with_voxels(vol.voxels + np.float32(sigma) * noise)


def gaussian_blur(vol: Volume, rng: RngStream, sigma_range=(0.5, 1.0)) -> Volume:
    """Separable Gaussian blur with an independently sampled σ per axis
    (drawn in axis order); borders are edge-replicated."""
    lo, hi = check_interval("sigma_range", sigma_range, minimum=0.0)
    sigmas = [rng.uniform(lo, hi) for _ in range(3)]
    if all(s == 0.0 for s in sigmas):
        return vol
    return vol.with_voxels(kernels.gaussian_blur3(vol.voxels, sigmas))


def simulate_low_resolution(vol: Volume, rng: RngStream, factor_range=(1.0, 2.0)) -> Volume:
    """Degrade resolution: nearest-downsample by a sampled factor, then
    trilinear-upsample back to the original dims."""
    lo, hi = check_interval("factor_range", factor_range, minimum=1.0)
    factor = rng.uniform(lo, hi)
    if factor == 1.0:
        return vol
    dims = vol.dims
    down_dims = tuple(max(1, int(np.floor(d / factor + 0.5))) for d in dims)
    coarse = kernels.scale_resample(vol.voxels, down_dims, (factor,) * 3, "nearest")
    restored = kernels.scale_resample(coarse, dims, (1.0 / factor,) * 3, "trilinear")
    return vol.with_voxels(restored)


def brightness_contrast(
    vol: Volume, rng: RngStream, brightness_range=(-0.25, 0.25), contrast_range=(0.75, 1.25)
) -> Volume:
    """v' = mean + c·(v − mean) + b·(max − min); b then c are drawn."""
    b_lo, b_hi = check_interval("brightness_range", brightness_range)
    c_lo, c_hi = check_interval("contrast_range", contrast_range)
    b = rng.uniform(b_lo, b_hi)
    c = rng.uniform(c_lo, c_hi)
    arr = vol.voxels
    mean = float(arr.mean(dtype=np.float64))
    value_range = float(arr.max()) - float(arr.min())
    out = (arr - np.float32(mean)) * np.float32(c) + np.float32(mean + b * value_range)
    return vol.with_voxels(out)


def gamma_correction(vol: Volume, rng: RngStream, gamma_range=(0.7, 1.5)) -> Volume:
    """Normalize to [0,1], raise to a sampled γ, restore the original range."""
    lo, hi = check_interval("gamma_range", gamma_range, positive=True)
    gamma = rng.uniform(lo, hi)
    arr = vol.voxels
    mn = float(arr.min())
    mx = float(arr.max())
    if mx == mn:
        return vol
    span = np.float32(mx - mn)
    x = (arr - np.float32(mn)) / span
    out = np.power(x, np.float32(gamma)) * span + np.float32(mn)
    return vol.with_voxels(out)
