"""Deterministic synthetic spine-like samples for benchmarks and smoke tests.

The image is smooth correlated "tissue" (coarse Gaussian noise upsampled
trilinearly) on a CT-like intensity scale, with three labelled structures —
a large blob (class 1), a medium blob (class 2), and an elongated tube
(class 3) — whose intensities are offset from the background so intensity
and label statistics interact the way real anatomy does.  Same dims + seed
always yields the same sample, bit for bit.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .rng import RngStream, derive_substream
from .volume import LabelMap, Sample, Volume, affine_for

_SYNTH_STREAM = derive_substream(0x53594E54)  # domain tag for workload synthesis

_CLASS_OFFSETS = {1: 220.0, 2: 130.0, 3: -140.0}


def _ellipsoid_mask(dims: tuple[int, int, int], center: np.ndarray, radii: np.ndarray) -> np.ndarray:
    axes = np.ix_(*(np.arange(n, dtype=np.float64) for n in dims))
    q = np.zeros(dims, dtype=np.float64)
    for ax in range(3):
        q = q + ((axes[ax] - center[ax]) / radii[ax]) ** 2
    return q <= 1.0


def make_synthetic_sample(
    dims: tuple[int, int, int] = (128, 128, 128),
    seed: int = 0,
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0),
    orientation: str = "PIR",
) -> Sample:
    """Build a reproducible image+labels pair of the given shape."""
    dims = tuple(int(n) for n in dims)
    if len(dims) != 3 or any(n < 1 for n in dims):
        raise ValueError(f"dims must be three positive integers, got {dims!r}")
    rng = RngStream(seed, _SYNTH_STREAM)

    coarse_dims = tuple(max(2, n // 8) for n in dims)
    coarse = rng.standard_normal(coarse_dims, dtype=np.float32)
    scales = tuple(
        (c - 1) / (n - 1) if n > 1 else 1.0 for c, n in zip(coarse_dims, dims)
    )
    field = kernels.scale_resample(coarse, dims, scales, "trilinear")
    lo, hi = float(field.min()), float(field.max())
    if hi > lo:
        field = (field - lo) / (hi - lo)
    else:
        field = np.zeros(dims, dtype=np.float32)

    image = 150.0 + 500.0 * field.astype(np.float64)
    noise = rng.standard_normal(dims, dtype=np.float32).astype(np.float64)
    image += 12.0 * noise

    size = np.asarray(dims, dtype=np.float64)
    labels = np.zeros(dims, dtype=np.uint8)

    # Class 1: large central blob.
    c1 = np.array([rng.uniform(0.38, 0.62) for _ in range(3)]) * (size - 1)
    r1 = np.maximum(np.array([rng.uniform(0.20, 0.28) for _ in range(3)]) * size, 1.01)
    # Class 2: medium blob, off-centre.
    c2 = np.array([rng.uniform(0.25, 0.42) for _ in range(3)]) * (size - 1)
    r2 = np.maximum(np.array([rng.uniform(0.10, 0.16) for _ in range(3)]) * size, 1.01)
    # Class 3: thin tube elongated along the second axis.
    c3 = np.array([rng.uniform(0.55, 0.72) for _ in range(3)]) * (size - 1)
    r3 = np.maximum(np.array([rng.uniform(0.04, 0.07) for _ in range(3)]) * size, 1.01)
    r3[1] = min(2.5 * r3[1], 0.45 * size[1])

    labels[_ellipsoid_mask(dims, c1, r1)] = 1
    labels[_ellipsoid_mask(dims, c2, r2)] = 2
    labels[_ellipsoid_mask(dims, c3, r3)] = 3

    for cls, offset in _CLASS_OFFSETS.items():
        image[labels == cls] += offset

    affine = affine_for(spacing, orientation)
    return Sample(
        image=Volume(image.astype(np.float32), affine.copy()),
        labels=LabelMap(labels, affine.copy()),
    )
