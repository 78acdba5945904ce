"""Shared fixtures and hypothesis configuration."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from voxelaug import LabelMap, Sample, Volume, affine_for

settings.register_profile(
    "suite",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
    print_blob=True,
)
settings.load_profile("suite")


def make_volume(dims=(12, 13, 11), seed=0, spacing=(1.0, 1.0, 1.0), orientation="PIR",
                lo=0.0, hi=1000.0) -> Volume:
    """A random float32 volume with controlled geometry."""
    rng = np.random.default_rng(seed)
    arr = rng.uniform(lo, hi, size=dims).astype(np.float32)
    return Volume(arr, affine_for(spacing, orientation))


def make_labels(dims=(12, 13, 11), seed=0, spacing=(1.0, 1.0, 1.0), orientation="PIR",
                classes=(0, 1, 2, 3)) -> LabelMap:
    rng = np.random.default_rng(seed + 1)
    arr = rng.choice(np.asarray(classes, dtype=np.uint8), size=dims)
    return LabelMap(arr, affine_for(spacing, orientation))


def make_sample(dims=(12, 13, 11), seed=0, spacing=(1.0, 1.0, 1.0), orientation="PIR") -> Sample:
    return Sample(
        image=make_volume(dims, seed, spacing, orientation),
        labels=make_labels(dims, seed, spacing, orientation),
    )


@pytest.fixture
def small_sample() -> Sample:
    return make_sample()
