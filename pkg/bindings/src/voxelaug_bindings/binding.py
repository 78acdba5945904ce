"""In-memory bridge between array-based data loaders and the voxelaug engine.

Training loaders hold samples as plain arrays; the engine speaks
``Volume``/``LabelMap``.  This module is the adapter: :class:`ArrayBatchView`
pins the array contract (float32 image, uint8 labels, 3D, C-contiguous,
equal shapes), :func:`apply` runs a pipeline config over one view, and
:class:`LoaderTransform` packages the same call as a mapping-to-mapping
transform that drops into dict-based loader pipelines without glue code.

Hand-off into the engine is zero-copy: a valid view's arrays are wrapped in
place and the engine treats its inputs as immutable, so caller-owned memory
is never written.  Results are always freshly allocated arrays — never
aliases of caller memory — so callers may mutate outputs freely.  Every call
is a pure function of (arrays, config, seed, sample_id, epoch); calls share
no mutable state and are safe to issue concurrently from multiple loader
workers.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from voxelaug import (
    LabelMap,
    PipelineConfig,
    Sample,
    Volume,
    affine_for,
    apply_pipeline,
    load_config,
)

__all__ = ["ArrayBatchView", "LoaderTransform", "apply"]


def _check_array(name: str, arr, dtype: np.dtype) -> None:
    if not isinstance(arr, np.ndarray):
        raise TypeError(f"{name} must be a numpy ndarray, got {type(arr).__name__}")
    if arr.dtype != dtype:
        raise ValueError(f"{name} must have dtype {dtype.name}, got {arr.dtype.name}")
    if arr.ndim != 3:
        raise ValueError(f"{name} must be 3D, got {arr.ndim} dimension(s)")
    if not arr.flags.c_contiguous:
        raise ValueError(f"{name} must be C-contiguous")


@dataclass(frozen=True)
class ArrayBatchView:
    """One loader sample as raw arrays plus minimal geometry.

    ``image`` must be float32, 3D, C-contiguous; ``labels`` uint8 with the
    same shape and layout.  ``spacing``/``orientation`` describe the grid and
    default to 1 mm isotropic, ``"PIR"``.  Invalid arguments raise
    ``TypeError``/``ValueError`` at construction, never the engine's
    data-error types.
    """

    image: np.ndarray
    labels: np.ndarray
    spacing: tuple[float, float, float] = (1.0, 1.0, 1.0)
    orientation: str = "PIR"

    def __post_init__(self) -> None:
        _check_array("image", self.image, np.dtype(np.float32))
        _check_array("labels", self.labels, np.dtype(np.uint8))
        if self.image.shape != self.labels.shape:
            raise ValueError(
                f"image shape {self.image.shape} != labels shape {self.labels.shape}"
            )
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        # validates both spacing and the orientation code eagerly
        affine_for(self.spacing, self.orientation)

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(int(d) for d in self.image.shape)


def _as_sample(view: ArrayBatchView) -> Sample:
    """Wrap a view for the engine without copying.

    The engine's constructors keep an already-contiguous array of the right
    dtype as-is, so a valid view is handed over zero-copy; anything else
    would have been rejected at view construction.
    """
    image = Volume(view.image, spacing=view.spacing, orientation=view.orientation)
    labels = LabelMap(view.labels, spacing=view.spacing, orientation=view.orientation)
    return Sample(image=image, labels=labels)


def _run(view: ArrayBatchView, cfg: PipelineConfig, sample_id: int, epoch: int) -> ArrayBatchView:
    out = apply_pipeline(_as_sample(view), cfg, sample_id=sample_id, epoch=epoch)
    image = out.image.voxels
    labels = out.labels.voxels
    # a transform that never fires hands back the input arrays; copy so the
    # result never aliases caller memory
    if image is view.image:
        image = image.copy()
    if labels is view.labels:
        labels = labels.copy()
    return ArrayBatchView(
        image=image, labels=labels, spacing=view.spacing, orientation=view.orientation
    )


def apply(view: ArrayBatchView, config_path, seed: int, sample_id: int = 0, epoch: int = 0) -> ArrayBatchView:
    """Run the pipeline described by ``config_path`` over one view.

    ``seed`` overrides the config's ``global_seed`` — the same semantics as
    the CLI's ``--seed`` — so this call and a ``voxelaug pipeline`` run with
    identical (arrays, config, seed, sample_id, epoch) produce identical
    arrays, bit for bit.  Input arrays are never mutated.  Config problems
    raise the engine's own error types with their messages intact.
    """
    if not isinstance(view, ArrayBatchView):
        raise TypeError(f"view must be an ArrayBatchView, got {type(view).__name__}")
    cfg = replace(load_config(config_path), global_seed=operator.index(seed))
    return _run(view, cfg, operator.index(sample_id), operator.index(epoch))


class LoaderTransform:
    """Mapping-in/mapping-out wrapper for dict-based loader pipelines.

    The config is parsed once at construction; instances hold no mutable
    state and may be shared across loader workers.  ``__call__`` expects a
    mapping carrying the image and label arrays (keys configurable, default
    ``"image"``/``"label"``), reads optional per-item ``"sample_id"`` and
    ``"epoch"`` entries (default 0), and returns a new ``dict`` with the
    augmented arrays under the same keys and every other entry untouched.
    """

    def __init__(
        self,
        config_path,
        seed: int,
        *,
        image_key: str = "image",
        label_key: str = "label",
        spacing: tuple[float, float, float] = (1.0, 1.0, 1.0),
        orientation: str = "PIR",
    ) -> None:
        self._cfg = replace(load_config(config_path), global_seed=operator.index(seed))
        self._image_key = image_key
        self._label_key = label_key
        self._spacing = tuple(float(s) for s in spacing)
        self._orientation = orientation
        affine_for(self._spacing, self._orientation)

    def __call__(self, item: Mapping) -> dict:
        if not isinstance(item, Mapping):
            raise TypeError(f"loader item must be a mapping, got {type(item).__name__}")
        missing = [k for k in (self._image_key, self._label_key) if k not in item]
        if missing:
            raise ValueError(f"loader item is missing entries: {missing}")
        view = ArrayBatchView(
            image=item[self._image_key],
            labels=item[self._label_key],
            spacing=self._spacing,
            orientation=self._orientation,
        )
        out = _run(
            view,
            self._cfg,
            operator.index(item.get("sample_id", 0)),
            operator.index(item.get("epoch", 0)),
        )
        result = dict(item)
        result[self._image_key] = out.image
        result[self._label_key] = out.labels
        return result
