"""Volumes, label maps, and the geometry operations that prepare them.

A :class:`Volume` is a dense 3D float32 grid plus a 4×4 voxel-to-world affine
(millimetres).  A :class:`LabelMap` is the uint8 counterpart carrying a
segmentation.  A :class:`Sample` pairs the two on identical geometry and is
the unit the augmentation pipeline consumes.

Orientation codes use the "axis points toward letter" convention: one letter
per grid axis from {R,L,A,P,S,I}, e.g. ``"PIR"`` means axis 0 points
posterior, axis 1 inferior, axis 2 right.  All operations here are pure:
inputs are treated as immutable and results are new objects.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import kernels
from .errors import GeometryError, MappingError

# world axis index -> (letter for negative direction, letter for positive)
_AXIS_LETTERS = (("L", "R"), ("P", "A"), ("I", "S"))
# letter -> (world axis index, direction sign)
_LETTER_TO_AXIS = {
    "R": (0, 1.0),
    "L": (0, -1.0),
    "A": (1, 1.0),
    "P": (1, -1.0),
    "S": (2, 1.0),
    "I": (2, -1.0),
}

# relative threshold under which two affine column components are considered
# tied, making the anatomical letter assignment ambiguous
_OBLIQUE_TIE_RTOL = 1e-6


def validate_orientation_code(code: str) -> str:
    """Return the upper-cased code, or raise ValueError if it is not a valid
    orthogonal anatomical code (three letters, three distinct world axes)."""
    if not isinstance(code, str) or len(code) != 3:
        raise ValueError(f"orientation code must be 3 letters, got {code!r}")
    code = code.upper()
    axes = []
    for ch in code:
        if ch not in _LETTER_TO_AXIS:
            raise ValueError(f"invalid orientation letter {ch!r} in {code!r}")
        axes.append(_LETTER_TO_AXIS[ch][0])
    if len(set(axes)) != 3:
        raise ValueError(f"orientation code {code!r} repeats a world axis")
    return code


def affine_for(spacing, orientation: str = "RAS", origin=(0.0, 0.0, 0.0)) -> np.ndarray:
    """Build a voxel-to-world affine from spacing, orientation code, origin."""
    code = validate_orientation_code(orientation)
    sp = [float(s) for s in spacing]
    if len(sp) != 3 or any(s <= 0 for s in sp):
        raise ValueError(f"spacing must be 3 positive reals, got {spacing!r}")
    aff = np.eye(4, dtype=np.float64)
    aff[:3, :3] = 0.0
    for j, ch in enumerate(code):
        axis, sign = _LETTER_TO_AXIS[ch]
        aff[axis, j] = sign * sp[j]
    aff[:3, 3] = [float(o) for o in origin]
    return aff


def orientation_from_affine(affine: np.ndarray) -> str:
    """Derive the 3-letter code: each grid axis takes the anatomical letter of
    its largest-magnitude affine column component.

    Ties (oblique grids with no dominant direction) and degenerate columns
    raise :class:`GeometryError` rather than guessing.
    """
    affine = np.asarray(affine, dtype=np.float64)
    letters = []
    world_axes = []
    for j in range(3):
        col = affine[:3, j]
        mags = np.abs(col)
        top = int(np.argmax(mags))
        if mags[top] == 0.0:
            raise GeometryError(f"affine column {j} is zero; orientation undefined")
        rest = np.delete(mags, top)
        if rest.max() >= mags[top] * (1.0 - _OBLIQUE_TIE_RTOL):
            raise GeometryError(
                f"affine column {j} has no dominant world axis "
                f"(components {col.tolist()}); cannot assign an orientation letter"
            )
        letters.append(_AXIS_LETTERS[top][1] if col[top] > 0 else _AXIS_LETTERS[top][0])
        world_axes.append(top)
    if len(set(world_axes)) != 3:
        raise GeometryError("affine does not map grid axes to three distinct world axes")
    return "".join(letters)


class _Grid:
    """Shared geometry behaviour of Volume and LabelMap."""

    __slots__ = ("voxels", "affine")

    def _init_geometry(self, arr, affine, spacing, orientation, origin) -> None:
        if arr.ndim != 3:
            raise ValueError(f"expected a 3D grid, got {arr.ndim} dimensions")
        if min(arr.shape) < 1:
            raise ValueError(f"every axis needs at least one voxel, got dims {arr.shape}")
        if affine is None:
            affine = affine_for(
                spacing if spacing is not None else (1.0, 1.0, 1.0),
                orientation if orientation is not None else "RAS",
                origin if origin is not None else (0.0, 0.0, 0.0),
            )
        else:
            if spacing is not None or orientation is not None or origin is not None:
                raise ValueError("pass either an affine or spacing/orientation/origin, not both")
            affine = np.asarray(affine, dtype=np.float64)
            if affine.shape != (4, 4):
                raise ValueError(f"affine must be 4x4, got shape {affine.shape}")
            if not np.allclose(affine[3], (0.0, 0.0, 0.0, 1.0), atol=1e-9):
                raise ValueError("affine last row must be [0, 0, 0, 1]")
            if abs(np.linalg.det(affine[:3, :3])) < 1e-12:
                raise GeometryError("affine is singular")
        self.voxels = arr
        self.affine = affine

    # -- derived geometry --------------------------------------------------

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(d) for d in self.voxels.shape)

    @property
    def spacing(self) -> tuple[float, float, float]:
        return tuple(float(np.linalg.norm(self.affine[:3, j])) for j in range(3))

    @property
    def orientation(self) -> str:
        return orientation_from_affine(self.affine)

    @property
    def origin(self) -> tuple[float, float, float]:
        return tuple(float(x) for x in self.affine[:3, 3])

    def index_to_world(self, index) -> np.ndarray:
        """World coordinates (mm) of a (possibly fractional) voxel index."""
        idx = np.asarray(index, dtype=np.float64)
        return self.affine[:3, :3] @ idx + self.affine[:3, 3]

    def geometry_equals(self, other: "_Grid", rtol: float = 1e-5) -> bool:
        return self.dims == other.dims and np.allclose(
            self.affine, other.affine, rtol=rtol, atol=rtol
        )

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        sp = ", ".join(f"{s:g}" for s in self.spacing)
        return f"{type(self).__name__}(dims={self.dims}, spacing=({sp}), {self.orientation})"


class Volume(_Grid):
    """A 3D scalar image: float32 voxels plus voxel-to-world geometry.

    Construct from an explicit ``affine`` or from
    ``spacing``/``orientation``/``origin`` (defaults: 1 mm isotropic, "RAS",
    zero origin).  ``validate=False`` skips the O(n) finite-value scan; it is
    used internally by transforms whose arithmetic cannot produce non-finite
    values from finite input.
    """

    __slots__ = ()

    def __init__(
        self,
        voxels,
        affine=None,
        *,
        spacing=None,
        orientation=None,
        origin=None,
        validate: bool = True,
    ) -> None:
        arr = np.ascontiguousarray(voxels, dtype=np.float32)
        if validate and not np.isfinite(arr).all():
            raise ValueError("volume voxels contain NaN or Inf")
        self._init_geometry(arr, affine, spacing, orientation, origin)

    def with_voxels(self, voxels, *, validate: bool = False) -> "Volume":
        """Same geometry, new voxel contents."""
        return Volume(voxels, self.affine, validate=validate)


class LabelMap(_Grid):
    """A 3D segmentation: uint8 voxels plus voxel-to-world geometry."""

    __slots__ = ()

    def __init__(
        self,
        voxels,
        affine=None,
        *,
        spacing=None,
        orientation=None,
        origin=None,
        validate: bool = True,
    ) -> None:
        arr = np.asarray(voxels)
        if arr.dtype.kind == "f":
            raise ValueError("label maps must be integer-typed; convert explicitly")
        if arr.dtype != np.uint8:
            if arr.size and (arr.min() < 0 or arr.max() > 255):
                raise ValueError("label values must fit in uint8 (0..255)")
            arr = arr.astype(np.uint8)
        arr = np.ascontiguousarray(arr)
        self._init_geometry(arr, affine, spacing, orientation, origin)

    def with_voxels(self, voxels, *, validate: bool = False) -> "LabelMap":
        return LabelMap(voxels, self.affine, validate=validate)

    def values(self) -> np.ndarray:
        """Sorted distinct label values present."""
        return np.unique(self.voxels)


@dataclass(frozen=True)
class Sample:
    """An image/label pair sharing identical geometry."""

    image: Volume
    labels: LabelMap

    def __post_init__(self) -> None:
        if self.image.dims != self.labels.dims:
            raise GeometryError(
                f"image dims {self.image.dims} != label dims {self.labels.dims}"
            )
        if not np.allclose(self.image.affine, self.labels.affine, rtol=1e-5, atol=1e-5):
            raise GeometryError("image and label affines disagree beyond 1e-5")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.image.dims

    def with_image(self, image: Volume) -> "Sample":
        return Sample(image, self.labels)


@dataclass(frozen=True)
class LabelMapping:
    """Finite map from source label values to target classes {0,1,2,3}.

    ``strict`` makes a label value without an entry an error; otherwise
    unmapped values fall through to background 0.
    """

    entries: Mapping[int, int]
    strict: bool = False

    def __post_init__(self) -> None:
        for src, dst in self.entries.items():
            if not (0 <= int(src) <= 255):
                raise ValueError(f"source label {src} outside uint8 range")
            if int(dst) not in (0, 1, 2, 3):
                raise ValueError(f"mapping target {dst} not in {{0,1,2,3}}")


# ---------------------------------------------------------------------------
# operations


def reorient(vol: Volume | LabelMap, target: str) -> Volume | LabelMap:
    """Permute/flip grid axes so the orientation code becomes ``target``.

    Interpolation-free: the voxel value multiset is exactly preserved and the
    affine is updated so every voxel keeps its world coordinates.
    """
    target = validate_orientation_code(target)
    source = vol.orientation
    if source == target:
        return vol
    src_info = [_LETTER_TO_AXIS[ch] for ch in source]
    perm: list[int] = []
    flips: list[bool] = []
    for ch in target:
        world_axis, sign = _LETTER_TO_AXIS[ch]
        s = next(i for i, (w, _) in enumerate(src_info) if w == world_axis)
        perm.append(s)
        flips.append(src_info[s][1] != sign)
    arr = np.transpose(vol.voxels, perm)
    flip_axes = tuple(t for t, f in enumerate(flips) if f)
    if flip_axes:
        arr = np.flip(arr, axis=flip_axes)
    arr = np.ascontiguousarray(arr)
    new_affine = np.eye(4, dtype=np.float64)
    new_affine[:3, 3] = vol.affine[:3, 3]
    for t, s in enumerate(perm):
        col = vol.affine[:3, s]
        if flips[t]:
            new_affine[:3, t] = -col
            new_affine[:3, 3] += col * (vol.dims[s] - 1)
        else:
            new_affine[:3, t] = col
    return type(vol)(arr, new_affine, validate=False)


def resample(
    vol: Volume | LabelMap, target_spacing, mode: str | None = None
) -> Volume | LabelMap:
    """Resample onto a grid with ``target_spacing`` (mm per axis).

    New dims per axis are ``round(old_dim * old_spacing / new_spacing)``
    (half-up, minimum 1); the grid is corner-anchored so voxel index 0 keeps
    its world position.  Volumes default to trilinear interpolation; label
    maps require nearest (requesting trilinear on labels is an error).
    """
    ts = tuple(float(s) for s in target_spacing)
    if len(ts) != 3 or any(s <= 0 for s in ts):
        raise ValueError(f"target spacing must be 3 positive reals, got {target_spacing!r}")
    if isinstance(vol, LabelMap):
        mode = mode or "nearest"
        if mode != "nearest":
            raise ValueError("label maps must be resampled with mode='nearest'")
    else:
        mode = mode or "trilinear"
        if mode not in ("trilinear", "nearest"):
            raise ValueError(f"unknown resample mode {mode!r}")
    old = vol.spacing
    out_dims = tuple(
        max(1, int(np.floor(d * so / sn + 0.5))) for d, so, sn in zip(vol.dims, old, ts)
    )
    scales = tuple(sn / so for so, sn in zip(old, ts))
    arr = kernels.scale_resample(vol.voxels, out_dims, scales, mode)
    new_affine = vol.affine.copy()
    for j in range(3):
        new_affine[:3, j] *= scales[j]
    return type(vol)(arr, new_affine, validate=False)


def relabel(labels: LabelMap, mapping: LabelMapping) -> LabelMap:
    """Replace every voxel by its mapped class; geometry unchanged.

    In strict mode a present-but-unmapped value raises
    :class:`MappingError` naming the offenders; otherwise it maps to 0.
    """
    entries = {int(k): int(v) for k, v in mapping.entries.items()}
    if mapping.strict:
        present = labels.values()
        missing = sorted(int(v) for v in present if int(v) not in entries)
        if missing:
            raise MappingError(f"label value(s) {missing} have no mapping entry")
    lut = np.zeros(256, dtype=np.uint8)
    for src, dst in entries.items():
        lut[src] = dst
    return labels.with_voxels(lut[labels.voxels])


def min_max_normalize(vol: Volume) -> tuple[Volume, tuple[float, float]]:
    """Rescale voxels to [0, 1]; returns the original (min, max) so callers
    can restore the range.  A constant volume maps to all zeros."""
    arr = vol.voxels
    mn = float(arr.min())
    mx = float(arr.max())
    if mx == mn:
        return vol.with_voxels(np.zeros_like(arr)), (mn, mx)
    out = (arr - np.float32(mn)) / np.float32(mx - mn)
    return vol.with_voxels(out), (mn, mx)


def extract_patch(sample: Sample, origin, size) -> Sample:
    """Copy a ``size`` patch whose corner sits at grid index ``origin``.

    The patch may extend beyond the source: out-of-bounds image voxels take
    the source minimum, labels take 0.  The output affine is translated so
    shared voxels keep their world coordinates.
    """
    origin = tuple(int(o) for o in origin)
    size = tuple(int(s) for s in size)
    if len(origin) != 3 or len(size) != 3:
        raise ValueError("origin and size must be integer triples")
    if any(s < 1 for s in size):
        raise ValueError(f"patch size must be >= 1 per axis, got {size}")
    img = sample.image.voxels
    lab = sample.labels.voxels
    fill = float(img.min())
    out_img = np.full(size, fill, dtype=np.float32)
    out_lab = np.zeros(size, dtype=np.uint8)
    src_lo = [max(0, o) for o in origin]
    src_hi = [min(n, o + s) for n, o, s in zip(img.shape, origin, size)]
    if all(lo < hi for lo, hi in zip(src_lo, src_hi)):
        src_sl = tuple(slice(lo, hi) for lo, hi in zip(src_lo, src_hi))
        dst_sl = tuple(
            slice(lo - o, hi - o) for lo, hi, o in zip(src_lo, src_hi, origin)
        )
        out_img[dst_sl] = img[src_sl]
        out_lab[dst_sl] = lab[src_sl]
    new_affine = sample.image.affine.copy()
    new_affine[:3, 3] = sample.image.index_to_world(origin)
    return Sample(
        Volume(out_img, new_affine, validate=False),
        LabelMap(out_lab, new_affine),
    )
