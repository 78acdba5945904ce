"""NIfTI-1 reading and writing.

Implements the single-file variant (.nii / .nii.gz) of the format: 348-byte
little-endian header, optional gzip wrapper, Fortran-ordered voxel payload.
On load the scale slope/intercept are honoured, the affine is taken from the
sform when present (then qform, then the pixdim fallback), and data are
converted to the package's internal types (float32 images, uint8 labels).

The writer emits a fixed, fully deterministic byte layout (sform only,
constant description, gzip mtime pinned to 0) so identical volumes produce
byte-identical files — the property the pipeline determinism contract is
tested against.
"""

from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

from .errors import (
    DimensionalityError,
    NiftiError,
    UnsupportedFormatError,
)
from .volume import LabelMap, Volume

_HEADER_SIZE = 348
_VOX_OFFSET = 352  # header + 4-byte extension flag
_MAGIC_SINGLE = b"n+1\x00"
_MAGIC_PAIR = b"ni1\x00"
_GZIP_LEVEL = 6

# NIfTI datatype code -> little-endian numpy dtype
_DTYPES = {
    2: np.dtype("<u1"),
    4: np.dtype("<i2"),
    8: np.dtype("<i4"),
    16: np.dtype("<f4"),
    64: np.dtype("<f8"),
    256: np.dtype("<i1"),
    512: np.dtype("<u2"),
    768: np.dtype("<u4"),
}
_CODE_UINT8 = 2
_CODE_FLOAT32 = 16


def _read_file(path) -> bytes:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise NiftiError(f"cannot read {path}: {exc}") from exc
    if raw[:2] == b"\x1f\x8b":
        try:
            raw = gzip.decompress(raw)
        except (OSError, EOFError) as exc:
            raise NiftiError(f"corrupt gzip stream in {path}: {exc}") from exc
    return raw


def _parse_affine(buf: bytes) -> np.ndarray:
    (qform_code, sform_code) = struct.unpack_from("<2h", buf, 252)
    pixdim = struct.unpack_from("<8f", buf, 76)
    if sform_code > 0:
        aff = np.eye(4, dtype=np.float64)
        aff[0, :] = struct.unpack_from("<4f", buf, 280)
        aff[1, :] = struct.unpack_from("<4f", buf, 296)
        aff[2, :] = struct.unpack_from("<4f", buf, 312)
        return aff
    if qform_code > 0:
        b, c, d, ox, oy, oz = struct.unpack_from("<6f", buf, 256)
        a_sq = 1.0 - (b * b + c * c + d * d)
        a = float(np.sqrt(max(a_sq, 0.0)))
        rot = np.array(
            [
                [a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)],
                [2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)],
                [2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c],
            ],
            dtype=np.float64,
        )
        qfac = -1.0 if pixdim[0] < 0 else 1.0
        sp = [abs(pixdim[i]) or 1.0 for i in (1, 2, 3)]
        aff = np.eye(4, dtype=np.float64)
        aff[:3, 0] = rot[:, 0] * sp[0]
        aff[:3, 1] = rot[:, 1] * sp[1]
        aff[:3, 2] = rot[:, 2] * sp[2] * qfac
        aff[:3, 3] = (ox, oy, oz)
        return aff
    # neither transform recorded: spacing on the identity axes
    aff = np.eye(4, dtype=np.float64)
    for j in range(3):
        aff[j, j] = abs(pixdim[j + 1]) or 1.0
    return aff


def _parse_header(buf: bytes, path) -> tuple[tuple[int, int, int], np.dtype, int, float, float, np.ndarray]:
    if len(buf) < _HEADER_SIZE:
        raise NiftiError(f"{path}: file shorter than the {_HEADER_SIZE}-byte header")
    (sizeof_hdr,) = struct.unpack_from("<i", buf, 0)
    if sizeof_hdr != _HEADER_SIZE:
        if struct.unpack_from(">i", buf, 0)[0] == _HEADER_SIZE:
            raise UnsupportedFormatError(f"{path}: big-endian NIfTI is not supported")
        raise NiftiError(f"{path}: bad sizeof_hdr {sizeof_hdr}, not a NIfTI-1 file")
    magic = buf[344:348]
    if magic == _MAGIC_PAIR:
        raise UnsupportedFormatError(f"{path}: two-file (.hdr/.img) NIfTI is not supported")
    if magic != _MAGIC_SINGLE:
        raise NiftiError(f"{path}: bad magic {magic!r}")
    dim = struct.unpack_from("<8h", buf, 40)
    ndim = dim[0]
    if ndim < 3 or ndim > 7:
        raise DimensionalityError(f"{path}: expected a 3D image, header says {ndim}D")
    if any(d != 1 for d in dim[4 : 1 + ndim]):
        raise DimensionalityError(
            f"{path}: {ndim}D image with non-singleton extra axes {dim[4:1 + ndim]}"
        )
    dims = (int(dim[1]), int(dim[2]), int(dim[3]))
    if any(d < 1 for d in dims):
        raise NiftiError(f"{path}: non-positive dims {dims}")
    (datatype, bitpix) = struct.unpack_from("<2h", buf, 70)
    dtype = _DTYPES.get(datatype)
    if dtype is None:
        raise UnsupportedFormatError(f"{path}: unsupported NIfTI datatype code {datatype}")
    if bitpix != dtype.itemsize * 8:
        raise NiftiError(f"{path}: bitpix {bitpix} inconsistent with datatype {datatype}")
    (vox_offset,) = struct.unpack_from("<f", buf, 108)
    vox_offset = int(round(vox_offset))
    if vox_offset < _HEADER_SIZE:
        raise NiftiError(f"{path}: vox_offset {vox_offset} precedes the header end")
    (slope, inter) = struct.unpack_from("<2f", buf, 112)
    slope = float(slope) if np.isfinite(slope) and slope != 0.0 else 1.0
    inter = float(inter) if np.isfinite(inter) else 0.0
    return dims, dtype, vox_offset, slope, inter, _parse_affine(buf)


def _read_raw(buf: bytes, path) -> tuple[np.ndarray, float, float, np.ndarray]:
    dims, dtype, vox_offset, slope, inter, affine = _parse_header(buf, path)
    count = int(np.prod(dims))
    need = vox_offset + count * dtype.itemsize
    if len(buf) < need:
        raise NiftiError(
            f"{path}: truncated voxel payload ({len(buf)} bytes, need {need})"
        )
    flat = np.frombuffer(buf, dtype=dtype, count=count, offset=vox_offset)
    arr = flat.reshape(dims, order="F")
    return arr, slope, inter, affine


def load_volume(path) -> Volume:
    """Load a scalar image as a float32 :class:`Volume` (slope/inter applied)."""
    arr, slope, inter, affine = _read_raw(_read_file(path), path)
    out = np.ascontiguousarray(arr, dtype=np.float32)
    if (slope, inter) != (1.0, 0.0):
        out = out * np.float32(slope) + np.float32(inter)
    if not np.isfinite(out).all():
        raise NiftiError(f"{path}: image contains non-finite voxels")
    return Volume(out, affine, validate=False)


def load_labels(path) -> LabelMap:
    """Load a segmentation as a uint8 :class:`LabelMap`.

    Accepts integer files directly and float-typed files whose values are
    integral within 1e-3 after slope/intercept scaling; anything else is a
    data error, as are values outside 0..255.
    """
    arr, slope, inter, affine = _read_raw(_read_file(path), path)
    vals = np.ascontiguousarray(arr, dtype=np.float64)
    if (slope, inter) != (1.0, 0.0):
        vals = vals * slope + inter
    if not np.isfinite(vals).all():
        raise NiftiError(f"{path}: label file contains non-finite values")
    rounded = np.rint(vals)
    if np.abs(vals - rounded).max() > 1e-3:
        raise NiftiError(f"{path}: label file has non-integer values")
    if rounded.size and (rounded.min() < 0 or rounded.max() > 255):
        raise NiftiError(f"{path}: label values outside 0..255")
    return LabelMap(rounded.astype(np.uint8), affine)


def load_nifti(path, as_labels: bool = False) -> Volume | LabelMap:
    """Load a NIfTI-1 file as a Volume, or a LabelMap when ``as_labels``."""
    return load_labels(path) if as_labels else load_volume(path)


def save_nifti(vol: Volume | LabelMap, path) -> None:
    """Write a Volume (float32) or LabelMap (uint8) as NIfTI-1.

    Paths ending in ``.gz`` are gzip-compressed with a pinned mtime so the
    same volume always yields byte-identical files.
    """
    if isinstance(vol, LabelMap):
        code, arr = _CODE_UINT8, vol.voxels
    elif isinstance(vol, Volume):
        code, arr = _CODE_FLOAT32, vol.voxels
    else:
        raise TypeError(f"expected Volume or LabelMap, got {type(vol).__name__}")
    dims = vol.dims
    spacing = vol.spacing
    hdr = bytearray(_VOX_OFFSET)
    struct.pack_into("<i", hdr, 0, _HEADER_SIZE)
    struct.pack_into("<8h", hdr, 40, 3, dims[0], dims[1], dims[2], 1, 1, 1, 1)
    struct.pack_into("<2h", hdr, 70, code, _DTYPES[code].itemsize * 8)
    struct.pack_into("<8f", hdr, 76, 1.0, spacing[0], spacing[1], spacing[2], 0, 0, 0, 0)
    struct.pack_into("<f", hdr, 108, float(_VOX_OFFSET))
    struct.pack_into("<2f", hdr, 112, 1.0, 0.0)  # slope, inter
    hdr[123] = 2  # spatial units: millimetres
    descrip = b"voxelaug volumetric toolkit"
    hdr[148 : 148 + len(descrip)] = descrip
    struct.pack_into("<2h", hdr, 252, 0, 1)  # qform off, sform on
    aff = np.asarray(vol.affine, dtype=np.float32)
    struct.pack_into("<4f", hdr, 280, *aff[0])
    struct.pack_into("<4f", hdr, 296, *aff[1])
    struct.pack_into("<4f", hdr, 312, *aff[2])
    hdr[344:348] = _MAGIC_SINGLE
    payload = bytes(hdr) + arr.tobytes(order="F")
    if str(path).endswith(".gz"):
        payload = gzip.compress(payload, compresslevel=_GZIP_LEVEL, mtime=0)
    try:
        Path(path).write_bytes(payload)
    except OSError as exc:
        raise NiftiError(f"cannot write {path}: {exc}") from exc
