"""Low-level array kernels shared by the transforms.

Three families live here, kept separate from the transform semantics so they
can be tested against independent references:

* separable axis-by-axis resampling (``scale_resample``) for spacing changes
  and the low-resolution simulation,
* a fused affine pull-resampler (``affine_pull``) that interpolates the image
  trilinearly and the label map by nearest neighbour in one pass over the
  output grid — JIT-compiled when numba is importable, with a scipy fallback,
* edge-replicated 3D convolution (``conv3_same``) and float64-accumulated
  Gaussian blur.

All kernels treat arrays as plain index grids; geometry bookkeeping stays in
:mod:`voxelaug.volume`.
"""

from __future__ import annotations

import os

import numpy as np
from scipy import fft as _fft
from scipy import ndimage as _ndi

try:  # pragma: no cover - exercised implicitly by every spatial transform
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False


def worker_count() -> int:
    """Worker cap honoring the VOXELAUG_THREADS environment variable."""
    cores = os.cpu_count() or 1
    raw = os.environ.get("VOXELAUG_THREADS", "").strip()
    if not raw:
        return cores
    try:
        n = int(raw)
    except ValueError:
        return cores
    return max(1, min(n, cores)) if n > 0 else cores


# ---------------------------------------------------------------------------
# separable rescaling


def scale_resample(arr: np.ndarray, out_dims, scales, mode: str) -> np.ndarray:
    """Resample ``arr`` axis by axis onto ``out_dims`` with per-axis ``scales``.

    The grid convention is corner-anchored: output index ``i`` reads source
    coordinate ``i * scale`` (clamped to the valid range), so index 0 keeps
    its position.  ``mode`` is ``"trilinear"`` (composed of per-axis linear
    interpolation) or ``"nearest"`` (IEEE rint, ties to even).  Nearest mode
    preserves the input dtype and value set; trilinear returns float32.
    """
    if mode not in ("trilinear", "nearest"):
        raise ValueError(f"unknown resample mode {mode!r}")
    out = arr if mode == "nearest" else np.asarray(arr, dtype=np.float32)
    for ax in range(3):
        n_in = out.shape[ax]
        n_out = int(out_dims[ax])
        scale = float(scales[ax])
        if n_out == n_in and scale == 1.0:
            continue
        src = np.arange(n_out, dtype=np.float64) * scale
        np.clip(src, 0.0, float(n_in - 1), out=src)
        if mode == "nearest":
            idx = np.rint(src).astype(np.intp)
            out = np.take(out, idx, axis=ax)
        else:
            i0 = np.floor(src).astype(np.intp)
            np.clip(i0, 0, max(n_in - 2, 0), out=i0)
            i1 = np.minimum(i0 + 1, n_in - 1)
            w = (src - i0).astype(np.float32)
            shape = [1, 1, 1]
            shape[ax] = n_out
            w = w.reshape(shape)
            lo = np.take(out, i0, axis=ax)
            hi = np.take(out, i1, axis=ax)
            out = (1.0 - w) * lo + w * hi
    if mode == "trilinear":
        out = np.ascontiguousarray(out, dtype=np.float32)
    else:
        out = np.ascontiguousarray(out)
    return out


# ---------------------------------------------------------------------------
# fused affine pull-resampling

if HAVE_NUMBA:

    @_njit(cache=True, nogil=True)
    def _pull_pair(img, lab, mat, off, fill, out_img, out_lab):  # pragma: no cover - jitted
        nx, ny, nz = img.shape
        m00, m01, m02 = mat[0, 0], mat[0, 1], mat[0, 2]
        m10, m11, m12 = mat[1, 0], mat[1, 1], mat[1, 2]
        m20, m21, m22 = mat[2, 0], mat[2, 1], mat[2, 2]
        for i in range(out_img.shape[0]):
            bx = m00 * i + off[0]
            by = m10 * i + off[1]
            bz = m20 * i + off[2]
            for j in range(out_img.shape[1]):
                cx = bx + m01 * j
                cy = by + m11 * j
                cz = bz + m21 * j
                for k in range(out_img.shape[2]):
                    x = cx + m02 * k
                    y = cy + m12 * k
                    z = cz + m22 * k
                    if (
                        x < 0.0
                        or x > nx - 1
                        or y < 0.0
                        or y > ny - 1
                        or z < 0.0
                        or z > nz - 1
                    ):
                        out_img[i, j, k] = fill
                        out_lab[i, j, k] = 0
                        continue
                    x0 = int(np.floor(x))
                    y0 = int(np.floor(y))
                    z0 = int(np.floor(z))
                    if x0 > nx - 2:
                        x0 = nx - 2
                    if y0 > ny - 2:
                        y0 = ny - 2
                    if z0 > nz - 2:
                        z0 = nz - 2
                    if x0 < 0:
                        x0 = 0
                    if y0 < 0:
                        y0 = 0
                    if z0 < 0:
                        z0 = 0
                    fx = x - x0
                    fy = y - y0
                    fz = z - z0
                    c00 = img[x0, y0, z0] * (1.0 - fz) + img[x0, y0, z0 + 1] * fz
                    c01 = img[x0, y0 + 1, z0] * (1.0 - fz) + img[x0, y0 + 1, z0 + 1] * fz
                    c10 = img[x0 + 1, y0, z0] * (1.0 - fz) + img[x0 + 1, y0, z0 + 1] * fz
                    c11 = (
                        img[x0 + 1, y0 + 1, z0] * (1.0 - fz)
                        + img[x0 + 1, y0 + 1, z0 + 1] * fz
                    )
                    out_img[i, j, k] = (c00 * (1.0 - fy) + c01 * fy) * (1.0 - fx) + (
                        c10 * (1.0 - fy) + c11 * fy
                    ) * fx
                    xi = int(np.rint(x))
                    yi = int(np.rint(y))
                    zi = int(np.rint(z))
                    out_lab[i, j, k] = lab[xi, yi, zi]

    @_njit(cache=True, nogil=True)
    def _pull_image(img, mat, off, fill, out_img):  # pragma: no cover - jitted
        nx, ny, nz = img.shape
        m00, m01, m02 = mat[0, 0], mat[0, 1], mat[0, 2]
        m10, m11, m12 = mat[1, 0], mat[1, 1], mat[1, 2]
        m20, m21, m22 = mat[2, 0], mat[2, 1], mat[2, 2]
        for i in range(out_img.shape[0]):
            bx = m00 * i + off[0]
            by = m10 * i + off[1]
            bz = m20 * i + off[2]
            for j in range(out_img.shape[1]):
                cx = bx + m01 * j
                cy = by + m11 * j
                cz = bz + m21 * j
                for k in range(out_img.shape[2]):
                    x = cx + m02 * k
                    y = cy + m12 * k
                    z = cz + m22 * k
                    if (
                        x < 0.0
                        or x > nx - 1
                        or y < 0.0
                        or y > ny - 1
                        or z < 0.0
                        or z > nz - 1
                    ):
                        out_img[i, j, k] = fill
                        continue
                    x0 = int(np.floor(x))
                    y0 = int(np.floor(y))
                    z0 = int(np.floor(z))
                    if x0 > nx - 2:
                        x0 = nx - 2
                    if y0 > ny - 2:
                        y0 = ny - 2
                    if z0 > nz - 2:
                        z0 = nz - 2
                    if x0 < 0:
                        x0 = 0
                    if y0 < 0:
                        y0 = 0
                    if z0 < 0:
                        z0 = 0
                    fx = x - x0
                    fy = y - y0
                    fz = z - z0
                    c00 = img[x0, y0, z0] * (1.0 - fz) + img[x0, y0, z0 + 1] * fz
                    c01 = img[x0, y0 + 1, z0] * (1.0 - fz) + img[x0, y0 + 1, z0 + 1] * fz
                    c10 = img[x0 + 1, y0, z0] * (1.0 - fz) + img[x0 + 1, y0, z0 + 1] * fz
                    c11 = (
                        img[x0 + 1, y0 + 1, z0] * (1.0 - fz)
                        + img[x0 + 1, y0 + 1, z0 + 1] * fz
                    )
                    out_img[i, j, k] = (c00 * (1.0 - fy) + c01 * fy) * (1.0 - fx) + (
                        c10 * (1.0 - fy) + c11 * fy
                    ) * fx


def affine_pull(
    image: np.ndarray,
    labels: np.ndarray | None,
    matrix: np.ndarray,
    offset: np.ndarray,
    fill: float,
) -> tuple[np.ndarray, np.ndarray | None]:
    """Pull-resample onto the same grid: input coord = matrix @ output + offset.

    The image is interpolated trilinearly (outside → ``fill``); ``labels``,
    when given, are sampled at the same coordinates by nearest neighbour
    (outside → 0).  Output shapes equal input shapes.
    """
    image = np.ascontiguousarray(image, dtype=np.float32)
    mat = np.ascontiguousarray(matrix, dtype=np.float64)
    off = np.ascontiguousarray(offset, dtype=np.float64)
    out_img = np.empty_like(image)
    if HAVE_NUMBA:
        if labels is None:
            _pull_image(image, mat, off, np.float32(fill), out_img)
            return out_img, None
        lab = np.ascontiguousarray(labels, dtype=np.uint8)
        out_lab = np.empty_like(lab)
        _pull_pair(image, lab, mat, off, np.float32(fill), out_img, out_lab)
        return out_img, out_lab
    # scipy fallback: two passes, identical sampling convention
    out_img = _ndi.affine_transform(
        image, mat, offset=off, order=1, mode="constant", cval=fill,
        output=np.float32, prefilter=False,
    )
    if labels is None:
        return out_img, None
    out_lab = _ndi.affine_transform(
        labels, mat, offset=off, order=0, mode="constant", cval=0,
        output=np.uint8, prefilter=False,
    )
    return out_img, out_lab


# ---------------------------------------------------------------------------
# convolution kernels


def gaussian_blur3(arr: np.ndarray, sigmas) -> np.ndarray:
    """Separable Gaussian blur with edge replication, accumulated in float64.

    Accumulating in double keeps a constant volume a fixed point to well
    under 1e-6 relative; the result is cast back to float32.
    """
    sig = [max(0.0, float(s)) for s in sigmas]
    if all(s == 0.0 for s in sig):
        return np.asarray(arr, dtype=np.float32)
    work = np.asarray(arr, dtype=np.float64)
    work = _ndi.gaussian_filter(work, sigma=sig, mode="nearest", truncate=4.0)
    return work.astype(np.float32)


def conv3_same(arr: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Edge-replicated same-size 3D convolution with an odd cubic kernel.

    Small kernels run through direct convolution; larger ones go through an
    FFT of the edge-padded array at fast transform sizes, which is the cheaper
    route from k=5 upward.  Both paths compute the same linear convolution.
    """
    k = int(kernel.shape[0])
    if kernel.shape != (k, k, k) or k % 2 == 0:
        raise ValueError("kernel must be cubic with odd side length")
    arr = np.asarray(arr, dtype=np.float32)
    if k == 1:
        return (arr * np.float32(kernel.reshape(()))).astype(np.float32)
    if k <= 3:
        return _ndi.convolve(arr, kernel.astype(np.float32), mode="nearest")
    p = k // 2
    padded = np.pad(arr, p, mode="edge")
    full = [_fft.next_fast_len(s + k - 1) for s in padded.shape]
    workers = worker_count()
    spec = _fft.rfftn(padded, s=full, workers=workers)
    spec *= _fft.rfftn(kernel.astype(np.float32), s=full, workers=workers)
    out = _fft.irfftn(spec, s=full, workers=workers)
    # 'same' region of the padded convolution, then strip the padding
    sl = tuple(slice(2 * p, 2 * p + n) for n in arr.shape)
    return np.ascontiguousarray(out[sl], dtype=np.float32)


# ---------------------------------------------------------------------------
# one-time warm-up

_PRIMED = False


def prime() -> None:
    """Run every heavy kernel once on tiny inputs.

    Loading the JIT-compiled resampler from its on-disk cache and setting up
    the FFT machinery cost tens of milliseconds the first time they run in a
    process; calling this up front keeps those one-time costs out of timed or
    latency-sensitive code.  Idempotent and cheap after the first call.
    """
    global _PRIMED
    if _PRIMED:
        return
    img = np.arange(4 ** 3, dtype=np.float32).reshape(4, 4, 4)
    lab = (img.astype(np.int64) % 4).astype(np.uint8)
    mat = np.array([[0.9, 0.1, 0.0], [-0.1, 0.9, 0.0], [0.0, 0.0, 1.0]])
    off = np.array([0.1, 0.2, 0.3])
    affine_pull(img, lab, mat, off, 0.0)
    affine_pull(img, None, mat, off, 0.0)
    scale_resample(img, (3, 3, 3), (1.2, 1.2, 1.2), "trilinear")
    scale_resample(lab, (3, 3, 3), (1.2, 1.2, 1.2), "nearest")
    gaussian_blur3(img, (0.5, 0.5, 0.5))
    conv3_same(img, np.full((3, 3, 3), 1.0 / 27.0, dtype=np.float32))
    conv3_same(img, np.full((5, 5, 5), 1.0 / 125.0, dtype=np.float32))
    _PRIMED = True
