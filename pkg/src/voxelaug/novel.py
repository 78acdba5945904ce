"""The eight appearance transforms driving cross-modality generalization.

All eight act on intensities only: the label map passes through untouched
(redistribute_seg reads it but never writes it), and dims/spacing/affine are
preserved.  Transforms whose arithmetic can push values outside the input
range (redistribute_seg, bias_field, unsharp_masking) clamp the result to
[min − R, max + R] where R = max − min, bounding drift through long chains;
the remaining transforms are range-bounded by construction.

Renormalization convention: helpers that rescale an output field back to the
input's [min, max] leave a constant field unchanged, so e.g. the gradient
magnitude of a constant volume stays identically zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage as _ndi

from . import kernels
from ._checks import check_interval
from .rng import RngStream
from .volume import Sample, Volume

# ---------------------------------------------------------------------------
# parameter blocks (defaults are the canonical config-file values)


@dataclass(frozen=True)
class InversionParams:
    """intensity_inversion takes no parameters."""


@dataclass(frozen=True)
class ScharrParams:
    """scharr_filter takes no parameters."""


@dataclass(frozen=True)
class RedistributeSegParams:
    alpha_range: tuple[float, float] = (-1.0, 1.0)
    bins: int = 64
    include_background: bool = True

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha_range", check_interval("alpha_range", self.alpha_range))
        if int(self.bins) < 2:
            raise ValueError(f"bins must be >= 2, got {self.bins}")
        object.__setattr__(self, "bins", int(self.bins))
        object.__setattr__(self, "include_background", bool(self.include_background))


@dataclass(frozen=True)
class RandomConvParams:
    kernel_sizes: tuple[int, ...] = (1, 3, 5, 7)
    weight_sigma: float = 1.0

    def __post_init__(self) -> None:
        sizes = tuple(int(k) for k in self.kernel_sizes)
        if not sizes:
            raise ValueError("kernel_sizes must be nonempty")
        for k in sizes:
            if k < 1 or k % 2 == 0:
                raise ValueError(f"kernel sizes must be odd positive integers, got {k}")
        object.__setattr__(self, "kernel_sizes", sizes)
        if float(self.weight_sigma) <= 0:
            raise ValueError(f"weight_sigma must be > 0, got {self.weight_sigma}")
        object.__setattr__(self, "weight_sigma", float(self.weight_sigma))


@dataclass(frozen=True)
class HistEqParams:
    bins: int = 256

    def __post_init__(self) -> None:
        if int(self.bins) < 2:
            raise ValueError(f"bins must be >= 2, got {self.bins}")
        object.__setattr__(self, "bins", int(self.bins))


@dataclass(frozen=True)
class BiasFieldParams:
    order: int = 3
    coeff_range: tuple[float, float] = (-0.5, 0.5)

    def __post_init__(self) -> None:
        if int(self.order) < 1:
            raise ValueError(f"order must be >= 1, got {self.order}")
        object.__setattr__(self, "order", int(self.order))
        object.__setattr__(self, "coeff_range", check_interval("coeff_range", self.coeff_range))


@dataclass(frozen=True)
class UnsharpParams:
    sigma_range: tuple[float, float] = (0.5, 1.5)
    amount_range: tuple[float, float] = (0.5, 2.0)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "sigma_range", check_interval("sigma_range", self.sigma_range, positive=True)
        )
        object.__setattr__(
            self, "amount_range", check_interval("amount_range", self.amount_range, minimum=0.0)
        )


def _sigmoid_contrast(x: np.ndarray) -> np.ndarray:
    """Logistic contrast curve 1/(1+e^{-10(x-0.5)}) rescaled to hit 0 and 1."""
    s = 1.0 / (1.0 + np.exp(-10.0 * (x - np.float32(0.5))))
    s0 = 1.0 / (1.0 + np.exp(np.float32(5.0)))
    s1 = 1.0 / (1.0 + np.exp(np.float32(-5.0)))
    return ((s - s0) / (s1 - s0)).astype(np.float32)


#: Named nonlinear functions on [0,1]; all monotone non-decreasing with
#: f(0)=0 and f(1)=1, so range restoration is exact at the extremes.
FUNCTION_CATALOG: dict[str, object] = {
    "identity": lambda x: x,
    "square": np.square,
    "sqrt": np.sqrt,
    "log": lambda x: (np.log1p(np.float32(9.0) * x) / np.float32(np.log(10.0))).astype(np.float32),
    "sigmoid": _sigmoid_contrast,
    "sine": lambda x: np.sin(np.float32(np.pi / 2.0) * x),
}


@dataclass(frozen=True)
class FunctionTransformParams:
    functions: tuple[str, ...] = tuple(FUNCTION_CATALOG)

    def __post_init__(self) -> None:
        fns = tuple(str(f) for f in self.functions)
        if not fns:
            raise ValueError("function set must be nonempty")
        unknown = [f for f in fns if f not in FUNCTION_CATALOG]
        if unknown:
            raise ValueError(f"unknown function name(s) {unknown}; catalog: {sorted(FUNCTION_CATALOG)}")
        object.__setattr__(self, "functions", fns)


# ---------------------------------------------------------------------------
# shared helpers


def _restore_range(field: np.ndarray, mn: float, mx: float) -> np.ndarray:
    """Min-max rescale ``field`` onto [mn, mx]; a constant field (including
    the all-zero one) is returned unchanged."""
    f_mn = float(field.min())
    f_mx = float(field.max())
    if f_mx == f_mn:
        return field
    out = (field - np.float32(f_mn)) / np.float32(f_mx - f_mn)
    out *= np.float32(mx - mn)
    out += np.float32(mn)
    return out


def _clamp_drift(arr: np.ndarray, mn: float, mx: float) -> np.ndarray:
    r = mx - mn
    return np.clip(arr, np.float32(mn - r), np.float32(mx + r))


# ---------------------------------------------------------------------------
# the transforms


def intensity_inversion(vol: Volume) -> Volume:
    """Mirror intensities within their range: v' = min + max − v.

    Computed in float64 with a single rounding back to float32, so the
    extremes map onto each other exactly and integer-lattice intensities
    (CT-style data) invert exactly twice over.
    """
    arr = vol.voxels
    mn = float(arr.min())
    mx = float(arr.max())
    if mx == mn:
        return vol
    out = (np.float64(mn + mx) - arr.astype(np.float64)).astype(np.float32)
    return vol.with_voxels(out)


_DERIV = np.array([-0.5, 0.0, 0.5], dtype=np.float64)
_SMOOTH = np.array([3.0, 10.0, 3.0], dtype=np.float64) / 16.0


def scharr_gradient_magnitude(arr: np.ndarray) -> np.ndarray:
    """Pre-normalization 3D gradient magnitude: per axis, the derivative
    kernel [-1,0,1]/2 along the axis and the smoothing kernel [3,10,3]/16
    along the other two (edge-replicated), then √(gx²+gy²+gz²)."""
    if min(arr.shape) < 3:
        raise ValueError(f"gradient magnitude needs >= 3 voxels per axis, got dims {arr.shape}")
    arr = np.asarray(arr, dtype=np.float32)
    acc: np.ndarray | None = None
    for ax in range(3):
        g = _ndi.correlate1d(arr, _DERIV, axis=ax, mode="nearest", output=np.float32)
        for other in range(3):
            if other != ax:
                g = _ndi.correlate1d(g, _SMOOTH, axis=other, mode="nearest", output=np.float32)
        acc = g * g if acc is None else acc + g * g
    return np.sqrt(acc, out=acc)


def scharr_filter(vol: Volume) -> Volume:
    """Replace the image by its gradient magnitude, rescaled to the input's
    original [min, max] range (a constant input yields all zeros)."""
    arr = vol.voxels
    mn = float(arr.min())
    mx = float(arr.max())
    mag = scharr_gradient_magnitude(arr)
    return vol.with_voxels(_restore_range(mag, mn, mx))


def redistribute_seg(
    sample: Sample,
    rng: RngStream,
    alpha_range=(-1.0, 1.0),
    bins: int = 64,
    include_background: bool = True,
) -> Sample:
    """Shift intensities region-by-region along their own density.

    For each distinct label value r (ascending; background 0 included iff
    ``include_background``): estimate a ``bins``-bin, [1,2,1]/4-smoothed,
    max-normalized density p̂_r over the region's intensities, draw α_r from
    ``alpha_range``, and move every region voxel by α_r · p̂_r(v) · range_r.
    One α is drawn per region even when the region is skipped for having
    fewer than two distinct intensities, so the draw sequence depends only on
    the region list.  Labels pass through bit-identical.
    """
    a_lo, a_hi = check_interval("alpha_range", alpha_range)
    bins = int(bins)
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    img = sample.image.voxels
    lab = sample.labels.voxels
    mn_g = float(img.min())
    mx_g = float(img.max())
    out = img.copy()
    for region in (int(v) for v in np.unique(lab)):
        alpha = rng.uniform(a_lo, a_hi)
        if region == 0 and not include_background:
            continue
        mask = lab == region
        vals = img[mask]
        r_mn = float(vals.min())
        r_mx = float(vals.max())
        if r_mx == r_mn:
            continue
        hist, _ = np.histogram(vals, bins=bins, range=(r_mn, r_mx))
        density = np.convolve(hist.astype(np.float64), [1.0, 2.0, 1.0], mode="same") / 4.0
        density /= density.max()
        idx = ((vals - np.float32(r_mn)) * np.float32(bins / (r_mx - r_mn))).astype(np.int64)
        np.clip(idx, 0, bins - 1, out=idx)
        shift = density[idx].astype(np.float32)
        out[mask] = vals + np.float32(alpha) * shift * np.float32(r_mx - r_mn)
    out = _clamp_drift(out, mn_g, mx_g)
    return sample.with_image(sample.image.with_voxels(out))


def convolve_renormalized(vol: Volume, kernel: np.ndarray) -> Volume:
    """Convolve (edge-replicated) with an odd cubic kernel and min-max rescale
    the result back onto the input's [min, max]."""
    arr = vol.voxels
    mn = float(arr.min())
    mx = float(arr.max())
    out = kernels.conv3_same(arr, np.asarray(kernel, dtype=np.float64))
    return vol.with_voxels(_restore_range(out, mn, mx))


def random_conv(
    vol: Volume, rng: RngStream, kernel_sizes=(1, 3, 5, 7), weight_sigma: float = 1.0
) -> Volume:
    """Convolve with a random kernel: size k drawn from ``kernel_sizes``,
    weights i.i.d. normal(0, weight_sigma²/k³), output renormalized to the
    input range.  Draw order: size index, then the k³ weights."""
    params = RandomConvParams(tuple(kernel_sizes), weight_sigma)
    k = params.kernel_sizes[rng.integers(len(params.kernel_sizes))]
    std = params.weight_sigma / float(k) ** 1.5
    weights = rng.standard_normal((k, k, k), dtype=np.float32) * np.float32(std)
    return convolve_renormalized(vol, weights)


def histogram_equalization(vol: Volume, bins: int = 256) -> Volume:
    """Remap intensities through the normalized cumulative histogram.

    Each voxel maps to min + CDF(v)·(max − min), with CDF evaluated at the
    voxel's bin (probability of falling at or below its upper edge); the
    remap is monotone non-decreasing.  Constant volumes pass through.
    """
    bins = int(bins)
    if bins < 2:
        raise ValueError(f"bins must be >= 2, got {bins}")
    arr = vol.voxels
    mn = float(arr.min())
    mx = float(arr.max())
    if mx == mn:
        return vol
    hist, _ = np.histogram(arr, bins=bins, range=(mn, mx))
    cdf = np.cumsum(hist, dtype=np.float64)
    cdf /= cdf[-1]
    idx = ((arr - np.float32(mn)) * np.float32(bins / (mx - mn))).astype(np.int64)
    np.clip(idx, 0, bins - 1, out=idx)
    out = np.float32(mn) + cdf[idx].astype(np.float32) * np.float32(mx - mn)
    return vol.with_voxels(out)


def bias_field(
    vol: Volume, rng: RngStream, order: int = 3, coeff_range=(-0.5, 0.5)
) -> Volume:
    """Multiply by a smooth exponential-polynomial shading field.

    Coordinates are normalized to [−1,1] per axis; one coefficient per
    monomial x^i·y^j·z^k with i+j+k ≤ order is drawn from ``coeff_range`` in
    lexicographic (i,j,k) order.  The exponent sum is clipped to ±20 before
    exponentiation, so the field is strictly positive and finite.
    """
    params = BiasFieldParams(order, tuple(coeff_range))
    order = params.order
    lo, hi = params.coeff_range
    dims = vol.dims
    coords = [
        np.linspace(-1.0, 1.0, n, dtype=np.float32) if n > 1 else np.zeros(1, dtype=np.float32)
        for n in dims
    ]
    # coefficient grids A_i(y,z) = sum_{j,k} c_ijk y^j z^k, then Horner in x
    y_pow = [coords[1] ** j for j in range(order + 1)]
    z_pow = [coords[2] ** k for k in range(order + 1)]
    planes: list[np.ndarray] = []
    for i in range(order + 1):
        plane = np.zeros((dims[1], dims[2]), dtype=np.float32)
        for j in range(order + 1 - i):
            for k in range(order + 1 - i - j):
                c = rng.uniform(lo, hi)
                if c != 0.0:
                    plane += np.float32(c) * np.outer(y_pow[j], z_pow[k])
        planes.append(plane)
    x = coords[0][:, None, None]
    exponent = np.broadcast_to(planes[order], dims).astype(np.float32)
    for i in range(order - 1, -1, -1):
        exponent = exponent * x + planes[i]
    np.clip(exponent, -20.0, 20.0, out=exponent)
    field = np.exp(exponent)
    arr = vol.voxels
    mn = float(arr.min())
    mx = float(arr.max())
    out = _clamp_drift(arr * field, mn, mx)
    return vol.with_voxels(out)


def unsharp_masking(
    vol: Volume, rng: RngStream, sigma_range=(0.5, 1.5), amount_range=(0.5, 2.0)
) -> Volume:
    """Sharpen: v' = v + a·(v − G_σ(v)) with σ then a drawn from their ranges;
    G is the package's edge-replicated Gaussian blur."""
    s_lo, s_hi = check_interval("sigma_range", sigma_range, positive=True)
    a_lo, a_hi = check_interval("amount_range", amount_range, minimum=0.0)
    sigma = rng.uniform(s_lo, s_hi)
    amount = rng.uniform(a_lo, a_hi)
    arr = vol.voxels
    mn = float(arr.min())
    mx = float(arr.max())
    blurred = kernels.gaussian_blur3(arr, (sigma, sigma, sigma))
    out = arr + np.float32(amount) * (arr - blurred)
    out = _clamp_drift(out, mn, mx)
    return vol.with_voxels(out)


def function_transform(vol: Volume, rng: RngStream, functions=None) -> Volume:
    """Pass intensities through a randomly selected catalog nonlinearity.

    Normalizes to [0,1], applies the drawn function, restores the original
    range.  ``functions`` defaults to the whole catalog; an empty or unknown
    set is an argument error.
    """
    params = FunctionTransformParams(tuple(functions) if functions is not None else tuple(FUNCTION_CATALOG))
    name = params.functions[rng.integers(len(params.functions))]
    fn = FUNCTION_CATALOG[name]
    arr = vol.voxels
    mn = float(arr.min())
    mx = float(arr.max())
    if mx == mn:
        return vol
    span = np.float32(mx - mn)
    x = (arr - np.float32(mn)) / span
    out = np.asarray(fn(x), dtype=np.float32) * span + np.float32(mn)
    return vol.with_voxels(out)
