"""Deterministic 2-D numerical kernels: convolution, SVD, resampling, blurring.

Images are plain 2-D float64 numpy arrays. All functions here are pure:
identical inputs give bit-identical outputs, and nothing is mutated, so
concurrent use on shared inputs is safe.

Convolution here is true convolution (the kernel is flipped before the
sliding product). The distinction from cross-correlation only matters for
non-symmetric kernels, i.e. learned filters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class Padding(Enum):
    """Boundary handling for size-preserving convolution."""

    ZERO = "zero"
    REPLICATE = "replicate"


def as_image(a) -> np.ndarray:
    """Validate and return `a` as a 2-D float64 array with finite entries."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"expected a non-empty 2-D image, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite values")
    return arr


def as_kernel(k) -> np.ndarray:
    """Validate and return `k` as a 2-D float64 kernel with odd dimensions."""
    arr = np.asarray(k, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"expected a 2-D kernel, got shape {arr.shape}")
    if arr.shape[0] % 2 == 0 or arr.shape[1] % 2 == 0:
        raise ValueError(f"kernel dimensions must be odd, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("kernel contains non-finite values")
    return arr


def _pad2d(img: np.ndarray, ph: int, pw: int, padding: Padding) -> np.ndarray:
    mode = "constant" if padding is Padding.ZERO else "edge"
    return np.pad(img, ((ph, ph), (pw, pw)), mode=mode)


def _fold_rows(a: np.ndarray, p: int) -> np.ndarray:
    # Adjoint of replicate padding along axis 0: padded rows copied from the
    # first/last row send their gradient mass back to that row.
    if p == 0:
        return a
    core = a[p:-p].copy()
    core[0] += a[:p].sum(axis=0)
    core[-1] += a[-p:].sum(axis=0)
    return core


def _pad2d_adjoint(full: np.ndarray, ph: int, pw: int, padding: Padding) -> np.ndarray:
    if padding is Padding.ZERO:
        out = full
        if ph:
            out = out[ph:-ph]
        if pw:
            out = out[:, pw:-pw]
        return np.ascontiguousarray(out)
    out = _fold_rows(full, ph)
    out = _fold_rows(out.T, pw).T
    return np.ascontiguousarray(out)


def conv2d_same(img, kernel, padding: Padding = Padding.ZERO) -> np.ndarray:
    """Size-preserving true convolution of `img` with `kernel`.

    The kernel is flipped in both axes; boundaries are filled per `padding`.
    Raises ValueError if the kernel exceeds the image in either dimension.
    """
    a = as_image(img)
    k = as_kernel(kernel)
    kh, kw = k.shape
    if kh > a.shape[0] or kw > a.shape[1]:
        raise ValueError(f"kernel {k.shape} larger than image {a.shape}")
    padded = _pad2d(a, kh // 2, kw // 2, padding)
    windows = sliding_window_view(padded, (kh, kw))
    return np.tensordot(windows, k[::-1, ::-1], axes=([2, 3], [0, 1]))


def conv2d_adjoint(grad_out, kernel, padding: Padding = Padding.ZERO) -> np.ndarray:
    """Adjoint of ``A -> conv2d_same(A, kernel, padding)``.

    Satisfies ``<conv2d_same(A, k, m), B> == <A, conv2d_adjoint(B, k, m)>``
    exactly (up to rounding) for the Frobenius inner product, including the
    boundary contributions of either padding mode.
    """
    g = as_image(grad_out)
    k = as_kernel(kernel)
    kh, kw = k.shape
    if kh > g.shape[0] or kw > g.shape[1]:
        raise ValueError(f"kernel {k.shape} larger than image {g.shape}")
    # Spread the output gradient over the padded grid, then fold the padding.
    full = np.pad(g, ((kh - 1, kh - 1), (kw - 1, kw - 1)))
    windows = sliding_window_view(full, (kh, kw))
    spread = np.tensordot(windows, k, axes=([2, 3], [0, 1]))
    return _pad2d_adjoint(spread, kh // 2, kw // 2, padding)


def conv2d_kernel_grad(img, grad_out, kernel_shape, padding: Padding = Padding.ZERO) -> np.ndarray:
    """Gradient of ``<conv2d_same(img, k, padding), grad_out>`` w.r.t. ``k``.

    Returns an array of `kernel_shape`. Linear in `grad_out` and independent
    of the kernel values themselves.
    """
    a = as_image(img)
    g = as_image(grad_out)
    if a.shape != g.shape:
        raise ValueError(f"image {a.shape} and gradient {g.shape} shapes differ")
    kh, kw = kernel_shape
    if kh % 2 == 0 or kw % 2 == 0 or kh < 1 or kw < 1:
        raise ValueError(f"kernel dimensions must be odd positive, got {kernel_shape}")
    if kh > a.shape[0] or kw > a.shape[1]:
        raise ValueError(f"kernel {kernel_shape} larger than image {a.shape}")
    padded = _pad2d(a, kh // 2, kw // 2, padding)
    windows = sliding_window_view(padded, g.shape)
    corr = np.tensordot(windows, g, axes=([2, 3], [0, 1]))
    return corr[::-1, ::-1].copy()


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD ``Y = U diag(sigma) Z^T`` with sigma descending."""

    u: np.ndarray      # (M, R)
    sigma: np.ndarray  # (R,), descending, non-negative
    z: np.ndarray      # (N, R)

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.z.T


def svd(img) -> SvdResult:
    """Thin singular value decomposition of a 2-D image matrix."""
    a = as_image(img)
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"SVD did not converge for shape {a.shape}: {exc}") from exc
    return SvdResult(u=u, sigma=s, z=vh.T.copy())


def truncate_svd(img, rank: int) -> np.ndarray:
    """Best Frobenius rank-`rank` approximation by zeroing trailing singular values."""
    a = as_image(img)
    r_full = min(a.shape)
    if not isinstance(rank, (int, np.integer)):
        raise ValueError(f"rank must be an integer, got {rank!r}")
    if rank < 0 or rank > r_full:
        raise ValueError(f"rank {rank} outside [0, {r_full}]")
    if rank == r_full:
        return a.copy()
    if rank == 0:
        return np.zeros_like(a)
    res = svd(a)
    return (res.u[:, :rank] * res.sigma[:rank]) @ res.z[:, :rank].T


def gaussian_kernel1d(zeta: float) -> np.ndarray:
    """Normalized 1-D Gaussian taps with radius ceil(3*zeta)."""
    if not zeta > 0:
        raise ValueError(f"blur width must be positive, got {zeta}")
    radius = math.ceil(3.0 * zeta)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-(x * x) / (2.0 * zeta * zeta))
    return w / w.sum()


def _correlate_rows_replicate(a: np.ndarray, taps: np.ndarray) -> np.ndarray:
    # Symmetric taps, so correlation equals convolution. Replicate padding
    # makes this valid for any radius, including radii beyond the image size.
    r = taps.size // 2
    padded = np.pad(a, ((r, r), (0, 0)), mode="edge")
    windows = sliding_window_view(padded, taps.size, axis=0)
    return windows @ taps


def gaussian_blur(img, zeta: float) -> np.ndarray:
    """Separable Gaussian blur with replicate boundary.

    The kernel is truncated at radius ceil(3*zeta) and renormalized to sum 1,
    so constant images are preserved exactly.
    """
    a = as_image(img)
    w = gaussian_kernel1d(zeta)
    out = _correlate_rows_replicate(a, w)
    return np.ascontiguousarray(_correlate_rows_replicate(out.T, w).T)


def downsample(img, s: int) -> np.ndarray:
    """Keep every s-th pixel starting at index 0 along each axis."""
    a = as_image(img)
    if not isinstance(s, (int, np.integer)) or s < 1:
        raise ValueError(f"downsampling factor must be a positive integer, got {s!r}")
    if a.shape[0] % s or a.shape[1] % s:
        raise ValueError(f"image shape {a.shape} not divisible by factor {s}; crop first")
    return a[::s, ::s].copy()


def _cubic_weight(x: np.ndarray) -> np.ndarray:
    # Keys cubic-convolution kernel, a = -0.5.
    ax = np.abs(x)
    out = np.zeros_like(ax)
    near = ax <= 1.0
    t = ax[near]
    out[near] = (1.5 * t - 2.5) * t * t + 1.0
    far = (ax > 1.0) & (ax < 2.0)
    t = ax[far]
    out[far] = -0.5 * (((t - 5.0) * t + 8.0) * t - 4.0)
    return out


def _cubic_resample_rows(a: np.ndarray, out_len: int) -> np.ndarray:
    in_len = a.shape[0]
    scale = out_len / in_len
    x = (np.arange(out_len, dtype=np.float64) + 0.5) / scale - 0.5
    base = np.floor(x).astype(np.int64)
    acc = np.zeros((out_len, a.shape[1]), dtype=np.float64)
    for off in (-1, 0, 1, 2):
        idx = np.clip(base + off, 0, in_len - 1)
        w = _cubic_weight(x - (base + off))
        acc += w[:, None] * a[idx]
    return acc


def bicubic_resize(img, s: float) -> np.ndarray:
    """Resize by factor `s` with Keys bicubic interpolation (a = -0.5).

    Output dimensions are round(s * dim) per axis; samples map through
    center alignment and out-of-range taps replicate the border, so s = 1
    reproduces the input and constant images stay constant for any s.
    """
    a = as_image(img)
    if not s > 0:
        raise ValueError(f"scale must be positive, got {s}")
    out_h = int(math.floor(a.shape[0] * s + 0.5))
    out_w = int(math.floor(a.shape[1] * s + 0.5))
    if out_h < 1 or out_w < 1:
        raise ValueError(f"scale {s} yields degenerate output {out_h}x{out_w}")
    out = _cubic_resample_rows(a, out_h)
    out = _cubic_resample_rows(out.T, out_w).T
    return np.ascontiguousarray(out)
