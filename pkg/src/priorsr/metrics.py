"""Image-quality metrics and the two parameter-sweep studies.

Images are interpreted on dynamic range 1.0 and are clamped to [0, 1]
before either metric, so the absolute dB values depend on that convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .imageops import Padding, as_image, gaussian_blur, truncate_svd
from .priors import variance_of_laplacian


@dataclass
class MetricReport:
    psnr_db: float
    ssim: float


@dataclass
class StudyRow:
    parameter: float
    value: float


def psnr(a, b) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical images."""
    x = np.clip(as_image(a), 0.0, 1.0)
    y = np.clip(as_image(b), 0.0, 1.0)
    if x.shape != y.shape:
        raise ValueError(f"shapes differ: {x.shape} vs {y.shape}")
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


def _ssim_window() -> np.ndarray:
    r = _SSIM_WINDOW // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(x * x) / (2.0 * _SSIM_SIGMA * _SSIM_SIGMA))
    w = np.outer(g, g)
    return w / w.sum()


def _filter_valid(img: np.ndarray, win: np.ndarray) -> np.ndarray:
    windows = sliding_window_view(img, win.shape)
    return np.tensordot(windows, win, axes=([2, 3], [0, 1]))


def ssim(a, b) -> float:
    """Mean local structural similarity over valid 11x11 Gaussian windows."""
    x = np.clip(as_image(a), 0.0, 1.0)
    y = np.clip(as_image(b), 0.0, 1.0)
    if x.shape != y.shape:
        raise ValueError(f"shapes differ: {x.shape} vs {y.shape}")
    if x.shape[0] < _SSIM_WINDOW or x.shape[1] < _SSIM_WINDOW:
        raise ValueError(f"images must be at least {_SSIM_WINDOW}x{_SSIM_WINDOW}, got {x.shape}")
    win = _ssim_window()
    mu_x = _filter_valid(x, win)
    mu_y = _filter_valid(y, win)
    var_x = _filter_valid(x * x, win) - mu_x * mu_x
    var_y = _filter_valid(y * y, win) - mu_y * mu_y
    cov = _filter_valid(x * y, win) - mu_x * mu_y
    c1 = _SSIM_K1 * _SSIM_K1
    c2 = _SSIM_K2 * _SSIM_K2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def metric_report(a, b) -> MetricReport:
    return MetricReport(psnr_db=psnr(a, b), ssim=ssim(a, b))


def rank_study(img, ranks) -> list[StudyRow]:
    """PSNR of the rank-r reconstruction against the original, per rank.

    Rows come back sorted by rank; PSNR is non-decreasing in the retained
    rank because each truncation is the best approximation at that rank.
    """
    a = as_image(img)
    r_full = min(a.shape)
    for r in ranks:
        if not isinstance(r, (int, np.integer)) or r < 0 or r > r_full:
            raise ValueError(f"rank {r} outside [0, {r_full}]")
    return [StudyRow(float(r), psnr(truncate_svd(a, int(r)), a)) for r in sorted(ranks)]


def sharpness_study(img, zetas) -> list[StudyRow]:
    """Variance of the Laplacian after Gaussian blurs of increasing width."""
    a = as_image(img)
    for z in zetas:
        if not z > 0:
            raise ValueError(f"blur width must be positive, got {z}")
    return [
        StudyRow(float(z), variance_of_laplacian(gaussian_blur(a, float(z)), Padding.REPLICATE))
        for z in sorted(zetas)
    ]
