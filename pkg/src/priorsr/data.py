"""Training data pipeline: LR simulation, patch extraction, patch selection.

The LR observation model is Gaussian blur, integer downsampling, then
bicubic upscaling back to the original grid, so network input and target
patches share one coordinate system.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .imageops import Padding, as_image, bicubic_resize, conv2d_same, downsample, gaussian_blur
from .priors import LAPLACIAN


@dataclass
class PatchPair:
    """Co-located network input (upscaled LR) and ground-truth patch."""

    x_s: np.ndarray
    y_g: np.ndarray


@dataclass
class PatchDataset:
    pairs: list[PatchPair]
    sharp: list[np.ndarray] = field(default_factory=list)
    smooth: list[np.ndarray] = field(default_factory=list)


def simulate_lr(hr, s: int, blur_sigma: float) -> np.ndarray:
    """Degrade an HR image and bring it back to the HR grid.

    Blur with a Gaussian of width `blur_sigma`, keep every s-th pixel, then
    bicubic-upscale by s. Output dimensions equal input dimensions; crop the
    input first if its sides are not divisible by s.
    """
    a = as_image(hr)
    return bicubic_resize(downsample(gaussian_blur(a, blur_sigma), s), s)


def crop_to_multiple(img, s: int) -> np.ndarray:
    """Trim bottom/right rows so both dimensions divide by s."""
    a = as_image(img)
    h = a.shape[0] - a.shape[0] % s
    w = a.shape[1] - a.shape[1] % s
    if h < 1 or w < 1:
        raise ValueError(f"image {a.shape} too small to crop to a multiple of {s}")
    return a[:h, :w].copy()


def _window_starts(extent: int, patch: int, stride: int) -> list[int]:
    starts = list(range(0, extent - patch + 1, stride))
    if starts[-1] != extent - patch:
        starts.append(extent - patch)  # clamp the trailing window to the border
    return starts


def extract_patches(x_s, y_g, patch_size: int, stride: int = 20) -> list[PatchPair]:
    """Aligned patch pairs on a stride grid, row-major, border-clamped."""
    a = as_image(x_s)
    b = as_image(y_g)
    if a.shape != b.shape:
        raise ValueError(f"input {a.shape} and target {b.shape} shapes differ")
    if patch_size < 1 or stride < 1:
        raise ValueError("patch_size and stride must be positive")
    if patch_size > a.shape[0] or patch_size > a.shape[1]:
        raise ValueError(f"patch size {patch_size} exceeds image {a.shape}")
    pairs = []
    for r in _window_starts(a.shape[0], patch_size, stride):
        for c in _window_starts(a.shape[1], patch_size, stride):
            pairs.append(
                PatchPair(
                    x_s=a[r : r + patch_size, c : c + patch_size].copy(),
                    y_g=b[r : r + patch_size, c : c + patch_size].copy(),
                )
            )
    return pairs


@dataclass
class PatchSelection:
    """Where the sharpest and smoothest windows of one image live."""

    image_index: int
    sharp_pos: tuple[int, int]
    sharp_score: float
    smooth_pos: tuple[int, int]
    smooth_score: float


def _laplacian_energy(window: np.ndarray) -> float:
    # Scoring convolution uses zero padding on the isolated window.
    r = conv2d_same(window, LAPLACIAN, Padding.ZERO)
    return float(np.sum(r * r))


def select_patches_detailed(
    images, patch_size: int, exclusions=()
) -> list[PatchSelection]:
    """Per non-excluded image, argmax/argmin Laplacian energy over all windows.

    Windows slide with stride 1; ties go to the first window in row-major
    scan order. `exclusions` lists image indices to drop (the stand-in for a
    manual screening step).
    """
    if len(images) == 0:
        raise ValueError("no images to select patches from")
    excluded = set(exclusions)
    selections = []
    for idx, img in enumerate(images):
        if idx in excluded:
            continue
        a = as_image(img)
        if patch_size > a.shape[0] or patch_size > a.shape[1]:
            raise ValueError(f"patch size {patch_size} exceeds image {a.shape}")
        best = None
        worst = None
        for r in range(a.shape[0] - patch_size + 1):
            for c in range(a.shape[1] - patch_size + 1):
                score = _laplacian_energy(a[r : r + patch_size, c : c + patch_size])
                if best is None or score > best[0]:
                    best = (score, r, c)
                if worst is None or score < worst[0]:
                    worst = (score, r, c)
        selections.append(
            PatchSelection(
                image_index=idx,
                sharp_pos=(best[1], best[2]),
                sharp_score=best[0],
                smooth_pos=(worst[1], worst[2]),
                smooth_score=worst[0],
            )
        )
    if not selections:
        raise ValueError("all images were excluded")
    return selections


def select_sharp_smooth(images, patch_size: int, exclusions=()) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Sharpest and smoothest patch per non-excluded image."""
    selections = select_patches_detailed(images, patch_size, exclusions)
    sharp, smooth = [], []
    for sel in selections:
        a = as_image(images[sel.image_index])
        r, c = sel.sharp_pos
        sharp.append(a[r : r + patch_size, c : c + patch_size].copy())
        r, c = sel.smooth_pos
        smooth.append(a[r : r + patch_size, c : c + patch_size].copy())
    return sharp, smooth


def build_patch_dataset(
    hr_images,
    scale: int,
    blur_sigma: float,
    patch_size: int,
    stride: int = 20,
    exclusions=(),
) -> PatchDataset:
    """Full pipeline: simulate LR inputs, extract pairs, pick sharp/smooth sets."""
    pairs: list[PatchPair] = []
    cropped = []
    for hr in hr_images:
        img = crop_to_multiple(hr, scale)
        cropped.append(img)
        x_s = simulate_lr(img, scale, blur_sigma)
        pairs.extend(extract_patches(x_s, img, patch_size, stride))
    sharp, smooth = select_sharp_smooth(cropped, patch_size, exclusions)
    return PatchDataset(pairs=pairs, sharp=sharp, smooth=smooth)


def synthetic_textures(count: int, size: int, seed: int) -> list[np.ndarray]:
    """Procedural grayscale textures mixing gratings, blobs, and step edges.

    Deterministic per seed; values span most of [0, 1] with both smooth and
    sharp regions, which patch selection and the sharpness studies rely on.
    """
    if count < 1 or size < 8:
        raise ValueError("need count >= 1 and size >= 8")
    rng = np.random.default_rng(seed)
    rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)
    images = []
    for _ in range(count):
        img = gaussian_blur(rng.normal(0.0, 1.0, (size, size)), 3.0) * 4.0
        for _ in range(rng.integers(2, 4)):
            theta = rng.uniform(0.0, np.pi)
            freq = rng.uniform(0.25, 1.1)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            amp = rng.uniform(0.3, 0.8)
            img += amp * np.sin(freq * (np.cos(theta) * rows + np.sin(theta) * cols) + phase)
        for _ in range(rng.integers(2, 4)):
            r0, c0 = rng.integers(0, size, 2)
            h, w = rng.integers(size // 8, size // 3, 2)
            img[r0 : min(r0 + h, size), c0 : min(c0 + w, size)] += rng.uniform(-0.8, 0.8)
        lo, hi = img.min(), img.max()
        images.append(0.05 + 0.9 * (img - lo) / (hi - lo))
    return images
