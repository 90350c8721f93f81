"""Small convolutional super-resolution network with hand-rolled backprop.

Layers are zero-padded "same" convolutions (output spatial size equals input
size) followed by ReLU, except the final reconstruction layer which is
linear with a single output channel. The default architecture is the classic
9-1-5 three-layer net with 64 and 32 feature channels.

The training loss couples the reconstruction error with the structural
priors; `output_grad` produces the image-level gradient dE/dY so the whole
parameter gradient falls out of one standard backward pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .imageops import Padding, as_image
from .priors import (
    LAPLACIAN,
    as_filter_bank,
    rank_surrogate,
    rank_surrogate_grad,
    sharpness_measure,
    v_mod,
    v_mod_grad_image,
)


class Activation(Enum):
    RELU = "relu"
    IDENTITY = "identity"


@dataclass(frozen=True)
class LayerSpec:
    """Shape and nonlinearity of one convolution layer."""

    kernel_h: int
    kernel_w: int
    in_channels: int
    out_channels: int
    activation: Activation


def default_arch() -> list[LayerSpec]:
    """9-1-5 architecture: 64 then 32 feature channels, linear output."""
    return [
        LayerSpec(9, 9, 1, 64, Activation.RELU),
        LayerSpec(1, 1, 64, 32, Activation.RELU),
        LayerSpec(5, 5, 32, 1, Activation.IDENTITY),
    ]


def validate_arch(arch: list[LayerSpec]) -> None:
    if not arch:
        raise ValueError("architecture must have at least one layer")
    for i, spec in enumerate(arch):
        if spec.kernel_h < 1 or spec.kernel_w < 1 or spec.kernel_h % 2 == 0 or spec.kernel_w % 2 == 0:
            raise ValueError(f"layer {i}: kernel dims must be odd positive, got {spec.kernel_h}x{spec.kernel_w}")
        if spec.in_channels < 1 or spec.out_channels < 1:
            raise ValueError(f"layer {i}: channel counts must be positive")
        if i > 0 and spec.in_channels != arch[i - 1].out_channels:
            raise ValueError(
                f"layer {i}: in_channels {spec.in_channels} != previous out_channels {arch[i - 1].out_channels}"
            )
    last = arch[-1]
    if last.out_channels != 1 or last.activation is not Activation.IDENTITY:
        raise ValueError("final layer must have one linear output channel")


@dataclass
class ConvLayer:
    """Parameters of one layer: weights (out, in, kh, kw) and biases (out,)."""

    weights: np.ndarray
    biases: np.ndarray
    activation: Activation

    def spec(self) -> LayerSpec:
        o, i, kh, kw = self.weights.shape
        return LayerSpec(kh, kw, i, o, self.activation)


NetworkParams = list[ConvLayer]


@dataclass
class LayerGrads:
    weights: np.ndarray
    biases: np.ndarray


@dataclass
class ForwardCache:
    """Intermediates of one forward pass, needed by backward."""

    x: np.ndarray                 # network input, (in_channels, H, W)
    pre: list[np.ndarray]         # pre-activation maps per layer
    post: list[np.ndarray]        # post-activation maps per layer


def init_params(arch: list[LayerSpec], seed: int) -> NetworkParams:
    """Gaussian(0, 0.001^2) weights and zero biases, deterministic per seed."""
    validate_arch(arch)
    rng = np.random.default_rng(seed)
    layers = []
    for spec in arch:
        w = rng.normal(0.0, 1e-3, (spec.out_channels, spec.in_channels, spec.kernel_h, spec.kernel_w))
        layers.append(ConvLayer(w, np.zeros(spec.out_channels), spec.activation))
    return layers


def init_sharpness_bank(n_filters: int = 8, seed: int = 0) -> np.ndarray:
    """Laplacian plus Gaussian perturbations of variance 1e-4, per filter."""
    if n_filters < 1:
        raise ValueError(f"need at least one sharpness filter, got {n_filters}")
    rng = np.random.default_rng(seed)
    return LAPLACIAN + rng.normal(0.0, 0.01, (n_filters, 3, 3))


def _conv_forward(x: np.ndarray, weights: np.ndarray) -> np.ndarray:
    # x: (Cin, H, W), weights: (Cout, Cin, kh, kw) -> (Cout, H, W).
    # Zero "same" padding, true convolution (kernels flipped).
    _, _, kh, kw = weights.shape
    xp = np.pad(x, ((0, 0), (kh // 2, kh // 2), (kw // 2, kw // 2)))
    windows = sliding_window_view(xp, (kh, kw), axis=(1, 2))
    flipped = weights[:, :, ::-1, ::-1]
    return np.tensordot(flipped, windows, axes=([1, 2, 3], [0, 3, 4]))


def _conv_input_grad(d_pre: np.ndarray, weights: np.ndarray) -> np.ndarray:
    # Adjoint of _conv_forward w.r.t. its input (zero padding): correlation.
    _, _, kh, kw = weights.shape
    dp = np.pad(d_pre, ((0, 0), (kh // 2, kh // 2), (kw // 2, kw // 2)))
    windows = sliding_window_view(dp, (kh, kw), axis=(1, 2))
    return np.tensordot(weights, windows, axes=([0, 2, 3], [0, 3, 4]))


def _conv_weight_grad(x: np.ndarray, d_pre: np.ndarray, kh: int, kw: int) -> np.ndarray:
    # Gradient of <conv(x, W), d_pre> w.r.t. W, shape (Cout, Cin, kh, kw).
    xp = np.pad(x, ((0, 0), (kh // 2, kh // 2), (kw // 2, kw // 2)))
    windows = sliding_window_view(xp, d_pre.shape[1:], axis=(1, 2))
    corr = np.tensordot(d_pre, windows, axes=([1, 2], [3, 4]))
    return corr[:, :, ::-1, ::-1].copy()


def forward(layers: NetworkParams, x_s) -> tuple[np.ndarray, ForwardCache]:
    """Run the network on an upscaled LR image; returns (output, cache)."""
    a = as_image(x_s)
    if not layers:
        raise ValueError("network has no layers")
    if layers[0].weights.shape[1] != 1:
        raise ValueError("first layer must take a single input channel")
    cur = a[None]
    pre_list: list[np.ndarray] = []
    post_list: list[np.ndarray] = []
    for layer in layers:
        if layer.weights.shape[1] != cur.shape[0]:
            raise ValueError(
                f"layer expects {layer.weights.shape[1]} channels, got {cur.shape[0]}"
            )
        pre = _conv_forward(cur, layer.weights) + layer.biases[:, None, None]
        post = np.maximum(pre, 0.0) if layer.activation is Activation.RELU else pre
        pre_list.append(pre)
        post_list.append(post)
        cur = post
    return cur[0], ForwardCache(x=a[None], pre=pre_list, post=post_list)


def backward(layers: NetworkParams, cache: ForwardCache, dE_dY) -> list[LayerGrads]:
    """Backpropagate an image-level gradient to every weight and bias.

    ReLU passes gradient only where the cached pre-activation is strictly
    positive (the subgradient at exactly 0 is taken as 0).
    """
    d_out = as_image(dE_dY)
    if len(cache.pre) != len(layers):
        raise ValueError(f"cache has {len(cache.pre)} layers, params have {len(layers)}")
    for layer, pre in zip(layers, cache.pre):
        if pre.shape[0] != layer.weights.shape[0]:
            raise ValueError("cache does not match network parameters")
    if d_out.shape != cache.post[-1].shape[1:]:
        raise ValueError(f"gradient shape {d_out.shape} does not match output {cache.post[-1].shape[1:]}")

    grads: list[LayerGrads] = [None] * len(layers)  # type: ignore[list-item]
    d = d_out[None]
    for i in range(len(layers) - 1, -1, -1):
        layer = layers[i]
        if layer.activation is Activation.RELU:
            d = d * (cache.pre[i] > 0.0)
        inp = cache.post[i - 1] if i > 0 else cache.x
        kh, kw = layer.weights.shape[2:]
        grads[i] = LayerGrads(
            weights=_conv_weight_grad(inp, d, kh, kw),
            biases=d.sum(axis=(1, 2)),
        )
        if i > 0:
            d = _conv_input_grad(d, layer.weights)
    return grads


@dataclass(frozen=True)
class LossConfig:
    """Weights of the regularized training loss.

    alpha scales the rank surrogate, beta the (negated) sharpness term,
    gamma the filter-bank measure; delta is the rank-surrogate width.
    """

    alpha: float = 1e-5
    beta: float = 5e-3
    gamma: float = 1e-7
    delta: float = 0.01
    prior_padding: Padding = Padding.REPLICATE

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.gamma < 0:
            raise ValueError("loss weights must be non-negative")
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")


@dataclass
class LossParts:
    mse: float
    lowrank: float
    sharpness: float
    filter_measure: float


def loss_terms(y, y_g, cfg: LossConfig, filters) -> tuple[float, float, float]:
    """The per-sample loss parts: (mse, lowrank, sharpness).

    The filter measure is not included; it depends only on the bank and the
    reference patches, so batched callers evaluate it once per update.
    """
    a = as_image(y)
    b = as_image(y_g)
    if a.shape != b.shape:
        raise ValueError(f"output {a.shape} and target {b.shape} shapes differ")
    bank = as_filter_bank(filters)
    diff = b - a
    mse = 0.5 * float(np.sum(diff * diff))
    lowrank = rank_surrogate(a, cfg.delta)
    sharpness = v_mod(a, bank, cfg.prior_padding)
    return mse, lowrank, sharpness


def combine_loss(cfg: LossConfig, mse: float, lowrank: float, sharpness: float, filter_measure: float) -> float:
    return mse + cfg.alpha * lowrank - cfg.beta * sharpness + cfg.gamma * filter_measure


def loss_dnsp(y, y_g, cfg: LossConfig, filters, smooth=(), sharp=()) -> tuple[float, LossParts]:
    """Regularized loss and its four parts for one output/target pair.

    total = 0.5 * ||y_g - y||_F^2 + alpha * lowrank - beta * sharpness
            + gamma * filter_measure

    The lowrank and sharpness parts are always evaluated (they are cheap
    diagnostics); the filter measure needs reference patches and is reported
    as 0 when both lists are empty and gamma is 0.
    """
    mse, lowrank, sharpness = loss_terms(y, y_g, cfg, filters)
    if len(smooth) == 0 and len(sharp) == 0:
        if cfg.gamma != 0.0:
            raise ValueError("gamma > 0 requires smooth and sharp reference patches")
        filter_measure = 0.0
    else:
        filter_measure = sharpness_measure(as_filter_bank(filters), smooth, sharp, cfg.prior_padding)
    total = combine_loss(cfg, mse, lowrank, sharpness, filter_measure)
    return total, LossParts(mse, lowrank, sharpness, filter_measure)


def output_grad(y, y_g, cfg: LossConfig, filters) -> np.ndarray:
    """Gradient of the loss w.r.t. the network output image.

    dE/dY = -(y_g - y) + alpha * d(lowrank)/dY - beta * d(sharpness)/dY.
    Zero-weighted terms are skipped outright so the alpha=beta=0 case is
    bitwise plain MSE.
    """
    a = as_image(y)
    b = as_image(y_g)
    if a.shape != b.shape:
        raise ValueError(f"output {a.shape} and target {b.shape} shapes differ")
    grad = a - b
    if cfg.alpha != 0.0:
        grad = grad + cfg.alpha * rank_surrogate_grad(a, cfg.delta)
    if cfg.beta != 0.0:
        grad = grad - cfg.beta * v_mod_grad_image(a, as_filter_bank(filters), cfg.prior_padding)
    return grad
