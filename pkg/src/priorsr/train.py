"""Training loop for the prior-regularized network, plus inference.

Seeding scheme (documented so runs are reproducible end to end): network
weights draw from `seed`, the sharpness filter bank from `seed + 1`, and the
epoch shuffles from `seed + 2`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .data import PatchDataset
from .imageops import as_image, bicubic_resize
from .network import (
    ConvLayer,
    LayerSpec,
    LossConfig,
    NetworkParams,
    backward,
    combine_loss,
    default_arch,
    forward,
    init_params,
    init_sharpness_bank,
    loss_terms,
    output_grad,
)
from .optim import AdamState, adam_step, sgd_step
from .priors import as_filter_bank, sharpness_measure, sharpness_measure_grad, v_mod_grad_filters


class Optimizer(Enum):
    SGD = "sgd"
    ADAM = "adam"


@dataclass
class TrainConfig:
    scale: int = 2
    blur_sigma: float = 1.0
    patch_size: int = 40
    patch_stride: int = 20
    batch_size: int = 64
    epochs: int = 50
    learning_rate: float = 1e-4
    optimizer: Optimizer = Optimizer.ADAM
    loss: LossConfig = field(default_factory=LossConfig)
    n_sharp_filters: int = 8
    freeze_filters: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.scale not in (2, 3, 4):
            raise ValueError(f"scale must be 2, 3, or 4, got {self.scale}")
        if not self.blur_sigma > 0:
            raise ValueError("blur_sigma must be positive")
        if self.patch_size < 2 or self.patch_stride < 1:
            raise ValueError("patch_size must be >= 2 and patch_stride >= 1")
        if self.batch_size < 1 or self.epochs < 0:
            raise ValueError("batch_size must be >= 1 and epochs >= 0")
        if self.n_sharp_filters < 1:
            raise ValueError("need at least one sharpness filter")


@dataclass
class EpochStats:
    epoch: int
    total: float
    mse: float
    lowrank: float
    sharpness: float
    filter_measure: float


@dataclass
class TrainResult:
    layers: NetworkParams
    bank: np.ndarray
    history: list[EpochStats]
    adam: AdamState | None = None


def _flatten(layers: NetworkParams, bank: np.ndarray, include_bank: bool) -> list[np.ndarray]:
    flat = []
    for layer in layers:
        flat.append(layer.weights)
        flat.append(layer.biases)
    if include_bank:
        flat.append(bank)
    return flat


def _unflatten(flat, layers: NetworkParams, bank: np.ndarray, include_bank: bool):
    new_layers = [
        ConvLayer(flat[2 * i], flat[2 * i + 1], layer.activation) for i, layer in enumerate(layers)
    ]
    new_bank = flat[-1] if include_bank else bank
    return new_layers, new_bank


def train_with_state(
    config: TrainConfig,
    dataset: PatchDataset,
    arch: list[LayerSpec] | None = None,
    initial_bank: np.ndarray | None = None,
) -> TrainResult:
    """Learn network and sharpness-filter parameters on a patch dataset.

    Per batch, the mean loss gradient over samples drives the network update;
    the filter bank receives ``-beta * mean(dV/dW) + gamma * dS/dW`` unless
    `freeze_filters` is set. The last partial batch is trained on. History
    records per-epoch means of the total loss and its four parts.
    """
    if not dataset.pairs:
        raise ValueError("dataset has no training pairs")
    cfg = config.loss
    if cfg.gamma > 0 and (not dataset.sharp or not dataset.smooth):
        raise ValueError("gamma > 0 requires non-empty sharp and smooth patch sets")

    layers = init_params(arch if arch is not None else default_arch(), config.seed)
    if initial_bank is not None:
        bank = as_filter_bank(initial_bank).copy()
    else:
        bank = init_sharpness_bank(config.n_sharp_filters, config.seed + 1)
    rng = np.random.default_rng(config.seed + 2)

    learn_bank = not config.freeze_filters
    params = _flatten(layers, bank, learn_bank)
    adam = AdamState.initial(params) if config.optimizer is Optimizer.ADAM else None

    history: list[EpochStats] = []
    n = len(dataset.pairs)
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n)
        part_sums = np.zeros(5)  # total, mse, lowrank, sharpness, filter_measure
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            # The filter measure depends only on the bank, which is constant
            # within a batch; evaluate it once instead of per sample.
            if dataset.smooth and dataset.sharp:
                s_val = sharpness_measure(bank, dataset.smooth, dataset.sharp, cfg.prior_padding)
            else:
                s_val = 0.0
            grad_sums: list[np.ndarray] | None = None
            bank_grad_sum = np.zeros_like(bank)
            for j in batch:
                pair = dataset.pairs[j]
                y, cache = forward(layers, pair.x_s)
                mse, lowrank, sharpness = loss_terms(y, pair.y_g, cfg, bank)
                total = combine_loss(cfg, mse, lowrank, sharpness, s_val)
                part_sums += (total, mse, lowrank, sharpness, s_val)
                d_y = output_grad(y, pair.y_g, cfg, bank)
                flat = []
                for g in backward(layers, cache, d_y):
                    flat.append(g.weights)
                    flat.append(g.biases)
                if grad_sums is None:
                    grad_sums = flat
                else:
                    for acc, g in zip(grad_sums, flat):
                        acc += g
                if learn_bank and cfg.beta != 0.0:
                    bank_grad_sum += v_mod_grad_filters(y, bank, cfg.prior_padding)
            inv = 1.0 / len(batch)
            grads = [g * inv for g in grad_sums]
            if learn_bank:
                bank_grad = (-cfg.beta * inv) * bank_grad_sum
                if cfg.gamma != 0.0:
                    bank_grad = bank_grad + cfg.gamma * sharpness_measure_grad(
                        bank, dataset.smooth, dataset.sharp, cfg.prior_padding
                    )
                grads.append(bank_grad)
            if config.optimizer is Optimizer.ADAM:
                params, adam = adam_step(params, grads, adam, config.learning_rate)
            else:
                params = sgd_step(params, grads, config.learning_rate)
            layers, bank = _unflatten(params, layers, bank, learn_bank)
        history.append(EpochStats(epoch, *(float(v) for v in part_sums / n)))
    return TrainResult(layers=layers, bank=bank, history=history, adam=adam)


def train(
    config: TrainConfig,
    dataset: PatchDataset,
    arch: list[LayerSpec] | None = None,
    initial_bank: np.ndarray | None = None,
) -> tuple[NetworkParams, np.ndarray, list[EpochStats]]:
    """train_with_state without the optimizer state, for library callers."""
    result = train_with_state(config, dataset, arch, initial_bank)
    return result.layers, result.bank, result.history


def infer(layers: NetworkParams, lr_image, s: int) -> np.ndarray:
    """Bicubic-upscale the LR image, run the network, clamp to [0, 1]."""
    a = as_image(lr_image)
    x_s = bicubic_resize(a, s)
    y, _ = forward(layers, x_s)
    return np.clip(y, 0.0, 1.0)
