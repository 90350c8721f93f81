"""Binary checkpoints for trained models.

Layout (little-endian):

    bytes 0..3   magic "DNSP"
    bytes 4..7   u32 format version (currently 1)
    bytes 8..11  u32 header length N
    N bytes      UTF-8 JSON header: architecture, config echo, epoch,
                 optimizer step, and the name/shape of every array that
                 follows
    rest         raw float64 arrays, C order, in header declaration order

The JSON is serialized with sorted keys and fixed separators, and floats
round-trip exactly through repr, so save/load/save reproduces the file
byte for byte.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .network import Activation, ConvLayer, LayerSpec, NetworkParams, validate_arch
from .optim import AdamState
from .train import Optimizer, TrainConfig
from .network import LossConfig
from .imageops import Padding

MAGIC = b"DNSP"
VERSION = 1


class CheckpointError(Exception):
    """Structurally invalid checkpoint file."""


class CheckpointVersionError(CheckpointError):
    """Checkpoint format version is not supported."""


@dataclass
class Checkpoint:
    arch: list[LayerSpec]
    layers: NetworkParams
    bank: np.ndarray
    epoch: int
    config: TrainConfig
    adam: AdamState | None = None
    version: int = VERSION


def config_to_dict(config: TrainConfig) -> dict:
    return {
        "scale": config.scale,
        "blur_sigma": config.blur_sigma,
        "patch_size": config.patch_size,
        "patch_stride": config.patch_stride,
        "batch_size": config.batch_size,
        "epochs": config.epochs,
        "learning_rate": config.learning_rate,
        "optimizer": config.optimizer.value,
        "n_sharp_filters": config.n_sharp_filters,
        "freeze_filters": config.freeze_filters,
        "seed": config.seed,
        "loss": {
            "alpha": config.loss.alpha,
            "beta": config.loss.beta,
            "gamma": config.loss.gamma,
            "delta": config.loss.delta,
            "prior_padding": config.loss.prior_padding.value,
        },
    }


def config_from_dict(d: dict) -> TrainConfig:
    loss = d["loss"]
    return TrainConfig(
        scale=d["scale"],
        blur_sigma=d["blur_sigma"],
        patch_size=d["patch_size"],
        patch_stride=d["patch_stride"],
        batch_size=d["batch_size"],
        epochs=d["epochs"],
        learning_rate=d["learning_rate"],
        optimizer=Optimizer(d["optimizer"]),
        loss=LossConfig(
            alpha=loss["alpha"],
            beta=loss["beta"],
            gamma=loss["gamma"],
            delta=loss["delta"],
            prior_padding=Padding(loss["prior_padding"]),
        ),
        n_sharp_filters=d["n_sharp_filters"],
        freeze_filters=d["freeze_filters"],
        seed=d["seed"],
    )


def _arch_to_json(arch: list[LayerSpec]) -> list[dict]:
    return [
        {
            "kernel_h": s.kernel_h,
            "kernel_w": s.kernel_w,
            "in_channels": s.in_channels,
            "out_channels": s.out_channels,
            "activation": s.activation.value,
        }
        for s in arch
    ]


def _arch_from_json(items: list[dict]) -> list[LayerSpec]:
    return [
        LayerSpec(
            kernel_h=it["kernel_h"],
            kernel_w=it["kernel_w"],
            in_channels=it["in_channels"],
            out_channels=it["out_channels"],
            activation=Activation(it["activation"]),
        )
        for it in items
    ]


def _collect_arrays(ckpt: Checkpoint) -> list[tuple[str, np.ndarray]]:
    arrays: list[tuple[str, np.ndarray]] = []
    for i, layer in enumerate(ckpt.layers):
        arrays.append((f"layer{i}.weights", layer.weights))
        arrays.append((f"layer{i}.biases", layer.biases))
    arrays.append(("bank", ckpt.bank))
    if ckpt.adam is not None:
        for i, m in enumerate(ckpt.adam.m):
            arrays.append((f"adam.m{i}", m))
        for i, v in enumerate(ckpt.adam.v):
            arrays.append((f"adam.v{i}", v))
    return arrays


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    validate_arch(ckpt.arch)
    if len(ckpt.layers) != len(ckpt.arch):
        raise ValueError("layer count does not match architecture")
    arrays = _collect_arrays(ckpt)
    header = {
        "arch": _arch_to_json(ckpt.arch),
        "epoch": ckpt.epoch,
        "config": config_to_dict(ckpt.config),
        "adam_step": None if ckpt.adam is None else ckpt.adam.step,
        "arrays": [{"name": name, "shape": list(a.shape)} for name, a in arrays],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for _, a in arrays:
            f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def _read_exact(f, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise CheckpointError(f"truncated checkpoint: expected {n} bytes for {what}, got {len(data)}")
    return data


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, "magic")
        if magic != MAGIC:
            raise CheckpointError(f"bad magic {magic!r}; not a checkpoint file")
        (version,) = struct.unpack("<I", _read_exact(f, 4, "version"))
        if version != VERSION:
            raise CheckpointVersionError(f"unsupported checkpoint version {version} (expected {VERSION})")
        (hlen,) = struct.unpack("<I", _read_exact(f, 4, "header length"))
        try:
            header = json.loads(_read_exact(f, hlen, "header"))
        except ValueError as exc:
            raise CheckpointError(f"malformed checkpoint header: {exc}") from exc
        arrays: dict[str, np.ndarray] = {}
        order: list[str] = []
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            raw = _read_exact(f, 8 * count, entry["name"])
            arrays[entry["name"]] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
            order.append(entry["name"])

    arch = _arch_from_json(header["arch"])
    validate_arch(arch)
    layers = []
    for i, spec in enumerate(arch):
        try:
            w = arrays[f"layer{i}.weights"]
            b = arrays[f"layer{i}.biases"]
        except KeyError as exc:
            raise CheckpointError(f"checkpoint is missing array {exc}") from exc
        if w.shape != (spec.out_channels, spec.in_channels, spec.kernel_h, spec.kernel_w):
            raise CheckpointError(f"layer {i} weight shape {w.shape} does not match architecture")
        layers.append(ConvLayer(w, b, spec.activation))
    if "bank" not in arrays:
        raise CheckpointError("checkpoint is missing the sharpness filter bank")
    adam = None
    if header["adam_step"] is not None:
        m = [arrays[name] for name in order if name.startswith("adam.m")]
        v = [arrays[name] for name in order if name.startswith("adam.v")]
        adam = AdamState(m=m, v=v, step=header["adam_step"])
    return Checkpoint(
        arch=arch,
        layers=layers,
        bank=arrays["bank"],
        epoch=header["epoch"],
        config=config_from_dict(header["config"]),
        adam=adam,
        version=version,
    )
