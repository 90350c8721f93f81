"""Flat `key = value` run-configuration files.

Lines are `key = value`; `#` starts a comment; blank lines are ignored.
Unknown and duplicate keys are rejected. Keys not present fall back to the
library defaults, and the resolved configuration is what gets echoed into
checkpoints and reports.

Recognized keys:

    scale, blur_sigma, patch_size, patch_stride, batch_size, epochs,
    learning_rate, optimizer (sgd|adam), n_sharp_filters, freeze_filters,
    seed, alpha, beta, gamma, delta, prior_padding (zero|replicate),
    data_dir, exclude (comma-separated image indices)
"""

from __future__ import annotations

from dataclasses import dataclass

from .imageops import Padding
from .network import LossConfig
from .train import Optimizer, TrainConfig


class ConfigError(ValueError):
    """Malformed or inconsistent run-configuration file."""


_INT_KEYS = {"scale", "patch_size", "patch_stride", "batch_size", "epochs", "n_sharp_filters", "seed"}
_FLOAT_KEYS = {"blur_sigma", "learning_rate", "alpha", "beta", "gamma", "delta"}
_BOOL_KEYS = {"freeze_filters"}
KNOWN_KEYS = (
    _INT_KEYS
    | _FLOAT_KEYS
    | _BOOL_KEYS
    | {"optimizer", "prior_padding", "data_dir", "exclude"}
)


@dataclass
class RunConfig:
    train: TrainConfig
    data_dir: str | None = None
    exclude: tuple[int, ...] = ()


def _parse_bool(key: str, value: str) -> bool:
    low = value.lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ConfigError(f"{key}: expected true/false, got {value!r}")


def parse_run_config(text: str, source: str = "<config>") -> RunConfig:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        raw[key] = value

    kwargs: dict = {}
    loss_kwargs: dict = {}
    try:
        for key in _INT_KEYS & raw.keys():
            kwargs[key] = int(raw[key])
        for key in _FLOAT_KEYS & raw.keys():
            value = float(raw[key])
            if key in ("blur_sigma", "learning_rate"):
                kwargs[key] = value
            else:
                loss_kwargs[key] = value
        for key in _BOOL_KEYS & raw.keys():
            kwargs[key] = _parse_bool(key, raw[key])
        if "optimizer" in raw:
            kwargs["optimizer"] = Optimizer(raw["optimizer"].lower())
        if "prior_padding" in raw:
            loss_kwargs["prior_padding"] = Padding(raw["prior_padding"].lower())
        exclude: tuple[int, ...] = ()
        if raw.get("exclude", "").strip():
            exclude = tuple(int(tok) for tok in raw["exclude"].split(","))
        train = TrainConfig(loss=LossConfig(**loss_kwargs), **kwargs)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return RunConfig(train=train, data_dir=raw.get("data_dir"), exclude=exclude)


def load_run_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as f:
        return parse_run_config(f.read(), source=str(path))


def dump_run_config(run: RunConfig) -> str:
    """Serialize the resolved configuration back to key = value text."""
    cfg = run.train
    lines = [
        "# resolved run configuration",
        f"scale = {cfg.scale}",
        f"blur_sigma = {cfg.blur_sigma!r}",
        f"patch_size = {cfg.patch_size}",
        f"patch_stride = {cfg.patch_stride}",
        f"batch_size = {cfg.batch_size}",
        f"epochs = {cfg.epochs}",
        f"learning_rate = {cfg.learning_rate!r}",
        f"optimizer = {cfg.optimizer.value}",
        f"n_sharp_filters = {cfg.n_sharp_filters}",
        f"freeze_filters = {str(cfg.freeze_filters).lower()}",
        f"seed = {cfg.seed}",
        f"alpha = {cfg.loss.alpha!r}",
        f"beta = {cfg.loss.beta!r}",
        f"gamma = {cfg.loss.gamma!r}",
        f"delta = {cfg.loss.delta!r}",
        f"prior_padding = {cfg.loss.prior_padding.value}",
    ]
    if run.data_dir is not None:
        lines.append(f"data_dir = {run.data_dir}")
    if run.exclude:
        lines.append("exclude = " + ",".join(str(i) for i in run.exclude))
    return "\n".join(lines) + "\n"
