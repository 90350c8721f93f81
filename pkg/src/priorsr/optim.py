"""Plain SGD and Adam on flat lists of parameter arrays.

Both steps are pure: they return fresh arrays and leave inputs untouched, so
two runs from the same state are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _check_aligned(params, grads):
    if len(params) != len(grads):
        raise ValueError(f"{len(params)} parameter arrays vs {len(grads)} gradient arrays")
    for p, g in zip(params, grads):
        if p.shape != g.shape:
            raise ValueError(f"parameter shape {p.shape} does not match gradient shape {g.shape}")


def sgd_step(params: list[np.ndarray], grads: list[np.ndarray], lr: float) -> list[np.ndarray]:
    """One gradient-descent update: theta <- theta - lr * grad."""
    _check_aligned(params, grads)
    return [p - lr * g for p, g in zip(params, grads)]


@dataclass
class AdamState:
    """First/second moment accumulators and the step counter."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0

    @classmethod
    def initial(cls, params: list[np.ndarray]) -> "AdamState":
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params])


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[list[np.ndarray], AdamState]:
    """Bias-corrected Adam update; returns the new parameters and state."""
    _check_aligned(params, grads)
    _check_aligned(params, state.m)
    _check_aligned(params, state.v)
    t = state.step + 1
    new_m, new_v, new_p = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m1 = beta1 * m + (1.0 - beta1) * g
        v1 = beta2 * v + (1.0 - beta2) * (g * g)
        m_hat = m1 / (1.0 - beta1**t)
        v_hat = v1 / (1.0 - beta2**t)
        new_p.append(p - lr * m_hat / (np.sqrt(v_hat) + eps))
        new_m.append(m1)
        new_v.append(v1)
    return new_p, AdamState(m=new_m, v=new_v, step=t)
