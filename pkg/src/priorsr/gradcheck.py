"""Finite-difference verification of every hand-derived gradient.

Each check draws random instances, computes the analytic gradient, and
compares it against central differences of the scalar objective with step
1e-6, all in float64. The reported error is normwise relative:

    max|analytic - numeric| / max(max|analytic|, max|numeric|)

which is robust where individual entries pass through zero. Draws whose
singular-value spacing falls below `priors.DEGENERATE_GAP` are skipped for
the rank surrogate (the gradient is not well defined there), and network
draws with a pre-activation near the ReLU kink are redrawn.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .imageops import Padding, svd
from .network import (
    Activation,
    ConvLayer,
    LayerSpec,
    LossConfig,
    backward,
    forward,
    loss_dnsp,
    output_grad,
)
from .priors import (
    DEGENERATE_GAP,
    LAPLACIAN,
    rank_surrogate,
    rank_surrogate_grad,
    sharpness_measure,
    sharpness_measure_grad,
    singular_value_gap,
    v_mod,
    v_mod_grad_filters,
    v_mod_grad_image,
    variance_of_laplacian,
    variance_of_laplacian_grad,
)

FD_STEP = 1e-6

RANK_TOL = 1e-4
PRIOR_TOL = 1e-8
NETWORK_TOL = 1e-6

_RELU_KINK_MARGIN = 1e-4


@dataclass
class CheckResult:
    name: str
    max_rel_err: float
    tolerance: float
    draws: int
    skipped: int = 0

    @property
    def passed(self) -> bool:
        return self.max_rel_err <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{self.name:<24s} max rel err {self.max_rel_err:.3e} "
            f"(tol {self.tolerance:.0e}, draws {self.draws}, skipped {self.skipped}) {status}"
        )


def finite_difference_gradient(f, x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Central differences of scalar f at every entry of x."""
    grad = np.zeros_like(x, dtype=np.float64)
    flat = grad.reshape(-1)
    xw = x.astype(np.float64).copy()
    xf = xw.reshape(-1)
    for i in range(xf.size):
        orig = xf[i]
        xf[i] = orig + step
        hi = f(xw)
        xf[i] = orig - step
        lo = f(xw)
        xf[i] = orig
        flat[i] = (hi - lo) / (2.0 * step)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Normwise relative max error between two gradient arrays."""
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    den = max(np.max(np.abs(a)), np.max(np.abs(n)))
    if den == 0.0:
        return 0.0
    return float(np.max(np.abs(a - n)) / den)


def check_rank_gradient(seed: int = 0, size: int = 12, draws: int = 50) -> CheckResult:
    """Rank-surrogate gradient vs finite differences on distinct-spectrum draws.

    Matrices are scaled so singular values straddle the surrogate width,
    where the gradient is farthest from zero.
    """
    rng = np.random.default_rng(seed)
    delta = 0.01
    worst = 0.0
    accepted = 0
    skipped = 0
    while accepted < draws:
        y = rng.normal(0.0, 1.0, (size, size)) * (0.5 * delta)
        if singular_value_gap(svd(y).sigma) < DEGENERATE_GAP:
            skipped += 1
            continue
        analytic = rank_surrogate_grad(y, delta)
        numeric = finite_difference_gradient(lambda m: rank_surrogate(m, delta), y)
        worst = max(worst, relative_error(analytic, numeric))
        accepted += 1
    return CheckResult("rank-surrogate", worst, RANK_TOL, accepted, skipped)


def check_laplacian_variance_gradient(seed: int = 0, size: int = 10, draws: int = 50) -> CheckResult:
    """Variance-of-Laplacian image gradient vs finite differences, both paddings."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(draws):
        y = rng.uniform(0.0, 1.0, (size, size))
        padding = Padding.REPLICATE if i % 2 == 0 else Padding.ZERO
        analytic = variance_of_laplacian_grad(y, padding)
        numeric = finite_difference_gradient(lambda m: variance_of_laplacian(m, padding), y)
        worst = max(worst, relative_error(analytic, numeric))
    return CheckResult("laplacian-variance", worst, PRIOR_TOL, draws)


def check_v_mod_image_gradient(seed: int = 0, size: int = 10, draws: int = 50) -> CheckResult:
    """Bank-averaged variance gradient w.r.t. the image vs finite differences."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(draws):
        y = rng.uniform(0.0, 1.0, (size, size))
        bank = LAPLACIAN + rng.normal(0.0, 0.3, (3, 3, 3))
        padding = Padding.REPLICATE if i % 2 == 0 else Padding.ZERO
        analytic = v_mod_grad_image(y, bank, padding)
        numeric = finite_difference_gradient(lambda m: v_mod(m, bank, padding), y)
        worst = max(worst, relative_error(analytic, numeric))
    return CheckResult("bank-variance/image", worst, PRIOR_TOL, draws)


def check_v_mod_filter_gradient(seed: int = 0, size: int = 10, draws: int = 50) -> CheckResult:
    """Bank-averaged variance gradient w.r.t. filter coefficients."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(draws):
        y = rng.uniform(0.0, 1.0, (size, size))
        bank = LAPLACIAN + rng.normal(0.0, 0.3, (2, 3, 3))
        padding = Padding.REPLICATE if i % 2 == 0 else Padding.ZERO
        analytic = v_mod_grad_filters(y, bank, padding)
        numeric = finite_difference_gradient(lambda b: v_mod(y, b, padding), bank)
        worst = max(worst, relative_error(analytic, numeric))
    return CheckResult("bank-variance/filters", worst, PRIOR_TOL, draws)


def check_sharpness_measure_gradient(seed: int = 0, size: int = 12, draws: int = 50) -> CheckResult:
    """Filter-bank patch measure gradient vs finite differences.

    Filters are drawn at reduced magnitude: the measure is quadratic in the
    filter while its gradient is linear, so the finite-difference noise
    floor (proportional to the measure) shrinks relative to the gradient.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for i in range(draws):
        smooth = [rng.uniform(0.0, 1.0, (size, size)) for _ in range(2)]
        sharp = [rng.uniform(0.0, 1.0, (size, size)) for _ in range(2)]
        bank = 0.3 * LAPLACIAN + rng.normal(0.0, 0.1, (2, 3, 3))
        padding = Padding.REPLICATE if i % 2 == 0 else Padding.ZERO
        analytic = sharpness_measure_grad(bank, smooth, sharp, padding)
        numeric = finite_difference_gradient(
            lambda b: sharpness_measure(b, smooth, sharp, padding), bank
        )
        worst = max(worst, relative_error(analytic, numeric))
    return CheckResult("sharpness-measure", worst, PRIOR_TOL, draws)


def _random_tiny_net(rng) -> list[ConvLayer]:
    arch = [
        LayerSpec(3, 3, 1, 3, Activation.RELU),
        LayerSpec(3, 3, 3, 1, Activation.IDENTITY),
    ]
    return [
        ConvLayer(
            rng.normal(0.0, 0.3, (s.out_channels, s.in_channels, s.kernel_h, s.kernel_w)),
            rng.normal(0.0, 0.1, s.out_channels),
            s.activation,
        )
        for s in arch
    ]


def check_network_gradients(seed: int = 0, size: int = 8, draws: int = 3) -> CheckResult:
    """End-to-end loss gradients for every weight, bias, and filter coefficient.

    Uses a 2-layer net with all loss terms active. The surrogate width is
    widened to 0.3 so the output spectrum actually exercises the rank term.
    """
    rng = np.random.default_rng(seed)
    # Weights well above the training defaults: with tiny beta/gamma the bank
    # gradient would sit below the finite-difference noise floor of the
    # MSE-dominated loss value, checking nothing.
    cfg = LossConfig(alpha=0.1, beta=0.1, gamma=0.01, delta=0.3)
    worst = 0.0
    accepted = 0
    skipped = 0
    while accepted < draws:
        layers = _random_tiny_net(rng)
        x = rng.uniform(0.0, 1.0, (size, size))
        y_g = rng.uniform(0.0, 1.0, (size, size))
        bank = LAPLACIAN + rng.normal(0.0, 0.1, (2, 3, 3))
        smooth = [rng.uniform(0.0, 1.0, (size, size))]
        sharp = [rng.uniform(0.0, 1.0, (size, size))]

        y, cache = forward(layers, x)
        kink = min(float(np.min(np.abs(p))) for l, p in zip(layers, cache.pre) if l.activation is Activation.RELU)
        if kink < _RELU_KINK_MARGIN or singular_value_gap(svd(y).sigma) < DEGENERATE_GAP:
            skipped += 1
            continue

        grads = backward(layers, cache, output_grad(y, y_g, cfg, bank))
        bank_grad = -cfg.beta * v_mod_grad_filters(y, bank, cfg.prior_padding)
        bank_grad += cfg.gamma * sharpness_measure_grad(bank, smooth, sharp, cfg.prior_padding)

        def loss_at(ls, bk):
            out, _ = forward(ls, x)
            total, _ = loss_dnsp(out, y_g, cfg, bk, smooth, sharp)
            return total

        for i, layer in enumerate(layers):
            numeric_w = finite_difference_gradient(
                lambda w: loss_at(
                    [ConvLayer(w, layer.biases, layer.activation) if j == i else lj for j, lj in enumerate(layers)],
                    bank,
                ),
                layer.weights,
            )
            worst = max(worst, relative_error(grads[i].weights, numeric_w))
            numeric_b = finite_difference_gradient(
                lambda b: loss_at(
                    [ConvLayer(layer.weights, b, layer.activation) if j == i else lj for j, lj in enumerate(layers)],
                    bank,
                ),
                layer.biases,
            )
            worst = max(worst, relative_error(grads[i].biases, numeric_b))
        numeric_bank = finite_difference_gradient(lambda b: loss_at(layers, b), bank)
        worst = max(worst, relative_error(bank_grad, numeric_bank))
        accepted += 1
    return CheckResult("network-loss", worst, NETWORK_TOL, accepted, skipped)


CHECKS = {
    "rank": (check_rank_gradient,),
    "sharpness": (check_laplacian_variance_gradient,),
    "vmod": (check_v_mod_image_gradient, check_v_mod_filter_gradient),
    "smeasure": (check_sharpness_measure_gradient,),
    "network": (check_network_gradients,),
}


def run_checks(which: str = "all", seed: int = 0, size: int | None = None) -> list[CheckResult]:
    """Run one named check group, or all of them."""
    if which == "all":
        names = list(CHECKS)
    elif which in CHECKS:
        names = [which]
    else:
        raise ValueError(f"unknown check {which!r}; expected one of {sorted(CHECKS)} or 'all'")
    results = []
    for name in names:
        for fn in CHECKS[name]:
            results.append(fn(seed=seed) if size is None else fn(seed=seed, size=size))
    return results
