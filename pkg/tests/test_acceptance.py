"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines inline. The desk-scale training run is shared across the criterion-6
checks through a module fixture.
"""

import math
import struct
import time

import numpy as np
import pytest

from priorsr.checkpoint import load_checkpoint, save_checkpoint
from priorsr.cli import main
from priorsr.data import (
    PatchDataset,
    PatchPair,
    build_patch_dataset,
    simulate_lr,
    synthetic_textures,
)
from priorsr.gradcheck import run_checks
from priorsr.imageops import Padding, conv2d_same, downsample, gaussian_blur
from priorsr.metrics import psnr, rank_study, sharpness_study, ssim
from priorsr.network import (
    Activation,
    ConvLayer,
    LayerSpec,
    LossConfig,
    backward,
    forward,
    init_params,
)
from priorsr.optim import AdamState, adam_step
from priorsr.priors import (
    LAPLACIAN,
    v_mod,
    v_mod_grad_image,
    variance_of_laplacian,
    variance_of_laplacian_grad,
)
from priorsr.train import Optimizer, TrainConfig, infer, train, train_with_state

# Bundled synthetic dataset: 20 procedurally generated 80x80 textures for
# training (seed 42) and 5 held-out ones (seed 900), both deterministic.
TRAIN_TEXTURE_SEED = 42
HELDOUT_TEXTURE_SEED = 900
RUN_SEED = 0


def report(number, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[criterion {number}] {name}: {status}{suffix}")


# ---------------------------------------------------------------------------
# 1. Gradient-oracle suite
# ---------------------------------------------------------------------------


def test_criterion_1_gradient_oracle_suite():
    t0 = time.perf_counter()
    results = run_checks("all", seed=0)
    runtime = time.perf_counter() - t0
    for res in results:
        print("   ", res.line())
    ok = all(r.passed for r in results) and runtime < 120.0
    report(1, "gradient oracle suite", ok, f"{runtime:.1f}s")
    assert runtime < 120.0
    for res in results:
        assert res.passed, res.line()


# ---------------------------------------------------------------------------
# 2. Closed-form stencil vs adjoint gradient, and the dropped mean term
# ---------------------------------------------------------------------------


def test_criterion_2_stencil_simplification():
    rng = np.random.default_rng(2)
    worst_interior = 0.0
    worst_mean_term = 0.0
    for _ in range(20):
        y = rng.uniform(0, 1, (9, 9))
        p = conv2d_same(y, LAPLACIAN, Padding.ZERO)
        d = 2.0 / (p.size - 1) * (p - p.mean())
        grad = variance_of_laplacian_grad(y, Padding.ZERO)
        stencil = 4.0 * d[1:-1, 1:-1] - (d[:-2, 1:-1] + d[2:, 1:-1] + d[1:-1, :-2] + d[1:-1, 2:])
        worst_interior = max(worst_interior, float(np.max(np.abs(grad[1:-1, 1:-1] - stencil))))
        worst_mean_term = max(worst_mean_term, abs(float(np.sum(p - p.mean()))))
    ok = worst_interior <= 1e-12 and worst_mean_term <= 1e-12
    report(2, "closed-form stencil agreement", ok,
           f"interior {worst_interior:.1e}, mean-term {worst_mean_term:.1e}")
    assert worst_interior <= 1e-12
    assert worst_mean_term <= 1e-12


# ---------------------------------------------------------------------------
# 3. Rank study: monotone PSNR and the constructed low-rank fixture
# ---------------------------------------------------------------------------


def test_criterion_3_rank_study_properties():
    monotone = True
    for img in synthetic_textures(3, 48, seed=31):
        rows = rank_study(img, list(range(0, 49, 6)))
        values = [r.value for r in rows]
        monotone &= all(a <= b or b == math.inf for a, b in zip(values, values[1:]))

    rng = np.random.default_rng(10)
    base = rng.uniform(0, 1, (64, 20)) @ rng.uniform(0, 1, (20, 64))
    base *= 0.95 / base.max()
    noise = rng.normal(size=(64, 64))
    noise *= 1e-6 / np.linalg.norm(noise)
    fixture = base + noise
    rows = {int(r.parameter): r.value for r in rank_study(fixture, [10, 20])}
    jump = rows[20] - rows[10]
    ok = monotone and jump > 20.0
    report(3, "rank study (low-rank structure)", ok, f"jump {jump:.1f} dB")
    assert monotone
    assert jump > 20.0


# ---------------------------------------------------------------------------
# 4. Blur study: variance of the Laplacian strictly decreases with blur
# ---------------------------------------------------------------------------


def test_criterion_4_blur_strictly_reduces_sharpness():
    zetas = [0.5, 1.0, 1.5, 2.0, 2.5]
    ok = True
    fixtures = synthetic_textures(4, 40, seed=41)
    rng = np.random.default_rng(4)
    fixtures.append(rng.uniform(0, 1, (40, 40)))
    for img in fixtures:
        values = [r.value for r in sharpness_study(img, zetas)]
        ok &= all(a > b for a, b in zip(values, values[1:]))
    report(4, "blur monotonically reduces Laplacian variance", ok)
    assert ok


# ---------------------------------------------------------------------------
# 5. Special-case reductions
# ---------------------------------------------------------------------------


def test_criterion_5_special_case_reductions():
    # (a) alpha=beta=gamma=0 training is bitwise plain-MSE training.
    arch = [LayerSpec(3, 3, 1, 2, Activation.RELU), LayerSpec(3, 3, 2, 1, Activation.IDENTITY)]
    rng = np.random.default_rng(55)
    pairs = [PatchPair(rng.uniform(0, 1, (10, 10)), rng.uniform(0, 1, (10, 10))) for _ in range(5)]
    ds = PatchDataset(pairs=pairs)
    cfg = TrainConfig(
        epochs=2, batch_size=2, learning_rate=1e-3, optimizer=Optimizer.ADAM,
        loss=LossConfig(alpha=0, beta=0, gamma=0), seed=6,
    )
    trained, _, _ = train(cfg, ds, arch=arch)

    layers = init_params(arch, cfg.seed)
    shuffle_rng = np.random.default_rng(cfg.seed + 2)
    params = []
    for l in layers:
        params.extend([l.weights, l.biases])
    state = AdamState.initial(params)
    for _ in range(cfg.epochs):
        order = shuffle_rng.permutation(len(pairs))
        for start in range(0, len(pairs), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            sums = None
            for j in batch:
                cur = [ConvLayer(params[2 * i], params[2 * i + 1], s.activation) for i, s in enumerate(arch)]
                y, cache = forward(cur, pairs[j].x_s)
                flat = []
                for g in backward(cur, cache, y - pairs[j].y_g):
                    flat.extend([g.weights, g.biases])
                sums = flat if sums is None else [a + b for a, b in zip(sums, flat)]
            inv = 1.0 / len(batch)
            params, state = adam_step(params, [g * inv for g in sums], state, cfg.learning_rate)
    mse_identical = all(
        np.array_equal(trained[i].weights, params[2 * i]) and np.array_equal(trained[i].biases, params[2 * i + 1])
        for i in range(len(arch))
    )

    # (b) a single-Laplacian bank collapses the bank measures onto the
    # fixed-Laplacian ones bit for bit.
    collapse = True
    for mode in Padding:
        y = rng.uniform(0, 1, (14, 14))
        collapse &= v_mod(y, LAPLACIAN[None], mode) == variance_of_laplacian(y, mode)
        collapse &= np.array_equal(
            v_mod_grad_image(y, LAPLACIAN[None], mode), variance_of_laplacian_grad(y, mode)
        )

    ok = mse_identical and collapse
    report(5, "special-case reductions", ok,
           f"mse bitwise {mse_identical}, collapse bitwise {collapse}")
    assert mse_identical
    assert collapse


# ---------------------------------------------------------------------------
# 6. Desk-scale training on the bundled synthetic dataset
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def desk_scale_run():
    images = synthetic_textures(20, 80, seed=TRAIN_TEXTURE_SEED)
    dataset = build_patch_dataset(images, scale=2, blur_sigma=1.0, patch_size=40, stride=20)
    config = TrainConfig(epochs=10, seed=RUN_SEED)
    t0 = time.perf_counter()
    result = train_with_state(config, dataset)
    runtime = time.perf_counter() - t0
    return result, runtime, config


def test_criterion_6a_runtime_budget(desk_scale_run):
    _, runtime, _ = desk_scale_run
    ok = runtime < 300.0
    report("6a", "10 training epochs complete in under 5 minutes", ok, f"{runtime:.1f}s")
    assert ok


def test_criterion_6b_total_loss_strictly_decreases(desk_scale_run):
    result, _, _ = desk_scale_run
    totals = [h.total for h in result.history]
    ok = all(a > b for a, b in zip(totals, totals[1:]))
    report("6b", "total loss strictly decreases over epochs 1-10", ok,
           f"{totals[0]:.2f} -> {totals[-1]:.2f}")
    assert ok


def test_criterion_6c_filter_measure_decreases_early(desk_scale_run):
    result, _, _ = desk_scale_run
    svals = [h.filter_measure for h in result.history[:5]]
    ok = all(a > b for a, b in zip(svals, svals[1:]))
    report("6c", "bank measure decreases over epochs 1-5", ok,
           f"{svals[0]:.4f} -> {svals[-1]:.4f}")
    assert ok


def test_criterion_6d_model_matches_bicubic_on_heldout(desk_scale_run):
    # As stated, the trained model must reach at least the bicubic baseline
    # on held-out images after the 10-epoch desk-scale run. The three other
    # clauses pass; this one is structurally out of reach at this step
    # budget (30 optimizer updates at learning rate 1e-4 move parameters by
    # at most ~3e-3 from an init of scale 1e-3, so the network output cannot
    # approach the data range). The assertion is kept faithful rather than
    # weakened; see the test output for the measured gap.
    result, _, config = desk_scale_run
    held = synthetic_textures(5, 80, seed=HELDOUT_TEXTURE_SEED)
    model_vals, bicubic_vals = [], []
    for hr in held:
        lr = downsample(gaussian_blur(hr, config.blur_sigma), config.scale)
        model_vals.append(psnr(infer(result.layers, lr, config.scale), hr))
        bicubic_vals.append(psnr(simulate_lr(hr, config.scale, config.blur_sigma), hr))
    model_mean = float(np.mean(model_vals))
    bicubic_mean = float(np.mean(bicubic_vals))
    ok = model_mean >= bicubic_mean
    report("6d", "held-out model PSNR reaches bicubic baseline", ok,
           f"model {model_mean:.2f} dB vs bicubic {bicubic_mean:.2f} dB")
    assert ok, (
        f"model {model_mean:.2f} dB < bicubic {bicubic_mean:.2f} dB after 10 epochs; "
        "30 Adam steps at lr 1e-4 cannot lift the tiny-init network output to the "
        "data range (see decisions ledger for the step-budget analysis)"
    )


# ---------------------------------------------------------------------------
# 7. Metric sanity
# ---------------------------------------------------------------------------


def test_criterion_7_metric_sanity():
    ident = psnr(np.zeros((6, 6)), np.zeros((6, 6))) == math.inf
    twenty = abs(psnr(np.zeros((6, 6)), np.full((6, 6), 0.1)) - 20.0) < 1e-12
    zero_db = abs(psnr(np.zeros((6, 6)), np.ones((6, 6)))) < 1e-12
    a = np.random.default_rng(7).uniform(0, 1, (16, 16))
    ssim_one = ssim(a, a.copy()) == 1.0
    rng = np.random.default_rng(70)
    bounds = True
    for _ in range(100):
        x = rng.uniform(0, 1, (12, 12))
        y = rng.uniform(0, 1, (12, 12))
        bounds &= -1.0 <= ssim(x, y) <= 1.0
    ok = ident and twenty and zero_db and ssim_one and bounds
    report(7, "metric sanity", ok)
    assert ok


# ---------------------------------------------------------------------------
# 8. Determinism and file formats
# ---------------------------------------------------------------------------


def test_criterion_8_determinism_and_formats(tmp_path):
    from priorsr.pgm import write_pgm

    data = tmp_path / "hr"
    data.mkdir()
    for i, img in enumerate(synthetic_textures(2, 24, seed=81)):
        write_pgm(data / f"t{i}.pgm", img)
    cfg_path = tmp_path / "run.cfg"
    cfg_path.write_text(
        "scale = 2\npatch_size = 12\npatch_stride = 12\nbatch_size = 8\n"
        "epochs = 2\nseed = 3\nn_sharp_filters = 2\n"
    )
    out1, out2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    assert main(["train", "--config", str(cfg_path), "--data", str(data), "--out", str(out1)]) == 0
    assert main(["train", "--config", str(cfg_path), "--data", str(data), "--out", str(out2)]) == 0
    reruns_identical = (
        out1.read_bytes() == out2.read_bytes()
        and (tmp_path / "a.ckpt.history.csv").read_bytes() == (tmp_path / "b.ckpt.history.csv").read_bytes()
        and (tmp_path / "a.ckpt.history.png").read_bytes() == (tmp_path / "b.ckpt.history.png").read_bytes()
    )

    # Round trip is bit-exact: resaving a loaded checkpoint reproduces the file.
    resaved = tmp_path / "resaved.ckpt"
    save_checkpoint(resaved, load_checkpoint(out1))
    roundtrip_exact = resaved.read_bytes() == out1.read_bytes()

    # Documented exit codes: corrupted magic and future versions are refused.
    corrupt = tmp_path / "corrupt.ckpt"
    blob = bytearray(out1.read_bytes())
    blob[:4] = b"ZZZZ"
    corrupt.write_bytes(bytes(blob))
    img = tmp_path / "in.pgm"
    write_pgm(img, np.full((8, 8), 0.5))
    code_corrupt = main(["infer", "--checkpoint", str(corrupt), "--input", str(img), "--scale", "2", "--output", str(tmp_path / "o.pgm")])

    versioned = tmp_path / "versioned.ckpt"
    blob = bytearray(out1.read_bytes())
    blob[4:8] = struct.pack("<I", 2)
    versioned.write_bytes(bytes(blob))
    code_version = main(["infer", "--checkpoint", str(versioned), "--input", str(img), "--scale", "2", "--output", str(tmp_path / "o.pgm")])

    ok = reruns_identical and roundtrip_exact and code_corrupt == 3 and code_version == 3
    report(8, "determinism and formats", ok,
           f"reruns {reruns_identical}, roundtrip {roundtrip_exact}, exits {code_corrupt}/{code_version}")
    assert reruns_identical
    assert roundtrip_exact
    assert code_corrupt == 3
    assert code_version == 3
