"""PSNR, SSIM, and the rank / blur-sharpness studies."""

import math

import numpy as np
import pytest

from priorsr.data import synthetic_textures
from priorsr.metrics import psnr, rank_study, sharpness_study, ssim


class TestPsnr:
    def test_identical_images_infinite(self):
        a = np.random.default_rng(0).uniform(0, 1, (8, 8))
        assert psnr(a, a.copy()) == math.inf

    def test_twenty_db_case(self):
        # MSE between constants 0 and 0.1 is 0.01 -> 10*log10(1/0.01) = 20.
        assert psnr(np.zeros((6, 6)), np.full((6, 6), 0.1)) == pytest.approx(20.0, abs=1e-12)

    def test_zero_db_case(self):
        assert psnr(np.zeros((6, 6)), np.ones((6, 6))) == pytest.approx(0.0, abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(5)
        a = rng.uniform(0, 1, (12, 12))
        b = rng.uniform(0, 1, (12, 12))
        assert psnr(a, b) == psnr(b, a)

    def test_clamps_before_comparing(self):
        a = np.full((5, 5), 2.0)   # clamps to 1
        b = np.full((5, 5), 1.0)
        assert psnr(a, b) == math.inf

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            psnr(np.zeros((4, 4)), np.zeros((5, 5)))


class TestSsim:
    def test_identity_is_exactly_one(self):
        a = np.random.default_rng(1).uniform(0, 1, (16, 16))
        assert ssim(a, a.copy()) == 1.0

    def test_inverted_image_less_than_one(self):
        a = synthetic_textures(1, 24, seed=2)[0]
        assert ssim(a, 1.0 - a) < 1.0

    def test_bounds_on_random_pairs(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            a = rng.uniform(0, 1, (12, 12))
            b = rng.uniform(0, 1, (12, 12))
            value = ssim(a, b)
            assert -1.0 <= value <= 1.0

    def test_small_perturbation_beats_shuffle(self):
        rng = np.random.default_rng(4)
        a = synthetic_textures(1, 32, seed=7)[0]
        shifted = np.clip(a + 0.05, 0.0, 1.0)
        shuffled = rng.permutation(a.reshape(-1)).reshape(a.shape)
        assert ssim(a, shifted) > ssim(a, shuffled)

    def test_too_small_rejected(self):
        with pytest.raises(ValueError):
            ssim(np.zeros((8, 8)), np.zeros((8, 8)))


class TestRankStudy:
    def test_full_rank_row_infinite(self):
        img = np.random.default_rng(8).uniform(0, 1, (12, 12))
        rows = rank_study(img, [12])
        assert rows[0].value == math.inf

    def test_monotone_nondecreasing(self):
        img = synthetic_textures(1, 32, seed=9)[0]
        rows = rank_study(img, list(range(0, 33, 4)))
        values = [r.value for r in rows]
        assert all(a <= b or b == math.inf for a, b in zip(values, values[1:]))

    def test_exact_rank20_fixture_jump(self):
        # Exact rank-20 matrix plus tiny noise: PSNR at r=20 captures all but
        # the noise, while r=10 misses half the spectrum.
        rng = np.random.default_rng(10)
        u = rng.uniform(0, 1, (64, 20))
        v = rng.uniform(0, 1, (20, 64))
        base = u @ v
        base *= 0.95 / base.max()  # scale only; a shift would add rank 1
        noise = rng.normal(size=(64, 64))
        noise *= 1e-6 / np.linalg.norm(noise)
        img = base + noise
        rows = {int(r.parameter): r.value for r in rank_study(img, [10, 20])}
        assert rows[20] - rows[10] > 20.0

    def test_rows_sorted_by_rank(self):
        img = np.random.default_rng(11).uniform(0, 1, (16, 16))
        rows = rank_study(img, [12, 0, 8])
        assert [r.parameter for r in rows] == [0.0, 8.0, 12.0]

    def test_invalid_rank_rejected(self):
        img = np.zeros((8, 8))
        with pytest.raises(ValueError):
            rank_study(img, [9])


class TestSharpnessStudy:
    def test_constant_image_all_zero(self):
        rows = sharpness_study(np.full((24, 24), 0.5), [0.5, 1.0, 1.5])
        assert all(r.value == 0.0 for r in rows)

    def test_strictly_decreasing_on_textures(self):
        for img in synthetic_textures(2, 32, seed=12):
            rows = sharpness_study(img, [0.5, 1.0, 1.5, 2.0])
            values = [r.value for r in rows]
            assert all(a > b for a, b in zip(values, values[1:]))

    def test_quadratic_scaling(self):
        img = synthetic_textures(1, 24, seed=13)[0]
        base = sharpness_study(img, [1.0])[0].value
        scaled = sharpness_study(0.5 * img, [1.0])[0].value
        assert scaled == pytest.approx(0.25 * base, rel=1e-12)

    def test_nonpositive_zeta_rejected(self):
        with pytest.raises(ValueError):
            sharpness_study(np.zeros((16, 16)), [0.0, 1.0])
