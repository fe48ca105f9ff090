import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cure.dataio import Triplet, flip_augment, mean_finite, psnr, ssim

from oracles import psnr_oracle, ssim_oracle


def test_psnr_identical_is_infinite(rng):
    a = rng.random((4, 4, 3))
    assert psnr(a, a) == math.inf


def test_psnr_constant_half():
    assert psnr(np.zeros((8, 8, 3)), np.full((8, 8, 3), 0.5)) == pytest.approx(6.0206, abs=1e-3)


def test_psnr_matches_oracle(rng):
    for _ in range(10):
        a, b = rng.random((9, 7, 3)), rng.random((9, 7, 3))
        assert abs(psnr(a, b) - psnr_oracle(a, b)) < 1e-6


def test_psnr_shape_mismatch():
    with pytest.raises(ValueError, match="shape"):
        psnr(np.zeros((2, 2, 3)), np.zeros((2, 3, 3)))


def test_mean_finite_skips_infinities():
    assert mean_finite([10.0, math.inf, 20.0]) == (15.0, 1)
    m, n = mean_finite([math.inf])
    assert m == math.inf and n == 1


def test_ssim_identical_is_one(rng):
    a = rng.random((16, 16, 3))
    assert ssim(a, a) == 1.0


def test_ssim_constant_closed_form():
    c1 = 0.01**2
    expected = (2 * 0.2 * 0.8 + c1) / (0.2**2 + 0.8**2 + c1)
    got = ssim(np.full((12, 12, 3), 0.2), np.full((12, 12, 3), 0.8))
    assert got == pytest.approx(expected, abs=1e-9)


def test_ssim_matches_windowed_oracle(rng):
    for _ in range(3):
        a = rng.random((14, 13, 3))
        b = np.clip(a + rng.normal(0, 0.1, a.shape), 0, 1)
        assert abs(ssim(a, b) - ssim_oracle(a, b)) < 1e-9


def test_ssim_symmetric(rng):
    for _ in range(5):
        a, b = rng.random((12, 12, 3)), rng.random((12, 12, 3))
        assert abs(ssim(a, b) - ssim(b, a)) < 1e-9


def test_ssim_rejects_small_frames():
    with pytest.raises(ValueError, match="at least"):
        ssim(np.zeros((10, 20, 3)), np.zeros((10, 20, 3)))


def test_noise_ladder_monotone(rng):
    a = rng.random((24, 24, 3)) * 0.5 + 0.25
    noise = rng.standard_normal(a.shape)
    ps, ss = [], []
    for amp in (0.01, 0.03, 0.1, 0.3):
        b = a + amp * noise
        ps.append(psnr(a, b))
        ss.append(ssim(a, b))
    assert all(x > y for x, y in zip(ps, ps[1:]))
    assert all(x > y for x, y in zip(ss, ss[1:]))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(["none", "horizontal", "vertical", "both"]))
def test_flip_preserves_psnr(seed, mode):
    g = np.random.default_rng(seed)
    a, b = g.random((6, 5, 3)), g.random((6, 5, 3))
    zero = np.zeros((6, 5, 2))
    fa, _ = flip_augment(Triplet(a, a, a), (zero, zero), mode)
    fb, _ = flip_augment(Triplet(b, b, b), (zero, zero), mode)
    assert psnr(fa.first, fb.first) == psnr(a, b)
