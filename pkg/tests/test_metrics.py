import math

import numpy as np
import pytest

import oracles
from radfid.metrics import (SsimConfig, mae, mse, psnr, psnr_from_mse, quality_report, ssim3d,
                            ssim_map)
from radfid.volume import PairMismatchError, Volume


def _pair(seed, shape=(12, 11, 10)):
    rng = np.random.default_rng(seed)
    return Volume(rng.random(shape)), Volume(rng.random(shape))


def test_constants():
    a, b = Volume(np.full((8, 8, 8), 0.2)), Volume(np.full((8, 8, 8), 0.5))
    assert mae(a, b) == pytest.approx(0.3, abs=1e-15)
    assert mae(a, a) == 0 and mse(a, a) == 0


def test_uniform_difference_psnr_is_40db():
    a = Volume(np.zeros((8, 8, 8)))
    b = Volume(np.full((8, 8, 8), 0.01))
    assert mse(a, b) == pytest.approx(1e-4, rel=1e-12)
    assert psnr(a, b) == 40.0


def test_psnr_values():
    assert psnr_from_mse(0.001) == pytest.approx(30.0, abs=1e-12)
    a, _ = _pair(0)
    assert psnr(a, a) == math.inf
    with pytest.raises(ValueError):
        psnr_from_mse(0.1, 0.0)


def test_loop_oracles():
    for seed in range(5):
        a, b = _pair(seed, (6, 5, 4))
        assert abs(mae(a, b) - oracles.mae_loop(a.voxels, b.voxels)) < 1e-7
        assert abs(mse(a, b) - oracles.mse_loop(a.voxels, b.voxels)) < 1e-9


def test_jensen_and_psnr_formula():
    a, b = _pair(7)
    assert mae(a, b) ** 2 <= mse(a, b)
    assert psnr(a, b) == pytest.approx(10 * math.log10(1 / mse(a, b)), rel=1e-12)


def test_ssim_identity_and_constant_closed_form():
    a, _ = _pair(1)
    assert abs(ssim3d(a, a) - 1.0) < 1e-9
    c = ssim_map(np.full((8, 8, 8), 0.2), np.full((8, 8, 8), 0.4))
    np.testing.assert_allclose(c, 0.1601 / 0.2001, rtol=1e-9)


def test_ssim_direct_reference_on_blurred_copy():
    from scipy import ndimage
    rng = np.random.default_rng(11)
    x = rng.random((9, 10, 11))
    y = np.clip(ndimage.gaussian_filter(x, 1.0), 0, 1)
    ref = oracles.ssim_direct(x, y)
    assert abs(ssim3d(Volume(x), Volume(y)) - ref) < 1e-6


def test_ssim_symmetric_and_bounded():
    a, b = _pair(3)
    s = ssim3d(a, b)
    assert s == pytest.approx(ssim3d(b, a), abs=1e-12)
    assert -1.0 <= s <= 1.0


def test_ssim_window_too_large():
    with pytest.raises(ValueError, match="smaller than SSIM window"):
        ssim3d(Volume(np.zeros((6, 8, 8))), Volume(np.zeros((6, 8, 8))))


def test_pair_mismatch_and_range_warning():
    with pytest.raises(PairMismatchError):
        mae(Volume(np.zeros((8, 8, 8))), Volume(np.zeros((8, 8, 7))))
    with pytest.warns(RuntimeWarning, match="outside"):
        mae(Volume(np.full((8, 8, 8), 2.0)), Volume(np.zeros((8, 8, 8))))


def test_config_constants():
    cfg = SsimConfig(data_range=2.0)
    assert cfg.c1 == pytest.approx(4e-4) and cfg.c2 == pytest.approx(36e-4)
    assert cfg.kernel().size == 7 and cfg.kernel().sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        SsimConfig(window_radius=0)


def test_quality_report_fields():
    a, b = _pair(5)
    q = quality_report(a, b)
    assert q.mse == mse(a, b) and q.psnr_db == psnr(a, b) and q.ssim == ssim3d(a, b)


def test_psnr_falls_along_a_noise_ladder():
    rng = np.random.default_rng(12)
    x = rng.uniform(0.2, 0.8, (10, 10, 10))
    z = rng.standard_normal(x.shape)
    values = [psnr(Volume(x), Volume(np.clip(x + s * z, 0, 1))) for s in (0.01, 0.02, 0.05, 0.1)]
    assert all(a > b for a, b in zip(values, values[1:]))
