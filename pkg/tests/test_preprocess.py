import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radfid.preprocess import CropSpec, crop, minmax_normalize, resample, standardize
from radfid.volume import Mask, Volume, VolumeError


def test_minmax_three_values():
    v = minmax_normalize(Volume(np.array([2.0, 4.0, 6.0]).reshape(3, 1, 1)))
    np.testing.assert_array_equal(v.voxels.ravel(), [0.0, 0.5, 1.0])
    assert v.intensity_unit == "normalized"


def test_minmax_constant_is_zero():
    assert not minmax_normalize(Volume(np.full((3, 3, 3), 7.0))).voxels.any()


def test_minmax_matches_scalar_oracle():
    x = np.random.default_rng(3).normal(50, 20, size=(6, 5, 4))
    out = minmax_normalize(Volume(x)).voxels
    lo, hi = min(x.flat), max(x.flat)
    for idx in np.ndindex(x.shape):
        assert abs(out[idx] - (x[idx] - lo) / (hi - lo)) < 1e-7


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 10), st.floats(-5, 5))
def test_minmax_invariant_under_positive_affine(a, b):
    x = np.random.default_rng(0).random((4, 4, 4))
    np.testing.assert_allclose(minmax_normalize(Volume(a * x + b)).voxels,
                               minmax_normalize(Volume(x)).voxels, atol=1e-9)


def test_crop_identity_and_index_arithmetic():
    ramp = np.arange(64, dtype=float).reshape(4, 4, 4)
    v = Volume(ramp, (1.0, 2.0, 3.0))
    same = crop(v, CropSpec((2, 2, 2), (4, 4, 4)))
    np.testing.assert_array_equal(same.voxels, ramp)
    c = crop(v, CropSpec((2, 2, 2), (2, 2, 2)))
    np.testing.assert_array_equal(c.voxels, ramp[1:3, 1:3, 1:3])
    assert c.origin_mm == (1.0, 2.0, 3.0) and c.spacing_mm == v.spacing_mm


def test_crop_out_of_bounds():
    with pytest.raises(VolumeError, match="out-of-bounds"):
        crop(Volume(np.zeros((4, 4, 4))), CropSpec((0, 0, 0), (4, 4, 4)))


def test_crop_mask():
    m = Mask(np.ones((4, 4, 4)))
    assert crop(m, CropSpec((2, 2, 2), (2, 2, 2))).count == 8


def test_resample_same_grid_is_identity():
    x = np.random.default_rng(1).random((5, 6, 7))
    v = Volume(x, (1.0, 0.5, 2.0))
    np.testing.assert_allclose(resample(v, v.dims, v.spacing_mm).voxels, x, atol=1e-6)


@pytest.mark.parametrize("n_out", [5, 12, 17, 31])
def test_resample_keeps_linear_ramp_linear(n_out):
    n_in, sp_in = 10, 1.0
    xs = (np.arange(n_in) + 0.5) * sp_in  # world positions of voxel centres
    v = Volume(np.broadcast_to((0.3 + 0.07 * xs)[:, None, None], (n_in, 3, 3)).copy())
    sp_out = n_in * sp_in / n_out
    out = resample(v, (n_out, 3, 3), (sp_out, 1.0, 1.0)).voxels[:, 1, 1]
    w = (np.arange(n_out) + 0.5) * sp_out
    interior = (w >= xs[0]) & (w <= xs[-1])
    np.testing.assert_allclose(out[interior], 0.3 + 0.07 * w[interior], atol=1e-5)


def test_resample_mask_nearest_keeps_labels():
    m = Mask(np.random.default_rng(2).random((7, 7, 7)) > 0.5)
    r = resample(m, (13, 9, 5), (0.5, 0.8, 1.4), "nearest")
    assert set(np.unique(r.voxels)) <= {0, 1}


def test_resample_rejects_bad_geometry():
    with pytest.raises((VolumeError, ValueError)):
        resample(Volume(np.zeros((3, 3, 3))), (0, 3, 3), (1, 1, 1))


def test_standardize_shapes_and_range():
    rng = np.random.default_rng(4)
    vol = Volume(rng.normal(100, 30, (20, 18, 10)), (0.5, 0.5, 1.0))
    m = Mask(rng.random((20, 18, 10)) > 0.4, (0.5, 0.5, 1.0))
    v2, m2 = standardize(vol, m, (8, 8, 4), (1.25, 1.125, 2.5))
    assert v2.dims == m2.dims == (8, 8, 4)
    assert v2.voxels.min() == 0.0 and v2.voxels.max() == 1.0
