import math

import numpy as np
import pytest

import oracles
from helpers import as_pair, close, random_roi
from radfid.radiomics import (FAMILY_COUNTS, FEATURE_IDS, EmptyRoiError, build_roi,
                              cooccurrence_features, discretize_fbn, extract_all,
                              intensity_histogram_features, intensity_stats_features,
                              ivh_features, local_intensity_features, neighbourhood_features,
                              runlength_features, zone_features)
from radfid.radiomics import texture
from radfid.volume import Mask, Volume


def droi_of(levels, n_bins=None):
    """Discretized ROI whose bins equal the given integer levels (0 = outside)."""
    levels = np.asarray(levels)
    n_bins = n_bins or int(levels.max())
    # values chosen so that FBN reproduces the levels exactly
    data = np.where(levels > 0, (levels - 1) / max(n_bins - 1, 1) * (1 - 1e-9), 0.0)
    v, m = as_pair(data, levels > 0)
    d = discretize_fbn(build_roi(v, m), max(n_bins, 2))
    assert np.array_equal(d.grid[1:-1, 1:-1, 1:-1], levels) or levels.max() == 1
    return d


# -- ROI and discretization ----------------------------------------------------

def test_roi_sizes():
    v = Volume(np.zeros((3, 4, 5)))
    assert build_roi(v, Mask(np.ones((3, 4, 5)))).size == 60
    one = np.zeros((3, 4, 5))
    one[1, 2, 3] = 1
    assert build_roi(v, Mask(one)).size == 1
    m = np.random.default_rng(0).random((3, 4, 5)) > 0.5
    assert build_roi(v, Mask(m)).size == int(m.sum())
    with pytest.raises(EmptyRoiError):
        build_roi(v, Mask(np.zeros((3, 4, 5))))


def test_fbn_bins():
    v, m = as_pair(np.array([0.0, 0.5, 1.0]).reshape(3, 1, 1), np.ones((3, 1, 1)))
    assert discretize_fbn(build_roi(v, m), 4).bins.tolist() == [1, 3, 4]
    v, m = as_pair(np.full((2, 2, 2), 0.3), np.ones((2, 2, 2)))
    assert set(discretize_fbn(build_roi(v, m), 8).bins.tolist()) == {1}
    with pytest.raises(ValueError):
        discretize_fbn(build_roi(v, m), 1)


def test_fbn_values_on_bin_edges_survive_rescaling():
    x = np.array([0, 1, 2, 3]) / 3
    for a, b in [(1.0, 0.0), (48.0841520743769, -60.75409097781321), (0.1, 7.0)]:
        v, m = as_pair((a * x + b).reshape(4, 1, 1), np.ones((4, 1, 1)))
        assert discretize_fbn(build_roi(v, m), 3).bins.tolist() == [1, 2, 3, 3]


# -- first-order families ------------------------------------------------------

def test_intensity_stats_hand_values():
    v, m = as_pair(np.arange(1.0, 6.0).reshape(5, 1, 1), np.ones((5, 1, 1)))
    f = intensity_stats_features(build_roi(v, m))
    assert f["mean"] == 3 and f["variance"] == 2 and f["range"] == 4 and f["median"] == 3
    v, m = as_pair(np.full((2, 3, 1), 0.7), np.ones((2, 3, 1)))
    f = intensity_stats_features(build_roi(v, m))
    assert f["mean"] == pytest.approx(0.7) and f["variance"] == 0 and f["skewness"] == 0
    assert f["energy"] == pytest.approx(6 * 0.49)


def test_histogram_entropy_uniformity():
    v, m = as_pair(np.full((2, 2, 1), 0.4), np.ones((2, 2, 1)))
    f = intensity_histogram_features(discretize_fbn(build_roi(v, m), 8))
    assert f["entropy"] == 0 and f["uniformity"] == 1
    v, m = as_pair(np.array([0.0, 0.0, 1.0, 1.0]).reshape(4, 1, 1), np.ones((4, 1, 1)))
    f = intensity_histogram_features(discretize_fbn(build_roi(v, m), 8))
    assert f["entropy"] == pytest.approx(1.0) and f["uniformity"] == pytest.approx(0.5)


def test_ivh_constant_and_ramp():
    v, m = as_pair(np.full((3, 3, 3), 0.5), np.ones((3, 3, 3)))
    roi = build_roi(v, m)
    f = ivh_features(roi, discretize_fbn(roi, 32))
    assert f["volume_at_intensity_fraction_10"] == f["volume_at_intensity_fraction_90"] == 1
    assert f["intensity_at_volume_fraction_10"] == f["intensity_at_volume_fraction_90"]
    assert f["volume_fraction_difference_10_90"] == 0
    assert f["intensity_fraction_difference_10_90"] == 0
    ramp = np.linspace(0, 1, 4096).reshape(16, 16, 16)
    v, m = as_pair(ramp, np.ones(ramp.shape))
    roi = build_roi(v, m)
    f = ivh_features(roi, discretize_fbn(roi, 32))
    assert abs(f["volume_at_intensity_fraction_10"] - 0.9) < 0.05
    assert abs(f["intensity_at_volume_fraction_90"] - 0.1) < 0.05


def test_local_intensity_constant_and_bright_voxel():
    v, m = as_pair(np.full((9, 9, 9), 0.25), np.ones((9, 9, 9)))
    f = local_intensity_features(v, build_roi(v, m))
    assert f["local_intensity_peak"] == pytest.approx(0.25)
    assert f["global_intensity_peak"] == pytest.approx(0.25)
    data = np.zeros((15, 15, 15))
    data[7, 7, 7] = 1.0
    sp = (1.0, 1.0, 1.0)
    v, m = as_pair(data, np.ones(data.shape), sp)
    f = local_intensity_features(v, build_roi(v, m))
    assert close(f["local_intensity_peak"], oracles.sphere_mean(data, (7, 7, 7), sp))
    assert f["global_intensity_peak"] >= f["local_intensity_peak"]


# -- texture families ----------------------------------------------------------

def test_glcm_constant():
    d = droi_of(np.ones((3, 3, 2), int), 4)
    f = cooccurrence_features(d)
    for agg in ("avg", "merged"):
        assert f[f"contrast.{agg}"] == 0
        assert f[f"angular_second_moment.{agg}"] == 1
        assert f[f"joint_entropy.{agg}"] == 0


@pytest.mark.parametrize("levels", [
    np.array([[1, 1], [1, 2]]).reshape(2, 2, 1),
    (np.indices((4, 4, 3)).sum(axis=0) % 2) + 1,  # 3D checkerboard
])
def test_glcm_matches_pair_enumeration(levels):
    d = droi_of(levels)
    level = {tuple(p): int(levels[tuple(p)]) for p in np.argwhere(levels > 0)}
    ref = oracles.glcm_family(level, d.n_bins)
    got = cooccurrence_features(d)
    assert set(got) == set(ref)
    for k in ref:
        assert close(got[k], ref[k]), k


def test_runs_constant_line_and_alternating():
    d = droi_of(np.ones((6, 1, 1), int), 2)
    levels, lengths = texture.run_lengths(d.grid, (1, 0, 0))
    assert lengths.tolist() == [6]
    alt = (np.arange(6) % 2 + 1).reshape(6, 1, 1)
    f = runlength_features(droi_of(alt))
    assert f["short_runs_emphasis.avg"] == 1 and f["short_runs_emphasis.merged"] == 1
    lv, ln = texture.run_lengths(droi_of(alt).grid, (1, 0, 0))
    assert set(ln.tolist()) == {1}


def test_zones():
    d = droi_of(np.ones((3, 2, 2), int), 2)
    assert len(texture.zones(d)[0]) == 1
    assert zone_features(d, "size")["zone_percentage"] == pytest.approx(1 / 12)
    blobs = np.zeros((7, 3, 3), int)
    blobs[0:2] = 1
    blobs[5:7] = 1
    assert len(texture.zones(droi_of(np.where(blobs > 0, 1, 0), 2))[0]) == 2
    # diagonal contact joins zones under 26-connectivity
    diag = np.zeros((2, 2, 2), int)
    diag[0, 0, 0] = diag[1, 1, 1] = 1
    assert len(texture.zones(droi_of(diag, 2))[0]) == 1
    single = droi_of(np.ones((1, 1, 1), int), 2)
    f = zone_features(single, "distance")
    for k in ("small_distance_emphasis", "large_distance_emphasis",
              "low_grey_level_zone_emphasis", "high_grey_level_zone_emphasis"):
        assert f[k] == 1
    assert texture.zones(single)[2].tolist() == [1]


def test_neighbourhood_constant_and_bright_voxel():
    ngtdm, ngldm = neighbourhood_features(droi_of(np.ones((3, 3, 3), int), 2))
    assert ngtdm["contrast"] == 0
    m = texture.ngldm_matrix(droi_of(np.ones((3, 3, 3), int), 2))
    # centre voxel sees 26 equal neighbours, corners 7
    assert m[0, 26] == 1 and m[0, 7] == 8
    lv = np.ones((3, 3, 3), int)
    lv[1, 1, 1] = 2
    level = {tuple(p): int(lv[tuple(p)]) for p in np.argwhere(lv > 0)}
    got_t, got_d = neighbourhood_features(droi_of(lv))
    for k, v in oracles.ngtdm(level).items():
        assert close(got_t[k], v), k
    for k, v in oracles.ngldm(level).items():
        assert close(got_d[k], v), k


# -- full vector ---------------------------------------------------------------

def test_family_counts_and_ids():
    assert list(FAMILY_COUNTS.values()) == [2, 18, 23, 7, 50, 32, 16, 16, 5, 17]
    assert len(FEATURE_IDS) == 186 == len(set(FEATURE_IDS))


def test_extract_all_finite_and_deterministic():
    rng = np.random.default_rng(5)
    data = rng.random((8, 7, 6))
    mask = rng.random((8, 7, 6)) > 0.3
    v, m = as_pair(data, mask, (0.7, 0.7, 2.0))
    a, b = extract_all(v, m), extract_all(v, m)
    assert len(a) == 186 and np.all(np.isfinite(a.values))
    assert a.values.tobytes() == b.values.tobytes()


def test_constant_roi_vector_is_finite():
    v, m = as_pair(np.full((4, 4, 4), 0.6), np.ones((4, 4, 4)))
    f = extract_all(v, m)
    assert np.all(np.isfinite(f.values))
    assert f["glcm.contrast.avg"] == 0 and f["intensity_stats.variance"] == 0


def test_random_rois_against_oracles():
    rng = np.random.default_rng(2024)
    for _ in range(25):
        data, mask, sp, ng = random_roi(rng)
        got = extract_all(*as_pair(data, mask, sp), ng).as_dict()
        ref = oracles.all_features(data, mask, sp, ng)
        bad = [k for k in FEATURE_IDS if not close(got[k], ref[k])]
        assert not bad, bad[:5]


def test_affine_intensity_leaves_discretized_families_unchanged():
    rng = np.random.default_rng(9)
    data = np.round(rng.random((7, 6, 5)) * 64) / 64
    mask = rng.random(data.shape) > 0.3
    base = extract_all(*as_pair(data, mask))
    moved = extract_all(*as_pair(4.0 * data + 3.0, mask))
    for fid in FEATURE_IDS:
        fam = fid.split(".")[0]
        if fam in ("local_intensity", "intensity_stats"):
            continue
        assert base[fid] == moved[fid], fid
    assert moved["intensity_stats.mean"] == pytest.approx(4 * base["intensity_stats.mean"] + 3)


def test_translation_invariance():
    rng = np.random.default_rng(4)
    core = rng.random((6, 5, 4))
    cmask = rng.random(core.shape) > 0.2
    vecs = []
    for off in [(8, 8, 8), (11, 9, 10)]:
        data = np.zeros((30, 30, 30))
        mask = np.zeros(data.shape, bool)
        sl = tuple(slice(o, o + n) for o, n in zip(off, core.shape))
        data[sl], mask[sl] = core, cmask
        vecs.append(extract_all(*as_pair(data, mask)).values)
    assert vecs[0].tobytes() == vecs[1].tobytes()


def test_peak_radius():
    from radfid.radiomics.firstorder import PEAK_RADIUS_MM
    assert PEAK_RADIUS_MM == pytest.approx((3000 / (4 * math.pi)) ** (1 / 3))
