"""Texture matrices (GLCM, GLRLM, GLSZM, GLDZM, NGTDM, NGLDM) and their features.

All matrices are built on the padded grey-level grid of a `DiscretizedRoi`,
where 0 marks voxels outside the ROI. Grey levels run from 1 to ``n_bins``.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .roi import DiscretizedRoi

# The 13 unique 3D directions at Chebyshev distance 1 (first nonzero component > 0).
DIRECTIONS = tuple(
    (dx, dy, dz)
    for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)
    if (dx, dy, dz) > (0, 0, 0)
)
assert len(DIRECTIONS) == 13

NEIGHBOURS = tuple(
    (dx, dy, dz)
    for dx in (-1, 0, 1) for dy in (-1, 0, 1) for dz in (-1, 0, 1)
    if (dx, dy, dz) != (0, 0, 0)
)

GLCM_NAMES = (
    "joint_maximum", "joint_average", "joint_variance", "joint_entropy",
    "difference_average", "difference_variance", "difference_entropy",
    "sum_average", "sum_variance", "sum_entropy", "angular_second_moment",
    "contrast", "dissimilarity", "inverse_difference",
    "inverse_difference_normalised", "inverse_difference_moment",
    "inverse_difference_moment_normalised", "inverse_variance", "correlation",
    "autocorrelation", "cluster_tendency", "cluster_shade",
    "cluster_prominence", "information_correlation_1",
    "information_correlation_2",
)

GLRLM_NAMES = (
    "short_runs_emphasis", "long_runs_emphasis",
    "low_grey_level_run_emphasis", "high_grey_level_run_emphasis",
    "short_run_low_grey_level_emphasis", "short_run_high_grey_level_emphasis",
    "long_run_low_grey_level_emphasis", "long_run_high_grey_level_emphasis",
    "grey_level_non_uniformity", "grey_level_non_uniformity_normalised",
    "run_length_non_uniformity", "run_length_non_uniformity_normalised",
    "run_percentage", "grey_level_variance", "run_length_variance", "run_entropy",
)

GLSZM_NAMES = (
    "small_zone_emphasis", "large_zone_emphasis",
    "low_grey_level_zone_emphasis", "high_grey_level_zone_emphasis",
    "small_zone_low_grey_level_emphasis", "small_zone_high_grey_level_emphasis",
    "large_zone_low_grey_level_emphasis", "large_zone_high_grey_level_emphasis",
    "grey_level_non_uniformity", "grey_level_non_uniformity_normalised",
    "zone_size_non_uniformity", "zone_size_non_uniformity_normalised",
    "zone_percentage", "grey_level_variance", "zone_size_variance", "zone_size_entropy",
)

GLDZM_NAMES = (
    "small_distance_emphasis", "large_distance_emphasis",
    "low_grey_level_zone_emphasis", "high_grey_level_zone_emphasis",
    "small_distance_low_grey_level_emphasis", "small_distance_high_grey_level_emphasis",
    "large_distance_low_grey_level_emphasis", "large_distance_high_grey_level_emphasis",
    "grey_level_non_uniformity", "grey_level_non_uniformity_normalised",
    "zone_distance_non_uniformity", "zone_distance_non_uniformity_normalised",
    "zone_percentage", "grey_level_variance", "zone_distance_variance", "zone_distance_entropy",
)

NGLDM_NAMES = (
    "low_dependence_emphasis", "high_dependence_emphasis",
    "low_grey_level_count_emphasis", "high_grey_level_count_emphasis",
    "low_dependence_low_grey_level_emphasis", "low_dependence_high_grey_level_emphasis",
    "high_dependence_low_grey_level_emphasis", "high_dependence_high_grey_level_emphasis",
    "grey_level_non_uniformity", "grey_level_non_uniformity_normalised",
    "dependence_count_non_uniformity", "dependence_count_non_uniformity_normalised",
    "dependence_count_percentage", "grey_level_variance", "dependence_count_variance",
    "dependence_count_entropy", "dependence_count_energy",
)

NGTDM_NAMES = ("coarseness", "contrast", "busyness", "complexity", "strength")

COARSENESS_CAP = 1e6


def _src_slices(shape, d):
    return tuple(slice(0, n - s) if s >= 0 else slice(-s, n) for s, n in zip(d, shape))


def _dst_slices(shape, d):
    return tuple(slice(s, n) if s >= 0 else slice(0, n + s) for s, n in zip(d, shape))


def _shift_pairs(grid: np.ndarray, d):
    """Views (a, b) of `grid` such that b[k] is the neighbour of a[k] at offset d."""
    return grid[_src_slices(grid.shape, d)], grid[_dst_slices(grid.shape, d)]


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log2(p))) + 0.0


# -- GLCM ------------------------------------------------------------------

def glcm_matrices(droi: DiscretizedRoi) -> np.ndarray:
    """Symmetric co-occurrence counts, shape (13, Ng, Ng)."""
    ng = droi.n_bins
    out = np.zeros((len(DIRECTIONS), ng, ng), dtype=np.float64)
    for k, d in enumerate(DIRECTIONS):
        a, b = _shift_pairs(droi.grid, d)
        ok = (a > 0) & (b > 0)
        idx = (a[ok] - 1) * ng + (b[ok] - 1)
        m = np.bincount(idx, minlength=ng * ng).reshape(ng, ng).astype(np.float64)
        out[k] = m + m.T
    return out


def _fallback_matrix(droi: DiscretizedRoi) -> np.ndarray:
    # ROI without any neighbouring pair: treat the single grey level as self-co-occurring
    m = np.zeros((droi.n_bins, droi.n_bins))
    lvl = int(droi.bins[0]) - 1
    m[lvl, lvl] = 1.0
    return m


def glcm_matrix_features(counts: np.ndarray) -> dict:
    ng = counts.shape[0]
    p = counts / counts.sum()
    lv = np.arange(1, ng + 1, dtype=np.float64)
    i, j = np.meshgrid(lv, lv, indexing="ij")
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    mu_x = float(np.sum(lv * px))
    mu_y = float(np.sum(lv * py))
    sd_x = np.sqrt(np.sum((lv - mu_x) ** 2 * px))
    sd_y = np.sqrt(np.sum((lv - mu_y) ** 2 * py))
    diff = np.abs(i - j).astype(np.int64)
    p_diff = np.bincount(diff.ravel(), weights=p.ravel(), minlength=ng)
    k_diff = np.arange(ng, dtype=np.float64)
    ssum = (i + j).astype(np.int64)
    p_sum = np.bincount(ssum.ravel(), weights=p.ravel(), minlength=2 * ng + 1)[2:]
    k_sum = np.arange(2, 2 * ng + 1, dtype=np.float64)

    mu = float(np.sum(i * p))
    d_avg = float(np.sum(k_diff * p_diff))
    s_avg = float(np.sum(k_sum * p_sum))
    hxy = _entropy(p.ravel())
    pxy = np.outer(px, py)
    nzp = pxy > 0
    hxy1 = float(-np.sum(p[nzp] * np.log2(pxy[nzp])))
    hxy2 = _entropy(pxy.ravel())
    hx, hy = _entropy(px), _entropy(py)
    hmax = max(hx, hy)

    if sd_x > 0 and sd_y > 0:
        corr = float(np.sum((i - mu_x) * (j - mu_y) * p) / (sd_x * sd_y))
    else:
        corr = 1.0
    cl = i + j - mu_x - mu_y
    off = diff > 0
    dd = (i - j) ** 2
    return {
        "joint_maximum": float(p.max()),
        "joint_average": mu,
        "joint_variance": float(np.sum((i - mu) ** 2 * p)),
        "joint_entropy": hxy,
        "difference_average": d_avg,
        "difference_variance": float(np.sum((k_diff - d_avg) ** 2 * p_diff)),
        "difference_entropy": _entropy(p_diff),
        "sum_average": s_avg,
        "sum_variance": float(np.sum((k_sum - s_avg) ** 2 * p_sum)),
        "sum_entropy": _entropy(p_sum),
        "angular_second_moment": float(np.sum(p * p)),
        "contrast": float(np.sum(dd * p)),
        "dissimilarity": float(np.sum(diff * p)),
        "inverse_difference": float(np.sum(p / (1.0 + diff))),
        "inverse_difference_normalised": float(np.sum(p / (1.0 + diff / ng))),
        "inverse_difference_moment": float(np.sum(p / (1.0 + dd))),
        "inverse_difference_moment_normalised": float(np.sum(p / (1.0 + dd / ng ** 2))),
        "inverse_variance": float(np.sum(p[off] / dd[off])),
        "correlation": corr,
        "autocorrelation": float(np.sum(i * j * p)),
        "cluster_tendency": float(np.sum(cl ** 2 * p)),
        "cluster_shade": float(np.sum(cl ** 3 * p)),
        "cluster_prominence": float(np.sum(cl ** 4 * p)),
        "information_correlation_1": (hxy - hxy1) / hmax if hmax > 0 else 0.0,
        "information_correlation_2": float(np.sqrt(max(0.0, 1.0 - np.exp(-2.0 * (hxy2 - hxy))))),
    }


def _two_aggregations(per_dir, merged, names, family_fn):
    """Mean of per-direction features, then features of the merged matrix."""
    per = [family_fn(*args) for args in per_dir]
    avg = {n: float(np.mean([f[n] for f in per])) for n in names}
    mrg = family_fn(*merged)
    out = {f"{n}.avg": avg[n] for n in names}
    out.update({f"{n}.merged": mrg[n] for n in names})
    return out


def cooccurrence_features(droi: DiscretizedRoi) -> dict:
    """25 GLCM features, each averaged over directions and on the merged matrix."""
    mats = glcm_matrices(droi)
    used = [m for m in mats if m.sum() > 0]
    if not used:
        used = [_fallback_matrix(droi)]
    merged = np.sum(used, axis=0)
    return _two_aggregations([(m,) for m in used], (merged,), GLCM_NAMES, glcm_matrix_features)


# -- size-type matrices (GLRLM, GLSZM, GLDZM, NGLDM) -------------------------

def size_matrix_features(m: np.ndarray, n_voxels: float) -> tuple:
    """The 16 shared features of a (grey level x size) count matrix.

    Rows are grey levels 1..Ng, columns sizes 1..Ns. `n_voxels` is the
    denominator of the percentage feature.
    """
    ns = m.sum()
    ng, nj = m.shape
    i = np.arange(1, ng + 1, dtype=np.float64)[:, None]
    j = np.arange(1, nj + 1, dtype=np.float64)[None, :]
    p = m / ns
    gl = m.sum(axis=1)
    sz = m.sum(axis=0)
    mu_i = float(np.sum(i * p))
    mu_j = float(np.sum(j * p))
    return (
        float(np.sum(m / j ** 2) / ns),
        float(np.sum(m * j ** 2) / ns),
        float(np.sum(m / i ** 2) / ns),
        float(np.sum(m * i ** 2) / ns),
        float(np.sum(m / (i ** 2 * j ** 2)) / ns),
        float(np.sum(m * i ** 2 / j ** 2) / ns),
        float(np.sum(m * j ** 2 / i ** 2) / ns),
        float(np.sum(m * i ** 2 * j ** 2) / ns),
        float(np.sum(gl ** 2) / ns),
        float(np.sum(gl ** 2) / ns ** 2),
        float(np.sum(sz ** 2) / ns),
        float(np.sum(sz ** 2) / ns ** 2),
        float(ns / n_voxels),
        float(np.sum((i - mu_i) ** 2 * p)),
        float(np.sum((j - mu_j) ** 2 * p)),
        _entropy(p.ravel()),
    )


def _pad_cols(m: np.ndarray, width: int) -> np.ndarray:
    if m.shape[1] >= width:
        return m
    return np.pad(m, ((0, 0), (0, width - m.shape[1])))


def run_lengths(grid: np.ndarray, d) -> tuple:
    """Grey level and length of every maximal run along direction `d`."""
    g = grid.ravel()
    strides = np.array(grid.strides) // grid.itemsize
    step = int(np.dot(d, strides))
    # grey level one step back along d (0 beyond the grid)
    prev = np.zeros_like(grid)
    prev[_dst_slices(grid.shape, d)] = grid[_src_slices(grid.shape, d)]
    starts = np.flatnonzero(((grid > 0) & (grid != prev)).ravel())
    levels = g[starts]
    lengths = np.ones(starts.size, dtype=np.int64)
    pos = starts.copy()
    active = np.arange(starts.size)
    while active.size:
        nxt = pos[active] + step
        cont = g[nxt] == levels[active]
        active = active[cont]
        pos[active] = nxt[cont]
        lengths[active] += 1
    return levels, lengths


def glrlm_matrices(droi: DiscretizedRoi) -> list:
    ng = droi.n_bins
    mats = []
    for d in DIRECTIONS:
        levels, lengths = run_lengths(droi.grid, d)
        m = np.zeros((ng, lengths.max()), dtype=np.float64)
        np.add.at(m, (levels - 1, lengths - 1), 1.0)
        mats.append(m)
    width = max(m.shape[1] for m in mats)
    return [_pad_cols(m, width) for m in mats]


def runlength_features(droi: DiscretizedRoi) -> dict:
    """16 GLRLM features, averaged over directions and on the merged matrix."""
    mats = glrlm_matrices(droi)
    nv = droi.size
    per = [(m, nv) for m in mats]
    merged = (np.sum(mats, axis=0), nv * len(mats))

    def fn(m, n):
        return dict(zip(GLRLM_NAMES, size_matrix_features(m, n)))

    return _two_aggregations(per, merged, GLRLM_NAMES, fn)


_FULL = np.ones((3, 3, 3), dtype=bool)


def zones(droi: DiscretizedRoi):
    """26-connected equal-grey zones: (grey level, voxel count, border distance) per zone."""
    grid = droi.grid
    roi = grid > 0
    # chessboard distance to the nearest non-ROI voxel; the grid is padded so it exists
    dist = ndimage.distance_transform_cdt(roi, metric="chessboard")
    levels, sizes, dists = [], [], []
    for lvl in np.unique(grid[roi]):
        lab, n = ndimage.label(grid == lvl, structure=_FULL)
        idx = np.arange(1, n + 1)
        sizes.append(np.bincount(lab.ravel(), minlength=n + 1)[1:])
        dists.append(np.asarray(ndimage.minimum(dist, lab, idx), dtype=np.int64))
        levels.append(np.full(n, lvl, dtype=np.int64))
    return np.concatenate(levels), np.concatenate(sizes), np.concatenate(dists)


def _zone_matrix(levels, sizes, ng):
    m = np.zeros((ng, int(sizes.max())), dtype=np.float64)
    np.add.at(m, (levels - 1, sizes - 1), 1.0)
    return m


def zone_features(droi: DiscretizedRoi, metric: str = "size") -> dict:
    """16 GLSZM (``metric="size"``) or GLDZM (``metric="distance"``) features."""
    levels, sizes, dists = zones(droi)
    if metric == "size":
        m, names = _zone_matrix(levels, sizes, droi.n_bins), GLSZM_NAMES
    elif metric == "distance":
        m, names = _zone_matrix(levels, dists, droi.n_bins), GLDZM_NAMES
    else:
        raise ValueError(f"unknown zone metric {metric!r}")
    return dict(zip(names, size_matrix_features(m, droi.size)))


# -- neighbourhood families -------------------------------------------------

def neighbour_sums(grid: np.ndarray):
    """Per-voxel sum of in-ROI neighbour grey levels and their count (26-neighbourhood)."""
    k = np.ones((3, 3, 3))
    k[1, 1, 1] = 0
    roi = (grid > 0).astype(np.float64)
    total = ndimage.correlate(grid.astype(np.float64), k, mode="constant", cval=0.0)
    count = ndimage.correlate(roi, k, mode="constant", cval=0.0)
    return total, count


def ngtdm_table(droi: DiscretizedRoi):
    """Per grey level: number of voxels with an in-ROI neighbour and the summed
    absolute difference to their neighbourhood mean."""
    grid, ng = droi.grid, droi.n_bins
    total, count = neighbour_sums(grid)
    ok = (grid > 0) & (count > 0)
    lv = grid[ok]
    s = np.abs(lv - total[ok] / count[ok])
    n = np.bincount(lv, minlength=ng + 1)[1:].astype(np.float64)
    ssum = np.bincount(lv, weights=s, minlength=ng + 1)[1:]
    return n, ssum


def ngtdm_features(droi: DiscretizedRoi) -> dict:
    n, s = ngtdm_table(droi)
    nvc = n.sum()
    if nvc == 0:
        return dict(zip(NGTDM_NAMES, (COARSENESS_CAP, 0.0, 0.0, 0.0, 0.0)))
    p = n / nvc
    lv = np.arange(1, n.size + 1, dtype=np.float64)
    present = p > 0
    pi, li, si = p[present], lv[present], s[present]
    ngp = pi.size
    ps = float(np.sum(pi * si))
    coarseness = min(1.0 / ps, COARSENESS_CAP) if ps > 0 else COARSENESS_CAP
    d2 = (li[:, None] - li[None, :]) ** 2
    pp = pi[:, None] * pi[None, :]
    if ngp > 1:
        contrast = float(np.sum(pp * d2) / (ngp * (ngp - 1)) * s.sum() / nvc)
    else:
        contrast = 0.0
    den = np.sum(np.abs((li * pi)[:, None] - (li * pi)[None, :]))
    busyness = ps / den if ngp > 1 and den > 0 else 0.0
    psi = pi * si
    complexity = float(np.sum(np.abs(li[:, None] - li[None, :])
                              * (psi[:, None] + psi[None, :]) / (pi[:, None] + pi[None, :])) / nvc)
    ssum = s.sum()
    strength = float(np.sum((pi[:, None] + pi[None, :]) * d2) / ssum) if ssum > 0 else 0.0
    return dict(zip(NGTDM_NAMES, (float(coarseness), contrast, float(busyness), complexity, strength)))


def ngldm_matrix(droi: DiscretizedRoi) -> np.ndarray:
    """Counts of (grey level, 1 + number of equal-grey in-ROI neighbours)."""
    grid, ng = droi.grid, droi.n_bins
    dep = np.zeros(grid.shape, dtype=np.int64)
    for d in NEIGHBOURS:
        a, b = _shift_pairs(grid, d)
        dep[_src_slices(grid.shape, d)] += (a == b) & (a > 0)
    roi = grid > 0
    lv, k = grid[roi], dep[roi] + 1
    m = np.zeros((ng, int(k.max())), dtype=np.float64)
    np.add.at(m, (lv - 1, k - 1), 1.0)
    return m


def ngldm_features(droi: DiscretizedRoi) -> dict:
    m = ngldm_matrix(droi)
    vals = size_matrix_features(m, droi.size)
    p = m / m.sum()
    return dict(zip(NGLDM_NAMES, vals + (float(np.sum(p * p)),)))


def neighbourhood_features(droi: DiscretizedRoi) -> tuple:
    """NGTDM (5) and NGLDM (17) feature dicts."""
    return ngtdm_features(droi), ngldm_features(droi)
