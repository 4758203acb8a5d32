"""Intensity statistics, intensity histogram, intensity-volume histogram and
local intensity features."""

from __future__ import annotations

import math

import numpy as np
from scipy import signal

from .roi import DiscretizedRoi, Roi

# sphere of 1 cm^3
PEAK_RADIUS_MM = (3.0 * 1000.0 / (4.0 * math.pi)) ** (1.0 / 3.0)

INTENSITY_STATS_NAMES = (
    "mean", "variance", "skewness", "kurtosis", "median", "minimum",
    "p10", "p90", "maximum", "interquartile_range", "range",
    "mean_absolute_deviation", "robust_mean_absolute_deviation",
    "median_absolute_deviation", "coefficient_of_variation",
    "quartile_coefficient_of_dispersion", "energy", "root_mean_square",
)

INTENSITY_HISTOGRAM_NAMES = (
    "mean", "variance", "skewness", "kurtosis", "median", "minimum",
    "p10", "p90", "maximum", "mode", "interquartile_range", "range",
    "mean_absolute_deviation", "robust_mean_absolute_deviation",
    "median_absolute_deviation", "coefficient_of_variation",
    "quartile_coefficient_of_dispersion", "entropy", "uniformity",
    "maximum_histogram_gradient", "maximum_histogram_gradient_grey_level",
    "minimum_histogram_gradient", "minimum_histogram_gradient_grey_level",
)

IVH_NAMES = (
    "volume_at_intensity_fraction_10", "volume_at_intensity_fraction_90",
    "intensity_at_volume_fraction_10", "intensity_at_volume_fraction_90",
    "volume_fraction_difference_10_90", "intensity_fraction_difference_10_90",
    "area_under_curve",
)

LOCAL_INTENSITY_NAMES = ("local_intensity_peak", "global_intensity_peak")


def _distribution_stats(x: np.ndarray) -> dict:
    """Statistics shared by the intensity and histogram families."""
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    constant = x.max() == x.min()
    mean = x.mean() if not constant else x[0]
    dev = x - mean
    var = float(np.mean(dev ** 2)) if not constant else 0.0
    if var > 0:
        skew = float(np.mean(dev ** 3) / var ** 1.5)
        kurt = float(np.mean(dev ** 4) / var ** 2 - 3.0)
    else:
        skew = kurt = 0.0
    p10, p25, median, p75, p90 = np.percentile(x, [10, 25, 50, 75, 90])
    robust = x[(x >= p10) & (x <= p90)]
    # with very few voxels no value may fall inside [P10, P90]
    if constant or robust.size == 0:
        rmad = 0.0
    else:
        rmad = float(np.mean(np.abs(robust - robust.mean())))
    qsum = p75 + p25
    return {
        "mean": float(mean),
        "variance": var,
        "skewness": skew,
        "kurtosis": kurt,
        "median": float(median),
        "minimum": float(x.min()),
        "p10": float(p10),
        "p90": float(p90),
        "maximum": float(x.max()),
        "interquartile_range": float(p75 - p25),
        "range": float(x.max() - x.min()),
        "mean_absolute_deviation": float(np.mean(np.abs(dev))),
        "robust_mean_absolute_deviation": rmad,
        "median_absolute_deviation": float(np.mean(np.abs(x - median))),
        "coefficient_of_variation": float(math.sqrt(var) / mean) if var > 0 and mean != 0 else 0.0,
        "quartile_coefficient_of_dispersion": float((p75 - p25) / qsum) if qsum != 0 else 0.0,
        "_n": n,
    }


def intensity_stats_features(roi: Roi) -> dict:
    x = roi.intensities
    out = _distribution_stats(x)
    del out["_n"]
    energy = float(np.sum(x * x))
    out["energy"] = energy
    out["root_mean_square"] = math.sqrt(energy / x.size)
    return {k: out[k] for k in INTENSITY_STATS_NAMES}


def intensity_histogram_features(droi: DiscretizedRoi) -> dict:
    bins = droi.bins
    ng = droi.n_bins
    out = _distribution_stats(bins)
    del out["_n"]
    counts = np.bincount(bins, minlength=ng + 1)[1:].astype(np.float64)
    p = counts / counts.sum()
    nz = p[p > 0]
    grad = np.gradient(counts)
    out["mode"] = float(np.argmax(counts) + 1)
    out["entropy"] = float(-np.sum(nz * np.log2(nz))) + 0.0
    out["uniformity"] = float(np.sum(p * p))
    out["maximum_histogram_gradient"] = float(grad.max())
    out["maximum_histogram_gradient_grey_level"] = float(np.argmax(grad) + 1)
    out["minimum_histogram_gradient"] = float(grad.min())
    out["minimum_histogram_gradient_grey_level"] = float(np.argmin(grad) + 1)
    return {k: out[k] for k in INTENSITY_HISTOGRAM_NAMES}


def ivh_curve(droi: DiscretizedRoi):
    """Intensity fractions and the volume fraction at or above each grey level.

    A constant ROI has a single level placed at intensity fraction 1.
    """
    ng = droi.n_bins
    if droi.roi.is_constant:
        return np.array([1.0]), np.array([1.0])
    counts = np.bincount(droi.bins, minlength=ng + 1)[1:].astype(np.float64)
    above = np.cumsum(counts[::-1])[::-1] / droi.size
    gamma = np.arange(ng, dtype=np.float64) / (ng - 1)
    return gamma, above


def ivh_features(roi: Roi, droi: DiscretizedRoi) -> dict:
    gamma, nu = ivh_curve(droi)

    def volume_at(frac):
        return float(nu[np.argmax(gamma >= frac)])

    def intensity_at(frac):
        ok = nu <= frac
        return float(gamma[np.argmax(ok)]) if ok.any() else 1.0

    v10, v90 = volume_at(0.1), volume_at(0.9)
    i10, i90 = intensity_at(0.1), intensity_at(0.9)
    if gamma.size > 1:
        auc = float(np.sum(np.diff(gamma) * (nu[1:] + nu[:-1]) / 2.0))
    else:
        auc = 1.0
    vals = (v10, v90, i10, i90, v10 - v90, i10 - i90, auc)
    return dict(zip(IVH_NAMES, vals))


def sphere_offsets(spacing_mm, radius_mm: float = PEAK_RADIUS_MM) -> np.ndarray:
    """Integer voxel offsets whose centres lie within `radius_mm` of the origin."""
    reach = [int(math.floor(radius_mm / s)) for s in spacing_mm]
    grids = np.meshgrid(*[np.arange(-r, r + 1) for r in reach], indexing="ij")
    offs = np.stack([g.ravel() for g in grids], axis=1)
    d2 = np.sum((offs * np.asarray(spacing_mm)) ** 2, axis=1)
    return offs[d2 <= radius_mm ** 2]


def sphere_kernel(spacing_mm, radius_mm: float = PEAK_RADIUS_MM) -> np.ndarray:
    """Boolean ball of voxel centres within `radius_mm`, centred in an odd-sized box."""
    offs = sphere_offsets(spacing_mm, radius_mm)
    reach = np.abs(offs).max(axis=0)
    k = np.zeros(tuple(2 * reach + 1), dtype=np.float64)
    k[tuple((offs + reach).T)] = 1.0
    return k


def sphere_means(volume_data: np.ndarray, centres: np.ndarray, spacing_mm) -> np.ndarray:
    """Mean intensity in the peak sphere around each centre; voxels outside the
    volume are left out of the mean."""
    k = sphere_kernel(spacing_mm)
    reach = np.array(k.shape) // 2
    lo = np.maximum(centres.min(axis=0) - reach, 0)
    hi = np.minimum(centres.max(axis=0) + reach + 1, volume_data.shape)
    # every sphere voxel of every centre is inside this box or outside the volume
    box = volume_data[tuple(slice(a, b) for a, b in zip(lo, hi))]
    total = signal.fftconvolve(box, k, mode="same")
    count = np.rint(signal.fftconvolve(np.ones_like(box), k, mode="same"))
    local = tuple((centres - lo).T)
    return total[local] / count[local]


def local_intensity_features(v, roi: Roi) -> dict:
    data = v.data
    means = sphere_means(data, roi.coords, v.spacing_mm)
    hottest = roi.intensities == roi.intensities.max()
    return {
        "local_intensity_peak": float(means[hottest].max()),
        "global_intensity_peak": float(means.max()),
    }
