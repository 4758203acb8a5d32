"""Region-of-interest extraction and fixed-bin-number discretization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..volume import Mask, Volume, VolumeError, validate_pair

DEFAULT_N_BINS = 32


class EmptyRoiError(VolumeError):
    pass


@dataclass(frozen=True, eq=False)
class Roi:
    """The voxels of `parent` where `mask` is 1.

    ``voxel_list`` holds flat indices in x-fastest order and ``coords`` the
    matching ``(x, y, z)`` index rows.
    """

    parent: Volume
    mask: Mask
    voxel_list: np.ndarray
    coords: np.ndarray
    intensities: np.ndarray

    @property
    def size(self) -> int:
        return int(self.voxel_list.size)

    @property
    def is_constant(self) -> bool:
        return bool(self.intensities.max() == self.intensities.min())


def build_roi(v: Volume, m: Mask) -> Roi:
    validate_pair(v, m)
    inside = m.labels.astype(bool)
    flat = np.flatnonzero(inside.ravel(order="F"))
    if flat.size == 0:
        raise EmptyRoiError("empty mask: ROI has no voxels")
    coords = np.stack(np.unravel_index(flat, v.dims, order="F"), axis=1)
    values = v.data[tuple(coords.T)]
    return Roi(v, m, flat, coords, values)


@dataclass(frozen=True, eq=False)
class DiscretizedRoi:
    """Grey levels 1..n_bins for every ROI voxel.

    ``grid`` is the ROI bounding box padded by one voxel on every side, holding
    the grey level inside the ROI and 0 elsewhere. Texture matrices are built
    from it.
    """

    roi: Roi
    n_bins: int
    bins: np.ndarray
    grid: np.ndarray

    @property
    def size(self) -> int:
        return int(self.bins.size)

    @property
    def in_roi(self) -> np.ndarray:
        return self.grid > 0


EDGE_TOL = 1e-9


def bin_values(x: np.ndarray, n_bins: int) -> np.ndarray:
    """``min(Ng, 1 + floor(Ng * (x - min) / (max - min)))``; all 1 when constant.

    A value within `EDGE_TOL` of a bin edge counts as lying on it, so rounding
    noise from an intensity rescale cannot move it to the lower bin.
    """
    x = np.asarray(x, dtype=np.float64)
    lo, hi = x.min(), x.max()
    if hi == lo:
        return np.ones(x.shape, dtype=np.int64)
    b = 1 + np.floor(n_bins * (x - lo) / (hi - lo) + EDGE_TOL).astype(np.int64)
    return np.minimum(b, n_bins)


def discretize_fbn(roi: Roi, n_bins: int = DEFAULT_N_BINS) -> DiscretizedRoi:
    if n_bins < 2:
        raise ValueError(f"n_bins must be >= 2, got {n_bins}")
    bins = bin_values(roi.intensities, n_bins)
    lo = roi.coords.min(axis=0)
    hi = roi.coords.max(axis=0)
    grid = np.zeros(tuple(hi - lo + 3), dtype=np.int64)
    local = roi.coords - lo + 1
    grid[tuple(local.T)] = bins
    return DiscretizedRoi(roi, int(n_bins), bins, grid)
