"""Intensity normalization and geometric standardization.

Resampling uses the voxel-centre convention: voxel ``i`` of a grid with
origin ``o`` and spacing ``s`` sits at world position ``o + (i + 0.5) * s``.
Input and output grids share the origin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .volume import Mask, Volume, VolumeError


def minmax_normalize(v: Volume) -> Volume:
    """Map intensities affinely onto [0, 1]. A constant volume becomes all zeros."""
    x = v.data
    lo, hi = x.min(), x.max()
    if hi > lo:
        out = (x - lo) / (hi - lo)
    else:
        out = np.zeros_like(x)
    return v.replace(out, intensity_unit="normalized")


@dataclass(frozen=True)
class CropSpec:
    center_voxel: tuple
    out_dims: tuple

    def __post_init__(self):
        if len(self.out_dims) != 3 or any(int(n) < 1 for n in self.out_dims):
            raise VolumeError(f"out_dims must be three positive ints, got {self.out_dims}")

    @property
    def corner(self) -> tuple:
        return tuple(int(c) - int(n) // 2 for c, n in zip(self.center_voxel, self.out_dims))


def crop(v, spec: CropSpec):
    """Extract the box of size ``spec.out_dims`` centred on ``spec.center_voxel``.

    The box starts at ``center - out_dims // 2``. Works on `Volume` and `Mask`.
    There is no padding: a box leaving the grid raises `VolumeError`.
    """
    corner = spec.corner
    stop = tuple(c + int(n) for c, n in zip(corner, spec.out_dims))
    if any(c < 0 for c in corner) or any(e > d for e, d in zip(stop, v.dims)):
        raise VolumeError(
            f"out-of-bounds crop: box {list(corner)}..{list(stop)} exceeds dims {list(v.dims)}")
    sl = tuple(slice(c, e) for c, e in zip(corner, stop))
    origin = tuple(o + c * s for o, c, s in zip(v.origin_mm, corner, v.spacing_mm))
    if isinstance(v, Mask):
        return Mask(v.labels[sl], v.spacing_mm, origin)
    return Volume(v.voxels[sl], v.spacing_mm, origin, v.intensity_unit)


def _sample_coords(v, out_dims, out_spacing):
    axes = []
    for n_out, s_out, s_in in zip(out_dims, out_spacing, v.spacing_mm):
        world = (np.arange(n_out) + 0.5) * s_out
        axes.append(world / s_in - 0.5)
    return np.meshgrid(*axes, indexing="ij")


def resample(v, out_dims, out_spacing, mode: str = "trilinear"):
    """Resample onto a grid of ``out_dims`` voxels of size ``out_spacing``.

    ``mode="trilinear"`` clamps samples at the boundary and keeps values
    within the input range; ``mode="nearest"`` is meant for masks.
    """
    out_dims = tuple(int(n) for n in out_dims)
    out_spacing = tuple(float(s) for s in out_spacing)
    if len(out_dims) != 3 or any(n < 1 for n in out_dims):
        raise VolumeError(f"out_dims must be three positive ints, got {out_dims}")
    if len(out_spacing) != 3 or any(s <= 0 for s in out_spacing):
        raise VolumeError(f"out_spacing must be three positive reals, got {out_spacing}")
    if mode not in ("trilinear", "nearest"):
        raise ValueError(f"unknown interpolation mode {mode!r}")

    src = v.labels if isinstance(v, Mask) else v.data
    coords = _sample_coords(v, out_dims, out_spacing)
    if mode == "nearest":
        # round half up, then clamp
        idx = [np.clip(np.floor(c + 0.5).astype(np.int64), 0, n - 1)
               for c, n in zip(coords, src.shape)]
        out = src[tuple(idx)]
    else:
        out = ndimage.map_coordinates(src.astype(np.float64), coords, order=1,
                                      mode="nearest", prefilter=False)
        out = np.clip(out, src.min(), src.max())

    if isinstance(v, Mask):
        return Mask(out, out_spacing, v.origin_mm)
    return Volume(out, out_spacing, v.origin_mm, v.intensity_unit)


def standardize(vol: Volume, mask: Mask, out_dims, out_spacing):
    """Resample a volume/mask pair to a common grid and min-max normalize the volume."""
    rv = resample(vol, out_dims, out_spacing, "trilinear")
    rm = resample(mask, out_dims, out_spacing, "nearest")
    return minmax_normalize(rv), rm
