"""Seeded fixture generators shared by the unit and acceptance tests."""

import numpy as np

from radfid.volume import Mask, Volume


def close(a, b, abs_tol=1e-9, rel_tol=1e-6):
    return abs(a - b) <= abs_tol or abs(a - b) <= rel_tol * abs(b)


def random_roi(rng, max_side=6):
    """A random volume/mask pair with at most ``max_side`` voxels per axis.

    Every fifth draw quantizes intensities to force ties; spacing and bin
    count vary too.
    """
    shape = tuple(int(n) for n in rng.integers(1, max_side + 1, size=3))
    data = rng.random(shape)
    if rng.random() < 0.2:
        data = np.round(data * 3) / 3
    mask = rng.random(shape) < rng.uniform(0.3, 1.0)
    if not mask.any():
        mask.flat[int(rng.integers(mask.size))] = True
    spacing = tuple(float(s) for s in rng.choice([0.8, 1.0, 2.0, 3.5], 3))
    n_bins = int(rng.choice([2, 3, 5, 8, 32]))
    return data, mask, spacing, n_bins


def as_pair(data, mask, spacing=(1.0, 1.0, 1.0)):
    return Volume(data, spacing), Mask(mask, spacing)
