"""Principal component analysis on min-max scaled columns."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class PcaModel:
    """Fitted PCA.

    Attributes
    ----------
    col_min, col_scale : ndarray, shape (p,)
        Min-max scaling; a zero scale marks a constant column (mapped to 0).
    means : ndarray, shape (p,)
        Column means of the scaled training data.
    components : ndarray, shape (p, k)
        Orthonormal loading vectors, largest-magnitude loading positive.
    explained_variance_ratio : ndarray, shape (k,)
    """

    col_min: np.ndarray
    col_scale: np.ndarray
    means: np.ndarray
    components: np.ndarray
    explained_variance_ratio: np.ndarray

    @property
    def n_components(self) -> int:
        return self.components.shape[1]

    def scale(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.col_min.size:
            raise ValueError(f"expected {self.col_min.size} columns, got shape {X.shape}")
        safe = np.where(self.col_scale > 0, self.col_scale, 1.0)
        return np.where(self.col_scale > 0, (X - self.col_min) / safe, 0.0)

    def unscale(self, Z) -> np.ndarray:
        return Z * self.col_scale + self.col_min


def pca_fit(X, variance_target: float = 0.95, scale: str = "minmax") -> PcaModel:
    """Fit PCA keeping the fewest components whose explained variance reaches
    `variance_target`. ``scale=None`` skips min-max scaling."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 1:
        raise ValueError(f"PCA needs at least 2 rows and 1 column, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("PCA input contains non-finite values")
    if not 0.0 < variance_target <= 1.0:
        raise ValueError("variance_target must lie in (0, 1]")
    p = X.shape[1]
    if scale == "minmax":
        lo = X.min(axis=0)
        rng = X.max(axis=0) - lo
    elif scale is None:
        lo, rng = np.zeros(p), np.ones(p)
    else:
        raise ValueError(f"unknown scaling {scale!r}")
    safe = np.where(rng > 0, rng, 1.0)
    Z = np.where(rng > 0, (X - lo) / safe, 0.0)
    means = Z.mean(axis=0)
    _, s, vt = np.linalg.svd(Z - means, full_matrices=False)
    var = s ** 2
    total = var.sum()
    if total > 0:
        ratio = var / total
        k = int(np.searchsorted(np.cumsum(ratio), variance_target - 1e-12) + 1)
        k = min(k, ratio.size)
    else:
        ratio = np.zeros_like(var)
        k = 1
    comps = vt[:k].T.copy()
    for c in range(k):
        if comps[np.argmax(np.abs(comps[:, c])), c] < 0:
            comps[:, c] *= -1.0
    return PcaModel(lo, np.where(rng > 0, rng, 0.0), means, comps, ratio[:k])


def pca_transform(model: PcaModel, X) -> np.ndarray:
    return (model.scale(X) - model.means) @ model.components


def pca_inverse_transform(model: PcaModel, scores) -> np.ndarray:
    return model.unscale(np.asarray(scores) @ model.components.T + model.means)
