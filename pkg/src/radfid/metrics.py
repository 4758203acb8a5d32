"""Volume-pair image quality metrics: MAE, MSE, PSNR and volumetric SSIM."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .volume import Volume, validate_pair

PSNR_INF = math.inf


@dataclass(frozen=True)
class SsimConfig:
    """Gaussian-window SSIM settings.

    The window spans ``2 * window_radius + 1`` voxels per axis; borders are
    handled by clamped replication.
    """

    window_radius: int = 3
    gaussian_sigma: float = 1.5
    c1_coeff: float = 0.01
    c2_coeff: float = 0.03
    data_range: float = 1.0

    def __post_init__(self):
        if self.window_radius < 1:
            raise ValueError("window_radius must be positive")
        if self.gaussian_sigma <= 0 or self.data_range <= 0:
            raise ValueError("gaussian_sigma and data_range must be positive")
        if self.c1_coeff <= 0 or self.c2_coeff <= 0:
            raise ValueError("SSIM stabilizing constants must be positive")

    @property
    def c1(self) -> float:
        return (self.c1_coeff * self.data_range) ** 2

    @property
    def c2(self) -> float:
        return (self.c2_coeff * self.data_range) ** 2

    def kernel(self) -> np.ndarray:
        """Normalized 1D Gaussian weights of length ``2 * radius + 1``."""
        r = self.window_radius
        t = np.arange(-r, r + 1, dtype=np.float64)
        w = np.exp(-0.5 * (t / self.gaussian_sigma) ** 2)
        return w / w.sum()


@dataclass(frozen=True)
class QualityReport:
    mae: float
    mse: float
    psnr_db: float
    ssim: float
    data_range: float = 1.0


def _pair(a: Volume, b: Volume):
    validate_pair(a, b)
    x, y = a.data, b.data
    for arr in (x, y):
        if arr.min() < 0.0 or arr.max() > 1.0:
            warnings.warn("volume intensities fall outside [0, 1]; metrics assume "
                          "min-max normalized inputs", RuntimeWarning, stacklevel=3)
            break
    return x, y


def mae(a: Volume, b: Volume) -> float:
    """Mean absolute voxel difference."""
    x, y = _pair(a, b)
    return float(np.mean(np.abs(x - y)))


def mse(a: Volume, b: Volume) -> float:
    """Mean squared voxel difference."""
    x, y = _pair(a, b)
    return float(np.mean((x - y) ** 2))


def psnr_from_mse(mse_value: float, data_range: float = 1.0) -> float:
    if data_range <= 0:
        raise ValueError("data_range must be positive")
    if mse_value == 0:
        return PSNR_INF
    return float(10.0 * np.log10(data_range ** 2 / mse_value))


def psnr(a: Volume, b: Volume, data_range: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; ``math.inf`` for identical volumes."""
    if data_range <= 0:
        raise ValueError("data_range must be positive")
    return psnr_from_mse(mse(a, b), data_range)


def _smooth(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    # fixed axis order keeps the summation order, hence the bits, stable
    for axis in range(3):
        x = ndimage.correlate1d(x, w, axis=axis, mode="nearest")
    return x


def ssim_map(x: np.ndarray, y: np.ndarray, cfg: SsimConfig = SsimConfig()) -> np.ndarray:
    """Local SSIM at every voxel of two same-shape float arrays."""
    size = 2 * cfg.window_radius + 1
    if any(n < size for n in x.shape):
        raise ValueError(f"volume dims {list(x.shape)} smaller than SSIM window {size}")
    w = cfg.kernel()
    mu_x = _smooth(x, w)
    mu_y = _smooth(y, w)
    var_x = _smooth(x * x, w) - mu_x * mu_x
    var_y = _smooth(y * y, w) - mu_y * mu_y
    cov = _smooth(x * y, w) - mu_x * mu_y
    c1, c2 = cfg.c1, cfg.c2
    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return num / den


def ssim3d(a: Volume, b: Volume, cfg: SsimConfig = SsimConfig()) -> float:
    """Volumetric SSIM: the mean of local SSIM over all window centres."""
    x, y = _pair(a, b)
    return float(np.clip(ssim_map(x, y, cfg).mean(), -1.0, 1.0))


def quality_report(ref: Volume, cand: Volume, cfg: SsimConfig = SsimConfig()) -> QualityReport:
    m = mse(ref, cand)
    return QualityReport(
        mae=mae(ref, cand),
        mse=m,
        psnr_db=psnr_from_mse(m, cfg.data_range),
        ssim=ssim3d(ref, cand, cfg),
        data_range=cfg.data_range,
    )
