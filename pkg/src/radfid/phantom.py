"""Seeded synthetic gland phantoms and degradation operators.

Random streams
--------------
Every draw comes from a Philox-4x64 generator keyed by
``SeedSequence([master_seed, case_index, operator])``. The operator tags are
fixed: ``OP_GENERATE`` for phantom construction, ``OP_NOISE`` for additive
noise and ``OP_LESION`` for lesion edits. Streams are therefore independent
across cases and operators, and a case can be regenerated alone.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy import ndimage

from .volume import CaseRecord, Mask, Volume, write_manifest, write_mask, write_volume

OP_GENERATE = 0
OP_NOISE = 1
OP_LESION = 2

EDGE_WIDTH = 1.5  # voxels; half-width of the cosine lesion rim


def stream(master_seed: int, case_index: int, operator: int) -> np.random.Generator:
    ss = np.random.SeedSequence([int(master_seed), int(case_index), int(operator)])
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class PhantomSpec:
    """Geometry and intensity model of one synthetic cohort.

    The gland is an axis-aligned ellipsoid centred in the grid. Intensity is a
    base level plus a linear ramp in a random direction, a smooth random
    texture and up to ``lesion_count[1]`` cosine-edged spherical lesions.
    A case is labelled ``high`` when some lesion contrast exceeds
    ``high_contrast``.
    """

    dims: Tuple[int, int, int] = (64, 64, 32)
    spacing_mm: Tuple[float, float, float] = (1.0, 1.0, 1.0)
    gland_semi_axes: Tuple[float, float, float] = (22.0, 18.0, 11.0)
    background: float = 0.15
    gland_level: Tuple[float, float] = (0.40, 0.55)
    ramp_amplitude: float = 0.12
    texture_amplitude: float = 0.06
    texture_scale: float = 1.5
    lesion_count: Tuple[int, int] = (0, 3)
    lesion_radius: Tuple[float, float] = (2.5, 5.0)
    lesion_contrast: Tuple[float, float] = (-0.25, 0.35)
    high_contrast: float = 0.2
    seed: int = 0

    def __post_init__(self):
        for name in ("dims", "spacing_mm", "gland_semi_axes", "gland_level", "lesion_count",
                     "lesion_radius", "lesion_contrast"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if len(self.dims) != 3 or min(self.dims) < 8:
            raise ValueError(f"dims must be three sizes >= 8, got {self.dims}")
        if any(2 * a > d - 2 for a, d in zip(self.gland_semi_axes, self.dims)):
            raise ValueError(f"gland semi-axes {self.gland_semi_axes} do not fit inside {self.dims}")
        lo, hi = self.lesion_count
        if not 0 <= lo <= hi <= 3:
            raise ValueError(f"lesion count range must lie within [0, 3], got {self.lesion_count}")
        r_lo, r_hi = self.lesion_radius
        if not 0 < r_lo <= r_hi:
            raise ValueError(f"bad lesion radius range {self.lesion_radius}")
        if hi > 0 and r_hi + EDGE_WIDTH >= min(self.gland_semi_axes):
            raise ValueError("lesions do not fit inside the gland")
        if self.lesion_contrast[0] > self.lesion_contrast[1]:
            raise ValueError(f"bad lesion contrast range {self.lesion_contrast}")

    def to_dict(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}

    @classmethod
    def from_dict(cls, d: dict) -> "PhantomSpec":
        return cls(**d)


class Lesion(NamedTuple):
    center: Tuple[float, float, float]  # voxel coordinates
    radius: float
    contrast: float


class PhantomCase(NamedTuple):
    case_id: str
    volume: Volume
    mask: Mask
    label: str
    lesions: Tuple[Lesion, ...]


def _grid(dims):
    return np.meshgrid(*[np.arange(d, dtype=np.float64) for d in dims], indexing="ij")


def gland_center(dims) -> np.ndarray:
    return (np.asarray(dims, dtype=np.float64) - 1.0) / 2.0


def ellipsoid_mask(dims, semi_axes) -> np.ndarray:
    """Voxels whose index lies inside the centred ellipsoid (boundary included)."""
    c = gland_center(dims)
    g = _grid(dims)
    r = sum(((g[k] - c[k]) / semi_axes[k]) ** 2 for k in range(3))
    return r <= 1.0


def cosine_profile(dist: np.ndarray, radius: float, width: float = EDGE_WIDTH) -> np.ndarray:
    """1 inside ``radius - width``, 0 beyond ``radius + width``, raised cosine between."""
    t = np.clip((dist - (radius - width)) / (2.0 * width), 0.0, 1.0)
    return 0.5 * (1.0 + np.cos(math.pi * t))


def _blob(dims, center, radius) -> np.ndarray:
    g = _grid(dims)
    d = np.sqrt(sum((g[k] - center[k]) ** 2 for k in range(3)))
    return cosine_profile(d, radius)


def _lesion_center(rng, dims, semi_axes, reach) -> np.ndarray:
    """Uniform point of the ellipsoid shrunk by `reach`, so the blob stays inside."""
    inner = np.asarray(semi_axes) - reach
    while True:
        u = rng.uniform(-1.0, 1.0, size=3)
        if np.sum(u * u) <= 1.0:
            return gland_center(dims) + u * inner


def generate_case(spec: PhantomSpec, index: int) -> PhantomCase:
    rng = stream(spec.seed, index, OP_GENERATE)
    dims = spec.dims
    inside = ellipsoid_mask(dims, spec.gland_semi_axes)

    level = rng.uniform(*spec.gland_level)
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    g = _grid(dims)
    c = gland_center(dims)
    ramp = sum(direction[k] * (g[k] - c[k]) / spec.gland_semi_axes[k] for k in range(3))
    noise = ndimage.gaussian_filter(rng.normal(size=dims), spec.texture_scale, mode="wrap")
    noise /= max(noise.std(), 1e-12)

    field_ = np.full(dims, spec.background)
    field_ += 0.5 * spec.texture_amplitude * noise
    gland = level + spec.ramp_amplitude * ramp + spec.texture_amplitude * noise
    field_ = np.where(inside, gland, field_)

    n_les = int(rng.integers(spec.lesion_count[0], spec.lesion_count[1] + 1))
    lesions = []
    for _ in range(n_les):
        radius = float(rng.uniform(*spec.lesion_radius))
        contrast = float(rng.uniform(*spec.lesion_contrast))
        center = _lesion_center(rng, dims, spec.gland_semi_axes, radius + EDGE_WIDTH)
        field_ += contrast * _blob(dims, center, radius)
        lesions.append(Lesion(tuple(float(x) for x in center), radius, contrast))

    vol = Volume(np.clip(field_, 0.0, 1.0), spec.spacing_mm, (0.0, 0.0, 0.0), "normalized")
    label = "high" if any(l.contrast > spec.high_contrast for l in lesions) else "low"
    return PhantomCase(f"case{index:03d}", vol, Mask.like(vol, inside), label, tuple(lesions))


def generate_cohort(spec: PhantomSpec, n_cases: int) -> List[PhantomCase]:
    """``n_cases`` phantoms; case ``i`` depends only on ``(spec, i)``."""
    if n_cases < 1:
        raise ValueError(f"n_cases must be >= 1, got {n_cases}")
    return [generate_case(spec, i) for i in range(n_cases)]


@dataclass(frozen=True)
class DegradeSpec:
    """A surrogate translation network.

    Lesion edits run first, then Gaussian blur, gamma and clipped additive
    noise. The noise field for a given ``(seed, case_index)`` is fixed and
    scaled by ``noise_sigma``, so a ladder of sigmas degrades monotonically.
    """

    blur_sigma: float = 0.0
    noise_sigma: float = 0.0
    gamma: float = 1.0
    lesion_dropout: bool = False
    false_lesion: bool = False
    seed: int = 0
    false_lesion_radius: float = 3.5
    false_lesion_contrast: float = 0.3

    def __post_init__(self):
        if self.blur_sigma < 0 or self.noise_sigma < 0:
            raise ValueError("blur_sigma and noise_sigma must be >= 0")
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")

    @property
    def is_identity(self) -> bool:
        return (self.blur_sigma == 0 and self.noise_sigma == 0 and self.gamma == 1
                and not self.lesion_dropout and not self.false_lesion)

    def to_dict(self) -> dict:
        return asdict(self)


def _local_background(x: np.ndarray, inside: np.ndarray, sigma: float = 5.0) -> np.ndarray:
    """Gland-restricted smooth background via normalised Gaussian filtering."""
    w = inside.astype(np.float64)
    num = ndimage.gaussian_filter(x * w, sigma, mode="constant")
    den = ndimage.gaussian_filter(w, sigma, mode="constant")
    return np.where(den > 1e-6, num / np.maximum(den, 1e-6), x)


def drop_strongest_lesion(x: np.ndarray, inside: np.ndarray) -> np.ndarray:
    """Replace the most conspicuous blob inside the gland by its local background."""
    bg = _local_background(x, inside)
    resid = np.where(inside, x - bg, 0.0)
    peak = np.unravel_index(np.argmax(np.abs(resid)), resid.shape)
    amp = resid[peak]
    if amp == 0:
        return x
    blob = (np.sign(amp) * resid) >= 0.5 * abs(amp)
    labels, _ = ndimage.label(blob, structure=np.ones((3, 3, 3)))
    region = ndimage.binary_dilation(labels == labels[peak], iterations=2) & inside
    # refill from the surrounding gland only, so the blob does not bias its own fill
    fill = _local_background(x, inside & ~region)
    return np.where(region, fill, x)


def insert_false_lesion(x: np.ndarray, inside: np.ndarray, spec: DegradeSpec,
                        rng: np.random.Generator) -> np.ndarray:
    reach = spec.false_lesion_radius + EDGE_WIDTH
    depth = ndimage.distance_transform_edt(np.pad(inside, 1))[1:-1, 1:-1, 1:-1]
    cand = np.argwhere(depth > reach)
    if cand.size == 0:
        return x
    center = cand[int(rng.integers(cand.shape[0]))].astype(np.float64)
    blob = _blob(x.shape, center, spec.false_lesion_radius)
    return x + spec.false_lesion_contrast * blob * inside


def degrade(v: Volume, m: Mask, spec: DegradeSpec, case_index: int = 0) -> Volume:
    """Apply a surrogate network to one case. The identity spec returns `v` unchanged."""
    if v.dims != m.dims:
        raise ValueError(f"dimension mismatch: {v.dims} vs {m.dims}")
    if spec.is_identity:
        return v
    x = v.data
    inside = m.voxels.astype(bool)
    if spec.lesion_dropout:
        x = drop_strongest_lesion(x, inside)
    if spec.false_lesion:
        x = insert_false_lesion(x, inside, spec, stream(spec.seed, case_index, OP_LESION))
    if spec.blur_sigma > 0:
        x = ndimage.gaussian_filter(x, spec.blur_sigma, mode="nearest")
    if spec.gamma != 1:
        x = np.clip(x, 0.0, 1.0) ** spec.gamma
    if spec.noise_sigma > 0:
        z = stream(spec.seed, case_index, OP_NOISE).standard_normal(size=x.shape)
        x = x + spec.noise_sigma * z
    return v.replace(np.clip(x, 0.0, 1.0))


def write_cohort(cases, out_dir, volumes: Optional[List[Volume]] = None) -> Path:
    """Write volumes, masks and ``manifest.csv`` under `out_dir`; returns the manifest path.

    `volumes` replaces the phantom volumes (e.g. degraded copies) while
    keeping masks and labels.
    """
    out = Path(out_dir)
    records = []
    for k, case in enumerate(cases):
        vol = case.volume if volumes is None else volumes[k]
        vp = out / "volumes" / f"{case.case_id}.json"
        mp = out / "masks" / f"{case.case_id}.json"
        write_volume(vol, vp)
        write_mask(case.mask, mp)
        records.append(CaseRecord(case.case_id, vp, mp, case.label))
    write_manifest(records, out / "manifest.csv")
    return out / "manifest.csv"
