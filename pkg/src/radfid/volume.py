"""Volume and mask containers, the raw+JSON file format, and cohort manifests.

On disk a volume is a JSON header next to a headerless raw file::

    {"dims": [nx, ny, nz], "spacing_mm": [sx, sy, sz], "origin_mm": [ox, oy, oz],
     "dtype": "f32le" | "u8", "data": "case.raw"}

Voxels are written x-fastest, z-slowest. In memory arrays are indexed
``[x, y, z]``.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

PathLike = Union[str, os.PathLike]

SPACING_TOL_MM = 1e-6

_DTYPES = {"f32le": np.dtype("<f4"), "u8": np.dtype("u1")}


class VolumeError(ValueError):
    """Malformed, inconsistent or unreadable volume data."""


class PairMismatchError(VolumeError):
    """Two grids that must coincide do not."""


def _triple(values, name, cast=float):
    vals = tuple(cast(v) for v in values)
    if len(vals) != 3:
        raise VolumeError(f"{name} must have 3 components, got {len(vals)}")
    return vals


@dataclass(frozen=True, eq=False)
class Volume:
    """A 3D scalar image on an axis-aligned grid.

    Parameters
    ----------
    voxels : ndarray, shape (nx, ny, nz)
        Intensities. Stored as given; computations upcast to float64.
    spacing_mm, origin_mm : tuple of float
        Voxel size and world position of the grid corner.
    intensity_unit : str
        Free-text tag, e.g. ``"normalized"`` or ``"raw"``.
    """

    voxels: np.ndarray
    spacing_mm: tuple = (1.0, 1.0, 1.0)
    origin_mm: tuple = (0.0, 0.0, 0.0)
    intensity_unit: str = "raw"

    def __post_init__(self):
        arr = np.array(self.voxels, copy=True)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise VolumeError(f"voxels must be a non-empty 3D array, got shape {arr.shape}")
        spacing = _triple(self.spacing_mm, "spacing_mm")
        if not all(s > 0 for s in spacing):
            raise VolumeError(f"spacing must be strictly positive, got {spacing}")
        bad = np.flatnonzero(~np.isfinite(arr.ravel(order="F")))
        if bad.size:
            raise VolumeError(f"non-finite voxel at flat index {int(bad[0])}")
        arr.flags.writeable = False
        object.__setattr__(self, "voxels", arr)
        object.__setattr__(self, "spacing_mm", spacing)
        object.__setattr__(self, "origin_mm", _triple(self.origin_mm, "origin_mm"))

    @property
    def dims(self) -> tuple:
        return tuple(int(n) for n in self.voxels.shape)

    @property
    def data(self) -> np.ndarray:
        """Voxels as float64."""
        return self.voxels.astype(np.float64)

    def replace(self, voxels, **kw) -> "Volume":
        """Same geometry, new voxel values."""
        kw.setdefault("spacing_mm", self.spacing_mm)
        kw.setdefault("origin_mm", self.origin_mm)
        kw.setdefault("intensity_unit", self.intensity_unit)
        return Volume(voxels, **kw)


@dataclass(frozen=True, eq=False)
class Mask:
    """Binary label grid. Any nonzero input is coerced to 1."""

    labels: np.ndarray
    spacing_mm: tuple = (1.0, 1.0, 1.0)
    origin_mm: tuple = (0.0, 0.0, 0.0)

    def __post_init__(self):
        arr = np.asarray(self.labels)
        if arr.ndim != 3 or min(arr.shape) < 1:
            raise VolumeError(f"labels must be a non-empty 3D array, got shape {arr.shape}")
        arr = (arr != 0).astype(np.uint8)
        arr.flags.writeable = False
        spacing = _triple(self.spacing_mm, "spacing_mm")
        if not all(s > 0 for s in spacing):
            raise VolumeError(f"spacing must be strictly positive, got {spacing}")
        object.__setattr__(self, "labels", arr)
        object.__setattr__(self, "spacing_mm", spacing)
        object.__setattr__(self, "origin_mm", _triple(self.origin_mm, "origin_mm"))

    @property
    def dims(self) -> tuple:
        return tuple(int(n) for n in self.labels.shape)

    @property
    def voxels(self) -> np.ndarray:
        return self.labels

    @property
    def count(self) -> int:
        return int(self.labels.sum())

    @classmethod
    def like(cls, vol: Volume, labels) -> "Mask":
        return cls(labels, vol.spacing_mm, vol.origin_mm)


def validate_pair(a, b) -> None:
    """Raise `PairMismatchError` unless `a` and `b` share dims and spacing."""
    if a.dims != b.dims:
        raise PairMismatchError(f"dimension mismatch: {list(a.dims)} vs {list(b.dims)}")
    for sa, sb in zip(a.spacing_mm, b.spacing_mm):
        if abs(sa - sb) > SPACING_TOL_MM:
            raise PairMismatchError(
                f"spacing mismatch: {list(a.spacing_mm)} vs {list(b.spacing_mm)}")


# -- file format ------------------------------------------------------------

def _raw_path(header_path: Path) -> Path:
    return header_path.with_suffix(".raw")


def _write(arr: np.ndarray, spacing, origin, dtype_tag: str, path: PathLike) -> None:
    path = Path(path)
    raw = _raw_path(path)
    header = {
        "dims": [int(n) for n in arr.shape],
        "spacing_mm": [float(s) for s in spacing],
        "origin_mm": [float(o) for o in origin],
        "dtype": dtype_tag,
        "data": raw.name,
    }
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        raw.write_bytes(np.asarray(arr, dtype=_DTYPES[dtype_tag]).tobytes(order="F"))
        path.write_text(json.dumps(header, indent=2) + "\n")
    except OSError as exc:
        raise VolumeError(f"cannot write {path}: {exc}") from exc


def _read(path: PathLike):
    path = Path(path)
    if not path.is_file():
        raise VolumeError(f"missing header file: {path}")
    try:
        header = json.loads(path.read_text())
        dims = _triple(header["dims"], "dims", int)
        spacing = _triple(header["spacing_mm"], "spacing_mm")
        origin = _triple(header["origin_mm"], "origin_mm")
        dtype = _DTYPES[header["dtype"]]
        data_name = str(header["data"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise VolumeError(f"malformed header {path}: {exc!r}") from exc
    if any(n < 1 for n in dims):
        raise VolumeError(f"malformed header {path}: dims must be positive")
    raw = path.parent / data_name
    if not raw.is_file():
        raise VolumeError(f"missing raw data file: {raw}")
    buf = raw.read_bytes()
    expected = dims[0] * dims[1] * dims[2] * dtype.itemsize
    if len(buf) != expected:
        raise VolumeError(f"size mismatch: {raw} has {len(buf)} bytes, header implies {expected}")
    arr = np.frombuffer(buf, dtype=dtype).reshape(dims, order="F")
    return arr, spacing, origin, header["dtype"]


def write_volume(volume: Volume, path: PathLike) -> None:
    """Write `volume` as ``path`` (JSON header) plus ``path.with_suffix(".raw")``.

    Voxels are stored as little-endian float32.
    """
    _write(volume.voxels, volume.spacing_mm, volume.origin_mm, "f32le", path)


def read_volume(path: PathLike, intensity_unit: str = "raw") -> Volume:
    arr, spacing, origin, tag = _read(path)
    if tag != "f32le":
        raise VolumeError(f"{path}: expected dtype f32le for a volume, got {tag}")
    return Volume(arr, spacing, origin, intensity_unit)


def write_mask(mask: Mask, path: PathLike) -> None:
    _write(mask.labels, mask.spacing_mm, mask.origin_mm, "u8", path)


def read_mask(path: PathLike) -> Mask:
    arr, spacing, origin, _ = _read(path)
    return Mask(arr, spacing, origin)


# -- manifests ----------------------------------------------------------------

MANIFEST_COLUMNS = ("case_id", "volume", "mask", "label")
LABELS = {"low": 0, "high": 1}


@dataclass(frozen=True)
class CaseRecord:
    case_id: str
    volume_path: Path
    mask_path: Path
    label: Optional[str] = None

    @property
    def label_value(self) -> Optional[int]:
        return None if self.label is None else LABELS[self.label]


@dataclass
class Manifest:
    cases: list = field(default_factory=list)

    def __post_init__(self):
        ids = [c.case_id for c in self.cases]
        dup = sorted({i for i in ids if ids.count(i) > 1})
        if dup:
            raise VolumeError(f"duplicate case_id in manifest: {dup}")

    def __iter__(self):
        return iter(self.cases)

    def __len__(self):
        return len(self.cases)

    @property
    def case_ids(self) -> list:
        return [c.case_id for c in self.cases]

    def by_id(self) -> dict:
        return {c.case_id: c for c in self.cases}


def read_manifest(path: PathLike) -> Manifest:
    """Parse a manifest CSV; relative paths resolve against its directory."""
    path = Path(path)
    if not path.is_file():
        raise VolumeError(f"missing manifest: {path}")
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != MANIFEST_COLUMNS:
            raise VolumeError(
                f"manifest {path} must have columns {','.join(MANIFEST_COLUMNS)}, "
                f"got {reader.fieldnames}")
        cases = []
        for row in reader:
            label = row["label"].strip() or None
            if label is not None and label not in LABELS:
                raise VolumeError(f"bad label {label!r} for case {row['case_id']}")
            cases.append(CaseRecord(
                row["case_id"], path.parent / row["volume"], path.parent / row["mask"], label))
    return Manifest(cases)


def write_manifest(manifest: Union[Manifest, Sequence[CaseRecord]], path: PathLike) -> None:
    """Write a manifest CSV with paths made relative to its directory where possible."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    base = path.parent.resolve()

    def rel(p):
        p = Path(p).resolve()
        try:
            return p.relative_to(base).as_posix()
        except ValueError:
            return os.path.relpath(p, base)

    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(MANIFEST_COLUMNS)
        for c in manifest:
            w.writerow([c.case_id, rel(c.volume_path), rel(c.mask_path), c.label or ""])


def load_case(case: CaseRecord):
    """Read the volume and mask of a manifest row and check they align."""
    vol = read_volume(case.volume_path)
    mask = read_mask(case.mask_path)
    validate_pair(vol, mask)
    return vol, mask
