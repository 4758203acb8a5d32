"""Canonical feature identifiers and whole-ROI extraction.

Feature IDs have the form ``<family>.<name>`` or, for GLCM and GLRLM,
``<family>.<name>.<aggregation>`` where the aggregation is ``avg`` (feature
averaged over the 13 direction matrices) or ``merged`` (feature of the summed
matrix). These strings are frozen; downstream tables key on them.
"""

from __future__ import annotations

from collections import OrderedDict

import numpy as np

from . import firstorder, texture
from .roi import DEFAULT_N_BINS, build_roi, discretize_fbn


def _agg(names):
    return tuple(f"{n}.avg" for n in names) + tuple(f"{n}.merged" for n in names)


FAMILIES = OrderedDict([
    ("local_intensity", firstorder.LOCAL_INTENSITY_NAMES),
    ("intensity_stats", firstorder.INTENSITY_STATS_NAMES),
    ("intensity_histogram", firstorder.INTENSITY_HISTOGRAM_NAMES),
    ("ivh", firstorder.IVH_NAMES),
    ("glcm", _agg(texture.GLCM_NAMES)),
    ("glrlm", _agg(texture.GLRLM_NAMES)),
    ("glszm", texture.GLSZM_NAMES),
    ("gldzm", texture.GLDZM_NAMES),
    ("ngtdm", texture.NGTDM_NAMES),
    ("ngldm", texture.NGLDM_NAMES),
])

FAMILY_COUNTS = OrderedDict((fam, len(names)) for fam, names in FAMILIES.items())

FEATURE_IDS = tuple(f"{fam}.{n}" for fam, names in FAMILIES.items() for n in names)

N_FEATURES = len(FEATURE_IDS)
assert N_FEATURES == 186


def family_of(feature_id: str) -> str:
    return feature_id.split(".", 1)[0]


class FeatureVector:
    """An ordered, immutable mapping from the 186 canonical IDs to values."""

    __slots__ = ("_values",)

    def __init__(self, values):
        vals = np.array(values, dtype=np.float64)
        if vals.shape != (N_FEATURES,):
            raise ValueError(f"expected {N_FEATURES} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            bad = [FEATURE_IDS[k] for k in np.flatnonzero(~np.isfinite(vals))]
            raise ValueError(f"non-finite feature values: {bad}")
        vals.flags.writeable = False
        self._values = vals

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureVector":
        return cls([d[fid] for fid in FEATURE_IDS])

    @property
    def ids(self) -> tuple:
        return FEATURE_IDS

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def entries(self) -> list:
        return list(zip(FEATURE_IDS, self._values.tolist()))

    def __getitem__(self, fid: str) -> float:
        return float(self._values[FEATURE_IDS.index(fid)])

    def __len__(self):
        return N_FEATURES

    def as_dict(self) -> dict:
        return OrderedDict(self.entries)

    def family(self, name: str) -> dict:
        return OrderedDict((k, v) for k, v in self.entries if family_of(k) == name)

    def __repr__(self):
        return f"FeatureVector({N_FEATURES} features)"


def _prefixed(family, d):
    return {f"{family}.{k}": v for k, v in d.items()}


def extract_all(v, m, n_bins: int = DEFAULT_N_BINS) -> FeatureVector:
    """Compute all 186 features of the ROI ``m`` in volume ``v``."""
    roi = build_roi(v, m)
    droi = discretize_fbn(roi, n_bins)
    ngtdm, ngldm = texture.neighbourhood_features(droi)
    out = {}
    out.update(_prefixed("local_intensity", firstorder.local_intensity_features(v, roi)))
    out.update(_prefixed("intensity_stats", firstorder.intensity_stats_features(roi)))
    out.update(_prefixed("intensity_histogram", firstorder.intensity_histogram_features(droi)))
    out.update(_prefixed("ivh", firstorder.ivh_features(roi, droi)))
    out.update(_prefixed("glcm", texture.cooccurrence_features(droi)))
    out.update(_prefixed("glrlm", texture.runlength_features(droi)))
    out.update(_prefixed("glszm", texture.zone_features(droi, "size")))
    out.update(_prefixed("gldzm", texture.zone_features(droi, "distance")))
    out.update(_prefixed("ngtdm", ngtdm))
    out.update(_prefixed("ngldm", ngldm))
    return FeatureVector.from_dict(out)
