"""Case-by-feature tables and the fixed numeric formatting used in every CSV."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


def fmt(x) -> str:
    """Nine significant digits; infinities as ``inf``/``-inf``."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    s = f"{x:.9g}"
    return "0" if s == "-0" else s


@dataclass
class FeatureTable:
    """Rows are cases, columns features (canonical ID order by convention)."""

    case_ids: list
    feature_ids: list
    values: np.ndarray

    def __post_init__(self):
        self.case_ids = [str(c) for c in self.case_ids]
        self.feature_ids = list(self.feature_ids)
        self.values = np.asarray(self.values, dtype=np.float64).reshape(
            len(self.case_ids), len(self.feature_ids))
        if len(set(self.case_ids)) != len(self.case_ids):
            raise ValueError("duplicate case_id in feature table")
        self._col = {f: k for k, f in enumerate(self.feature_ids)}

    @classmethod
    def from_vectors(cls, case_ids: Sequence[str], vectors) -> "FeatureTable":
        vectors = list(vectors)
        ids = list(vectors[0].ids) if vectors else []
        return cls(list(case_ids), ids, np.array([v.values for v in vectors]))

    def column(self, feature_id: str) -> np.ndarray:
        return self.values[:, self._col[feature_id]]

    def reorder(self, case_ids: Sequence[str]) -> "FeatureTable":
        pos = {c: k for k, c in enumerate(self.case_ids)}
        idx = [pos[c] for c in case_ids]
        return FeatureTable(list(case_ids), self.feature_ids, self.values[idx])

    def write_csv(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["case_id"] + self.feature_ids)
            for cid, row in zip(self.case_ids, self.values):
                w.writerow([cid] + [fmt(v) for v in row])

    @classmethod
    def read_csv(cls, path) -> "FeatureTable":
        with Path(path).open(newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][0] != "case_id":
            raise ValueError(f"{path}: first column must be case_id")
        header, body = rows[0], rows[1:]
        return cls([r[0] for r in body], header[1:],
                   np.array([[float(v) for v in r[1:]] for r in body]).reshape(len(body), len(header) - 1))
