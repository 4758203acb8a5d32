"""AUC/ROC and the repeated stratified train/validation/test evaluation."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..fidelity import average_ranks
from .forest import ForestParams, forest_fit, forest_predict_proba
from .pca import pca_fit, pca_transform


class RocPoint(tuple):
    """``(fpr, tpr, threshold)``; the first point uses threshold ``inf``."""

    __slots__ = ()

    def __new__(cls, fpr, tpr, threshold):
        return super().__new__(cls, (float(fpr), float(tpr), float(threshold)))

    fpr = property(lambda s: s[0])
    tpr = property(lambda s: s[1])
    threshold = property(lambda s: s[2])


def _check_binary(y) -> np.ndarray:
    y = np.asarray(y).astype(np.int64)
    if not set(np.unique(y)) <= {0, 1}:
        raise ValueError("labels must be 0/1")
    if y.min() == y.max():
        raise ValueError("single-class labels: AUC needs both classes")
    return y


def auc_score(scores, y) -> float:
    """Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 P(tie)."""
    s = np.asarray(scores, dtype=np.float64)
    y = _check_binary(y)
    if s.shape != y.shape:
        raise ValueError(f"length mismatch: {s.shape} vs {y.shape}")
    r = average_ranks(s)
    n1 = int(y.sum())
    n0 = y.size - n1
    return float((r[y == 1].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def roc_curve(scores, y) -> List[RocPoint]:
    """Threshold sweep over the unique scores, high to low (predict 1 when score >= t)."""
    s = np.asarray(scores, dtype=np.float64)
    y = _check_binary(y)
    n1 = int(y.sum())
    n0 = y.size - n1
    pts = [RocPoint(0.0, 0.0, math.inf)]
    order = np.argsort(-s, kind="mergesort")
    ss, yy = s[order], y[order]
    tp = np.cumsum(yy)
    fp = np.cumsum(1 - yy)
    last = np.flatnonzero(np.r_[ss[1:] != ss[:-1], True])
    for k in last:
        pts.append(RocPoint(fp[k] / n0, tp[k] / n1, ss[k]))
    return pts


def roc_area(points: Sequence[RocPoint]) -> float:
    """Trapezoidal area under a ROC point list."""
    f = np.array([p[0] for p in points])
    t = np.array([p[1] for p in points])
    return float(np.sum(np.diff(f) * (t[1:] + t[:-1]) / 2.0))


def auc_roc(scores, y) -> Tuple[float, List[RocPoint]]:
    return auc_score(scores, y), roc_curve(scores, y)


@dataclass
class Dataset:
    case_ids: list
    X: np.ndarray
    y: np.ndarray
    feature_ids: list = field(default_factory=list)

    def __post_init__(self):
        self.case_ids = [str(c) for c in self.case_ids]
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y).astype(np.int64)
        if self.X.ndim != 2 or self.X.shape[0] != len(self.case_ids) or self.y.shape != (len(self.case_ids),):
            raise ValueError(f"dataset shapes disagree: X {self.X.shape}, y {self.y.shape}, "
                             f"{len(self.case_ids)} case ids")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("dataset contains non-finite feature values")
        if not set(np.unique(self.y)) <= {0, 1}:
            raise ValueError("labels must be 0 (low) or 1 (high)")

    @property
    def n(self) -> int:
        return len(self.case_ids)

    def subset(self, case_ids: Sequence[str]) -> "Dataset":
        pos = {c: k for k, c in enumerate(self.case_ids)}
        try:
            idx = [pos[c] for c in case_ids]
        except KeyError as e:
            raise ValueError(f"case {e.args[0]} missing from dataset") from None
        return Dataset(list(case_ids), self.X[idx], self.y[idx], self.feature_ids)


@dataclass(frozen=True)
class EvalConfig:
    seed: int = 0
    repeats: int = 5
    fractions: Tuple[float, float, float] = (0.75, 0.10, 0.15)
    depth_candidates: Tuple[int, ...] = (2, 4, 8, 12)
    n_trees: int = 100
    min_leaf: int = 2
    features_per_split: int = 0
    variance_target: float = 0.95

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if len(self.fractions) != 3 or abs(sum(self.fractions) - 1.0) > 1e-9 or min(self.fractions) <= 0:
            raise ValueError(f"split fractions must be three positive numbers summing to 1: {self.fractions}")
        if not self.depth_candidates or min(self.depth_candidates) < 1:
            raise ValueError("depth candidates must be positive")


@dataclass
class ClassificationReport:
    accuracy_mean: float
    accuracy_sd: float
    auc_mean: float
    auc_sd: float
    repeats: list
    roc: List[RocPoint]

    def to_dict(self) -> dict:
        return {"accuracy_mean": self.accuracy_mean, "accuracy_sd": self.accuracy_sd,
                "auc_mean": self.auc_mean, "auc_sd": self.auc_sd, "repeats": self.repeats}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"


def stratified_split(y, fractions, rng: np.random.Generator):
    """Per-class shuffle then cut into train/validation/test index arrays."""
    y = np.asarray(y)
    parts = ([], [], [])
    for c in (0, 1):
        idx = np.flatnonzero(y == c)
        rng.shuffle(idx)
        n_val = int(round(fractions[1] * idx.size))
        n_test = int(round(fractions[2] * idx.size))
        n_train = idx.size - n_val - n_test
        for part, name, size in zip(parts, ("train", "validation", "test"), (n_train, n_val, n_test)):
            if size < 1:
                raise ValueError(f"class {'high' if c else 'low'} absent from the {name} stratum")
        parts[0].append(idx[:n_train])
        parts[1].append(idx[n_train:n_train + n_val])
        parts[2].append(idx[n_train + n_val:])
    return tuple(np.sort(np.concatenate(p)) for p in parts)


def _sd(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(x.std(ddof=1)) if x.size > 1 else 0.0


def _one_repeat(train_ds: Dataset, test_ds: Dataset, cfg: EvalConfig, r: int):
    rng = np.random.default_rng([cfg.seed, r])
    tr, va, te = stratified_split(train_ds.y, cfg.fractions, rng)
    pca = pca_fit(train_ds.X[tr], cfg.variance_target)
    Ztr = pca_transform(pca, train_ds.X[tr])
    Zva = pca_transform(pca, train_ds.X[va])
    Zte = pca_transform(pca, test_ds.X[te])
    forest_seed = cfg.seed * 1000003 + r * 10007
    best = None
    for depth in sorted(set(cfg.depth_candidates)):
        hp = ForestParams(cfg.n_trees, depth, cfg.min_leaf, cfg.features_per_split)
        model = forest_fit(Ztr, train_ds.y[tr], hp, forest_seed)
        acc = float(np.mean((forest_predict_proba(model, Zva) >= 0.5) == train_ds.y[va]))
        if best is None or acc > best[0]:
            best = (acc, depth, model)
    val_acc, depth, model = best
    prob = forest_predict_proba(model, Zte)
    yte = test_ds.y[te]
    return {
        "repeat": r, "depth": depth, "n_components": pca.n_components,
        "n_train": int(tr.size), "n_validation": int(va.size), "n_test": int(te.size),
        "validation_accuracy": val_acc,
        "accuracy": float(np.mean((prob >= 0.5) == yte)),
        "auc": auc_score(prob, yte),
    }, prob, yte


def evaluate(dataset: Dataset, config: EvalConfig = EvalConfig(),
             test_dataset: Optional[Dataset] = None) -> ClassificationReport:
    """Repeated stratified train/validation/test evaluation of PCA + forest.

    Each repeat draws its own split, fits PCA and one forest per candidate
    depth on the training part, keeps the depth with the best validation
    accuracy (smallest on ties) and scores the test part. With
    `test_dataset`, splits are drawn on `dataset` and test rows are taken from
    `test_dataset` for the same cases, so features from one source can be
    tested on features from another.
    """
    if dataset.n < 20:
        raise ValueError(f"evaluation needs at least 20 cases, got {dataset.n}")
    if test_dataset is None:
        test_dataset = dataset
    else:
        test_dataset = test_dataset.subset(dataset.case_ids)
        if not np.array_equal(test_dataset.y, dataset.y):
            raise ValueError("train and test tables disagree on labels")
        if test_dataset.X.shape[1] != dataset.X.shape[1]:
            raise ValueError("train and test tables have different feature counts")
    rows, probs, ys = [], [], []
    for r in range(config.repeats):
        row, p, y = _one_repeat(dataset, test_dataset, config, r)
        rows.append(row)
        probs.append(p)
        ys.append(y)
    acc = [r["accuracy"] for r in rows]
    auc = [r["auc"] for r in rows]
    roc = roc_curve(np.concatenate(probs), np.concatenate(ys))
    return ClassificationReport(float(np.mean(acc)), _sd(acc), float(np.mean(auc)), _sd(auc), rows, roc)


def config_dict(cfg: EvalConfig) -> dict:
    d = asdict(cfg)
    d["fractions"] = list(d["fractions"])
    d["depth_candidates"] = list(d["depth_candidates"])
    return d
