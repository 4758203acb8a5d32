"""Random forest of Gini CART trees for binary labels.

Each tree draws a bootstrap sample of size n and, at every node, ceil(sqrt(p))
candidate features without replacement. Thresholds are midpoints between
consecutive distinct values; samples with ``x <= threshold`` go left. Tree
``t`` of a forest seeded with ``s`` uses its own generator seeded ``s + t``, so
trees can be fitted in any order or in parallel with identical results.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int = 12
    min_leaf: int = 2
    features_per_split: int = 0  # 0 means ceil(sqrt(p))

    def __post_init__(self):
        if self.n_trees < 1 or self.max_depth < 1 or self.min_leaf < 1 or self.features_per_split < 0:
            raise ValueError(f"forest hyperparameters must be positive: {self}")

    def mtry(self, p: int) -> int:
        k = self.features_per_split or math.ceil(math.sqrt(p))
        return min(k, p)


class Tree:
    """Array-backed binary tree. Leaves have ``feature == -1``."""

    def __init__(self):
        self.feature, self.threshold, self.left, self.right, self.prob1 = [], [], [], [], []

    def _add(self, feature=-1, threshold=0.0, prob1=0.0):
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(-1)
        self.right.append(-1)
        self.prob1.append(prob1)
        return len(self.feature) - 1

    def freeze(self):
        self.feature = np.array(self.feature, dtype=np.int64)
        self.threshold = np.array(self.threshold, dtype=np.float64)
        self.left = np.array(self.left, dtype=np.int64)
        self.right = np.array(self.right, dtype=np.int64)
        self.prob1 = np.array(self.prob1, dtype=np.float64)
        return self

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def leaf_probability(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.flatnonzero(self.feature[node] >= 0)
        while active.size:
            nd = node[active]
            go_left = X[active, self.feature[nd]] <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
            active = active[self.feature[node[active]] >= 0]
        return self.prob1[node]

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in ("feature", "threshold", "left", "right", "prob1")}


def _best_split(X, y, idx, feats, min_leaf):
    """Lowest weighted Gini split of samples `idx` over candidate features."""
    n = idx.size
    best = None
    for f in feats:
        x = X[idx, f]
        order = np.argsort(x, kind="mergesort")
        xs, ys = x[order], y[idx][order]
        cut = np.flatnonzero(xs[1:] != xs[:-1]) + 1  # left sizes at value changes
        cut = cut[(cut >= min_leaf) & (n - cut >= min_leaf)]
        if cut.size == 0:
            continue
        ones = np.cumsum(ys)[cut - 1].astype(np.float64)
        nl = cut.astype(np.float64)
        nr = n - nl
        onesr = ys.sum() - ones
        gini = (nl * (1 - (ones / nl) ** 2 - (1 - ones / nl) ** 2)
                + nr * (1 - (onesr / nr) ** 2 - (1 - onesr / nr) ** 2)) / n
        k = int(np.argmin(gini))
        if best is None or gini[k] < best[0]:
            thr = 0.5 * (xs[cut[k] - 1] + xs[cut[k]])
            best = (float(gini[k]), int(f), float(thr))
    return best


def fit_tree(X, y, params: ForestParams, rng: np.random.Generator, sample=None) -> Tree:
    n, p = X.shape
    idx = np.arange(n) if sample is None else sample
    mtry = params.mtry(p)
    tree = Tree()

    def grow(node_idx, depth):
        yy = y[node_idx]
        ones = int(yy.sum())
        prob = ones / node_idx.size
        node = tree._add(prob1=prob)
        pure = ones == 0 or ones == node_idx.size
        if pure or depth >= params.max_depth or node_idx.size < 2 * params.min_leaf:
            return node
        feats = rng.choice(p, size=mtry, replace=False)
        split = _best_split(X, y, node_idx, feats, params.min_leaf)
        parent_gini = 1 - prob ** 2 - (1 - prob) ** 2
        if split is None or split[0] >= parent_gini - 1e-12:
            return node
        _, f, thr = split
        go_left = X[node_idx, f] <= thr
        tree.feature[node] = f
        tree.threshold[node] = thr
        tree.left[node] = grow(node_idx[go_left], depth + 1)
        tree.right[node] = grow(node_idx[~go_left], depth + 1)
        return node

    grow(idx, 0)
    return tree.freeze()


@dataclass(eq=False)
class ForestModel:
    trees: list
    seed: int
    params: ForestParams
    n_features: int

    def to_json(self) -> str:
        return json.dumps({"seed": self.seed, "params": asdict(self.params),
                           "n_features": self.n_features,
                           "trees": [t.to_dict() for t in self.trees]},
                          sort_keys=True, separators=(",", ":"))


def forest_fit(X, y, params: ForestParams = ForestParams(), seed: int = 0) -> ForestModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y).astype(np.int64)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ValueError(f"X and y disagree: {X.shape} vs {y.shape}")
    if not set(np.unique(y)) <= {0, 1}:
        raise ValueError("labels must be 0/1")
    if np.unique(y).size < 2:
        raise ValueError("single-class labels: both classes are required")
    n = X.shape[0]
    trees = []
    for t in range(params.n_trees):
        rng = np.random.default_rng(seed + t)
        sample = rng.integers(0, n, size=n)
        trees.append(fit_tree(X, y, params, rng, sample))
    return ForestModel(trees, seed, params, X.shape[1])


def forest_predict_proba(model: ForestModel, X) -> np.ndarray:
    """Mean over trees of the leaf class-1 probability."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got shape {X.shape}")
    total = np.zeros(X.shape[0])
    for t in model.trees:
        total += t.leaf_probability(X)
    return total / len(model.trees)
