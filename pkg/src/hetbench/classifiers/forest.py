"""CART trees with Gini splits, bagged into a random forest.

All randomness is keyed rather than sequential: tree ``i`` draws its
bootstrap from ``derive_seed(rf_seed, i, 0)`` and each node shuffles its
candidate features from a key derived from its parent's key and the
branch taken. Two consequences the tuner relies on:

* the first ``k`` trees of a forest do not depend on ``n_estimators``;
* a tree grown with ``max_depth=d`` is exactly the unbounded tree cut at
  depth ``d`` (every node stores the majority label of its rows).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..datagen import derive_seed, uniform_int

# Absolute slack when comparing split scores, so splits whose scores agree
# up to rounding resolve by (feature, threshold) order.
_SCORE_TOL = 1e-9
LEAF = -1


def gini_impurity(counts: Sequence[int]) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum()
    if n <= 0:
        raise ValueError("gini impurity of an empty node")
    p = counts / n
    return float(1.0 - (p * p).sum())


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    weighted_gini: float


def best_split(X: np.ndarray, y: np.ndarray, n_classes: int, features) -> Optional[Split]:
    """Best Gini split among ``features`` or ``None``.

    Thresholds are midpoints between consecutive distinct values; rows with
    ``x <= threshold`` go left. Ties go to the lower feature index, then the
    lower threshold.
    """
    n = len(y)
    total = np.bincount(y, minlength=n_classes)
    if np.count_nonzero(total) <= 1:
        return None
    best_q, best = -np.inf, None
    for f in sorted(int(f) for f in features):
        uniq, inv = np.unique(X[:, f], return_inverse=True)
        if len(uniq) < 2:
            continue
        counts = np.bincount(inv * n_classes + y, minlength=len(uniq) * n_classes)
        left = np.cumsum(counts.reshape(len(uniq), n_classes), axis=0)[:-1]
        right = total - left
        n_left = left.sum(axis=1)
        # q = n * (1 - weighted child gini); larger is better.
        q = (left * left).sum(axis=1) / n_left + (right * right).sum(axis=1) / (n - n_left)
        i = int(np.flatnonzero(q >= q.max() - _SCORE_TOL)[0])
        if q[i] > best_q + _SCORE_TOL:
            best_q = q[i]
            best = (f, (uniq[i] + uniq[i + 1]) / 2.0)
    if best is None:
        return None
    return Split(best[0], float(best[1]), float(1.0 - best_q / n))


def rf_bootstrap(state: int, n: int) -> tuple[np.ndarray, int]:
    """``n`` indices drawn uniformly with replacement from ``range(n)``."""
    if n < 1:
        raise ValueError("bootstrap size must be positive")
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i], state = uniform_int(state, 0, n - 1)
    return out, state


def feature_order(key: int, n_features: int) -> list[int]:
    """Fisher-Yates shuffle of the feature indices driven by a node key."""
    order = list(range(n_features))
    state = key
    for i in range(n_features - 1, 0, -1):
        j, state = uniform_int(state, 0, i)
        order[i], order[j] = order[j], order[i]
    return order


@dataclass(frozen=True, eq=False)
class Tree:
    feature: np.ndarray  # LEAF for leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    label: np.ndarray  # majority class index of the node's rows
    depth: np.ndarray

    def __len__(self):
        return len(self.feature)

    @property
    def max_depth(self) -> int:
        return int(self.depth.max())

    def apply(self, X: np.ndarray, max_depth: Optional[int] = None) -> np.ndarray:
        """Class index per row, optionally reading the tree as if cut at ``max_depth``."""
        X = np.asarray(X, dtype=np.float64)
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        limit = np.iinfo(np.int64).max if max_depth is None else max_depth
        while len(rows):
            cur = node[rows]
            feat = self.feature[cur]
            go = (feat != LEAF) & (self.depth[cur] < limit)
            rows, cur, feat = rows[go], cur[go], feat[go]
            goes_left = X[rows, feat] <= self.threshold[cur]
            node[rows] = np.where(goes_left, self.left[cur], self.right[cur])
        return self.label[node]

    def structure(self, max_depth: Optional[int] = None) -> list[tuple]:
        """Preorder (feature, threshold, label) listing, for comparing trees."""
        out = []
        stack = [0]
        while stack:
            i = stack.pop()
            is_leaf = self.feature[i] == LEAF or (max_depth is not None and self.depth[i] >= max_depth)
            if is_leaf:
                out.append((LEAF, 0.0, int(self.label[i])))
            else:
                out.append((int(self.feature[i]), float(self.threshold[i]), int(self.label[i])))
                stack.extend([int(self.right[i]), int(self.left[i])])
        return out


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    key: int,
    max_depth: Optional[int] = None,
    min_samples_split: int = 2,
    features_per_split: Optional[int] = None,
) -> Tree:
    n_features = X.shape[1]
    m = n_features if features_per_split is None else features_per_split
    feature, threshold, left, right, label, depth = [], [], [], [], [], []

    def new_node(d):
        for col, value in ((feature, LEAF), (threshold, 0.0), (left, -1), (right, -1), (label, 0), (depth, d)):
            col.append(value)
        return len(feature) - 1

    stack = [(new_node(0), np.arange(len(y)), key)]
    while stack:
        node, rows, node_key = stack.pop()
        ys = y[rows]
        counts = np.bincount(ys, minlength=n_classes)
        label[node] = int(np.argmax(counts))
        d = depth[node]
        if np.count_nonzero(counts) <= 1 or len(rows) < min_samples_split:
            continue
        if max_depth is not None and d >= max_depth:
            continue
        Xs = X[rows]
        order = feature_order(node_key, n_features)
        split = best_split(Xs, ys, n_classes, order[:m])
        if split is None and m < n_features:
            split = best_split(Xs, ys, n_classes, order[m:])
        if split is None:
            continue
        mask = Xs[:, split.feature] <= split.threshold
        feature[node] = split.feature
        threshold[node] = split.threshold
        left[node] = new_node(d + 1)
        right[node] = new_node(d + 1)
        stack.append((right[node], rows[~mask], derive_seed(node_key, 1)))
        stack.append((left[node], rows[mask], derive_seed(node_key, 0)))
    return Tree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(label, dtype=np.int64),
        np.array(depth, dtype=np.int64),
    )


@dataclass(frozen=True, eq=False)
class Forest:
    trees: tuple[Tree, ...]
    n_classes: int

    def predict(self, X: np.ndarray, n_trees: Optional[int] = None, max_depth: Optional[int] = None) -> np.ndarray:
        """Majority vote of the first ``n_trees`` trees; ties go to the earliest class."""
        trees = self.trees if n_trees is None else self.trees[:n_trees]
        votes = np.zeros((len(X), self.n_classes), dtype=np.int64)
        rows = np.arange(len(X))
        for tree in trees:
            votes[rows, tree.apply(X, max_depth)] += 1
        return np.argmax(votes, axis=1)


def fit(config, X, y, n_classes) -> Forest:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    trees = []
    for i in range(config.n_estimators):
        if config.bootstrap:
            rows, _ = rf_bootstrap(derive_seed(config.rf_seed, i, 0), len(y))
        else:
            rows = np.arange(len(y))
        trees.append(
            grow_tree(
                X[rows],
                y[rows],
                n_classes,
                derive_seed(config.rf_seed, i, 1),
                config.max_depth,
                config.min_samples_split,
                min(config.features_per_split, X.shape[1]),
            )
        )
    return Forest(tuple(trees), n_classes)


def predict(forest: Forest, config, Xs: np.ndarray) -> np.ndarray:
    return forest.predict(Xs)
