"""Bagged decision-tree classifier with Gini splits.

Trees operate on dense float feature matrices; every node stores its
class-probability vector so leaf (and root) distributions are available
at prediction time. Training is deterministic for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_MIN_GAIN = 1e-12


@dataclass
class Tree:
    feature: list[int] = field(default_factory=list)   # -1 marks a leaf
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    probs: list[list[float]] = field(default_factory=list)

    def _add_node(self, counts: np.ndarray) -> int:
        node = len(self.feature)
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.probs.append((counts / counts.sum()).tolist())
        return node

    def predict_row(self, row: np.ndarray) -> list[float]:
        node = 0
        while self.feature[node] >= 0:
            if row[self.feature[node]] <= self.threshold[node]:
                node = self.left[node]
            else:
                node = self.right[node]
        return self.probs[node]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "left": self.left,
            "right": self.right,
            "probs": self.probs,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Tree":
        return cls(
            feature=list(data["feature"]),
            threshold=list(data["threshold"]),
            left=list(data["left"]),
            right=list(data["right"]),
            probs=[list(p) for p in data["probs"]],
        )


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    p = counts / total
    return 1.0 - float(np.square(p).sum())


def _best_split(values: np.ndarray, one_hot: np.ndarray):
    """Best (threshold, weighted child impurity) for one feature, or None."""
    order = np.argsort(values, kind="stable")
    sv = values[order]
    if sv[0] == sv[-1]:
        return None
    cum = np.cumsum(one_hot[order], axis=0)
    total = cum[-1]
    n = len(sv)
    cuts = np.nonzero(sv[:-1] < sv[1:])[0]
    left = cum[cuts]
    right = total - left
    n_left = left.sum(axis=1)
    n_right = n - n_left
    gini_left = 1.0 - np.square(left / n_left[:, None]).sum(axis=1)
    gini_right = 1.0 - np.square(right / n_right[:, None]).sum(axis=1)
    weighted = (n_left * gini_left + n_right * gini_right) / n
    best = int(np.argmin(weighted))
    i = int(cuts[best])
    thr = (sv[i] + sv[i + 1]) / 2.0
    if thr >= sv[i + 1]:  # degenerate float spacing
        thr = float(sv[i])
    return float(thr), float(weighted[best])


def _grow_tree(
    X: np.ndarray,
    y_hot: np.ndarray,
    rng: np.random.Generator,
    max_depth: int | None,
    m_features: int,
) -> Tree:
    tree = Tree()
    n_features = X.shape[1]
    root = tree._add_node(y_hot.sum(axis=0))
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        counts = y_hot[idx].sum(axis=0)
        impurity = _gini(counts)
        if (
            impurity <= _MIN_GAIN
            or len(idx) < 2
            or (max_depth is not None and depth >= max_depth)
        ):
            continue
        candidates = rng.choice(n_features, size=min(m_features, n_features), replace=False)
        best = None
        for f in candidates:
            found = _best_split(X[idx, f], y_hot[idx])
            if found is None:
                continue
            thr, weighted = found
            if best is None or weighted < best[2]:
                best = (int(f), thr, weighted)
        if best is None or impurity - best[2] <= _MIN_GAIN:
            continue
        f, thr, _ = best
        go_left = X[idx, f] <= thr
        left_idx = idx[go_left]
        right_idx = idx[~go_left]
        tree.feature[node] = f
        tree.threshold[node] = thr
        tree.left[node] = tree._add_node(y_hot[left_idx].sum(axis=0))
        tree.right[node] = tree._add_node(y_hot[right_idx].sum(axis=0))
        stack.append((tree.right[node], right_idx, depth + 1))
        stack.append((tree.left[node], left_idx, depth + 1))
    return tree


@dataclass
class RandomForest:
    n_trees: int = 200
    max_depth: int | None = None
    features_per_split: int | None = None  # default sqrt(feature count)
    seed: int = 0
    n_classes: int = 0
    trees: list[Tree] = field(default_factory=list)

    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int | None = None) -> "RandomForest":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        if len(np.unique(y)) < 2:
            raise ValueError("training data must contain at least 2 classes")
        self.n_classes = n_classes if n_classes is not None else int(y.max()) + 1
        n, n_features = X.shape
        y_hot = np.zeros((n, self.n_classes), dtype=np.float64)
        y_hot[np.arange(n), y] = 1.0
        m = self.features_per_split or max(1, int(round(math.sqrt(n_features))))
        self.trees = []
        for ss in np.random.SeedSequence(self.seed).spawn(self.n_trees):
            rng = np.random.default_rng(ss)
            sample = rng.integers(0, n, size=n)
            self.trees.append(_grow_tree(X[sample], y_hot[sample], rng, self.max_depth, m))
        return self

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        if not self.trees:
            raise ValueError("forest is not trained")
        X = np.asarray(X, dtype=np.float64)
        out = np.zeros((X.shape[0], self.n_classes))
        for tree in self.trees:
            for i in range(X.shape[0]):
                out[i] += tree.predict_row(X[i])
        return out / len(self.trees)

    def root_distribution(self) -> np.ndarray:
        """Mean root class distribution; the prior used for empty inputs."""
        if not self.trees:
            raise ValueError("forest is not trained")
        return np.mean([tree.probs[0] for tree in self.trees], axis=0)

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "features_per_split": self.features_per_split,
            "seed": self.seed,
            "n_classes": self.n_classes,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RandomForest":
        return cls(
            n_trees=data["n_trees"],
            max_depth=data["max_depth"],
            features_per_split=data["features_per_split"],
            seed=data["seed"],
            n_classes=data["n_classes"],
            trees=[Tree.from_dict(t) for t in data["trees"]],
        )
