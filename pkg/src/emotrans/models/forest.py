"""Bagged CART ensemble (random forest) for binary labels.

Trees split on Gini impurity, consider ``max_features`` randomly ordered
non-constant features per node, and grow until pure unless limited by
``max_depth``/``min_samples_leaf``. Each tree votes for its leaf's majority
class; ``predict_proba`` is the fraction of positive votes.

Tree ``i`` draws from its own RNG stream derived from ``(seed, i)``, so
results do not depend on ``jobs``. Rows are put in a canonical order before
bootstrapping, so permuting the training set changes nothing.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..seeding import rng_for

DEFAULTS = {
    "n_trees": 200,
    "max_features": "sqrt",
    "max_depth": None,
    "min_samples_leaf": 1,
    "bootstrap": True,
}


def canonical_order(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Row order that depends only on row contents."""
    keys = np.column_stack([X, y.astype(np.float64)])
    return np.lexsort(keys.T[::-1])


def resolve_max_features(value, d: int) -> int:
    if value in (None, "all"):
        return d
    if value == "sqrt":
        return max(1, math.ceil(math.sqrt(d)))
    if value == "log2":
        return max(1, math.ceil(math.log2(d))) if d > 1 else 1
    if isinstance(value, float) and 0 < value <= 1:
        return max(1, math.ceil(value * d))
    if isinstance(value, int) and value >= 1:
        return min(value, d)
    raise ValueError(f"bad max_features {value!r}")


@dataclass
class Tree:
    feature: np.ndarray    # -1 at leaves
    threshold: np.ndarray  # go left when x <= threshold
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray      # fraction of positive training samples in the node

    def vote(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        active = self.feature[node] >= 0
        while active.any():
            idx = rows[active]
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return (self.value[node] > 0.5).astype(np.int8)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        return cls(
            np.asarray(d["feature"], dtype=np.intp),
            np.asarray(d["threshold"], dtype=np.float64),
            np.asarray(d["left"], dtype=np.intp),
            np.asarray(d["right"], dtype=np.intp),
            np.asarray(d["value"], dtype=np.float64),
        )


def build_tree(X: np.ndarray, y: np.ndarray, samples: np.ndarray, rng: np.random.Generator,
               max_features: int, max_depth: int | None = None, min_leaf: int = 1) -> Tree:
    d = X.shape[1]
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node() -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(0.0)
        return len(feature) - 1

    stack = [(new_node(), np.asarray(samples, dtype=np.intp), 0)]
    while stack:
        node, idx, depth = stack.pop()
        n = idx.size
        pos = int(y[idx].sum())
        value[node] = pos / n
        if pos == 0 or pos == n or n < 2 * min_leaf:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        order = rng.permutation(d).astype(np.intp)
        f, thr = kernels.best_split(X, y, idx, order, max_features, min_leaf)
        if f < 0:
            continue
        go_left = X[idx, f] <= thr
        feature[node] = f
        threshold[node] = thr
        left[node] = new_node()
        right[node] = new_node()
        stack.append((right[node], idx[~go_left], depth + 1))
        stack.append((left[node], idx[go_left], depth + 1))
    return Tree(
        np.asarray(feature, dtype=np.intp),
        np.asarray(threshold, dtype=np.float64),
        np.asarray(left, dtype=np.intp),
        np.asarray(right, dtype=np.intp),
        np.asarray(value, dtype=np.float64),
    )


class RandomForest:
    kind = "tree_ensemble"

    def __init__(self, seed: int = 0, **hyperparams):
        unknown = set(hyperparams) - set(DEFAULTS)
        if unknown:
            raise ValueError(f"unknown forest hyperparameters {sorted(unknown)}")
        self.hyperparams = {**DEFAULTS, **hyperparams}
        self.seed = int(seed)
        self.trees: list[Tree] = []
        self.n_features: int | None = None

    def fit(self, X, y, jobs: int = 1) -> "RandomForest":
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.asarray(y).astype(np.int8)
        order = canonical_order(X, y)
        X, y = np.ascontiguousarray(X[order]), np.ascontiguousarray(y[order])
        n, d = X.shape
        hp = self.hyperparams
        mf = resolve_max_features(hp["max_features"], d)
        min_leaf = int(hp["min_samples_leaf"])

        def grow(i: int) -> Tree:
            rng = rng_for(self.seed, "tree", i)
            samples = rng.integers(0, n, n) if hp["bootstrap"] else np.arange(n)
            return build_tree(X, y, samples, rng, mf, hp["max_depth"], min_leaf)

        n_trees = int(hp["n_trees"])
        if jobs > 1:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                self.trees = list(pool.map(grow, range(n_trees)))
        else:
            self.trees = [grow(i) for i in range(n_trees)]
        self.n_features = d
        return self

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        votes = np.zeros(X.shape[0], dtype=np.int64)
        for tree in self.trees:
            votes += tree.vote(X)
        return votes / len(self.trees)

    def get_params(self) -> dict:
        return {"trees": [t.to_dict() for t in self.trees]}

    def set_params(self, params: dict, n_features: int) -> None:
        self.trees = [Tree.from_dict(t) for t in params["trees"]]
        self.n_features = n_features
