"""Splits, weighted binary metrics, stratified cross-validation, FPR@TPR=1."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..seeding import derive_seed, rng_for

log = logging.getLogger(__name__)

METRIC_NAMES = ("accuracy", "f1", "precision", "recall")
SPLITS = ("train", "val", "test")


class EvalError(Exception):
    pass


# --------------------------------------------------------------------------
# splits


@dataclass
class SplitPlan:
    assignments: dict[str, str]
    fractions: tuple[float, float, float]
    seed: int

    def members(self, split: str) -> list[str]:
        return sorted(u for u, s in self.assignments.items() if s == split)

    def to_dict(self) -> dict:
        return {"fractions": list(self.fractions), "seed": self.seed,
                "assignments": dict(sorted(self.assignments.items()))}


def split_counts(n: int, fractions) -> tuple[int, int, int]:
    """Per-class sizes: train and val are floored, test takes the remainder."""
    f_train, f_val, _ = fractions
    n_train = math.floor(n * f_train + 1e-9)
    n_val = math.floor(n * f_val + 1e-9)
    return n_train, n_val, n - n_train - n_val


def make_splits(labels: dict[str, str], fractions=(0.70, 0.15, 0.15), seed: int = 0) -> SplitPlan:
    """Stratified, seeded train/val/test assignment of user ids."""
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or min(fractions) < 0 or abs(sum(fractions) - 1.0) > 1e-9:
        raise EvalError(f"fractions must be three non-negative numbers summing to 1, got {fractions}")
    by_class: dict[str, list[str]] = {}
    for uid, label in labels.items():
        by_class.setdefault(label, []).append(uid)
    assignments: dict[str, str] = {}
    for label in sorted(by_class):
        ids = sorted(by_class[label])
        counts = split_counts(len(ids), fractions)
        for name, frac, c in zip(SPLITS, fractions, counts):
            if frac > 0 and c < 1:
                raise EvalError(f"class {label!r} ({len(ids)} users) leaves split {name!r} empty")
        perm = rng_for(seed, "split", label).permutation(len(ids))
        bounds = np.cumsum(counts)
        for pos, i in enumerate(perm):
            split = SPLITS[int(np.searchsorted(bounds, pos, side="right"))]
            assignments[ids[i]] = split
    return SplitPlan(assignments, fractions, seed)


# --------------------------------------------------------------------------
# metrics


@dataclass
class MetricsReport:
    accuracy: float
    f1: float
    precision: float
    recall: float
    support: dict[int, int] = field(default_factory=dict)
    per_class: dict[int, dict[str, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "f1": self.f1,
            "precision": self.precision,
            "recall": self.recall,
            "support": {str(k): v for k, v in sorted(self.support.items())},
            "per_class": {str(k): v for k, v in sorted(self.per_class.items())},
        }


def _safe_div(num: float, den: float, what: str, cls: int) -> float:
    if den == 0:
        log.warning("%s undefined for class %d; reported as 0", what, cls)
        return 0.0
    return num / den


def compute_metrics(y_true, y_pred) -> MetricsReport:
    """Accuracy plus support-weighted precision, recall and F1 over classes 0 and 1."""
    yt = np.asarray(y_true).astype(np.int64)
    yp = np.asarray(y_pred).astype(np.int64)
    if yt.size == 0:
        raise EvalError("cannot score an empty prediction set")
    if yt.shape != yp.shape:
        raise EvalError(f"length mismatch: {yt.shape} vs {yp.shape}")
    per_class, support = {}, {}
    for c in (0, 1):
        tp = int(np.sum((yp == c) & (yt == c)))
        fp = int(np.sum((yp == c) & (yt != c)))
        fn = int(np.sum((yp != c) & (yt == c)))
        p = _safe_div(tp, tp + fp, "precision", c)
        r = _safe_div(tp, tp + fn, "recall", c)
        f = 0.0 if p + r == 0 else 2 * p * r / (p + r)
        per_class[c] = {"precision": p, "recall": r, "f1": f}
        support[c] = int(np.sum(yt == c))
    n = yt.size
    weighted = {m: sum(per_class[c][m] * support[c] for c in (0, 1)) / n
                for m in ("precision", "recall", "f1")}
    return MetricsReport(float(np.mean(yt == yp)), weighted["f1"], weighted["precision"],
                         weighted["recall"], support, per_class)


def predict_labels(scores, threshold: float = 0.5) -> np.ndarray:
    return (np.asarray(scores) >= threshold).astype(np.int8)


# --------------------------------------------------------------------------
# cross-validation

Trainer = Callable[[np.ndarray, np.ndarray, int], object]


@dataclass
class CVResult:
    folds: list[MetricsReport]
    mean: dict[str, float]
    std: dict[str, float]

    def to_dict(self) -> dict:
        return {"k": len(self.folds), "mean": self.mean, "std": self.std,
                "folds": [f.to_dict() for f in self.folds]}


def stratified_folds(y, k: int, seed: int) -> np.ndarray:
    """Fold id per sample; each class is dealt round-robin after a seeded shuffle."""
    y = np.asarray(y)
    fold = np.empty(y.size, dtype=np.int64)
    offset = 0
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        idx = idx[rng_for(seed, "cv", int(c)).permutation(idx.size)]
        fold[idx] = (np.arange(idx.size) + offset) % k
        offset += idx.size
    return fold


def summarize(reports: list[MetricsReport]) -> tuple[dict, dict]:
    mean, std = {}, {}
    for m in METRIC_NAMES:
        vals = np.array([getattr(r, m) for r in reports])
        mean[m] = float(vals.mean())
        std[m] = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
    return mean, std


def cross_validate(X, y, trainer: Trainer, k: int = 5, seed: int = 0) -> CVResult:
    """Stratified k-fold CV; ``trainer(X, y, seed)`` returns an object with ``predict_proba``."""
    X = np.asarray(X)
    y = np.asarray(y).astype(np.int8)
    if k < 2 or k > y.size:
        raise EvalError(f"k must be in [2, n]; got k={k}, n={y.size}")
    fold = stratified_folds(y, k, seed)
    reports = []
    for i in range(k):
        test = fold == i
        train = ~test
        if np.unique(y[train]).size < 2:
            raise EvalError(f"fold {i}: training part has a single class")
        model = trainer(X[train], y[train], derive_seed(seed, "cv-fold", i))
        reports.append(compute_metrics(y[test], predict_labels(model.predict_proba(X[test]))))
    mean, std = summarize(reports)
    return CVResult(reports, mean, std)


# --------------------------------------------------------------------------
# screening operating point


def fpr_at_full_tpr(y_true, scores) -> float:
    """FPR at the largest threshold that still flags every positive.

    Scores equal to the threshold count as positive predictions.
    """
    yt = np.asarray(y_true).astype(bool)
    s = np.asarray(scores, dtype=np.float64)
    if yt.shape != s.shape:
        raise EvalError("y_true and scores differ in length")
    if not yt.any():
        raise EvalError("no positive samples")
    if yt.all():
        raise EvalError("no negative samples")
    tau = s[yt].min()
    neg = s[~yt]
    return float(np.sum(neg >= tau) / neg.size)
