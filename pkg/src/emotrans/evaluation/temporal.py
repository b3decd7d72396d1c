"""Temporal generalisation: train on year y, test on year y + gap.

Every user belongs to exactly one year bucket, so train and test users never
overlap. Each side of an experiment is balanced by seeded downsampling.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..seeding import derive_seed, rng_for
from .metrics import EvalError, Trainer, predict_labels
from .stats import StatsError, TTestResult, welch_ttest

Featurizer = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


@dataclass
class GapStats:
    gap: int
    accuracies: list[float]
    pairs: list[tuple[int, int]]

    @property
    def n_experiments(self) -> int:
        return len(self.accuracies)

    @property
    def mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def stderr(self) -> float:
        """Sample std / sqrt(n); 0.0 for a single experiment."""
        n = len(self.accuracies)
        return float(np.std(self.accuracies, ddof=1) / math.sqrt(n)) if n > 1 else 0.0

    def to_dict(self) -> dict:
        return {"gap": self.gap, "mean_acc": self.mean, "stderr": self.stderr,
                "n_experiments": self.n_experiments, "accuracies": self.accuracies,
                "pairs": [list(p) for p in self.pairs]}


@dataclass
class TemporalResult:
    gaps: dict[int, GapStats]
    absent: list[int] = field(default_factory=list)
    delta: float | None = None
    ttest: TTestResult | None = None
    ttest_note: str = ""

    def table(self) -> list[dict]:
        return [{"gap": g, "mean_acc": s.mean, "stderr": s.stderr, "n_experiments": s.n_experiments}
                for g, s in sorted(self.gaps.items())]

    def to_dict(self) -> dict:
        return {
            "per_gap": [s.to_dict() for _, s in sorted(self.gaps.items())],
            "absent_gaps": self.absent,
            "delta_last_minus_first": self.delta,
            "ttest": self.ttest.to_dict() if self.ttest else None,
            "ttest_note": self.ttest_note,
        }


def year_pairs(years, gap: int) -> list[tuple[int, int]]:
    ys = sorted(set(int(y) for y in years))
    present = set(ys)
    return [(y, y + gap) for y in ys if y + gap in present]


def balanced_sample(idx: np.ndarray, labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    classes = [idx[labels[idx] == c] for c in (0, 1)]
    n = min(len(c) for c in classes)
    picked = [np.sort(rng.choice(c, size=n, replace=False)) if len(c) > n else c for c in classes]
    return np.sort(np.concatenate(picked))


def temporal_harness(labels, years, featurize: Featurizer, trainer: Trainer,
                     gaps=range(1, 8), seed: int = 0, user_ids=None) -> TemporalResult:
    """Mean/stderr accuracy per gap, plus first-vs-last gap difference and Welch test.

    ``featurize(train_idx, test_idx)`` returns the two feature matrices, so
    content features can build their vocabulary from the training side only.
    """
    labels = np.asarray(labels).astype(np.int8)
    years = np.asarray(years).astype(np.int64)
    ids = np.asarray(user_ids) if user_ids is not None else np.arange(labels.size)
    gaps = list(gaps)
    stats: dict[int, GapStats] = {}
    absent: list[int] = []
    for gap in gaps:
        accs, pairs = [], []
        for y_train, y_test in year_pairs(years, gap):
            tr_all = np.flatnonzero(years == y_train)
            te_all = np.flatnonzero(years == y_test)
            if min(np.unique(labels[tr_all]).size, np.unique(labels[te_all]).size) < 2:
                continue
            rng = rng_for(seed, "temporal", y_train, y_test)
            tr = balanced_sample(tr_all, labels, rng)
            te = balanced_sample(te_all, labels, rng)
            if set(ids[tr].tolist()) & set(ids[te].tolist()):
                raise EvalError(f"user overlap between {y_train} and {y_test}")
            X_tr, X_te = featurize(tr, te)
            model = trainer(X_tr, labels[tr], derive_seed(seed, "temporal-model", y_train, y_test))
            pred = predict_labels(model.predict_proba(X_te))
            accs.append(float(np.mean(pred == labels[te])))
            pairs.append((y_train, y_test))
        if accs:
            stats[gap] = GapStats(gap, accs, pairs)
        else:
            absent.append(gap)

    result = TemporalResult(stats, absent)
    first, last = (gaps[0], gaps[-1]) if gaps else (None, None)
    if first in stats and last in stats and first != last:
        result.delta = stats[last].mean - stats[first].mean
        try:
            result.ttest = welch_ttest(stats[last].accuracies, stats[first].accuracies)
        except StatsError as exc:
            result.ttest_note = str(exc)
    return result


def er_featurizer(X: np.ndarray) -> Featurizer:
    def featurize(tr, te):
        return X[tr], X[te]
    return featurize


def tfidf_featurizer(docs: list[str], config=None) -> Featurizer:
    from ..models.tfidf import TfidfVectorizer

    def featurize(tr, te):
        vec = TfidfVectorizer(config).fit([docs[i] for i in tr])
        return vec.transform([docs[i] for i in tr]), vec.transform([docs[i] for i in te])
    return featurize
