"""Classifiers over fingerprint (ER) or tf-idf features, plus JSON persistence."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .forest import RandomForest
from .linear import HingeClassifier, LogisticRegression, TrainingError
from .tfidf import TfidfConfig, TfidfVectorizer, VocabularyError, tfidf_features

FORMAT_VERSION = 1
KINDS = {"tree_ensemble": RandomForest, "logistic": LogisticRegression, "margin": HingeClassifier}
ALIASES = {"rf": "tree_ensemble", "forest": "tree_ensemble", "logreg": "logistic",
           "lr": "logistic", "svm": "margin"}
FEATURE_KINDS = ("ER", "tfidf")


class ModelError(Exception):
    pass


def canonical_kind(kind: str) -> str:
    kind = ALIASES.get(kind, kind)
    if kind not in KINDS:
        raise ModelError(f"unknown model kind {kind!r}; choose from {sorted(KINDS) + sorted(ALIASES)}")
    return kind


@dataclass
class TrainedModel:
    kind: str
    feature_kind: str
    seed: int
    hyperparams: dict
    n_features: int
    estimator: object

    def predict_proba(self, X) -> np.ndarray:
        return predict_proba(self, X)

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
            "feature_kind": self.feature_kind,
            "seed": self.seed,
            "hyperparams": self.hyperparams,
            "n_features": self.n_features,
            "parameters": self.estimator.get_params(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def save(self, path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainedModel":
        if d.get("format_version") != FORMAT_VERSION:
            raise ModelError(f"unsupported model format {d.get('format_version')!r}")
        kind = canonical_kind(d["kind"])
        est = KINDS[kind](seed=d["seed"], **d["hyperparams"])
        est.set_params(d["parameters"], d["n_features"])
        return cls(kind, d["feature_kind"], d["seed"], d["hyperparams"], d["n_features"], est)

    @classmethod
    def load(cls, path) -> "TrainedModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _check_training_data(X, y):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or X.shape[1] < 1:
        raise ModelError(f"bad training shapes X{X.shape} y{y.shape}")
    if not np.all(np.isfinite(X)):
        raise ModelError("features contain NaN or Inf")
    if not set(np.unique(y).tolist()) <= {0, 1}:
        raise ModelError("labels must be binary 0/1")
    if np.unique(y).size < 2:
        raise ModelError("training labels contain a single class")
    return X, y.astype(np.int8)


def train(kind: str, X, y, seed: int = 0, hyperparams: dict | None = None,
          feature_kind: str = "ER", jobs: int = 1) -> TrainedModel:
    kind = canonical_kind(kind)
    if feature_kind not in FEATURE_KINDS:
        raise ModelError(f"unknown feature kind {feature_kind!r}")
    X, y = _check_training_data(X, y)
    est = KINDS[kind](seed=seed, **(hyperparams or {}))
    est.fit(X, y, jobs=jobs)
    return TrainedModel(kind, feature_kind, int(seed), dict(est.hyperparams), X.shape[1], est)


def train_tree_ensemble(X, y, hyperparams: dict | None = None, seed: int = 0,
                        feature_kind: str = "ER", jobs: int = 1) -> TrainedModel:
    return train("tree_ensemble", X, y, seed, hyperparams, feature_kind, jobs)


def train_logistic(X, y, l2_strength: float = 1e-3, seed: int = 0,
                   feature_kind: str = "ER", **hyperparams) -> TrainedModel:
    return train("logistic", X, y, seed, {"l2": l2_strength, **hyperparams}, feature_kind)


def train_margin(X, y, l2_strength: float = 1e-2, seed: int = 0,
                 feature_kind: str = "ER", **hyperparams) -> TrainedModel:
    return train("margin", X, y, seed, {"l2": l2_strength, **hyperparams}, feature_kind)


def predict_proba(model: TrainedModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ModelError(f"expected {model.n_features} features, got shape {X.shape}")
    return model.estimator.predict_proba(X)


__all__ = [
    "TrainedModel", "ModelError", "TrainingError", "VocabularyError", "TfidfConfig",
    "TfidfVectorizer", "tfidf_features", "train", "train_tree_ensemble", "train_logistic",
    "train_margin", "predict_proba", "canonical_kind", "KINDS",
]
