"""Linear classifiers fit by full-batch (sub)gradient descent."""
from __future__ import annotations

import numpy as np

from .forest import canonical_order


class TrainingError(Exception):
    pass


def _sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -z))


def logistic_loss(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float) -> float:
    """Mean log-loss plus ``l2/2 * ||w||^2`` (bias unpenalised)."""
    z = X @ w + b
    # log(1+e^z) - y*z, computed stably
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w))


def logistic_gradient(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float):
    r = _sigmoid(X @ w + b) - y
    return X.T @ r / X.shape[0] + l2 * w, float(np.mean(r))


class LogisticRegression:
    """L2-regularised logistic regression.

    Gradient descent with step ``1/L`` (L the Lipschitz constant of the
    gradient) so the training loss never increases; stops when the gradient
    infinity-norm drops below ``tol`` or after ``max_epochs``.
    """

    kind = "logistic"

    def __init__(self, seed: int = 0, l2: float = 1e-3, tol: float = 1e-6, max_epochs: int = 10_000):
        self.seed = int(seed)
        self.hyperparams = {"l2": float(l2), "tol": float(tol), "max_epochs": int(max_epochs)}
        self.coef: np.ndarray | None = None
        self.intercept = 0.0
        self.trace: list[float] = []
        self.n_epochs = 0
        self.n_features: int | None = None

    def fit(self, X, y, jobs: int = 1) -> "LogisticRegression":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y).astype(np.float64)
        order = canonical_order(X, y)
        X, y = X[order], y[order]
        n, d = X.shape
        l2, tol, max_epochs = (self.hyperparams[k] for k in ("l2", "tol", "max_epochs"))
        Xb = np.column_stack([X, np.ones(n)])
        lipschitz = 0.25 * np.linalg.norm(Xb, 2) ** 2 / n + l2
        step = 1.0 / lipschitz
        w, b = np.zeros(d), 0.0
        self.trace = [logistic_loss(w, b, X, y, l2)]
        for _ in range(max_epochs):
            gw, gb = logistic_gradient(w, b, X, y, l2)
            if max(np.max(np.abs(gw), initial=0.0), abs(gb)) < tol:
                break
            w = w - step * gw
            b = b - step * gb
            loss = logistic_loss(w, b, X, y, l2)
            if not np.isfinite(loss):
                raise TrainingError("logistic loss became non-finite")
            self.trace.append(loss)
        self.coef, self.intercept, self.n_features = w, float(b), d
        self.n_epochs = len(self.trace) - 1
        return self

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.coef + self.intercept

    def predict_proba(self, X) -> np.ndarray:
        return _sigmoid(self.decision_function(X))

    def get_params(self) -> dict:
        return {"coef": self.coef.tolist(), "intercept": self.intercept, "n_epochs": self.n_epochs}

    def set_params(self, params: dict, n_features: int) -> None:
        self.coef = np.asarray(params["coef"], dtype=np.float64)
        self.intercept = float(params["intercept"])
        self.n_epochs = int(params.get("n_epochs", 0))
        self.n_features = n_features


class HingeClassifier:
    """Linear soft-margin classifier (SVM-like) by subgradient descent.

    Minimises mean hinge loss plus ``l2/2 * ||w||^2`` with step ``1/(l2*t)``
    and keeps the best iterate. ``predict_proba`` squashes the margin through
    a sigmoid; it ranks correctly but is not calibrated.
    """

    kind = "margin"

    def __init__(self, seed: int = 0, l2: float = 1e-2, max_epochs: int = 2000):
        self.seed = int(seed)
        self.hyperparams = {"l2": float(l2), "max_epochs": int(max_epochs)}
        self.coef: np.ndarray | None = None
        self.intercept = 0.0
        self.n_features: int | None = None

    def _objective(self, w, b, X, s, l2):
        return float(np.mean(np.maximum(0.0, 1.0 - s * (X @ w + b))) + 0.5 * l2 * (w @ w))

    def fit(self, X, y, jobs: int = 1) -> "HingeClassifier":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y).astype(np.float64)
        order = canonical_order(X, y)
        X, y = X[order], y[order]
        s = 2.0 * y - 1.0
        n, d = X.shape
        l2, max_epochs = self.hyperparams["l2"], self.hyperparams["max_epochs"]
        w, b = np.zeros(d), 0.0
        best = (self._objective(w, b, X, s, l2), w, b)
        for t in range(1, max_epochs + 1):
            viol = s * (X @ w + b) < 1.0
            gw = l2 * w - (s[viol] @ X[viol]) / n
            gb = -float(np.sum(s[viol])) / n
            eta = 1.0 / (l2 * t)
            w = w - eta * gw
            b = b - eta * gb
            obj = self._objective(w, b, X, s, l2)
            if not np.isfinite(obj):
                raise TrainingError("hinge objective became non-finite")
            if obj < best[0]:
                best = (obj, w, b)
        _, self.coef, self.intercept = best
        self.intercept = float(self.intercept)
        self.n_features = d
        return self

    def decision_function(self, X) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.coef + self.intercept

    def predict_proba(self, X) -> np.ndarray:
        return _sigmoid(self.decision_function(X))

    def get_params(self) -> dict:
        return {"coef": self.coef.tolist(), "intercept": self.intercept}

    def set_params(self, params: dict, n_features: int) -> None:
        self.coef = np.asarray(params["coef"], dtype=np.float64)
        self.intercept = float(params["intercept"])
        self.n_features = n_features
