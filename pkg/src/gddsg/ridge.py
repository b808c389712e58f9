"""Closed-form ridge classifiers trained incrementally from running sums.

Each group keeps the Gram matrix ``G = sum(h h^T)`` and the target matrix
``C = sum(h y^T)`` over every sample it has ever seen, where ``h`` is the
expanded feature vector and ``y`` the one-hot label over the group's
classes. The weights ``Theta = (G + lam I)^{-1} C`` therefore equal the
batch ridge solution over the full history, no matter how the stream was
chunked. New classes only append zero columns to ``C``; old sums are never
touched.

``G + lam I`` is symmetric positive definite for ``lam > 0``, so the solve
goes through a Cholesky factorization.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import StateError

LAMBDA_POOL = tuple(10.0 ** k for k in range(-3, 4))


def one_hot(labels: np.ndarray, class_columns: list[int]) -> np.ndarray:
    """N x K one-hot matrix, columns ordered as in ``class_columns``."""
    labels = np.asarray(labels, dtype=np.int64)
    col_of = {c: k for k, c in enumerate(class_columns)}
    unknown = [int(c) for c in np.unique(labels) if int(c) not in col_of]
    if unknown:
        raise ValueError(f"labels {unknown} have no column in {class_columns}")
    out = np.zeros((labels.shape[0], len(class_columns)), dtype=np.float64)
    out[np.arange(labels.shape[0]), [col_of[int(c)] for c in labels]] = 1.0
    return out


class RidgeGroup:
    """One group's classifier state: running sums plus the solved weights."""

    def __init__(self, feature_dim: int):
        if feature_dim < 1:
            raise ValueError(f"feature_dim must be >= 1, got {feature_dim}")
        self.feature_dim = int(feature_dim)
        self.class_columns: list[int] = []
        self.gram = np.zeros((feature_dim, feature_dim), dtype=np.float64)
        self.targets = np.zeros((feature_dim, 0), dtype=np.float64)
        self.sample_count = 0
        self.lam: float | None = None
        self._theta: np.ndarray | None = None
        self._theta_lam: float | None = None

    def register_classes(self, class_ids) -> None:
        """Append zero target columns for classes not seen before, ascending."""
        fresh = sorted(int(c) for c in set(class_ids) - set(self.class_columns))
        if not fresh:
            return
        pad = np.zeros((self.feature_dim, len(fresh)), dtype=np.float64)
        self.targets = np.hstack([self.targets, pad])
        self.class_columns.extend(fresh)
        self._theta = None

    def accumulate(self, features: np.ndarray, labels: np.ndarray) -> None:
        """Fold a labeled batch into the running sums."""
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[1] != self.feature_dim:
            raise ValueError(f"features must be N x {self.feature_dim}, got {features.shape}")
        self.register_classes(np.unique(labels))
        y = one_hot(labels, self.class_columns)
        self.gram += features.T @ features
        self.targets += features.T @ y
        self.sample_count += features.shape[0]
        self._theta = None

    def solve(self, lam: float) -> np.ndarray:
        """Weights (feature_dim x num_classes) for the given ridge strength."""
        if lam <= 0.0:
            raise ValueError(f"lam must be > 0, got {lam}")
        if not self.class_columns:
            raise StateError("no classes registered; nothing to solve for")
        a = self.gram + lam * np.eye(self.feature_dim)
        factor = cho_factor(a, lower=True)
        return cho_solve(factor, self.targets)

    def theta(self) -> np.ndarray:
        """Solved weights at the selected lam, cached until the sums change."""
        if self.lam is None:
            raise StateError("no lam selected yet; call select_lambda or set lam")
        if self._theta is None or self._theta_lam != self.lam:
            self._theta = self.solve(self.lam)
            self._theta_lam = self.lam
        return self._theta

    def select_lambda(self, val_features: np.ndarray, val_labels: np.ndarray, pool=LAMBDA_POOL) -> float:
        """Pick the pool entry minimizing squared validation residual.

        Ties go to the smallest lam. The chosen value is stored on the
        group and the cached weights are refreshed.
        """
        pool = tuple(float(l) for l in pool)
        if not pool:
            raise ValueError("lam pool must not be empty")
        val_features = np.asarray(val_features, dtype=np.float64)
        if val_features.shape[0] == 0:
            raise StateError("empty calibration set; cannot select lam")
        y = one_hot(val_labels, self.class_columns)
        best_lam, best_err = None, np.inf
        for lam in sorted(pool):
            resid = y - val_features @ self.solve(lam)
            err = float(np.sum(resid * resid))
            if err < best_err:
                best_lam, best_err = lam, err
        self.lam = best_lam
        self._theta = None
        return best_lam

    def scores(self, features: np.ndarray) -> np.ndarray:
        """Per-class linear scores, columns in ``class_columns`` order."""
        features = np.asarray(features, dtype=np.float64)
        if features.ndim == 1:
            features = features[None, :]
        return features @ self.theta()

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Argmax class ids for each row."""
        s = self.scores(features)
        cols = np.asarray(self.class_columns, dtype=np.int64)
        return cols[np.argmax(s, axis=1)]


def batch_ridge(features: np.ndarray, labels: np.ndarray, lam: float, class_columns: list[int]) -> np.ndarray:
    """One-shot ridge weights over a full dataset, for equivalence checks."""
    features = np.asarray(features, dtype=np.float64)
    y = one_hot(labels, class_columns)
    a = features.T @ features + lam * np.eye(features.shape[1])
    factor = cho_factor(a, lower=True)
    return cho_solve(factor, features.T @ y)
