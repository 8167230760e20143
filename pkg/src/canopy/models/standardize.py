"""Column standardization fitted on training rows only."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ModelError(ValueError):
    pass


@dataclass(frozen=True)
class Standardizer:
    """Center/scale transform: sample (n-1) standard deviation per column.

    Constant training columns transform to 0 and are flagged; test rows are
    always transformed with the training statistics.
    """

    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray  # bool per column

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[0] < 2:
            raise ModelError("standardizer needs a 2-D matrix with at least 2 rows")
        if not np.all(np.isfinite(X)):
            raise ModelError("non-finite values in feature matrix")
        mean = X.mean(axis=0)
        std = X.std(axis=0, ddof=1)
        constant = std == 0.0
        return cls(mean=mean, std=std, constant=constant)

    @classmethod
    def identity(cls, n_features: int) -> "Standardizer":
        """No-op transform, for callers that pre-standardize."""
        return cls(mean=np.zeros(n_features), std=np.ones(n_features),
                   constant=np.zeros(n_features, dtype=bool))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[1] != self.mean.shape[0]:
            raise ModelError(
                f"expected {self.mean.shape[0]} columns, got {X.shape[1]}"
            )
        safe = np.where(self.constant, 1.0, self.std)
        out = (X - self.mean) / safe
        out[:, self.constant] = 0.0
        return out


def class_weights(y: np.ndarray, n_classes: int) -> np.ndarray:
    """Weights inversely proportional to class frequency.

    Normalized so that sum_c w_c * n_c equals the number of rows; classes
    absent from y get weight 0.
    """
    y = np.asarray(y, dtype=np.int64)
    counts = np.bincount(y, minlength=n_classes).astype(np.float64)
    present = counts > 0
    w = np.zeros(n_classes)
    w[present] = len(y) / (present.sum() * counts[present])
    return w
