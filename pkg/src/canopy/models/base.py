"""Shared prediction API over the three model kinds."""

from __future__ import annotations

import hashlib
from typing import Sequence

import numpy as np

from canopy.models.standardize import ModelError


def manifest_hash(feature_names: Sequence[str]) -> str:
    digest = hashlib.sha256("\n".join(feature_names).encode()).hexdigest()
    return digest


def check_manifest(model, feature_names: Sequence[str]) -> None:
    """Hard error on any column mismatch: silent misalignment is the worst
    failure mode a feature-matrix pipeline can have."""
    if tuple(feature_names) != tuple(model.feature_names):
        raise ModelError(
            "feature manifest mismatch between model and input "
            f"(model hash {manifest_hash(model.feature_names)[:12]}, "
            f"input hash {manifest_hash(feature_names)[:12]})"
        )


def predict(model, X: np.ndarray, feature_names: Sequence[str]):
    """(predicted class indices, per-class scores) for raw feature rows.

    Rows are standardized with the model's own Standardizer. Ties in the
    argmax break toward the lowest class index.
    """
    check_manifest(model, feature_names)
    Xs = model.standardizer.transform(np.asarray(X, dtype=np.float64))
    scores = model.predict_scores(Xs)
    labels = np.argmax(scores, axis=1)  # np.argmax takes the first maximum
    return labels, scores


def predict_labels(model, X: np.ndarray, feature_names: Sequence[str]) -> np.ndarray:
    return predict(model, X, feature_names)[0]
