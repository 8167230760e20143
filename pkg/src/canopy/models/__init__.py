from canopy.models.base import check_manifest, manifest_hash, predict, predict_labels
from canopy.models.forest import RandomForest, fit_random_forest
from canopy.models.io import load_model, save_model
from canopy.models.lasso import GroupLassoMultinomial, fit_group_lasso
from canopy.models.standardize import ModelError, Standardizer, class_weights
from canopy.models.svm import SvmRbf, fit_svm_rbf, kkt_max_violation, smo_solve

MODEL_KINDS = ("group_lasso", "svm_rbf", "random_forest")


def fit_model(kind: str, X, y, n_classes: int, classes=None, feature_names=None,
              weights=None, seed: int = 0, **hyper):
    """Dispatch to one of the three trainers by kind name."""
    if kind == "group_lasso":
        return fit_group_lasso(X, y, n_classes, classes=classes,
                               feature_names=feature_names, weights=weights, **hyper)
    if kind == "svm_rbf":
        return fit_svm_rbf(X, y, n_classes, classes=classes,
                           feature_names=feature_names, weights=weights,
                           seed=seed, **hyper)
    if kind == "random_forest":
        return fit_random_forest(X, y, n_classes, classes=classes,
                                 feature_names=feature_names, weights=weights,
                                 seed=seed, **hyper)
    raise ModelError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")


__all__ = [
    "MODEL_KINDS",
    "GroupLassoMultinomial",
    "ModelError",
    "RandomForest",
    "Standardizer",
    "SvmRbf",
    "check_manifest",
    "class_weights",
    "fit_group_lasso",
    "fit_model",
    "fit_random_forest",
    "fit_svm_rbf",
    "kkt_max_violation",
    "load_model",
    "manifest_hash",
    "predict",
    "predict_labels",
    "save_model",
    "smo_solve",
]
