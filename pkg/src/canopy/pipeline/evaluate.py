"""Cross-validation over crown-stratified folds plus confusion metrics.

Confusion matrices follow the rows-predicted / columns-actual orientation
and say so in their headers, so a transposition cannot slip through
unnoticed.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from canopy._parallel import parallel_map, worker_count
from canopy.features.bank import FeatureTable
from canopy.models import class_weights, fit_model, predict
from canopy.pipeline.crowns import LabelScheme, RegionOverlap
from canopy.pipeline.folds import FoldAssignment


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMetrics:
    classes: tuple[str, ...]
    matrix: np.ndarray  # (K, K) int64, rows = predicted, columns = actual
    precision: np.ndarray  # (K,) percent
    recall: np.ndarray  # (K,) percent
    accuracy: float  # percent
    degenerate: tuple[str, ...]  # classes with a zero row or column


def confusion_metrics(matrix: np.ndarray, classes) -> ConfusionMetrics:
    """Per-class precision/recall and overall accuracy, in percent."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise EvaluationError("confusion matrix must be square")
    if np.any(matrix < 0):
        raise EvaluationError("confusion matrix must be non-negative")
    k = matrix.shape[0]
    if len(classes) != k:
        raise EvaluationError("class list does not match matrix size")
    diag = np.diag(matrix).astype(np.float64)
    row_sums = matrix.sum(axis=1).astype(np.float64)
    col_sums = matrix.sum(axis=0).astype(np.float64)
    flags = []
    precision = np.zeros(k)
    recall = np.zeros(k)
    for i in range(k):
        if row_sums[i] > 0:
            precision[i] = 100.0 * diag[i] / row_sums[i]
        else:
            flags.append(classes[i])
        if col_sums[i] > 0:
            recall[i] = 100.0 * diag[i] / col_sums[i]
        else:
            flags.append(classes[i])
    total = matrix.sum()
    accuracy = 100.0 * diag.sum() / total if total > 0 else 0.0
    return ConfusionMetrics(
        classes=tuple(classes), matrix=matrix.astype(np.int64),
        precision=precision, recall=recall, accuracy=float(accuracy),
        degenerate=tuple(dict.fromkeys(flags)),
    )


def merge_confusion(metrics: ConfusionMetrics, scheme: LabelScheme) -> ConfusionMetrics:
    """Collapse a confusion matrix under a label scheme by summing the merged
    rows and columns; commutes with computing the matrix on merged labels."""
    k_new = len(scheme.classes)
    out = np.zeros((k_new, k_new), dtype=np.int64)
    for i, ci in enumerate(metrics.classes):
        for j, cj in enumerate(metrics.classes):
            out[scheme.index_of(ci), scheme.index_of(cj)] += metrics.matrix[i, j]
    return confusion_metrics(out, scheme.classes)


@dataclass
class FoldResult:
    fold: int
    n_train: int
    n_test: int
    train_accuracy: float  # superpixel-level, percent
    test_accuracy: float
    crown_train_accuracy: float  # per-crown majority vote, percent
    crown_test_accuracy: float


@dataclass
class CvReport:
    model_kind: str
    classes: tuple[str, ...]
    folds: list[FoldResult]
    mean_test_accuracy: float
    sd_test_accuracy: float  # sd across folds (ddof=1)
    mean_train_accuracy: float
    sd_train_accuracy: float
    mean_crown_test_accuracy: float
    sd_crown_test_accuracy: float
    confusion: ConfusionMetrics = field(repr=False)

    def to_json(self, path) -> None:
        doc = {
            "model_kind": self.model_kind,
            "classes": list(self.classes),
            "folds": [
                {
                    "fold": f.fold, "n_train": f.n_train, "n_test": f.n_test,
                    "train_accuracy": repr(f.train_accuracy),
                    "test_accuracy": repr(f.test_accuracy),
                    "crown_train_accuracy": repr(f.crown_train_accuracy),
                    "crown_test_accuracy": repr(f.crown_test_accuracy),
                }
                for f in self.folds
            ],
            "mean_test_accuracy": repr(self.mean_test_accuracy),
            "sd_test_accuracy_across_folds": repr(self.sd_test_accuracy),
            "mean_train_accuracy": repr(self.mean_train_accuracy),
            "sd_train_accuracy_across_folds": repr(self.sd_train_accuracy),
            "mean_crown_test_accuracy": repr(self.mean_crown_test_accuracy),
            "sd_crown_test_accuracy_across_folds": repr(self.sd_crown_test_accuracy),
            "confusion_orientation": "rows=predicted, columns=actual",
            "confusion_matrix": self.confusion.matrix.tolist(),
            "precision_percent": [repr(v) for v in self.confusion.precision.tolist()],
            "recall_percent": [repr(v) for v in self.confusion.recall.tolist()],
        }
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)


def write_confusion_csv(metrics: ConfusionMetrics, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["predicted\\actual", *metrics.classes, "precision_percent"])
        for i, cls in enumerate(metrics.classes):
            writer.writerow([
                cls, *(int(v) for v in metrics.matrix[i]),
                repr(float(metrics.precision[i])),
            ])
        writer.writerow(["recall_percent",
                         *(repr(float(v)) for v in metrics.recall), ""])


def _crown_majority(pred: np.ndarray, crown_ids: np.ndarray, y: np.ndarray,
                    n_classes: int) -> float:
    """Per-crown accuracy of the majority-vote label, in percent."""
    correct = 0
    crowns = np.unique(crown_ids)
    for crown in crowns:
        rows = crown_ids == crown
        votes = np.bincount(pred[rows], minlength=n_classes)
        majority = int(np.argmax(votes))  # ties break to the lowest class index
        if majority == int(y[rows][0]):
            correct += 1
    return 100.0 * correct / len(crowns) if len(crowns) else 0.0


def cross_validate(
    table: FeatureTable,
    labelled: list[RegionOverlap],
    folds: FoldAssignment,
    model_kind: str,
    scheme: LabelScheme,
    seed: int = 0,
    model_kwargs: dict | None = None,
    workers: int | None = None,
) -> CvReport:
    """k models, each trained on the crowns outside one fold and evaluated on
    the crowns inside it; superpixels always follow their crown."""
    model_kwargs = dict(model_kwargs or {})
    classes = scheme.classes
    k_classes = len(classes)

    region_ids = np.array([o.region_id for o in labelled])
    y = np.array([scheme.index_of(o.label) for o in labelled])
    crown_ids = np.array([o.crown_id for o in labelled])
    X = table.rows_for(region_ids)

    def run_fold(f: int) -> tuple[FoldResult, np.ndarray, np.ndarray]:
        test_crowns = set(folds.test_crowns(f))
        test = np.isin(crown_ids, list(test_crowns))
        train = ~test
        if not train.any() or not test.any():
            raise EvaluationError(f"fold {f} has an empty train or test side")
        y_train = y[train]
        missing = [classes[c] for c in range(k_classes)
                   if not np.any(y_train == c)]
        if missing:
            warnings.warn(
                f"fold {f}: classes {missing} absent from training data",
                stacklevel=2,
            )
        weights = class_weights(y_train, k_classes)
        model = fit_model(model_kind, X[train], y_train, k_classes,
                          classes=classes, feature_names=table.names,
                          weights=weights, seed=seed, **model_kwargs)
        pred_train, _ = predict(model, X[train], table.names)
        pred_test, _ = predict(model, X[test], table.names)
        result = FoldResult(
            fold=f, n_train=int(train.sum()), n_test=int(test.sum()),
            train_accuracy=100.0 * float(np.mean(pred_train == y_train)),
            test_accuracy=100.0 * float(np.mean(pred_test == y[test])),
            crown_train_accuracy=_crown_majority(
                pred_train, crown_ids[train], y_train, k_classes),
            crown_test_accuracy=_crown_majority(
                pred_test, crown_ids[test], y[test], k_classes),
        )
        return result, pred_test, y[test]

    outputs = parallel_map(run_fold, range(folds.k), worker_count(workers))

    confusion = np.zeros((k_classes, k_classes), dtype=np.int64)
    fold_results = []
    for result, pred_test, y_test in outputs:
        fold_results.append(result)
        for p, a in zip(pred_test, y_test):
            confusion[p, a] += 1

    test_accs = np.array([f.test_accuracy for f in fold_results])
    train_accs = np.array([f.train_accuracy for f in fold_results])
    crown_accs = np.array([f.crown_test_accuracy for f in fold_results])
    return CvReport(
        model_kind=model_kind, classes=classes, folds=fold_results,
        mean_test_accuracy=float(test_accs.mean()),
        sd_test_accuracy=float(test_accs.std(ddof=1)) if folds.k > 1 else 0.0,
        mean_train_accuracy=float(train_accs.mean()),
        sd_train_accuracy=float(train_accs.std(ddof=1)) if folds.k > 1 else 0.0,
        mean_crown_test_accuracy=float(crown_accs.mean()),
        sd_crown_test_accuracy=float(crown_accs.std(ddof=1)) if folds.k > 1 else 0.0,
        confusion=confusion_metrics(confusion, classes),
    )
