"""Imagery/feature-family multiplex: one fixed split, many input subsets.

Every valid combination of imagery sources {RGB, MS, DSM} and feature
families {spectral, textural} (7 x 3 = 21 options, the all-variables model
among them) trains on the same stratified 75% crown split and evaluates on
the held-back 25%, so accuracy differences are attributable to the inputs
alone.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from canopy.features.bank import FeatureConfig, FeatureTable
from canopy.models import class_weights, fit_model, predict
from canopy.pipeline.crowns import LabelScheme, RegionOverlap


def subset_configs() -> list[FeatureConfig]:
    """The 21 imagery x family combinations in deterministic order."""
    imagery_sets = []
    for r in (1, 2, 3):
        imagery_sets.extend(combinations(("RGB", "MS", "DSM"), r))
    family_sets = [("spectral",), ("textural",), ("spectral", "textural")]
    return [FeatureConfig(imagery_sources=im, feature_families=fam)
            for im in imagery_sets for fam in family_sets]


@dataclass(frozen=True)
class MultiplexRow:
    imagery: tuple[str, ...]
    families: tuple[str, ...]
    n_features: int
    train_accuracy: float
    test_accuracy: float


@dataclass(frozen=True)
class MultiplexReport:
    model_kind: str
    rows: list[MultiplexRow]
    split_hash: str  # sha256 over the sorted train/test crown ids
    n_train_crowns: int
    n_test_crowns: int


def split_crowns_75_25(crown_labels: dict[int, str], seed: int = 0,
                       train_fraction: float = 0.75) -> tuple[list[int], list[int]]:
    """Stratified crown split reused identically across all subset runs."""
    rng = np.random.default_rng(seed)
    train: list[int] = []
    test: list[int] = []
    by_class: dict[str, list[int]] = {}
    for crown_id in sorted(crown_labels):
        by_class.setdefault(crown_labels[crown_id], []).append(crown_id)
    for label in sorted(by_class):
        ids = np.array(by_class[label])
        rng.shuffle(ids)
        n_train = max(1, int(round(train_fraction * len(ids))))
        if n_train >= len(ids):
            n_train = len(ids) - 1
        train.extend(int(i) for i in ids[:n_train])
        test.extend(int(i) for i in ids[n_train:])
    return sorted(train), sorted(test)


def _hash_split(train: list[int], test: list[int]) -> str:
    blob = ",".join(map(str, train)) + "|" + ",".join(map(str, test))
    return hashlib.sha256(blob.encode()).hexdigest()


def imagery_multiplex(
    table: FeatureTable,
    labelled: list[RegionOverlap],
    scheme: LabelScheme,
    model_kind: str = "svm_rbf",
    seed: int = 0,
    model_kwargs: dict | None = None,
) -> MultiplexReport:
    """Accuracy table over all 21 input subsets on one fixed 75/25 split.

    ``table`` must be the full-configuration feature table; each subset run
    selects its columns from it, so feature values are shared bit-for-bit
    across runs.
    """
    model_kwargs = dict(model_kwargs or {})
    classes = scheme.classes
    k_classes = len(classes)

    crown_labels = {}
    for o in labelled:
        crown_labels[o.crown_id] = scheme.apply(o.label)
    train_crowns, test_crowns = split_crowns_75_25(crown_labels, seed=seed)
    split_hash = _hash_split(train_crowns, test_crowns)

    region_ids = np.array([o.region_id for o in labelled])
    y = np.array([scheme.index_of(o.label) for o in labelled])
    crown_ids = np.array([o.crown_id for o in labelled])
    train = np.isin(crown_ids, train_crowns)
    test = ~train
    X_full = table.rows_for(region_ids)
    weights = class_weights(y[train], k_classes)

    name_index = {n: i for i, n in enumerate(table.names)}
    rows: list[MultiplexRow] = []
    for cfg in subset_configs():
        sub = table.select(cfg)
        cols = [name_index[n] for n in sub.names]
        X = X_full[:, cols]
        model = fit_model(model_kind, X[train], y[train], k_classes,
                          classes=classes, feature_names=sub.names,
                          weights=weights, seed=seed, **model_kwargs)
        pred_train, _ = predict(model, X[train], sub.names)
        pred_test, _ = predict(model, X[test], sub.names)
        rows.append(MultiplexRow(
            imagery=cfg.imagery_sources, families=cfg.feature_families,
            n_features=len(sub.names),
            train_accuracy=100.0 * float(np.mean(pred_train == y[train])),
            test_accuracy=100.0 * float(np.mean(pred_test == y[test])),
        ))
    return MultiplexReport(
        model_kind=model_kind, rows=rows, split_hash=split_hash,
        n_train_crowns=len(train_crowns), n_test_crowns=len(test_crowns),
    )


def write_multiplex_csv(report: MultiplexReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["imagery", "families", "n_features",
                         "train_accuracy", "test_accuracy", "split_hash"])
        for row in report.rows:
            writer.writerow([
                "+".join(row.imagery), "+".join(row.families), row.n_features,
                repr(row.train_accuracy), repr(row.test_accuracy),
                report.split_hash,
            ])
