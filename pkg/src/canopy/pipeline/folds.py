"""Crown-stratified fold assignment.

Folds are assigned at the crown level so that all of a crown's superpixels
share its fold: test sets are a complete, disjoint covering of the crowns
and no crown ever contributes rows to both sides of a split.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np


class FoldError(ValueError):
    pass


@dataclass(frozen=True)
class FoldAssignment:
    k: int
    crown_fold: dict[int, int]

    def fold_of(self, crown_id: int) -> int:
        return self.crown_fold[crown_id]

    def test_crowns(self, fold: int) -> list[int]:
        return sorted(c for c, f in self.crown_fold.items() if f == fold)

    def train_crowns(self, fold: int) -> list[int]:
        return sorted(c for c, f in self.crown_fold.items() if f != fold)


def make_folds(crown_labels: dict[int, str], k: int = 10, seed: int = 0) -> FoldAssignment:
    """Stratified assignment: per-class shuffle, then round-robin over folds.

    Classes with fewer than k crowns still spread round-robin (with a
    warning), so every crown lands in exactly one test fold.
    """
    if k < 2:
        raise FoldError("k must be at least 2")
    rng = np.random.default_rng(seed)
    by_class: dict[str, list[int]] = {}
    for crown_id in sorted(crown_labels):
        by_class.setdefault(crown_labels[crown_id], []).append(crown_id)

    crown_fold: dict[int, int] = {}
    for label in sorted(by_class):
        ids = np.array(by_class[label])
        if len(ids) < k:
            warnings.warn(
                f"class {label!r} has {len(ids)} crowns for {k} folds; "
                "spreading round-robin", stacklevel=2,
            )
        rng.shuffle(ids)
        for pos, crown_id in enumerate(ids):
            crown_fold[int(crown_id)] = pos % k
    return FoldAssignment(k=k, crown_fold=crown_fold)


def audit_crown_leakage(folds: FoldAssignment,
                        region_crowns: dict[int, int]) -> int:
    """Number of leakage violations across all folds.

    A violation is a fold whose train and test crown sets intersect, or a
    region whose crown sits in the training side of its own test fold.
    Returns 0 for a sound assignment.
    """
    violations = 0
    for f in range(folds.k):
        test = set(folds.test_crowns(f))
        train = set(folds.train_crowns(f))
        violations += len(test & train)
    for crown_id in region_crowns.values():
        if crown_id not in folds.crown_fold:
            violations += 1
    return violations
