"""Random forest with class-weighted Gini splits and weighted leaf votes.

Each of the (exactly) n_trees trees is grown to purity on its own bootstrap
sample, examining floor(sqrt(F)) candidate features per node. Per-tree RNG
streams are spawned from the master seed, so training and prediction are
bit-reproducible regardless of worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from canopy._parallel import parallel_map, worker_count
from canopy.models.standardize import ModelError, Standardizer


@dataclass
class Tree:
    feature: np.ndarray  # (nodes,) int32, -1 at leaves
    threshold: np.ndarray  # (nodes,) float64
    left: np.ndarray  # (nodes,) int32
    right: np.ndarray  # (nodes,) int32
    leaf_class: np.ndarray  # (nodes,) int32, -1 at internal nodes

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            internal = self.feature[node] >= 0
            if not internal.any():
                return self.leaf_class[node]
            idx = np.nonzero(internal)[0]
            feats = self.feature[node[idx]]
            go_left = X[idx, feats] <= self.threshold[node[idx]]
            node[idx] = np.where(go_left, self.left[node[idx]], self.right[node[idx]])


@dataclass
class RandomForest:
    classes: tuple[str, ...]
    feature_names: tuple[str, ...]
    standardizer: Standardizer
    trees: list[Tree]
    seed: int
    mtry: int
    oob_accuracy: float | None = None

    kind = "random_forest"

    def predict_scores(self, Xs: np.ndarray) -> np.ndarray:
        """Fraction of tree votes per class."""
        votes = np.zeros((Xs.shape[0], len(self.classes)))
        for tree in self.trees:
            pred = tree.predict(Xs)
            votes[np.arange(len(pred)), pred] += 1.0
        return votes / len(self.trees)


class _TreeBuilder:
    def __init__(self, X, y, class_w, mtry, rng):
        self.X = X
        self.y = y
        self.class_w = class_w
        self.n_classes = len(class_w)
        self.mtry = mtry
        self.rng = rng
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.leaf_class: list[int] = []

    def _new_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.leaf_class.append(-1)
        return len(self.feature) - 1

    def build(self, rows: np.ndarray) -> int:
        root = self._new_node()
        stack = [(rows, root)]
        while stack:
            rows, node = stack.pop()
            y_node = self.y[rows]
            first = y_node[0]
            if np.all(y_node == first):
                self.leaf_class[node] = int(first)
                continue
            split = self._best_split(rows)
            if split is None:
                counts = np.bincount(y_node, minlength=self.n_classes) * self.class_w
                self.leaf_class[node] = int(np.argmax(counts))
                continue
            feat, thr, left_rows, right_rows = split
            self.feature[node] = int(feat)
            self.threshold[node] = float(thr)
            left = self._new_node()
            right = self._new_node()
            self.left[node] = left
            self.right[node] = right
            stack.append((right_rows, right))
            stack.append((left_rows, left))
        return root

    def _best_split(self, rows: np.ndarray):
        feats = np.sort(self.rng.choice(self.X.shape[1], size=self.mtry, replace=False))
        Xn = self.X[np.ix_(rows, feats)]
        n = len(rows)
        order = np.argsort(Xn, axis=0, kind="stable")
        sorted_x = np.take_along_axis(Xn, order, axis=0)
        w_row = self.class_w[self.y[rows]]
        onehot_w = np.zeros((n, self.n_classes))
        onehot_w[np.arange(n), self.y[rows]] = w_row
        # cumulative weighted class mass along each feature's sort order
        cum = np.cumsum(onehot_w[order], axis=0)  # (n, mtry, K)
        total = cum[-1, 0, :]  # same for every feature
        w_total = total.sum()
        left_w = cum[:-1].sum(axis=2)  # (n-1, mtry)
        right_w = w_total - left_w
        sum_sq_left = np.sum(cum[:-1] ** 2, axis=2)
        sum_sq_right = np.sum((total[None, None, :] - cum[:-1]) ** 2, axis=2)
        with np.errstate(divide="ignore", invalid="ignore"):
            child_term = np.where(left_w > 0, sum_sq_left / left_w, 0.0) \
                + np.where(right_w > 0, sum_sq_right / right_w, 0.0)
        valid = sorted_x[:-1] < sorted_x[1:]
        child_term = np.where(valid, child_term, -np.inf)
        if not valid.any():
            return None
        # maximizing the squared-mass term maximizes the Gini decrease
        flat = int(np.argmax(child_term))
        pos, fi = flat // self.mtry, flat % self.mtry
        feat = feats[fi]
        lo, hi = sorted_x[pos, fi], sorted_x[pos + 1, fi]
        thr = (lo + hi) / 2.0
        if thr >= hi:  # midpoint rounded up to hi: fall back so both sides stay non-empty
            thr = lo
        go_left = self.X[rows, feat] <= thr
        return feat, thr, rows[go_left], rows[~go_left]

    def to_tree(self) -> Tree:
        return Tree(
            feature=np.array(self.feature, dtype=np.int32),
            threshold=np.array(self.threshold, dtype=np.float64),
            left=np.array(self.left, dtype=np.int32),
            right=np.array(self.right, dtype=np.int32),
            leaf_class=np.array(self.leaf_class, dtype=np.int32),
        )


def fit_random_forest(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    classes: tuple[str, ...] | None = None,
    feature_names: tuple[str, ...] | None = None,
    weights: np.ndarray | None = None,
    n_trees: int = 500,
    seed: int = 0,
    compute_oob: bool = False,
    workers: int | None = None,
    standardize: bool = True,
) -> RandomForest:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise ModelError("random forest needs at least two classes in y")
    std = Standardizer.fit(X) if standardize else Standardizer.identity(X.shape[1])
    Xs = std.transform(X)
    if weights is None:
        weights = np.ones(n_classes)
    weights = np.asarray(weights, dtype=np.float64)
    n, F = Xs.shape
    mtry = max(1, int(np.sqrt(F)))
    seeds = np.random.SeedSequence(seed).spawn(n_trees)

    def grow(tree_seed) -> tuple[Tree, np.ndarray]:
        rng = np.random.default_rng(tree_seed)
        sample = rng.integers(0, n, size=n)
        builder = _TreeBuilder(Xs, y, weights, mtry, rng)
        builder.build(sample)
        oob_mask = np.ones(n, dtype=bool)
        oob_mask[sample] = False
        return builder.to_tree(), oob_mask

    grown = parallel_map(grow, seeds, worker_count(workers))
    trees = [t for t, _ in grown]

    oob_accuracy = None
    if compute_oob:
        votes = np.zeros((n, n_classes))
        for tree, oob_mask in grown:
            if oob_mask.any():
                pred = tree.predict(Xs[oob_mask])
                votes[np.nonzero(oob_mask)[0], pred] += 1.0
        scored = votes.sum(axis=1) > 0
        if scored.any():
            oob_pred = np.argmax(votes[scored], axis=1)
            oob_accuracy = float(np.mean(oob_pred == y[scored]))

    return RandomForest(
        classes=tuple(classes) if classes else tuple(str(k) for k in range(n_classes)),
        feature_names=tuple(feature_names) if feature_names else tuple(
            f"f{j}" for j in range(F)),
        standardizer=std, trees=trees, seed=seed, mtry=mtry,
        oob_accuracy=oob_accuracy,
    )
