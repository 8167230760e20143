"""One-vs-one soft-margin SVM with an RBF kernel, trained by SMO.

Per-sample box constraints are C * w_class, so class weighting enters the
dual directly. Working pairs are chosen by maximal violation with a
second-order gain rule; optimization stops when the duality violation
m(alpha) - M(alpha) drops below tol, which bounds every training point's
KKT violation by tol/2. Hyperparameters come from an internal stratified
5-fold grid search unless a single-point grid is supplied.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from canopy.models.standardize import ModelError, Standardizer

DEFAULT_C_GRID = tuple(float(2.0 ** e) for e in range(-2, 7))
DEFAULT_GAMMA_SCALE_GRID = tuple(float(2.0 ** e) for e in range(-7, 2))


@dataclass
class PairSvm:
    class_a: int  # +1 label
    class_b: int  # -1 label
    sv_x: np.ndarray  # (m, F) standardized support vectors
    sv_alpha_y: np.ndarray  # (m,) alpha_i * y_i
    bias: float
    kkt_violation: float


@dataclass
class SvmRbf:
    classes: tuple[str, ...]
    feature_names: tuple[str, ...]
    standardizer: Standardizer
    gamma: float
    C: float
    pairs: list[PairSvm]
    tol: float
    tuning: list[tuple[float, float, float]] = field(default_factory=list)
    # rows of (C, gamma, weighted CV accuracy) in grid order

    kind = "svm_rbf"

    def predict_scores(self, Xs: np.ndarray) -> np.ndarray:
        """Pairwise vote counts per class."""
        votes = np.zeros((Xs.shape[0], len(self.classes)))
        for pair in self.pairs:
            dec = _decision(pair, Xs, self.gamma)
            win_a = dec >= 0.0
            votes[win_a, pair.class_a] += 1.0
            votes[~win_a, pair.class_b] += 1.0
        return votes

    def decision_values(self, Xs: np.ndarray) -> np.ndarray:
        return np.stack([_decision(p, Xs, self.gamma) for p in self.pairs], axis=1)


def _rbf_kernel(a: np.ndarray, b: np.ndarray, gamma: float) -> np.ndarray:
    d2 = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    return np.exp(-gamma * np.maximum(d2, 0.0))


def _decision(pair: PairSvm, Xs: np.ndarray, gamma: float) -> np.ndarray:
    k = _rbf_kernel(Xs, pair.sv_x, gamma)
    return k @ pair.sv_alpha_y + pair.bias


def smo_solve(K: np.ndarray, y: np.ndarray, box: np.ndarray,
              tol: float = 1e-3, max_iter: int | None = None):
    """Dual SVM solver; returns (alpha, bias, achieved_violation).

    Minimizes 0.5 a'Qa - 1'a with 0 <= a_i <= box_i and y'a = 0,
    Q_ij = y_i y_j K_ij. Steps move along y_i e_i - y_j e_j, which keeps
    y'a = 0 exactly. Deterministic: argmax ties resolve to the first index.
    """
    n = len(y)
    if max_iter is None:
        max_iter = max(10000, 200 * n)
    alpha = np.zeros(n)
    grad = -np.ones(n)  # Q alpha - 1 at alpha = 0
    Q = y[:, None] * K * y[None, :]
    k_diag = np.diag(K).copy()
    tau = 1e-12

    for _ in range(max_iter):
        neg_yg = -y * grad
        up = ((y > 0) & (alpha < box)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < box))
        if not up.any() or not low.any():
            break
        up_vals = np.where(up, neg_yg, -np.inf)
        i = int(np.argmax(up_vals))
        m_up = up_vals[i]
        m_low = float(np.min(np.where(low, neg_yg, np.inf)))
        if m_up - m_low <= tol:
            break
        # second-order j selection: maximize b^2/a over violating candidates,
        # with curvature a = K_ii + K_jj - 2 K_ij along the step direction
        b_ij = m_up - neg_yg
        candidates = low & (b_ij > 0)
        a_ij = np.maximum(k_diag[i] + k_diag - 2.0 * K[i], tau)
        gain = np.where(candidates, (b_ij * b_ij) / a_ij, -np.inf)
        j = int(np.argmax(gain))

        step = b_ij[j] / max(a_ij[j], tau)
        hi_i = (box[i] - alpha[i]) if y[i] > 0 else alpha[i]
        hi_j = alpha[j] if y[j] > 0 else (box[j] - alpha[j])
        step = min(step, hi_i, hi_j)
        if step <= 0:  # numerical corner; no progress possible
            break
        d_ai = y[i] * step
        d_aj = -y[j] * step
        alpha[i] += d_ai
        alpha[j] += d_aj
        grad += Q[:, i] * d_ai + Q[:, j] * d_aj

    neg_yg = -y * grad
    up = ((y > 0) & (alpha < box)) | ((y < 0) & (alpha > 0))
    low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < box))
    if up.any() and low.any():
        m_up = float(np.max(np.where(up, neg_yg, -np.inf)))
        m_low = float(np.min(np.where(low, neg_yg, np.inf)))
        bias = -(m_up + m_low) / 2.0
        violation = max(0.0, m_up - m_low)
    else:
        bias = float(np.median(-neg_yg)) if n else 0.0
        violation = 0.0
    return alpha, bias, violation


def _fit_pair(Xs, y_idx, a: int, b: int, C: float, gamma: float,
              weights: np.ndarray, tol: float) -> PairSvm:
    rows = np.nonzero((y_idx == a) | (y_idx == b))[0]
    X_pair = Xs[rows]
    y = np.where(y_idx[rows] == a, 1.0, -1.0)
    box = C * weights[y_idx[rows]]
    K = _rbf_kernel(X_pair, X_pair, gamma)
    alpha, bias, violation = smo_solve(K, y, box, tol=tol)
    sv = alpha > 0
    return PairSvm(class_a=a, class_b=b, sv_x=X_pair[sv],
                   sv_alpha_y=(alpha * y)[sv], bias=bias,
                   kkt_violation=violation)


def _stratified_folds(y: np.ndarray, k: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    fold = np.zeros(len(y), dtype=np.int64)
    for cls in np.unique(y):
        idx = np.nonzero(y == cls)[0]
        rng.shuffle(idx)
        fold[idx] = np.arange(len(idx)) % k
    return fold


def fit_svm_rbf(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    classes: tuple[str, ...] | None = None,
    feature_names: tuple[str, ...] | None = None,
    weights: np.ndarray | None = None,
    tune_grid: tuple[tuple[float, ...], tuple[float, ...]] | None = None,
    tol: float = 1e-3,
    cv_folds: int = 5,
    seed: int = 0,
    standardize: bool = True,
) -> SvmRbf:
    """Train one-vs-one RBF SVMs with internally tuned (C, gamma).

    ``tune_grid`` is (C values, gamma scales); gamma = scale / n_features.
    A single-point grid skips cross-validation. Selection maximizes
    class-weighted CV accuracy, ties resolving to the earlier grid point.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    std = Standardizer.fit(X) if standardize else Standardizer.identity(X.shape[1])
    Xs = std.transform(X)
    K_classes = n_classes
    if weights is None:
        weights = np.ones(K_classes)
    weights = np.asarray(weights, dtype=np.float64)
    F = X.shape[1]
    c_grid, g_grid = tune_grid if tune_grid is not None else (
        DEFAULT_C_GRID, DEFAULT_GAMMA_SCALE_GRID)

    tuning: list[tuple[float, float, float]] = []
    if len(c_grid) * len(g_grid) == 1:
        best_c, best_g = float(c_grid[0]), float(g_grid[0]) / F
    else:
        fold = _stratified_folds(y, cv_folds, seed)
        best = None
        for C in c_grid:
            for g_scale in g_grid:
                gamma = float(g_scale) / F
                w_correct = 0.0
                w_total = 0.0
                for f in range(cv_folds):
                    test = fold == f
                    train = ~test
                    tr_counts = np.bincount(y[train], minlength=K_classes)
                    present = np.unique(y)
                    if np.any(tr_counts[present] < 2):
                        warnings.warn(
                            f"tuning fold {f} skipped: a class has <2 training rows",
                            stacklevel=2,
                        )
                        continue
                    model = _fit_all_pairs(Xs[train], y[train], K_classes,
                                           float(C), gamma, weights, tol)
                    votes = _votes(model, Xs[test], gamma, K_classes)
                    pred = np.argmax(votes, axis=1)
                    w_row = weights[y[test]]
                    w_correct += float(np.sum(w_row * (pred == y[test])))
                    w_total += float(np.sum(w_row))
                acc = w_correct / w_total if w_total > 0 else 0.0
                tuning.append((float(C), gamma, acc))
                if best is None or acc > best[0]:
                    best = (acc, float(C), gamma)
        _, best_c, best_g = best

    pairs = _fit_all_pairs(Xs, y, K_classes, best_c, best_g, weights, tol)
    return SvmRbf(
        classes=tuple(classes) if classes else tuple(str(k) for k in range(K_classes)),
        feature_names=tuple(feature_names) if feature_names else tuple(
            f"f{j}" for j in range(F)),
        standardizer=std, gamma=best_g, C=best_c, pairs=pairs, tol=tol,
        tuning=tuning,
    )


def _fit_all_pairs(Xs, y, n_classes, C, gamma, weights, tol) -> list[PairSvm]:
    pairs = []
    present = np.unique(y)
    for ai in range(len(present)):
        for bi in range(ai + 1, len(present)):
            pairs.append(_fit_pair(Xs, y, int(present[ai]), int(present[bi]),
                                   C, gamma, weights, tol))
    return pairs


def _votes(pairs: list[PairSvm], Xs, gamma, n_classes) -> np.ndarray:
    votes = np.zeros((Xs.shape[0], n_classes))
    for pair in pairs:
        dec = _decision(pair, Xs, gamma)
        win_a = dec >= 0.0
        votes[win_a, pair.class_a] += 1.0
        votes[~win_a, pair.class_b] += 1.0
    return votes


def kkt_max_violation(model: SvmRbf) -> float:
    """Largest duality-gap violation achieved by any pair at the end of SMO."""
    return max((p.kkt_violation for p in model.pairs), default=0.0)
