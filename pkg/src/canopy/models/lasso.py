"""Group-sparse multinomial logistic regression.

One group per feature spanning all classes, so a feature enters the model
for every class or for none. The penalized objective

    sum_i w_i * nll_i / sum_i w_i  +  lambda * sum_j ||beta_j.||_2

is minimized by block coordinate descent with proximal group soft
thresholding along a descending log-spaced lambda path; the returned model
is the path point with the best weighted training accuracy among those
with at most ``max_groups`` active groups.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from canopy.models.standardize import ModelError, Standardizer


@dataclass
class LassoPathPoint:
    lam: float
    n_active: int
    weighted_accuracy: float


@dataclass
class GroupLassoMultinomial:
    classes: tuple[str, ...]
    feature_names: tuple[str, ...]
    standardizer: Standardizer
    coef: np.ndarray  # (K, F)
    intercept: np.ndarray  # (K,)
    lambda_: float
    max_groups: int
    path: list[LassoPathPoint] = field(default_factory=list)

    kind = "group_lasso"

    @property
    def active_groups(self) -> np.ndarray:
        return np.nonzero(np.linalg.norm(self.coef, axis=0) > 0)[0]

    def predict_scores(self, Xs: np.ndarray) -> np.ndarray:
        return _softmax(Xs @ self.coef.T + self.intercept)


def _softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _objective(P, Y, wn, lam, coef):
    nll = -float(np.sum(wn * np.log(np.maximum(P[Y.astype(bool)], 1e-300))))
    return nll + lam * float(np.linalg.norm(coef, axis=0).sum())


def weighted_objective(model: GroupLassoMultinomial, X, y, n_classes,
                       weights) -> float:
    """Penalized objective of a fitted model on (X, y) with class weights.

    Uses the model's own standardizer and selected lambda; the loss term is
    normalized by the total sample weight, so replicating rows k-fold while
    dividing their class weight by k leaves the value unchanged.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    Xs = model.standardizer.transform(X)
    w_row = np.asarray(weights, dtype=np.float64)[y]
    wn = w_row / w_row.sum()
    Y = np.eye(n_classes)[y]
    P = _softmax(Xs @ model.coef.T + model.intercept)
    return _objective(P, Y, wn, model.lambda_, model.coef)


def fit_group_lasso(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    classes: tuple[str, ...] | None = None,
    feature_names: tuple[str, ...] | None = None,
    weights: np.ndarray | None = None,
    max_groups: int = 25,
    path_length: int = 100,
    lambda_min_ratio: float = 1e-3,
    tol: float = 1e-7,
    max_sweeps: int = 1000,
    standardize: bool = True,
) -> GroupLassoMultinomial:
    """Fit along the lambda path and keep the best point within the budget.

    ``weights`` are per-class weights (defaults to uniform); rows are
    weighted by their class. The path starts at lambda_max (all groups
    zero) and stops early once the active-group budget is exceeded.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if not np.all(np.isfinite(X)):
        raise ModelError("non-finite values in feature matrix")
    if len(np.unique(y)) < 2:
        raise ModelError("group lasso needs at least two classes in y")
    n, F = X.shape
    K = n_classes
    std = Standardizer.fit(X) if standardize else Standardizer.identity(F)
    Xs = std.transform(X)
    if weights is None:
        weights = np.ones(K)
    w_row = np.asarray(weights, dtype=np.float64)[y]
    wn = w_row / w_row.sum()
    Y = np.eye(K)[y]

    # intercept-only fit: weighted log-priors (softmax optimum)
    priors = wn @ Y
    intercept = np.log(np.maximum(priors, 1e-12))
    intercept -= intercept.max()
    coef = np.zeros((K, F))
    scores = np.broadcast_to(intercept, (n, K)).copy()
    P = _softmax(scores)

    grad0 = Xs.T @ (wn[:, None] * (P - Y))  # (F, K)
    lam_max = float(np.linalg.norm(grad0, axis=1).max())
    if lam_max == 0.0:
        lam_max = 1.0
    lams = np.geomspace(lam_max, lam_max * lambda_min_ratio, path_length)

    # blockwise curvature bound for the softmax loss: 0.5 * sum_i wn_i x_ij^2
    t_j = 0.5 * (wn @ (Xs * Xs))
    t_j = np.maximum(t_j, 1e-12)

    path: list[LassoPathPoint] = []
    best = None  # (accuracy, -lam, coef, intercept, lam)
    for lam in lams:
        coef, intercept, scores, P = _fit_at_lambda(
            Xs, Y, wn, lam, coef, intercept, scores, P, t_j, tol, max_sweeps
        )
        active = np.nonzero(np.linalg.norm(coef, axis=0) > 0)[0]
        pred = np.argmax(scores, axis=1)
        acc = float(np.sum(wn * (pred == y)))
        path.append(LassoPathPoint(lam=float(lam), n_active=len(active),
                                   weighted_accuracy=acc))
        if len(active) <= max_groups:
            key = (acc, lam)  # ties prefer the sparser (larger lambda) point
            if best is None or key > best[0]:
                best = (key, coef.copy(), intercept.copy(), float(lam))
        else:
            break  # budget exceeded; path would only grow denser

    _, coef_b, intercept_b, lam_b = best
    return GroupLassoMultinomial(
        classes=tuple(classes) if classes else tuple(str(k) for k in range(K)),
        feature_names=tuple(feature_names) if feature_names else tuple(
            f"f{j}" for j in range(F)),
        standardizer=std,
        coef=coef_b, intercept=intercept_b, lambda_=lam_b,
        max_groups=max_groups, path=path,
    )


def _fit_at_lambda(Xs, Y, wn, lam, coef, intercept, scores, P, t_j, tol, max_sweeps):
    n, F = Xs.shape
    obj = _objective(P, Y, wn, lam, coef)
    active = set(np.nonzero(np.linalg.norm(coef, axis=0) > 0)[0].tolist())
    for _ in range(max_sweeps):
        # screen zero groups against the KKT threshold
        G = Xs.T @ (wn[:, None] * (P - Y))
        norms = np.linalg.norm(G, axis=1)
        violators = [j for j in np.nonzero(norms > lam)[0].tolist() if j not in active]
        active.update(violators)

        for j in sorted(active):
            g_j = Xs[:, j] @ (wn[:, None] * (P - Y))
            u = coef[:, j] - g_j / t_j[j]
            norm_u = float(np.linalg.norm(u))
            shrink = max(0.0, 1.0 - lam / (t_j[j] * norm_u)) if norm_u > 0 else 0.0
            new = shrink * u
            delta = new - coef[:, j]
            if np.any(delta != 0.0):
                coef[:, j] = new
                scores += np.outer(Xs[:, j], delta)
                P = _softmax(scores)
        # unpenalized intercept step (majorized Newton, curvature 1/2)
        g_b = wn @ (P - Y)
        if np.any(g_b != 0.0):
            intercept = intercept - 2.0 * g_b
            scores += -2.0 * g_b
            P = _softmax(scores)

        active = {j for j in active if np.linalg.norm(coef[:, j]) > 0}
        new_obj = _objective(P, Y, wn, lam, coef)
        if abs(obj - new_obj) <= tol * max(1.0, abs(obj)) and not violators:
            obj = new_obj
            break
        obj = new_obj
    return coef, intercept, scores, P
