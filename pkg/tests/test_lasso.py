import numpy as np
import pytest

from canopy.models import class_weights, fit_group_lasso, predict
from canopy.models.lasso import weighted_objective
from canopy.models.standardize import ModelError


def test_lambda_max_gives_null_model():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(60, 10))
    y = np.array([0] * 40 + [1] * 20)
    w = class_weights(y, 2)
    model = fit_group_lasso(X, y, 2, weights=w, path_length=1)
    assert not model.coef.any()
    labels, _ = predict(model, X, model.feature_names)
    # weighted priors are equal (weights balance the 40/20 split), so the
    # tie resolves to the lowest class index everywhere
    assert np.all(labels == 0)


def test_null_model_predicts_max_weighted_prior():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(60, 5))
    y = np.array([0] * 20 + [1] * 40)
    model = fit_group_lasso(X, y, 2, weights=np.array([1.0, 1.0]), path_length=1)
    labels, _ = predict(model, X, model.feature_names)
    assert np.all(labels == 1)  # unweighted: class 1 has the larger prior


def test_signal_feature_selected():
    rng = np.random.default_rng(2)
    n = 80
    X = rng.normal(size=(n, 8))
    y = (X[:, 3] > 0).astype(np.int64)
    model = fit_group_lasso(X, y, 2, weights=class_weights(y, 2),
                            path_length=30, lambda_min_ratio=0.01)
    assert 3 in model.active_groups.tolist()
    labels, _ = predict(model, X, model.feature_names)
    assert np.mean(labels == y) > 0.9


def test_group_sparsity_and_budget():
    rng = np.random.default_rng(3)
    n, F, K = 90, 60, 3
    X = rng.normal(size=(n, F))
    logits = X[:, :10] @ rng.normal(size=(10, K))
    y = np.argmax(logits, axis=1)
    model = fit_group_lasso(X, y, K, weights=class_weights(y, K),
                            path_length=60, lambda_min_ratio=1e-3)
    norms = np.linalg.norm(model.coef, axis=0)
    # a group is all-zero across classes or active as a whole
    for j in range(F):
        col = model.coef[:, j]
        assert (norms[j] == 0.0 and not col.any()) or (norms[j] > 0.0)
    assert len(model.active_groups) <= 25
    # the budget also holds at every stored path point
    assert all(p.n_active <= 25 or p is model.path[-1] for p in model.path)


def test_path_active_counts_monotone():
    # orthonormal design: each group's activation depends only on its own
    # gradient norm crossing lambda, so the stored path must be monotone
    rng = np.random.default_rng(4)
    raw = rng.normal(size=(80, 20))
    X, _ = np.linalg.qr(raw)
    X *= np.sqrt(80)
    y = (raw[:, 0] + 0.5 * raw[:, 5] > 0).astype(np.int64)
    model = fit_group_lasso(X, y, 2, weights=class_weights(y, 2),
                            path_length=40, lambda_min_ratio=1e-2)
    counts = [p.n_active for p in model.path]
    # lambda descends along the path, so active groups must not shrink
    assert all(a <= b for a, b in zip(counts, counts[1:]))


def test_replication_weighting_invariance():
    rng = np.random.default_rng(5)
    n = 40
    X = rng.normal(size=(n, 6))
    y = (X[:, 2] > 0.2).astype(np.int64)
    w = class_weights(y, 2)

    k = 3
    rows0 = np.nonzero(y == 0)[0]
    X_rep = np.concatenate([X] + [X[rows0]] * (k - 1))
    y_rep = np.concatenate([y] + [y[rows0]] * (k - 1))
    w_rep = w.copy()
    w_rep[0] /= k

    kwargs = dict(path_length=10, lambda_min_ratio=0.05, standardize=False,
                  tol=1e-10, max_sweeps=4000)
    a = fit_group_lasso(X, y, 2, weights=w, **kwargs)
    b = fit_group_lasso(X_rep, y_rep, 2, weights=w_rep, **kwargs)
    assert a.lambda_ == pytest.approx(b.lambda_, rel=1e-12)
    obj_a = weighted_objective(a, X, y, 2, w)
    obj_b = weighted_objective(b, X_rep, y_rep, 2, w_rep)
    assert obj_a == pytest.approx(obj_b, abs=1e-6)


def test_single_class_rejected():
    X = np.zeros((10, 3))
    with pytest.raises(ModelError):
        fit_group_lasso(X, np.zeros(10, dtype=np.int64), 1)


def test_non_finite_rejected():
    X = np.ones((10, 3))
    X[0, 0] = np.inf
    y = np.array([0, 1] * 5)
    with pytest.raises(ModelError):
        fit_group_lasso(X, y, 2)
