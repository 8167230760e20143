import numpy as np
import pytest

from canopy.models import class_weights, fit_random_forest, predict
from canopy.models.standardize import ModelError


def test_label_leak_gives_perfect_training_accuracy():
    rng = np.random.default_rng(0)
    y = rng.integers(0, 3, size=60)
    X = np.column_stack([y.astype(np.float64), rng.normal(size=(60, 4))])
    model = fit_random_forest(X, y, 3, weights=class_weights(y, 3), n_trees=25)
    labels, _ = predict(model, X, model.feature_names)
    assert np.mean(labels == y) == 1.0


def test_default_tree_count_is_500():
    rng = np.random.default_rng(1)
    y = rng.integers(0, 2, size=30)
    X = np.column_stack([y.astype(np.float64), rng.normal(size=30)])
    model = fit_random_forest(X, y, 2, weights=class_weights(y, 2))
    assert len(model.trees) == 500


def test_mtry_floor_sqrt():
    rng = np.random.default_rng(2)
    y = np.array([0, 1] * 20)
    X = rng.normal(size=(40, 30))
    model = fit_random_forest(X, y, 2, n_trees=5)
    assert model.mtry == 5  # floor(sqrt(30))


def test_deterministic_given_seed_and_workers():
    rng = np.random.default_rng(3)
    y = rng.integers(0, 2, size=50)
    X = rng.normal(size=(50, 6)) + y[:, None]
    m1 = fit_random_forest(X, y, 2, n_trees=20, seed=7, workers=1)
    m2 = fit_random_forest(X, y, 2, n_trees=20, seed=7, workers=4)
    probe = rng.normal(size=(30, 6))
    l1, s1 = predict(m1, probe, m1.feature_names)
    l2, s2 = predict(m2, probe, m2.feature_names)
    np.testing.assert_array_equal(l1, l2)
    assert s1.tobytes() == s2.tobytes()
    for t1, t2 in zip(m1.trees, m2.trees):
        assert t1.feature.tobytes() == t2.feature.tobytes()
        assert t1.threshold.tobytes() == t2.threshold.tobytes()


def test_oob_accuracy_near_chance_on_noise():
    # pure-noise features, balanced classes: OOB accuracy stays in a binomial
    # band around 0.5 for every seed
    for seed in range(10):
        rng = np.random.default_rng(1000 + seed)
        y = np.array([0, 1] * 100)
        X = rng.normal(size=(200, 5))
        model = fit_random_forest(X, y, 2, weights=class_weights(y, 2),
                                  n_trees=51, seed=seed, compute_oob=True)
        assert model.oob_accuracy is not None
        assert 0.35 <= model.oob_accuracy <= 0.65, f"seed {seed}: {model.oob_accuracy}"


def test_class_weights_shift_majority_leaf_votes():
    # one constant feature region containing a 2:1 class mix: upweighting the
    # minority flips the vote
    X = np.array([[0.0], [0.0], [0.0], [1.0], [1.0], [1.0]])
    y = np.array([0, 0, 1, 1, 1, 0])
    heavy_minority = np.array([1.0, 10.0])
    model = fit_random_forest(X, y, 2, weights=heavy_minority, n_trees=15, seed=0)
    labels, _ = predict(model, np.array([[0.0]]), model.feature_names)
    assert labels[0] == 1


def test_single_class_rejected():
    with pytest.raises(ModelError):
        fit_random_forest(np.zeros((10, 2)), np.zeros(10, dtype=np.int64), 2)


def test_scores_are_vote_fractions():
    rng = np.random.default_rng(5)
    y = rng.integers(0, 2, size=40)
    X = rng.normal(size=(40, 3)) + 3.0 * y[:, None]
    model = fit_random_forest(X, y, 2, n_trees=10, seed=1)
    _, scores = predict(model, X, model.feature_names)
    np.testing.assert_allclose(scores.sum(axis=1), 1.0)
    assert np.all(scores >= 0.0)
