import numpy as np
import pytest

from canopy.models import ModelError, Standardizer, class_weights


def test_two_point_column():
    std = Standardizer.fit(np.array([[1.0], [3.0]]))
    assert std.mean[0] == pytest.approx(2.0)
    assert std.std[0] == pytest.approx(np.sqrt(2))  # sample (n-1) deviation
    out = std.transform(np.array([[1.0], [3.0]]))
    np.testing.assert_allclose(out[:, 0], [-0.70710678, 0.70710678])


def test_constant_column_zeroed_and_flagged():
    X = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
    std = Standardizer.fit(X)
    assert std.constant.tolist() == [False, True]
    out = std.transform(X)
    assert np.all(out[:, 1] == 0.0)


def test_train_statistics_reused_for_test_rows():
    rng = np.random.default_rng(0)
    train = rng.normal(5.0, 2.0, size=(50, 3))
    test = rng.normal(0.0, 1.0, size=(10, 3))
    std = Standardizer.fit(train)
    out = std.transform(test)
    np.testing.assert_allclose(out, (test - train.mean(0)) / train.std(0, ddof=1))


def test_training_matrix_centered_and_unit_variance():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(40, 6)) * rng.random(6) * 10
    out = Standardizer.fit(X).transform(X)
    assert np.all(np.abs(out.mean(axis=0)) < 1e-9)
    assert np.all(np.abs(out.var(axis=0, ddof=1) - 1.0) < 1e-9)


def test_errors():
    with pytest.raises(ModelError):
        Standardizer.fit(np.array([[1.0, 2.0]]))  # one row
    with pytest.raises(ModelError):
        Standardizer.fit(np.array([[1.0], [np.nan]]))
    std = Standardizer.fit(np.zeros((3, 2)))
    with pytest.raises(ModelError):
        std.transform(np.zeros((3, 5)))


def test_class_weights_inverse_frequency():
    y = np.array([0, 0, 0, 0, 1, 1, 2, 2, 2, 2, 2, 2])
    w = class_weights(y, 3)
    # w_c proportional to 1/n_c
    assert w[0] * 4 == pytest.approx(w[1] * 2)
    assert w[1] * 2 == pytest.approx(w[2] * 6)
    # normalized: sum_c w_c n_c = n
    counts = np.bincount(y)
    assert float(w @ counts) == pytest.approx(len(y))


def test_class_weights_absent_class():
    w = class_weights(np.array([0, 0, 2]), 3)
    assert w[1] == 0.0
    assert float(w @ np.bincount(np.array([0, 0, 2]), minlength=3)) == pytest.approx(3.0)
