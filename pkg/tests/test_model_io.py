import numpy as np
import pytest

from canopy.models import (
    ModelError,
    class_weights,
    fit_group_lasso,
    fit_random_forest,
    fit_svm_rbf,
    load_model,
    predict,
    save_model,
)


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(21)
    y = rng.integers(0, 3, size=60)
    X = rng.normal(size=(60, 8))
    X[:, 0] += 2.0 * y
    return X, y, class_weights(y, 3)


def roundtrip(model, tmp_path, X):
    path = tmp_path / "model.json"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.kind == model.kind
    assert loaded.classes == model.classes
    assert loaded.feature_names == model.feature_names
    l_orig, _ = predict(model, X, model.feature_names)
    l_load, _ = predict(loaded, X, loaded.feature_names)
    np.testing.assert_array_equal(l_orig, l_load)
    # loading twice is bit-stable
    again = load_model(path)
    _, s1 = predict(loaded, X, loaded.feature_names)
    _, s2 = predict(again, X, again.feature_names)
    assert s1.tobytes() == s2.tobytes()
    return loaded


def test_lasso_roundtrip(data, tmp_path):
    X, y, w = data
    model = fit_group_lasso(X, y, 3, weights=w, path_length=10, lambda_min_ratio=0.05)
    loaded = roundtrip(model, tmp_path, X)
    assert loaded.lambda_ == pytest.approx(model.lambda_)
    assert [p.lam for p in loaded.path] == pytest.approx([p.lam for p in model.path])


def test_svm_roundtrip(data, tmp_path):
    X, y, w = data
    model = fit_svm_rbf(X, y, 3, weights=w, tune_grid=((2.0,), (1.0,)))
    loaded = roundtrip(model, tmp_path, X)
    assert loaded.gamma == pytest.approx(model.gamma)
    assert len(loaded.pairs) == len(model.pairs)


def test_forest_roundtrip(data, tmp_path):
    X, y, w = data
    model = fit_random_forest(X, y, 3, weights=w, n_trees=20, seed=4)
    loaded = roundtrip(model, tmp_path, X)
    assert len(loaded.trees) == 20
    assert loaded.mtry == model.mtry


def test_manifest_mismatch_raises(data, tmp_path):
    X, y, w = data
    names = tuple(f"feat{i}" for i in range(8))
    model = fit_random_forest(X, y, 3, weights=w, n_trees=5, feature_names=names)
    permuted = (names[1], names[0]) + names[2:]
    with pytest.raises(ModelError, match="manifest mismatch"):
        predict(model, X, permuted)


def test_unknown_payload_rejected(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text('{"format_version": 99}')
    with pytest.raises(ModelError, match="format"):
        load_model(path)
