"""Tests for the scikit-learn style classifier wrapper."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.datasets import load_digits
from sklearn.exceptions import NotFittedError
from sklearn.model_selection import train_test_split

from spinbayes.estimator import BayesianMLPClassifier, HardwareBayesianPredictor


@pytest.fixture(scope="module")
def digits_split():
    X, y = load_digits(return_X_y=True)
    X = X / 16.0
    return train_test_split(X, y, test_size=0.25, random_state=0, stratify=y)


@pytest.fixture(scope="module")
def fitted(digits_split):
    x_tr, _, y_tr, _ = digits_split
    est = BayesianMLPClassifier(
        hidden_layers=(50, 50), epochs=15, batch_size=128, seed=0
    )
    return est.fit(x_tr, y_tr)


def test_fit_predict_score(fitted, digits_split):
    _, x_te, _, y_te = digits_split
    assert fitted.score(x_te, y_te) >= 0.90
    proba = fitted.predict_proba(x_te[:5])
    assert proba.shape == (5, 10)
    assert np.allclose(proba.sum(axis=1), 1.0)
    var = fitted.predict_variance(x_te[:5])
    assert var.shape == (5, 10)
    assert np.all(var >= 0)


def test_unfitted_raises():
    est = BayesianMLPClassifier()
    with pytest.raises(NotFittedError):
        est.predict(np.zeros((2, 4)))


def test_get_params_and_clone():
    est = BayesianMLPClassifier(hidden_layers=(30,), epochs=2, seed=9)
    params = est.get_params()
    assert params["hidden_layers"] == (30,)
    assert params["seed"] == 9
    twin = clone(est)
    assert twin.get_params() == params


def test_noncontiguous_labels():
    rng = np.random.default_rng(0)
    n = 120
    x0 = np.clip(np.hstack([rng.normal(0.8, 0.1, (n, 2)), rng.normal(0.1, 0.05, (n, 2))]), 0, 1)
    x1 = np.clip(np.hstack([rng.normal(0.1, 0.05, (n, 2)), rng.normal(0.8, 0.1, (n, 2))]), 0, 1)
    X = np.vstack([x0, x1])
    y = np.array([3] * n + [7] * n)
    est = BayesianMLPClassifier(
        hidden_layers=(6,), epochs=12, batch_size=30, learning_rate=1e-2, seed=2
    )
    est.fit(X, y)
    preds = est.predict(X)
    assert set(np.unique(preds)) <= {3, 7}
    assert np.mean(preds == y) >= 0.95


def test_fit_determinism(digits_split):
    x_tr, x_te, y_tr, _ = digits_split
    a = BayesianMLPClassifier(hidden_layers=(20,), epochs=3, seed=4).fit(x_tr, y_tr)
    b = BayesianMLPClassifier(hidden_layers=(20,), epochs=3, seed=4).fit(x_tr, y_tr)
    assert np.array_equal(a.predict_proba(x_te), b.predict_proba(x_te))


def test_export_hardware_predictor(fitted, digits_split):
    _, x_te, _, y_te = digits_split
    hw = fitted.export_hardware()
    assert isinstance(hw, HardwareBayesianPredictor)
    sw_acc = fitted.score(x_te, y_te)
    hw_acc = hw.score(x_te, y_te)
    assert hw_acc >= sw_acc - 0.03
    proba = hw.predict_proba(x_te[:4])
    assert proba.shape == (4, 10)
    assert np.allclose(proba.sum(axis=1), 1.0)
