"""Scikit-learn style front end for the variational classifier.

BayesianMLPClassifier wraps network construction, training, and posterior-
averaged prediction behind the familiar fit/predict/predict_proba surface, so
the model slots into pipelines, grid search, and cross-validation.  A fitted
estimator can be lowered onto the crossbar emulation with export_hardware(),
which returns a thin predictor bound to quantized conductances; the hardware
twin is deliberately not a full estimator because programming a crossbar is
not a fit operation.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .bayes_net import BayesNet, PriorSpec, predict, train
from .errors import InvalidArgumentError
from .hardware import export_network, hardware_predict
from .magnetodynamics import DwDeviceParams, NeuronParams
from .sampling import GaussianSampler, GaussianSamplerConfig


class BayesianMLPClassifier(ClassifierMixin, BaseEstimator):
    """Bias-free MLP with factorized Gaussian weight posteriors.

    Hidden layers use the saturated-linear activation; predictions average
    softmax scores over ``n_samples`` posterior weight draws.  Inputs are
    expected as nonnegative intensities (images in [0, 1]); training is
    deterministic per ``seed``.
    """

    def __init__(
        self,
        hidden_layers=(200, 200),
        epochs=30,
        batch_size=128,
        learning_rate=1e-3,
        train_samples=1,
        n_samples=10,
        prior_mixture_weight=0.5,
        prior_sigma1=1.0,
        prior_sigma2=float(np.exp(-6.0)),
        seed=0,
    ):
        self.hidden_layers = hidden_layers
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.train_samples = train_samples
        self.n_samples = n_samples
        self.prior_mixture_weight = prior_mixture_weight
        self.prior_sigma1 = prior_sigma1
        self.prior_sigma2 = prior_sigma2
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        if self.classes_.size < 2:
            raise InvalidArgumentError("need at least two classes")
        dims = [X.shape[1], *self.hidden_layers, self.classes_.size]
        prior = PriorSpec(
            mixture_weight=self.prior_mixture_weight,
            sigma1=self.prior_sigma1,
            sigma2=self.prior_sigma2,
        )
        self.net_ = BayesNet.create(dims, seed=self.seed, prior=prior)
        self.history_ = train(
            self.net_,
            X,
            y_idx,
            epochs=self.epochs,
            batch_size=self.batch_size,
            learning_rate=self.learning_rate,
            n_samples=self.train_samples,
            seed=self.seed,
        )
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "net_")
        X = check_array(X)
        out = predict(
            self.net_, X, self.n_samples, np.random.default_rng((self.seed, 1))
        )
        return out.class_scores

    def predict_variance(self, X):
        """Per-class predictive variance across posterior samples."""
        check_is_fitted(self, "net_")
        X = check_array(X)
        out = predict(
            self.net_, X, self.n_samples, np.random.default_rng((self.seed, 1))
        )
        return out.score_variance

    def predict(self, X):
        proba = self.predict_proba(X)
        return self.classes_[np.argmax(proba, axis=1)]

    def export_hardware(
        self,
        device: DwDeviceParams | None = None,
        weight_levels: int | None = None,
        dac_bits: int = 8,
        adc_bits: int = 8,
        supply_voltage: float = 0.1,
        neuron: NeuronParams | None = None,
        sampler_config: GaussianSamplerConfig | None = None,
        chunk_size: int = 64,
    ) -> "HardwareBayesianPredictor":
        check_is_fitted(self, "net_")
        hw = export_network(
            self.net_,
            device=device,
            weight_levels=weight_levels,
            dac_bits=dac_bits,
            adc_bits=adc_bits,
            supply_voltage=supply_voltage,
            neuron=neuron,
            sampler_config=sampler_config,
        )
        return HardwareBayesianPredictor(
            hw,
            classes=self.classes_,
            n_samples=self.n_samples,
            seed=self.seed,
            chunk_size=chunk_size,
        )


class HardwareBayesianPredictor:
    """Frozen crossbar-programmed predictor produced by export_hardware."""

    def __init__(self, hw, classes, n_samples=10, seed=0, chunk_size=64):
        self.hw = hw
        self.classes_ = np.asarray(classes)
        self.n_samples = n_samples
        self.seed = seed
        self.chunk_size = chunk_size

    def predict_proba(self, X):
        X = check_array(X)
        sampler = GaussianSampler(config=self.hw.sampler_config, seed=self.seed)
        out = hardware_predict(
            self.hw, X, self.n_samples, sampler, chunk_size=self.chunk_size
        )
        return out.class_scores

    def predict(self, X):
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]

    def score(self, X, y):
        return float(np.mean(self.predict(X) == np.asarray(y)))
