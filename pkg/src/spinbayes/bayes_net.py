"""Variational MLP: Bayes-by-backprop training and Monte-Carlo inference.

Every weight has a factorized Gaussian posterior q(w) = N(mu, sigma^2) with
sigma = softplus(rho), trained against a zero-mean scale-mixture prior by
minimizing  E_q[log q(W) - log P(W) - log P(D|W)]  through the
reparameterization trick.  Gradients are computed manually in numpy as total
derivatives under shared per-sample noise, which is what the finite-difference
oracle checks.

Hidden activations are saturating-linear, f(u) = clamp(u / u_scale, 0, 1),
the transfer realized by the spin neuron; u_scale is calibrated once at
initialization so most pre-activations land in the linear region, then frozen.
The final layer emits raw scores; classification losses apply a softmax.
The network carries no bias terms: the hardware fabric has no bias row, and
training matches the deployed form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from .errors import (
    InvalidArgumentError,
    InvalidParameterError,
    InvalidStateError,
    TrainingDivergenceError,
)

LOG_2PI = float(np.log(2.0 * np.pi))


def softplus(x):
    """Numerically stable ln(1 + e^x)."""
    x = np.asarray(x, dtype=float)
    return np.logaddexp(0.0, x)


def saturated_linear(u: np.ndarray, scale: float) -> np.ndarray:
    """f(u) = clamp(u / scale, 0, 1)."""
    return np.clip(u / scale, 0.0, 1.0)


def saturated_linear_mask(u: np.ndarray, scale: float) -> np.ndarray:
    """Subgradient indicator: 1 strictly inside the linear region, else 0."""
    return ((u > 0.0) & (u < scale)).astype(float)


def softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class PriorSpec:
    """Zero-mean two-component Gaussian scale mixture over weights."""

    mixture_weight: float = 0.5
    sigma1: float = 1.0
    sigma2: float = float(np.exp(-6.0))

    def __post_init__(self) -> None:
        if not 0.0 < self.mixture_weight < 1.0:
            raise InvalidParameterError("mixture_weight must be in (0, 1)")
        if self.sigma1 <= 0 or self.sigma2 <= 0:
            raise InvalidParameterError("prior component sigmas must be > 0")

    def _component_logpdfs(self, w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        l1 = -0.5 * LOG_2PI - np.log(self.sigma1) - 0.5 * (w / self.sigma1) ** 2
        l2 = -0.5 * LOG_2PI - np.log(self.sigma2) - 0.5 * (w / self.sigma2) ** 2
        return l1, l2

    def log_prob(self, w: np.ndarray) -> float:
        """Sum of elementwise mixture log-densities."""
        l1, l2 = self._component_logpdfs(np.asarray(w, dtype=float))
        mix = np.logaddexp(
            np.log(self.mixture_weight) + l1,
            np.log1p(-self.mixture_weight) + l2,
        )
        return float(mix.sum())

    def log_prob_grad(self, w: np.ndarray) -> np.ndarray:
        """Elementwise d log P / d w via mixture responsibilities."""
        w = np.asarray(w, dtype=float)
        l1, l2 = self._component_logpdfs(w)
        a1 = np.log(self.mixture_weight) + l1
        a2 = np.log1p(-self.mixture_weight) + l2
        mix = np.logaddexp(a1, a2)
        r1 = np.exp(a1 - mix)
        r2 = np.exp(a2 - mix)
        return -w * (r1 / self.sigma1**2 + r2 / self.sigma2**2)


@dataclass
class VariationalLayer:
    """Posterior parameters of one affine layer, weights shaped (in, out)."""

    mu: np.ndarray
    rho: np.ndarray

    def __post_init__(self) -> None:
        self.mu = np.asarray(self.mu, dtype=float)
        self.rho = np.asarray(self.rho, dtype=float)
        if self.mu.shape != self.rho.shape or self.mu.ndim != 2:
            raise InvalidParameterError("mu and rho must be equal-shape matrices")

    @property
    def in_dim(self) -> int:
        return self.mu.shape[0]

    @property
    def out_dim(self) -> int:
        return self.mu.shape[1]

    @property
    def sigma(self) -> np.ndarray:
        return softplus(self.rho)

    @classmethod
    def initialize(
        cls, in_dim: int, out_dim: int, rng: np.random.Generator
    ) -> "VariationalLayer":
        bound = np.sqrt(6.0 / (in_dim + out_dim))
        mu = rng.uniform(-bound, bound, size=(in_dim, out_dim))
        rho = rng.uniform(-5.0, -4.0, size=(in_dim, out_dim))
        return cls(mu=mu, rho=rho)


def sample_weights(
    layer: VariationalLayer, rng: np.random.Generator
) -> np.ndarray:
    """Draw W = mu + softplus(rho) * eps with elementwise standard normal eps."""
    eps = rng.standard_normal(layer.mu.shape)
    return layer.mu + layer.sigma * eps


@dataclass
class BayesNet:
    """A stack of variational layers with saturating-linear hidden units."""

    layers: list
    prior: PriorSpec = field(default_factory=PriorSpec)
    u_scales: list | None = None  # one per hidden layer, set by calibration

    def __post_init__(self) -> None:
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_dim != b.in_dim:
                raise InvalidParameterError(
                    f"layer dims do not chain: {a.out_dim} -> {b.in_dim}"
                )
        if self.u_scales is None:
            self.u_scales = [1.0] * (len(self.layers) - 1)
        if len(self.u_scales) != len(self.layers) - 1:
            raise InvalidParameterError("need one u_scale per hidden layer")

    @property
    def dims(self) -> list:
        return [self.layers[0].in_dim] + [l.out_dim for l in self.layers]

    @classmethod
    def create(
        cls,
        dims: list,
        seed: int = 0,
        prior: PriorSpec | None = None,
    ) -> "BayesNet":
        if len(dims) < 2:
            raise InvalidParameterError("need at least input and output dims")
        rng = np.random.default_rng(seed)
        layers = [
            VariationalLayer.initialize(a, b, rng)
            for a, b in zip(dims, dims[1:])
        ]
        return cls(layers=layers, prior=prior if prior is not None else PriorSpec())


def forward(
    net: BayesNet, x: np.ndarray, weights: list, return_caches: bool = False
):
    """Feedforward pass with explicit weight matrices.

    Hidden layers apply the saturating-linear activation at their calibrated
    scale; the last layer returns raw scores.
    """
    a = np.atleast_2d(np.asarray(x, dtype=float))
    if a.shape[1] != net.layers[0].in_dim:
        raise InvalidArgumentError(
            f"input width {a.shape[1]} != {net.layers[0].in_dim}"
        )
    caches = [a]
    for idx, w in enumerate(weights[:-1]):
        u = a @ w
        a = saturated_linear(u, net.u_scales[idx])
        caches.extend([u, a])
    scores = a @ weights[-1]
    if return_caches:
        return scores, caches
    return scores


def calibrate_u_scales(
    net: BayesNet, x: np.ndarray, percentile: float = 95.0
) -> list:
    """Set each hidden layer's activation scale from mean-weight pre-activations.

    u_scale is the given percentile of |u| at initialization (W = mu), so the
    linear region covers most inputs seen early in training.  Scales are fixed
    afterwards; training and export both read them from the net.
    """
    a = np.atleast_2d(np.asarray(x, dtype=float))
    scales = []
    for idx, layer in enumerate(net.layers[:-1]):
        u = a @ layer.mu
        scale = float(np.percentile(np.abs(u), percentile))
        if scale <= 0:
            scale = 1.0
        scales.append(scale)
        a = saturated_linear(u, scale)
    net.u_scales = scales
    return scales


def elbo_loss(
    net: BayesNet,
    x: np.ndarray,
    y: np.ndarray,
    rng: np.random.Generator,
    n_samples: int = 1,
    kl_weight: float = 1.0,
):
    """Stochastic variational loss and manual gradients for one minibatch.

    loss = (1/S) * sum_i [ kl_weight * (log q(W_i) - log P(W_i)) + NLL_i ]
    with NLL summed over the minibatch.  Returns (loss, grads) where grads is
    a list of (d mu, d rho) pairs.  Gradients are total derivatives under the
    reparameterization W = mu + sigma * eps with eps held fixed:
    the entropy term contributes 0 to d/d mu and -sigmoid(rho)/sigma to
    d/d rho; the prior and likelihood contribute through dW.
    """
    if n_samples < 1:
        raise InvalidArgumentError("n_samples must be >= 1")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    y = np.asarray(y, dtype=int)
    n_out = net.layers[-1].out_dim

    total_loss = 0.0
    g_mu = [np.zeros_like(l.mu) for l in net.layers]
    g_rho = [np.zeros_like(l.rho) for l in net.layers]

    for _ in range(n_samples):
        eps = [rng.standard_normal(l.mu.shape) for l in net.layers]
        sigmas = [l.sigma for l in net.layers]
        ws = [l.mu + s * e for l, s, e in zip(net.layers, sigmas, eps)]

        scores, caches = forward(net, x, ws, return_caches=True)
        probs = softmax(scores)
        shifted = scores - scores.max(axis=1, keepdims=True)
        log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        nll = -float(log_probs[np.arange(y.size), y].sum())

        log_q = 0.0
        log_p = 0.0
        for l, s, e, w in zip(net.layers, sigmas, eps, ws):
            log_q += float(
                (-0.5 * LOG_2PI - np.log(s) - 0.5 * e**2).sum()
            )
            log_p += net.prior.log_prob(w)
        total_loss += kl_weight * (log_q - log_p) + nll

        # likelihood backprop to every W
        d_scores = probs.copy()
        d_scores[np.arange(y.size), y] -= 1.0
        d_ws = [None] * len(ws)
        grad_out = d_scores
        for li in range(len(ws) - 1, -1, -1):
            a_prev = caches[2 * li]
            d_ws[li] = a_prev.T @ grad_out
            if li > 0:
                d_a = grad_out @ ws[li].T
                u_prev = caches[2 * li - 1]
                scale = net.u_scales[li - 1]
                grad_out = d_a * saturated_linear_mask(u_prev, scale) / scale

        for li, (l, s, e, w, dw) in enumerate(
            zip(net.layers, sigmas, eps, ws, d_ws)
        ):
            sig_rho = expit(l.rho)  # d sigma / d rho
            dlogp_dw = net.prior.log_prob_grad(w)
            g_mu[li] += kl_weight * (-dlogp_dw) + dw
            g_rho[li] += (
                kl_weight * (-sig_rho / s - dlogp_dw * e * sig_rho)
                + dw * e * sig_rho
            )

    scale = 1.0 / n_samples
    grads = [(gm * scale, gr * scale) for gm, gr in zip(g_mu, g_rho)]
    return total_loss * scale, grads


class AdamState:
    """Adaptive-moment optimizer state over the (mu, rho) parameter list."""

    def __init__(self, net: BayesNet, lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self.m = [
            (np.zeros_like(l.mu), np.zeros_like(l.rho)) for l in net.layers
        ]
        self.v = [
            (np.zeros_like(l.mu), np.zeros_like(l.rho)) for l in net.layers
        ]

    def step(self, net: BayesNet, grads) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for li, (layer, (d_mu, d_rho)) in enumerate(zip(net.layers, grads)):
            for pi, (param, g) in enumerate(((layer.mu, d_mu), (layer.rho, d_rho))):
                m = self.m[li][pi]
                v = self.v[li][pi]
                m *= self.beta1
                m += (1 - self.beta1) * g
                v *= self.beta2
                v += (1 - self.beta2) * g * g
                param -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)


@dataclass(frozen=True)
class PredictiveOutput:
    """Monte-Carlo predictive summary over S posterior weight draws."""

    class_scores: np.ndarray  # mean softmax probabilities, (batch, classes)
    score_variance: np.ndarray  # per-class variance across the S draws
    n_samples: int

    @property
    def predictions(self) -> np.ndarray:
        return np.argmax(self.class_scores, axis=-1)


def predict(
    net: BayesNet, x: np.ndarray, n_samples: int, rng: np.random.Generator
) -> PredictiveOutput:
    """Average softmax outputs over S sampled networks.

    Each draw samples one full set of weights, shared across the whole input
    batch; this matches evaluating S sampled network instances.
    """
    if n_samples < 1:
        raise InvalidArgumentError("n_samples must be >= 1")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    acc = np.zeros((x.shape[0], net.layers[-1].out_dim))
    acc_sq = np.zeros_like(acc)
    for _ in range(n_samples):
        ws = [sample_weights(l, rng) for l in net.layers]
        p = softmax(forward(net, x, ws))
        acc += p
        acc_sq += p * p
    mean = acc / n_samples
    var = np.maximum(acc_sq / n_samples - mean**2, 0.0)
    return PredictiveOutput(class_scores=mean, score_variance=var,
                            n_samples=n_samples)


def train(
    net: BayesNet,
    x_train: np.ndarray,
    y_train: np.ndarray,
    epochs: int = 30,
    batch_size: int = 128,
    learning_rate: float = 1e-3,
    n_samples: int = 1,
    seed: int = 0,
    x_val: np.ndarray | None = None,
    y_val: np.ndarray | None = None,
    eval_samples: int = 10,
    log_fn=None,
) -> list:
    """Minibatch Bayes-by-backprop training loop.

    Calibrates activation scales on the first call (if still at the default),
    shuffles per epoch under the seed, weights the KL term by 1/num_batches,
    and raises TrainingDivergenceError on a non-finite loss.  Returns the
    per-epoch metrics log.
    """
    x_train = np.atleast_2d(np.asarray(x_train, dtype=float))
    y_train = np.asarray(y_train, dtype=int)
    if x_train.shape[0] == 0:
        raise InvalidArgumentError("empty training set")
    rng = np.random.default_rng(seed)

    if all(s == 1.0 for s in net.u_scales) and len(net.layers) > 1:
        calib = x_train[: min(2048, x_train.shape[0])]
        calibrate_u_scales(net, calib)

    n = x_train.shape[0]
    num_batches = max(1, n // batch_size)
    kl_weight = 1.0 / num_batches
    optimizer = AdamState(net, lr=learning_rate)
    history = []

    for epoch in range(epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, num_batches * batch_size, batch_size):
            idx = order[start:start + batch_size]
            loss, grads = elbo_loss(
                net, x_train[idx], y_train[idx], rng,
                n_samples=n_samples, kl_weight=kl_weight,
            )
            if not np.isfinite(loss):
                raise TrainingDivergenceError(
                    f"non-finite loss at epoch {epoch}, batch {start // batch_size}"
                )
            optimizer.step(net, grads)
            epoch_loss += loss

        record = {"epoch": epoch, "mean_batch_loss": epoch_loss / num_batches}
        eval_rng = np.random.default_rng((seed, epoch))
        train_idx = rng.permutation(n)[: min(n, 2000)]
        record["train_accuracy"] = float(
            np.mean(
                predict(net, x_train[train_idx], eval_samples, eval_rng).predictions
                == y_train[train_idx]
            )
        )
        if x_val is not None and y_val is not None:
            record["val_accuracy"] = float(
                np.mean(
                    predict(net, x_val, eval_samples, eval_rng).predictions
                    == np.asarray(y_val)
                )
            )
        history.append(record)
        if log_fn is not None:
            log_fn(record)
    return history


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------

CHECKPOINT_FORMAT_VERSION = 1


def save_checkpoint(
    net: BayesNet, path: str | Path, metadata: dict | None = None
) -> None:
    """Write the network to a .npz archive.

    Arrays: mu_i / rho_i per layer.  The 'meta' entry is a JSON string holding
    dims, prior spec, activation scales, format version, and caller metadata.
    """
    meta = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "dims": net.dims,
        "u_scales": list(net.u_scales),
        "prior": {
            "mixture_weight": net.prior.mixture_weight,
            "sigma1": net.prior.sigma1,
            "sigma2": net.prior.sigma2,
        },
        "extra": metadata or {},
    }
    arrays = {}
    for i, layer in enumerate(net.layers):
        arrays[f"mu_{i}"] = layer.mu
        arrays[f"rho_{i}"] = layer.rho
    np.savez(path, meta=json.dumps(meta), **arrays)


def load_checkpoint(path: str | Path) -> tuple:
    """Read a checkpoint; returns (net, metadata dict)."""
    path = Path(path)
    if not path.exists():
        raise InvalidStateError(f"checkpoint not found: {path}")
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        if meta.get("format_version") != CHECKPOINT_FORMAT_VERSION:
            raise InvalidStateError(
                f"unsupported checkpoint format: {meta.get('format_version')}"
            )
        n_layers = len(meta["dims"]) - 1
        layers = [
            VariationalLayer(mu=data[f"mu_{i}"], rho=data[f"rho_{i}"])
            for i in range(n_layers)
        ]
    prior = PriorSpec(**meta["prior"])
    net = BayesNet(layers=layers, prior=prior, u_scales=list(meta["u_scales"]))
    return net, meta["extra"]
