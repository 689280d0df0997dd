"""Hardware-constrained inference over programmed conductance crossbars.

Each trained variational layer is exported as a pair of crossbars: the mean
matrix holds mu and the noise matrix holds sigma.  A stochastic forward pass
reads both per layer, reconstructs the pre-activation digitally from the two
ADC results, and feeds the spiking-free domain-wall neuron model, so the full
chain is

    activations -> DAC grid -> mean current
    activations * fresh z   -> DAC grid -> noise current
    digital sum (scale bookkeeping) -> neuron transfer (quantized output)

The output layer skips the neuron and is read at full ADC resolution; class
scores are the reconstructed pre-activations.  All randomness flows through a
single GaussianSampler stream, so runs are reproducible per seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bayes_net import BayesNet, PredictiveOutput, softmax
from .crossbar import (
    ConductanceMatrix,
    ConverterSpec,
    _round_half_away,
    adc,
    adc_decode,
    apply_variation,
    map_weights_to_conductance,
)
from .errors import InvalidArgumentError, InvalidParameterError, InvalidStateError
from .magnetodynamics import DwDeviceParams, NeuronParams, neuron_transfer
from .sampling import GaussianSampler, GaussianSamplerConfig


def z_full_scale(config: GaussianSamplerConfig) -> float:
    """Largest magnitude the standardized noise can take.

    The sampler averages ``rows_averaged`` uniforms and standardizes, so its
    support is [-sqrt(3 N), +sqrt(3 N)]; the noise-path DAC is sized to this.
    """
    return float(np.sqrt(3.0 * config.rows_averaged))


@dataclass
class HardwareLayer:
    """One exported layer: mean and noise crossbars plus its converters.

    ``mean_converter`` digitizes the mean-path column current and carries the
    unipolar activation DAC; ``sigma_converter`` does the same for the noise
    path, whose DAC is bipolar with full scale equal to the z support bound.
    Hidden layers own a neuron model and the activation scale mapping
    pre-activations onto the neuron's current axis; the output layer sets
    both to None and is read raw.
    """

    mean_matrix: ConductanceMatrix
    sigma_matrix: ConductanceMatrix
    mean_converter: ConverterSpec
    sigma_converter: ConverterSpec
    neuron: NeuronParams | None = None
    u_scale: float | None = None

    def __post_init__(self) -> None:
        if self.mean_matrix.shape != self.sigma_matrix.shape:
            raise InvalidStateError(
                "mean and noise crossbars must share a shape, got "
                f"{self.mean_matrix.shape} vs {self.sigma_matrix.shape}"
            )
        if (self.neuron is None) != (self.u_scale is None):
            raise InvalidParameterError(
                "hidden layers need both a neuron and a u_scale; output layers neither"
            )
        if self.u_scale is not None and self.u_scale <= 0:
            raise InvalidParameterError("u_scale must be > 0")

    @property
    def shape(self) -> tuple[int, int]:
        return self.mean_matrix.shape


@dataclass
class HardwareNetwork:
    """A chain of exported layers sharing one sampler configuration."""

    layers: list[HardwareLayer]
    sampler_config: GaussianSamplerConfig = field(default_factory=GaussianSamplerConfig)

    def __post_init__(self) -> None:
        if not self.layers:
            raise InvalidStateError("network has no programmed layers")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.shape[1] != nxt.shape[0]:
                raise InvalidStateError(
                    f"layer chain mismatch: {prev.shape} feeds {nxt.shape}"
                )
        for layer in self.layers[:-1]:
            if layer.neuron is None:
                raise InvalidStateError("hidden layer exported without a neuron")
        if self.layers[-1].neuron is not None:
            raise InvalidStateError("output layer must not carry a neuron")

    @property
    def dims(self) -> list[int]:
        return [self.layers[0].shape[0]] + [l.shape[1] for l in self.layers]


def export_network(
    net: BayesNet,
    device: DwDeviceParams | None = None,
    weight_levels: int | None = None,
    dac_bits: int = 8,
    adc_bits: int = 8,
    supply_voltage: float = 0.1,
    neuron: NeuronParams | None = None,
    sampler_config: GaussianSamplerConfig | None = None,
) -> HardwareNetwork:
    """Program a trained network onto crossbar pairs.

    mu and sigma are quantized independently onto the device conductance
    grid (sigma_ij >= 0 lands entirely on the positive line).  ADC full
    scales are set per layer to the exact worst-case column current of the
    programmed arrays, so reads never clip and the quantization step is as
    small as the resolution allows.
    """
    device = device if device is not None else DwDeviceParams()
    neuron = neuron if neuron is not None else NeuronParams()
    sampler_config = (
        sampler_config if sampler_config is not None else GaussianSamplerConfig()
    )
    f_scale = z_full_scale(sampler_config)

    layers = []
    n_layers = len(net.layers)
    for li, vl in enumerate(net.layers):
        cm_mu = map_weights_to_conductance(
            vl.mu, device, levels=weight_levels, supply_voltage=supply_voltage
        )
        cm_sig = map_weights_to_conductance(
            vl.sigma, device, levels=weight_levels, supply_voltage=supply_voltage
        )
        fs_floor = supply_voltage * cm_mu.conductance_step
        diff_mu = cm_mu.g_pos - cm_mu.g_neg
        # worst case over activations in [0, 1], per column, then per layer
        i_mu_max = supply_voltage * max(
            float(np.max(np.sum(np.maximum(diff_mu, 0.0), axis=0))),
            float(np.max(np.sum(np.maximum(-diff_mu, 0.0), axis=0))),
        )
        diff_sig = cm_sig.g_pos - cm_sig.g_neg
        # bipolar drive bounded by +-1 after the 1/F normalization
        i_sig_max = supply_voltage * float(np.max(np.sum(np.abs(diff_sig), axis=0)))
        mean_conv = ConverterSpec(
            dac_bits=dac_bits,
            adc_bits=adc_bits,
            input_full_scale=1.0,
            output_full_scale=max(i_mu_max, fs_floor),
        )
        sigma_conv = ConverterSpec(
            dac_bits=dac_bits,
            adc_bits=adc_bits,
            input_full_scale=f_scale,
            output_full_scale=max(i_sig_max, fs_floor),
        )
        hidden = li < n_layers - 1
        layers.append(
            HardwareLayer(
                mean_matrix=cm_mu,
                sigma_matrix=cm_sig,
                mean_converter=mean_conv,
                sigma_converter=sigma_conv,
                neuron=neuron if hidden else None,
                u_scale=net.u_scales[li] if hidden else None,
            )
        )
    return HardwareNetwork(layers=layers, sampler_config=sampler_config)


def _dac_grid_unipolar(values: np.ndarray, spec: ConverterSpec) -> np.ndarray:
    """Snap nonnegative activations onto the input DAC's code grid."""
    top = spec.dac_levels - 1
    v = np.clip(values, 0.0, spec.input_full_scale)
    codes = _round_half_away(v / spec.input_full_scale * top)
    return codes / top * spec.input_full_scale


def _dac_grid_bipolar(values: np.ndarray, spec: ConverterSpec) -> np.ndarray:
    """Snap signed products onto the sign-magnitude input DAC grid."""
    top = spec.dac_levels - 1
    v = np.clip(values, -spec.input_full_scale, spec.input_full_scale)
    codes = _round_half_away(v / spec.input_full_scale * top)
    return codes / top * spec.input_full_scale


def hardware_forward(
    hw: HardwareNetwork, x: np.ndarray, sampler: GaussianSampler
) -> np.ndarray:
    """One stochastic pass; returns raw class scores, shape (batch, classes).

    Inputs are normalized intensities in [0, 1].  Per layer the mean and
    noise currents are digitized separately and recombined digitally with
    the scale factors that invert the conductance mapping, which keeps the
    two paths' differing w_max bookkeeping out of the analog domain.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    dims = hw.dims
    if x.shape[1] != dims[0]:
        raise InvalidArgumentError(
            f"input width {x.shape[1]} does not match network input {dims[0]}"
        )
    if not np.all(np.isfinite(x)):
        raise InvalidArgumentError("inputs must be finite")
    if np.any(x < 0) or np.any(x > 1):
        raise InvalidArgumentError("inputs must lie in [0, 1]")

    f_scale = z_full_scale(hw.sampler_config)
    a = x
    scores = None
    for layer in hw.layers:
        cm_mu, cm_sig = layer.mean_matrix, layer.sigma_matrix
        n_rows, n_cols = cm_mu.shape
        volts = cm_mu.supply_voltage
        dg_mu = cm_mu.g_max - cm_mu.g_min
        dg_sig = cm_sig.g_max - cm_sig.g_min

        a_hat = _dac_grid_unipolar(a, layer.mean_converter)
        i_mu = (a_hat * volts) @ (cm_mu.g_pos - cm_mu.g_neg)
        i_mu_q = adc_decode(adc(i_mu, layer.mean_converter), layer.mean_converter)

        z = sampler.sample((a.shape[0], n_cols, n_rows))
        products = a_hat[:, None, :] * z
        p_hat = _dac_grid_bipolar(products, layer.sigma_converter)
        diff_sig = cm_sig.g_pos - cm_sig.g_neg
        i_sig = (volts / f_scale) * np.einsum(
            "bjk,kj->bj", p_hat, diff_sig, optimize=True
        )
        i_sig_q = adc_decode(adc(i_sig, layer.sigma_converter), layer.sigma_converter)

        u = i_mu_q * (cm_mu.w_max / (volts * dg_mu)) + i_sig_q * (
            f_scale * cm_sig.w_max / (volts * dg_sig)
        )
        if layer.neuron is not None:
            a = neuron_transfer(
                u / layer.u_scale * layer.neuron.critical_current, layer.neuron
            )
        else:
            scores = u
    return scores


def hardware_predict(
    hw: HardwareNetwork,
    x: np.ndarray,
    n_samples: int,
    sampler: GaussianSampler,
    chunk_size: int = 64,
) -> PredictiveOutput:
    """Average softmax scores over ``n_samples`` end-to-end stochastic passes.

    Inputs are processed in chunks to bound the noise-block working set; the
    sampler stream advances chunk by chunk, so results are deterministic for
    a fixed (seed, chunk_size) pair.
    """
    if n_samples < 1:
        raise InvalidArgumentError("n_samples must be >= 1")
    if chunk_size < 1:
        raise InvalidArgumentError("chunk_size must be >= 1")
    x = np.atleast_2d(np.asarray(x, dtype=float))
    n = x.shape[0]
    n_classes = hw.dims[-1]
    total = np.zeros((n, n_classes))
    total_sq = np.zeros((n, n_classes))
    for start in range(0, n, chunk_size):
        chunk = x[start : start + chunk_size]
        for _ in range(n_samples):
            probs = softmax(hardware_forward(hw, chunk, sampler))
            total[start : start + chunk_size] += probs
            total_sq[start : start + chunk_size] += probs**2
    mean = total / n_samples
    var = np.maximum(total_sq / n_samples - mean**2, 0.0)
    return PredictiveOutput(class_scores=mean, score_variance=var, n_samples=n_samples)


def hardware_accuracy(
    hw: HardwareNetwork,
    x: np.ndarray,
    y: np.ndarray,
    n_samples: int,
    sampler: GaussianSampler,
    chunk_size: int = 64,
) -> float:
    """Classification accuracy of hardware_predict against integer labels."""
    out = hardware_predict(hw, x, n_samples, sampler, chunk_size=chunk_size)
    return float(np.mean(out.predictions == np.asarray(y)))


def apply_network_variation(
    hw: HardwareNetwork, sigma_pct: float, rng: np.random.Generator
) -> HardwareNetwork:
    """Materialize one Monte-Carlo device-variation instance of the network.

    Every conductance in every crossbar is perturbed independently; converter
    full scales stay at their exported values, as a physical system cannot
    re-size its ADCs per die.
    """
    layers = [
        HardwareLayer(
            mean_matrix=apply_variation(l.mean_matrix, sigma_pct, rng),
            sigma_matrix=apply_variation(l.sigma_matrix, sigma_pct, rng),
            mean_converter=l.mean_converter,
            sigma_converter=l.sigma_converter,
            neuron=l.neuron,
            u_scale=l.u_scale,
        )
        for l in hw.layers
    ]
    return HardwareNetwork(layers=layers, sampler_config=hw.sampler_config)


def layer_read_ideal(
    x: np.ndarray,
    mu: np.ndarray,
    sigma: np.ndarray,
    sampler: GaussianSampler,
) -> np.ndarray:
    """Mean-plus-noise read in weight units with all quantization disabled.

    Realizes u_j = sum_k x_k mu_kj + sum_k (x_k z_jk) sigma_kj with fresh
    standardized noise per column, the algebraic arrangement the two-crossbar
    split implements.  Used to check the split against sampling the weights
    W ~ Normal(mu, sigma) directly.
    """
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    if mu.shape != sigma.shape:
        raise InvalidArgumentError("mu and sigma must share a shape")
    if x.shape != (mu.shape[0],):
        raise InvalidArgumentError(
            f"input length {x.shape} does not match {mu.shape[0]} rows"
        )
    n_rows, n_cols = mu.shape
    z = sampler.sample((n_cols, n_rows))
    return x @ mu + np.einsum("k,jk,kj->j", x, z, sigma, optimize=True)
