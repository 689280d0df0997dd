"""Co-simulation toolkit for spintronic Bayesian neural networks.

Device level: a stochastic macrospin simulator for tunnel-junction random
bit generation and domain-wall analog weights/neurons.  Circuit level: a
sum-of-uniforms Gaussian sampler, differential crossbar arrays, and
converter models.  Algorithm level: a variational mean-field MLP trained
by backprop with the reparameterization trick, exportable onto the
quantized crossbar fabric, with per-inference energy accounting.
"""

from spinbayes.bayes_net import (
    BayesNet,
    PriorSpec,
    load_checkpoint,
    predict,
    save_checkpoint,
    train,
)
from spinbayes.config import default_config, load_config, save_config
from spinbayes.datasets import (
    load_digits_surrogate,
    load_mnist,
    mnist_available,
)
from spinbayes.energy import EnergyConstants, inference_energy_report
from spinbayes.errors import SpinbayesError
from spinbayes.estimator import BayesianMLPClassifier
from spinbayes.hardware import (
    apply_network_variation,
    export_network,
    hardware_accuracy,
    hardware_predict,
)
from spinbayes.magnetodynamics import (
    DwDeviceParams,
    MagnetParams,
    NeuronParams,
    PulseSpec,
    estimate_switching_probability,
    reset_relax_bits,
)
from spinbayes.sampling import (
    GaussianSampler,
    GaussianSamplerConfig,
    rng_quality_report,
)

__version__ = "0.1.0"

__all__ = [
    "BayesNet",
    "BayesianMLPClassifier",
    "DwDeviceParams",
    "EnergyConstants",
    "GaussianSampler",
    "GaussianSamplerConfig",
    "MagnetParams",
    "NeuronParams",
    "PriorSpec",
    "PulseSpec",
    "SpinbayesError",
    "apply_network_variation",
    "default_config",
    "estimate_switching_probability",
    "export_network",
    "hardware_accuracy",
    "hardware_predict",
    "inference_energy_report",
    "load_checkpoint",
    "load_config",
    "load_digits_surrogate",
    "load_mnist",
    "mnist_available",
    "predict",
    "reset_relax_bits",
    "rng_quality_report",
    "save_checkpoint",
    "save_config",
    "train",
    "__version__",
]
