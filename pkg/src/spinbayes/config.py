"""Experiment configuration: YAML sections mirroring the module layout.

Every physical and algorithmic default lives in one nested dict; a config
file overrides keys selectively and unknown keys are rejected so typos fail
loudly.  Builder helpers turn sections into the typed parameter objects the
modules consume.  The full resolved dict is embedded in every report, which
is what makes runs reproducible from their artifacts.
"""

from __future__ import annotations

import copy
from dataclasses import asdict
from pathlib import Path

import numpy as np
import yaml

from .bayes_net import PriorSpec
from .energy import EnergyConstants
from .errors import DataFormatError, InvalidArgumentError
from .magnetodynamics import (
    DwDeviceParams,
    MagnetParams,
    NeuronParams,
    PulseSpec,
)
from .sampling import GaussianSamplerConfig


def default_config() -> dict:
    return {
        "seed": 2026,
        "output_dir": "runs",
        "magnetodynamics": asdict(MagnetParams()),
        "pulse": {
            "charge_current": 140e-6,
            "duration": 1e-9,
            "relax_time": 5e-9,
        },
        "sampling": {
            "bit_width": 8,
            "rows_averaged": 3,
        },
        "crossbar": {
            "device": asdict(DwDeviceParams()),
            "supply_voltage": 0.1,
        },
        "bayes_net": {
            "hidden_layers": [200, 200],
            "epochs": 30,
            "batch_size": 128,
            "learning_rate": 1e-3,
            "train_samples": 1,
            "eval_samples": 10,
            "prior": {
                "mixture_weight": 0.5,
                "sigma1": 1.0,
                "sigma2": float(np.exp(-6.0)),
            },
        },
        "hardware": {
            "weight_levels": 16,
            "dac_bits": 8,
            "adc_bits": 8,
            "neuron_levels": 8,
            "chunk_size": 64,
        },
        "energy": asdict(EnergyConstants()),
    }


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else str(key)
        if key not in base:
            raise InvalidArgumentError(f"unknown config key: {where}")
        if isinstance(base[key], dict) and key != "calibration_metadata":
            if not isinstance(value, dict):
                raise InvalidArgumentError(f"{where} must be a mapping")
            out[key] = _merge(base[key], value, where)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path: str | Path | None = None) -> dict:
    """Resolve the full config: file overrides applied onto the defaults."""
    cfg = default_config()
    if path is None:
        return cfg
    try:
        payload = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise DataFormatError(f"config is not valid YAML: {exc}") from exc
    if payload is None:
        return cfg
    if not isinstance(payload, dict):
        raise DataFormatError("config root must be a mapping")
    return _merge(cfg, payload)


def save_config(cfg: dict, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg, sort_keys=False))


def magnet_params_from(cfg: dict) -> MagnetParams:
    return MagnetParams(**cfg["magnetodynamics"])


def pulse_spec_from(cfg: dict) -> PulseSpec:
    section = cfg["pulse"]
    return PulseSpec(
        charge_current=section["charge_current"], duration=section["duration"]
    )


def sampler_config_from(cfg: dict) -> GaussianSamplerConfig:
    return GaussianSamplerConfig(**cfg["sampling"])


def dw_device_from(cfg: dict) -> DwDeviceParams:
    return DwDeviceParams(**cfg["crossbar"]["device"])


def neuron_params_from(cfg: dict) -> NeuronParams:
    return NeuronParams(output_levels=cfg["hardware"]["neuron_levels"])


def prior_spec_from(cfg: dict) -> PriorSpec:
    return PriorSpec(**cfg["bayes_net"]["prior"])


def energy_constants_from(cfg: dict) -> EnergyConstants:
    return EnergyConstants(**cfg["energy"])
