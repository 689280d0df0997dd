"""Tests for config resolution and typed builders."""

import numpy as np
import pytest
import yaml

from spinbayes.config import (
    default_config,
    dw_device_from,
    energy_constants_from,
    load_config,
    magnet_params_from,
    neuron_params_from,
    prior_spec_from,
    pulse_spec_from,
    sampler_config_from,
    save_config,
)
from spinbayes.errors import DataFormatError, InvalidArgumentError


def test_defaults_build_every_typed_object():
    cfg = default_config()
    assert magnet_params_from(cfg).temperature == 300.0
    assert pulse_spec_from(cfg).charge_current == pytest.approx(140e-6)
    assert sampler_config_from(cfg).rows_averaged == 3
    assert dw_device_from(cfg).n_levels == 16
    assert neuron_params_from(cfg).output_levels == 8
    assert prior_spec_from(cfg).sigma2 == pytest.approx(np.exp(-6.0))
    assert energy_constants_from(cfg).trng_bit_energy == pytest.approx(57e-15)


def test_defaults_are_yaml_serializable(tmp_path):
    cfg = default_config()
    path = tmp_path / "defaults.yaml"
    save_config(cfg, path)
    assert load_config(path) == cfg


def test_override_merge(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(
        yaml.safe_dump(
            {
                "seed": 7,
                "bayes_net": {"epochs": 3, "prior": {"sigma1": 2.0}},
                "magnetodynamics": {"temperature": 250.0},
            }
        )
    )
    cfg = load_config(path)
    assert cfg["seed"] == 7
    assert cfg["bayes_net"]["epochs"] == 3
    assert cfg["bayes_net"]["batch_size"] == 128  # untouched default
    assert cfg["bayes_net"]["prior"]["sigma1"] == 2.0
    assert cfg["bayes_net"]["prior"]["sigma2"] == pytest.approx(np.exp(-6.0))
    assert magnet_params_from(cfg).temperature == 250.0


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("bayes_nett:\n  epochs: 3\n")
    with pytest.raises(InvalidArgumentError):
        load_config(path)
    path.write_text("bayes_net:\n  epochz: 3\n")
    with pytest.raises(InvalidArgumentError):
        load_config(path)


def test_malformed_yaml(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("seed: [unclosed\n")
    with pytest.raises(DataFormatError):
        load_config(path)
    path.write_text("- just\n- a\n- list\n")
    with pytest.raises(DataFormatError):
        load_config(path)


def test_empty_file_means_defaults(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    assert load_config(path) == default_config()
    assert load_config(None) == default_config()
