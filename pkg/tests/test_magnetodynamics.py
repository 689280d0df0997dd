"""Tests for the macrospin TRNG model and domain-wall device behaviors."""

import numpy as np
import pytest
from scipy.integrate import quad

from spinbayes.constants import K_B, MU_0
from spinbayes.errors import (
    InvalidArgumentError,
    InvalidParameterError,
    NumericalFailureError,
    UnresolvedRelaxationError,
)
from spinbayes.magnetodynamics import (
    DwDeviceParams,
    MacrospinState,
    MagnetParams,
    NeuronParams,
    PulseSpec,
    Y_AXIS,
    Z_AXIS,
    dw_conductance,
    dw_displace,
    estimate_switching_probability,
    llg_step,
    neuron_dw_defaults,
    neuron_transfer,
    reset_relax_bits,
    simulate_reset_relax,
    spin_current,
    thermal_field,
    trng_bit_energy,
    _heun_step,
    _run_segment,
)


# ---------------------------------------------------------------------------
# Parameters and derived quantities
# ---------------------------------------------------------------------------

def test_spin_current_geometry_ratio():
    p = MagnetParams()
    # theta_SH * (width / t_HM) = 0.3 * 20 at the default geometry
    assert spin_current(140e-6, p) == pytest.approx(840e-6, rel=1e-12)
    assert spin_current(0.0, p) == 0.0
    assert spin_current(2 * 140e-6, p) == pytest.approx(2 * spin_current(140e-6, p))


def test_magnet_params_derived_quantities():
    p = MagnetParams()
    assert p.volume == pytest.approx(1.92e-24, rel=1e-12)
    assert p.anisotropy_field == pytest.approx(68667.85, rel=1e-6)
    assert p.spin_count == pytest.approx(207030.18, rel=1e-6)
    assert p.thermal_field_std == pytest.approx(39195.277, rel=1e-6)


def test_magnet_params_validation():
    with pytest.raises(InvalidParameterError):
        MagnetParams(saturation_magnetization=0.0)
    with pytest.raises(InvalidParameterError):
        MagnetParams(timestep=-1e-12)
    with pytest.raises(InvalidParameterError):
        MagnetParams(temperature=-1.0)
    # zero temperature is a legitimate deterministic limit
    assert MagnetParams(temperature=0.0).thermal_field_std == 0.0


def test_macrospin_state_validation():
    s = MacrospinState(np.array([0.0, 0.0, 1.0 + 5e-7]))
    assert np.linalg.norm(s.m) == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(InvalidArgumentError):
        MacrospinState(np.array([0.0, 0.0, 2.0]))
    with pytest.raises(InvalidArgumentError):
        MacrospinState(np.zeros(4))
    with pytest.raises(NumericalFailureError):
        MacrospinState(np.array([np.nan, 0.0, 1.0]))


def test_pulse_spec_validation():
    with pytest.raises(InvalidParameterError):
        PulseSpec(charge_current=1e-6, duration=0.0)
    with pytest.raises(InvalidParameterError):
        PulseSpec(charge_current=1e-6, duration=1e-9,
                  spin_polarization_axis=np.array([0.0, 2.0, 0.0]))


# ---------------------------------------------------------------------------
# Thermal field statistics
# ---------------------------------------------------------------------------

def test_thermal_field_statistics():
    p = MagnetParams()
    rng = np.random.default_rng(314)
    draws = thermal_field(p, rng, size=(100_000,))
    assert draws.shape == (100_000, 3)
    var = draws.var(axis=0)
    assert np.all(np.abs(var / p.thermal_field_std**2 - 1.0) < 0.05)
    corr = np.corrcoef(draws.T)
    off_diag = corr[~np.eye(3, dtype=bool)]
    assert np.all(np.abs(off_diag) < 0.02)


def test_thermal_field_zero_temperature():
    p = MagnetParams(temperature=0.0)
    rng = np.random.default_rng(0)
    assert np.all(thermal_field(p, rng) == 0.0)


# ---------------------------------------------------------------------------
# Integrator behavior
# ---------------------------------------------------------------------------

def test_easy_axis_fixed_point():
    p = MagnetParams(temperature=0.0)
    state = MacrospinState(Z_AXIS.copy())
    rng = np.random.default_rng(0)
    out = llg_step(state, np.zeros(3), p, rng)
    assert np.allclose(out.m, Z_AXIS, atol=1e-14)


def test_damped_relaxation_monotone():
    p = MagnetParams(temperature=0.0)
    state = MacrospinState.along([0.2, 0.1, 0.97])
    rng = np.random.default_rng(0)
    mz = [state.m[2]]
    for _ in range(4000):
        state = llg_step(state, np.zeros(3), p, rng)
        mz.append(state.m[2])
    diffs = np.diff(mz)
    assert np.all(diffs >= -1e-14)
    assert mz[-1] > 0.999


def test_llg_nan_state_raises():
    p = MagnetParams()
    state = MacrospinState(Z_AXIS.copy())
    state.m = np.array([np.nan, 0.0, 1.0])  # corrupt after construction
    with pytest.raises(NumericalFailureError):
        llg_step(state, np.zeros(3), p, np.random.default_rng(0))


def test_norm_preserved_random_sweep():
    p = MagnetParams()
    rng = np.random.default_rng(77)
    for _ in range(20):
        v = rng.standard_normal(3)
        state = MacrospinState.along(v)
        i_s = spin_current(rng.uniform(0, 200e-6), p) * Y_AXIS
        for _ in range(50):
            state = llg_step(state, i_s, p, rng)
        assert abs(np.linalg.norm(state.m) - 1.0) < 1e-9


def test_zero_temperature_determinism():
    p = MagnetParams(temperature=0.0)
    i_s = spin_current(100e-6, p) * Y_AXIS
    runs = []
    for _ in range(2):
        state = MacrospinState.along([0.1, 0.2, 0.97])
        rng = np.random.default_rng(123)
        for _ in range(500):
            state = llg_step(state, i_s, p, rng)
        runs.append(state.m.copy())
    assert np.array_equal(runs[0], runs[1])


def test_hard_axis_pinning_during_pulse():
    # at the nominal reset current the spin torque overwhelms anisotropy and
    # parks the magnet on the in-plane hard axis within the 1 ns pulse
    p = MagnetParams(temperature=0.0)
    i_s = spin_current(140e-6, p) * Y_AXIS
    m = Z_AXIS[None, :].copy()
    m = _run_segment(m, i_s, p, np.zeros((1, 1000, 3)))
    assert abs(m[0] @ Y_AXIS) > 0.999
    assert abs(m[0, 2]) < 1e-6


def test_boltzmann_equilibrium_variance():
    """Fluctuation-dissipation check of the thermal field amplitude.

    At a low barrier (E_B = 2 k_B T) the stationary distribution of m_z is
    p(x) ~ exp(beta*E_B*x^2) on [-1, 1].  Starting an ensemble from exact
    samples of that law (rejection sampling), the trajectory average of m_z^2
    must stay at the quadrature value; a mis-scaled thermal field would drift
    it toward a different effective temperature.
    """
    beta_eb = 2.0
    num = quad(lambda x: x * x * np.exp(beta_eb * x * x), -1, 1)[0]
    den = quad(lambda x: np.exp(beta_eb * x * x), -1, 1)[0]
    oracle = num / den  # 0.53126

    rng = np.random.default_rng(7)
    n_traj = 256
    xs = np.empty(n_traj)
    n = 0
    while n < n_traj:
        x = rng.uniform(-1, 1, 4 * n_traj)
        u = rng.uniform(0, 1, 4 * n_traj)
        acc = x[u < np.exp(beta_eb * (x * x - 1.0))]
        take = min(n_traj - n, acc.size)
        xs[n:n + take] = acc[:take]
        n += take
    phi = rng.uniform(0, 2 * np.pi, n_traj)
    s = np.sqrt(1 - xs**2)
    m = np.stack([s * np.cos(phi), s * np.sin(phi), xs], axis=-1)

    p = MagnetParams(energy_barrier=beta_eb * K_B * 300.0)
    std = p.thermal_field_std
    acc_sum = 0.0
    n_steps = 8000
    for block in range(4):
        noise = rng.standard_normal((n_traj, n_steps // 4, 3))
        for k in range(noise.shape[1]):
            m = _heun_step(m, np.zeros(3), p, std * noise[:, k])
            acc_sum += float(np.mean(m[:, 2] ** 2))
    assert acc_sum / n_steps == pytest.approx(oracle, abs=0.02)


def test_retention_at_high_barrier():
    # E_B = 20 kT: no spontaneous z-sign flips over 20 ns across 50 trials
    p = MagnetParams()
    rng = np.random.default_rng(5)
    m = np.broadcast_to(Z_AXIS, (50, 3)).copy()
    m = _run_segment(m, np.zeros(3), p, rng.standard_normal((50, 20_000, 3)))
    assert np.all(m[:, 2] > 0)


# ---------------------------------------------------------------------------
# Reset-relax protocol
# ---------------------------------------------------------------------------

def test_subcritical_pulse_deterministic_bit():
    # far below critical current with no thermal noise the magnet never
    # leaves the +z basin, so the protocol deterministically returns 1
    p = MagnetParams(temperature=0.0)
    pulse = PulseSpec(charge_current=1e-6, duration=1e-9)
    bit = simulate_reset_relax(p, pulse, relax_time=2e-9,
                               rng=np.random.default_rng(0))
    assert bit == 1


def test_reset_relax_unresolved_raises():
    # T = 0 exactly on the hard axis has no symmetry-breaking agent, so the
    # relaxation can never resolve and must fail loudly
    p = MagnetParams(temperature=0.0)
    pulse = PulseSpec(charge_current=140e-6, duration=1e-9)
    with pytest.raises(UnresolvedRelaxationError):
        simulate_reset_relax(p, pulse, relax_time=2e-10,
                             rng=np.random.default_rng(0))


def test_reset_relax_bits_deterministic_and_chunk_invariant():
    p = MagnetParams()
    pulse = PulseSpec(charge_current=140e-6, duration=1e-9)
    b1 = reset_relax_bits(p, pulse, 64, seed=99, chunk_size=64)
    b2 = reset_relax_bits(p, pulse, 64, seed=99, chunk_size=7)
    b3 = reset_relax_bits(p, pulse, 64, seed=99, chunk_size=64)
    assert np.array_equal(b1, b2)
    assert np.array_equal(b1, b3)
    assert set(np.unique(b1)) <= {0, 1}


def test_switching_probability_near_half():
    p = MagnetParams()
    pulse = PulseSpec(charge_current=140e-6, duration=1e-9)
    p_hat, hw = estimate_switching_probability(p, pulse, trials=400, seed=2026)
    assert hw == pytest.approx(3 * np.sqrt(p_hat * (1 - p_hat) / 400))
    # 3-sigma band around 0.5 at 400 trials is +/- 0.075
    assert 0.425 <= p_hat <= 0.575


def test_switching_probability_symmetric_in_start_state():
    p = MagnetParams()
    pulse = PulseSpec(charge_current=140e-6, duration=1e-9)
    up = MacrospinState(Z_AXIS.copy())
    down = MacrospinState(-Z_AXIS.copy())
    p_up, hw_up = estimate_switching_probability(
        p, pulse, trials=300, seed=11, initial_state=up)
    p_dn, hw_dn = estimate_switching_probability(
        p, pulse, trials=300, seed=12, initial_state=down)
    assert abs(p_up - p_dn) < np.hypot(hw_up, hw_dn)


def test_stronger_reset_current_still_unbiased():
    # hard-axis biasing tolerates a 20% overdrive without skewing the coin
    p = MagnetParams()
    pulse = PulseSpec(charge_current=1.2 * 140e-6, duration=1e-9)
    p_hat, _ = estimate_switching_probability(p, pulse, trials=300, seed=21)
    assert 0.413 <= p_hat <= 0.587  # 3-sigma band at 300 trials


def test_switching_probability_requires_trials():
    p = MagnetParams()
    pulse = PulseSpec(charge_current=140e-6, duration=1e-9)
    with pytest.raises(InvalidArgumentError):
        estimate_switching_probability(p, pulse, trials=10, seed=0)


def test_trng_bit_energy():
    pulse = PulseSpec(charge_current=140e-6, duration=1e-9)
    assert trng_bit_energy(PulseSpec(1e-30, 1e-9)) == pytest.approx(0.0, abs=1e-40)
    assert trng_bit_energy(pulse) == pytest.approx(57e-15, rel=2e-3)
    twice = PulseSpec(charge_current=140e-6, duration=2e-9)
    assert trng_bit_energy(twice) == pytest.approx(2 * trng_bit_energy(pulse))
    with pytest.raises(InvalidParameterError):
        trng_bit_energy(pulse, hm_resistance=0.0)


# ---------------------------------------------------------------------------
# Domain-wall devices
# ---------------------------------------------------------------------------

def test_dw_device_levels():
    cross = DwDeviceParams()
    assert cross.n_levels == 16
    neuron = neuron_dw_defaults()
    assert neuron.n_levels == 8
    assert cross.antiparallel_conductance == pytest.approx(2.5e-6)
    with pytest.raises(InvalidParameterError):
        DwDeviceParams(length=330e-9)  # not a multiple of the 20 nm step
    with pytest.raises(InvalidParameterError):
        DwDeviceParams(tmr=0.0)


def test_dw_displace_calibration():
    dev = neuron_dw_defaults()
    assert dw_displace(dev, 0.0, 10e-9) == 0.0
    # 4 uA for 10 ns traverses the full 160 nm track
    assert dw_displace(dev, 4e-6, 10e-9) == pytest.approx(160e-9)
    assert dw_displace(dev, 2e-6, 10e-9) == pytest.approx(80e-9)
    # clamped at both edges
    assert dw_displace(dev, 100e-6, 10e-9) == pytest.approx(dev.length)
    assert dw_displace(dev, -100e-6, 10e-9, position=dev.length) == pytest.approx(
        -dev.length)
    assert dw_displace(dev, -1e-6, 10e-9, position=0.0) == 0.0


def test_dw_displace_linear_below_saturation():
    dev = DwDeviceParams()
    rng = np.random.default_rng(3)
    for _ in range(50):
        i = rng.uniform(0, 4e-6)
        t = rng.uniform(0, 8e-9)
        dx = dw_displace(dev, i, t)
        assert dx == pytest.approx(dev.displacement_per_current_time * i * t)


def test_dw_conductance_affine():
    dev = DwDeviceParams()
    g_p = dev.parallel_conductance
    assert dw_conductance(dev, 0.0) == pytest.approx(g_p / 4)
    assert dw_conductance(dev, dev.length) == pytest.approx(g_p)
    assert dw_conductance(dev, dev.length / 2) == pytest.approx(0.625 * g_p)
    xs = np.linspace(0, dev.length, 9)
    gs = np.array([dw_conductance(dev, x) for x in xs])
    assert np.allclose(np.diff(gs), gs[1] - gs[0])
    assert np.all((gs >= dev.antiparallel_conductance - 1e-18)
                  & (gs <= g_p + 1e-18))
    with pytest.raises(InvalidArgumentError):
        dw_conductance(dev, -1e-9)
    with pytest.raises(InvalidArgumentError):
        dw_conductance(dev, dev.length + 1e-9)


def test_neuron_critical_current_consistent_with_track():
    n = NeuronParams()
    traverse = (n.device.displacement_per_current_time * n.critical_current
                * n.device.programming_pulse_duration)
    assert traverse == pytest.approx(n.device.length)


def test_neuron_transfer():
    n = NeuronParams()
    assert neuron_transfer(0.0, n) == 0.0
    assert neuron_transfer(n.critical_current, n) == pytest.approx(1.0)
    assert neuron_transfer(2 * n.critical_current, n) == pytest.approx(1.0)
    assert neuron_transfer(-1e-6, n) == 0.0
    # outputs land on the 8-level grid
    vals = neuron_transfer(np.linspace(0, 8e-6, 201), n)
    grid = np.arange(8) / 7.0
    assert np.all(np.isin(np.round(vals * 7).astype(int), np.arange(8)))
    assert np.allclose(vals, grid[np.round(vals * 7).astype(int)])
    # monotone nondecreasing
    assert np.all(np.diff(vals) >= 0)
    # gain scales the output
    n2 = NeuronParams(transfer_gain=2.5)
    assert neuron_transfer(n2.critical_current, n2) == pytest.approx(2.5)


def test_neuron_params_validation():
    with pytest.raises(InvalidParameterError):
        NeuronParams(critical_current=0.0)
    with pytest.raises(InvalidParameterError):
        NeuronParams(output_levels=1)
