"""Magnetization dynamics and behavioral device models.

Two device families live here:

* A mono-domain perpendicular magnet on a heavy-metal underlayer, used as a
  true random bit cell.  Charge current through the underlayer injects an
  in-plane spin current that holds the magnet near its hard axis; when the
  current is released, thermal noise relaxes it into either easy-axis state
  with equal probability.  The dynamics are integrated with a stochastic Heun
  scheme on the macrospin equation of motion.

* An elongated multi-domain device whose conductance tracks a domain-wall
  position, modeled behaviorally: displacement is linear in (current x time)
  and conductance is affine in position.  The same structure biased against a
  reference junction acts as a saturating-linear neuron with a discrete
  output resolution set by the minimum programmable displacement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .constants import GAMMA_E, K_B, MU_0, MU_B, Q_E
from .errors import (
    InvalidArgumentError,
    InvalidParameterError,
    NumericalFailureError,
    UnresolvedRelaxationError,
)

X_AXIS = np.array([1.0, 0.0, 0.0])
Y_AXIS = np.array([0.0, 1.0, 0.0])
Z_AXIS = np.array([0.0, 0.0, 1.0])

# Heavy-metal write-path resistance backed out of the per-bit switching energy
# at the worst-case reset current and pulse length (I^2*R*t = 57 fJ at
# 140 uA / 1 ns).
DEFAULT_HM_RESISTANCE = 2908.0


@dataclass(frozen=True)
class MagnetParams:
    """Physical parameters of the mono-domain free layer.

    ``energy_barrier`` is in joules; the easy-axis anisotropy field is derived
    from it rather than from shape, so the barrier takes precedence over
    geometry.  ``gyromagnetic_ratio`` is in rad/(s*T) and is multiplied by
    ``MU_0`` internally whenever it acts on fields expressed in A/m.
    """

    saturation_magnetization: float = 1.0e6  # A/m
    gilbert_damping: float = 0.1
    energy_barrier: float = 20.0 * K_B * 300.0  # J
    temperature: float = 300.0  # K
    free_layer_width: float = 40e-9  # m, square footprint
    free_layer_thickness: float = 1.2e-9  # m
    heavy_metal_thickness: float = 2e-9  # m
    spin_hall_angle: float = 0.3
    timestep: float = 1e-12  # s
    gyromagnetic_ratio: float = GAMMA_E  # rad/(s*T)

    def __post_init__(self) -> None:
        positive = {
            "saturation_magnetization": self.saturation_magnetization,
            "gilbert_damping": self.gilbert_damping,
            "energy_barrier": self.energy_barrier,
            "free_layer_width": self.free_layer_width,
            "free_layer_thickness": self.free_layer_thickness,
            "heavy_metal_thickness": self.heavy_metal_thickness,
            "timestep": self.timestep,
            "gyromagnetic_ratio": self.gyromagnetic_ratio,
        }
        for name, value in positive.items():
            if not value > 0:
                raise InvalidParameterError(f"{name} must be > 0, got {value}")
        if self.temperature < 0:
            raise InvalidParameterError("temperature must be >= 0")

    @property
    def volume(self) -> float:
        """Free-layer volume, m^3."""
        return self.free_layer_width**2 * self.free_layer_thickness

    @property
    def spin_count(self) -> float:
        """Number of Bohr magnetons in the free layer, Ms*V/mu_B."""
        return self.saturation_magnetization * self.volume / MU_B

    @property
    def anisotropy_field(self) -> float:
        """Uniaxial easy-axis field H_k = 2*E_B/(mu_0*Ms*V), A/m."""
        return 2.0 * self.energy_barrier / (
            MU_0 * self.saturation_magnetization * self.volume
        )

    @property
    def thermal_field_std(self) -> float:
        """Per-component standard deviation of the discrete thermal field, A/m.

        Scales as 1/sqrt(timestep): the field is held constant over one
        integration step, so its strength follows the white-noise limit.
        """
        if self.temperature == 0.0:
            return 0.0
        alpha = self.gilbert_damping
        denom = (
            self.gyromagnetic_ratio
            * MU_0**2
            * self.saturation_magnetization
            * self.volume
            * self.timestep
        )
        return float(
            np.sqrt(alpha / (1.0 + alpha**2) * 2.0 * K_B * self.temperature / denom)
        )


@dataclass
class MacrospinState:
    """Unit magnetization direction of the free layer."""

    m: np.ndarray

    def __post_init__(self) -> None:
        self.m = np.asarray(self.m, dtype=float)
        if self.m.shape != (3,):
            raise InvalidArgumentError(f"m must be a 3-vector, got shape {self.m.shape}")
        norm = float(np.linalg.norm(self.m))
        if not np.isfinite(norm) or norm == 0.0:
            raise NumericalFailureError("magnetization is not a finite unit vector")
        if abs(norm - 1.0) > 1e-6:
            raise InvalidArgumentError(f"|m| = {norm} is not within 1e-6 of 1")
        self.m = self.m / norm

    @classmethod
    def along(cls, direction: Sequence[float]) -> "MacrospinState":
        d = np.asarray(direction, dtype=float)
        return cls(d / np.linalg.norm(d))


@dataclass(frozen=True)
class PulseSpec:
    """A rectangular charge-current pulse through the heavy metal."""

    charge_current: float  # A
    duration: float  # s
    spin_polarization_axis: np.ndarray = field(
        default_factory=lambda: Y_AXIS.copy()
    )

    def __post_init__(self) -> None:
        axis = np.asarray(self.spin_polarization_axis, dtype=float)
        if axis.shape != (3,):
            raise InvalidParameterError("spin_polarization_axis must be a 3-vector")
        norm = float(np.linalg.norm(axis))
        if abs(norm - 1.0) > 1e-9:
            raise InvalidParameterError("spin_polarization_axis must have unit norm")
        if self.duration <= 0:
            raise InvalidParameterError("pulse duration must be > 0")
        object.__setattr__(self, "spin_polarization_axis", axis)


def spin_current(charge_current: float, params: MagnetParams) -> float:
    """Spin current injected by a charge current through the heavy metal.

    I_s = theta_SH * (A_junction / A_heavy_metal) * I_q with a square
    free-layer footprint, so the area ratio reduces to width / thickness.
    """
    if params.free_layer_width <= 0 or params.heavy_metal_thickness <= 0:
        raise InvalidParameterError("geometry fields must be positive")
    area_ratio = params.free_layer_width / params.heavy_metal_thickness
    return params.spin_hall_angle * area_ratio * charge_current


def thermal_field(
    params: MagnetParams,
    rng: np.random.Generator,
    size: int | tuple[int, ...] | None = None,
) -> np.ndarray:
    """Random thermal field draw, shape (..., 3), in A/m.

    Components are i.i.d. normal with the standard deviation given by
    ``params.thermal_field_std``.
    """
    shape = (3,) if size is None else (np.atleast_1d(size).prod(), 3)
    if size is not None and isinstance(size, tuple):
        shape = size + (3,)
    std = params.thermal_field_std
    if std == 0.0:
        return np.zeros(shape)
    return std * rng.standard_normal(shape)


def _llg_rhs(
    m: np.ndarray,
    h_eff: np.ndarray,
    i_s_vec: np.ndarray,
    params: MagnetParams,
) -> np.ndarray:
    """Explicit form of the damped precession + spin-torque equation, 1/s.

    Solves the implicit Gilbert form for dm/dt:
        dm/dt = (R + alpha * m x R) / (1 + alpha^2),
        R = -gamma*mu_0 * (m x H_eff) + (m x (I_s x m)) / (q * N_s).
    """
    alpha = params.gilbert_damping
    geff = params.gyromagnetic_ratio * MU_0
    torque_rate = 1.0 / (Q_E * params.spin_count)
    r = -geff * np.cross(m, h_eff) + torque_rate * np.cross(m, np.cross(i_s_vec, m))
    return (r + alpha * np.cross(m, r)) / (1.0 + alpha**2)


def _heun_step(
    m: np.ndarray,
    i_s_vec: np.ndarray,
    params: MagnetParams,
    h_thermal: np.ndarray,
) -> np.ndarray:
    """One stochastic Heun (predictor-corrector) step; renormalizes the result.

    The realized thermal field is held fixed across the predictor and
    corrector evaluations, which yields the Stratonovich interpretation
    standard for this equation.
    """
    dt = params.timestep
    hk = params.anisotropy_field

    h_eff = h_thermal.copy()
    h_eff[..., 2] += hk * m[..., 2]
    k1 = _llg_rhs(m, h_eff, i_s_vec, params)

    m_pred = m + dt * k1
    h_eff2 = h_thermal.copy()
    h_eff2[..., 2] += hk * m_pred[..., 2]
    k2 = _llg_rhs(m_pred, h_eff2, i_s_vec, params)

    m_new = m + 0.5 * dt * (k1 + k2)
    norm = np.linalg.norm(m_new, axis=-1, keepdims=True)
    return m_new / norm


def llg_step(
    state: MacrospinState,
    spin_current_vector: np.ndarray,
    params: MagnetParams,
    rng: np.random.Generator,
) -> MacrospinState:
    """Advance the magnetization by one timestep.

    ``spin_current_vector`` is the injected spin current in amperes along its
    polarization axis (a 3-vector; pass zeros for free relaxation).
    """
    m = state.m
    if not np.all(np.isfinite(m)):
        raise NumericalFailureError("magnetization state contains non-finite values")
    i_s = np.asarray(spin_current_vector, dtype=float)
    h_th = thermal_field(params, rng)
    m_new = _heun_step(m, i_s, params, h_th)
    if not np.all(np.isfinite(m_new)):
        raise NumericalFailureError("integrator produced non-finite magnetization")
    return MacrospinState(m_new)


def _run_segment(
    m: np.ndarray,
    i_s_vec: np.ndarray,
    params: MagnetParams,
    noise: np.ndarray,
) -> np.ndarray:
    """Integrate a batch of trajectories for ``noise.shape[-2]`` steps.

    ``m`` has shape (batch, 3); ``noise`` has shape (batch, steps, 3) and
    holds pre-drawn standard normals so that each trial consumes exactly its
    own entropy stream regardless of batching.
    """
    std = params.thermal_field_std
    for step in range(noise.shape[-2]):
        m = _heun_step(m, i_s_vec, params, std * noise[..., step, :])
    return m


def simulate_reset_relax(
    params: MagnetParams,
    pulse: PulseSpec,
    relax_time: float,
    rng: np.random.Generator,
    initial_state: MacrospinState | None = None,
    max_retries: int = 3,
) -> int:
    """Run one reset-relax cycle and return the resolved bit.

    The pulse injects spin current along the in-plane polarization axis,
    pinning the magnet near its hard axis; the subsequent zero-current
    relaxation lets thermal noise pick one of the two easy-axis states.
    Returns 1 if the final m_z > 0, else 0.  If |m_z| < 0.9 after
    ``relax_time``, relaxation is retried in equal increments up to
    ``max_retries`` times before raising :class:`UnresolvedRelaxationError`.
    """
    bits = _reset_relax_batch(
        params, pulse, relax_time, [rng], initial_state, max_retries
    )
    return int(bits[0])


def _reset_relax_batch(
    params: MagnetParams,
    pulse: PulseSpec,
    relax_time: float,
    rngs: Sequence[np.random.Generator],
    initial_state: MacrospinState | None = None,
    max_retries: int = 3,
) -> np.ndarray:
    """Vectorized reset-relax over one independent generator per trial."""
    dt = params.timestep
    if pulse.duration < dt:
        raise InvalidArgumentError("pulse duration is shorter than the timestep")
    if relax_time < dt:
        raise InvalidArgumentError("relax_time is shorter than the timestep")
    n_pulse = int(round(pulse.duration / dt))
    n_relax = int(round(relax_time / dt))
    n_trials = len(rngs)

    m0 = Z_AXIS if initial_state is None else initial_state.m
    m = np.broadcast_to(m0, (n_trials, 3)).copy()

    i_s = spin_current(pulse.charge_current, params) * pulse.spin_polarization_axis

    noise = np.empty((n_trials, n_pulse + n_relax, 3))
    for k, gen in enumerate(rngs):
        noise[k] = gen.standard_normal((n_pulse + n_relax, 3))

    m = _run_segment(m, i_s, params, noise[:, :n_pulse])
    m = _run_segment(m, np.zeros(3), params, noise[:, n_pulse:])

    unresolved = np.abs(m[:, 2]) < 0.9
    retries = 0
    while np.any(unresolved):
        if retries >= max_retries:
            raise UnresolvedRelaxationError(
                f"{int(unresolved.sum())} of {n_trials} trials did not settle to "
                f"|m_z| >= 0.9 within {relax_time * (1 + max_retries):.3g} s; "
                "increase relax_time"
            )
        retries += 1
        idx = np.flatnonzero(unresolved)
        extra = np.empty((idx.size, n_relax, 3))
        for row, k in enumerate(idx):
            extra[row] = rngs[k].standard_normal((n_relax, 3))
        m[idx] = _run_segment(m[idx], np.zeros(3), params, extra)
        unresolved[idx] = np.abs(m[idx, 2]) < 0.9

    return (m[:, 2] > 0).astype(np.uint8)


def reset_relax_bits(
    params: MagnetParams,
    pulse: PulseSpec,
    n_bits: int,
    seed: int | np.random.SeedSequence,
    relax_time: float = 5e-9,
    initial_state: MacrospinState | None = None,
    chunk_size: int = 512,
) -> np.ndarray:
    """Generate ``n_bits`` independent bits from the reset-relax protocol.

    Each trial owns a child seed of ``seed``, so the bit sequence does not
    depend on the chunking used to vectorize the integration.
    """
    root = (
        seed
        if isinstance(seed, np.random.SeedSequence)
        else np.random.SeedSequence(seed)
    )
    children = root.spawn(n_bits)
    out = np.empty(n_bits, dtype=np.uint8)
    for start in range(0, n_bits, chunk_size):
        stop = min(start + chunk_size, n_bits)
        rngs = [np.random.Generator(np.random.PCG64(c)) for c in children[start:stop]]
        out[start:stop] = _reset_relax_batch(
            params, pulse, relax_time, rngs, initial_state
        )
    return out


def estimate_switching_probability(
    params: MagnetParams,
    pulse: PulseSpec,
    trials: int,
    seed: int | np.random.SeedSequence,
    relax_time: float = 5e-9,
    initial_state: MacrospinState | None = None,
) -> tuple[float, float]:
    """Monte-Carlo estimate of P(bit = 1) with a 3-sigma binomial halfwidth."""
    if trials < 100:
        raise InvalidArgumentError("at least 100 trials are required")
    bits = reset_relax_bits(
        params, pulse, trials, seed, relax_time, initial_state
    )
    p_hat = float(bits.mean())
    halfwidth = 3.0 * float(np.sqrt(p_hat * (1.0 - p_hat) / trials))
    return p_hat, halfwidth


def trng_bit_energy(
    pulse: PulseSpec, hm_resistance: float = DEFAULT_HM_RESISTANCE
) -> float:
    """Joule energy of one reset pulse through the heavy metal, I^2*R*t."""
    if hm_resistance <= 0:
        raise InvalidParameterError("hm_resistance must be positive")
    return pulse.charge_current**2 * hm_resistance * pulse.duration


# ---------------------------------------------------------------------------
# Domain-wall devices
# ---------------------------------------------------------------------------

# Record of the magnetometric calibration behind the behavioral domain-wall
# model (informational; the behavioral slope k_dw is what the toolkit uses).
DEFAULT_DW_CALIBRATION: Mapping[str, object] = {
    "ferromagnet_thickness_m": 0.6e-9,
    "grid_size_m": [4e-9, 1e-9, 0.6e-9],
    "heavy_metal_thickness_m": 3e-9,
    "domain_wall_width_m": 7.6e-9,
    "saturation_magnetization_A_per_m": 700e3,
    "spin_hall_angle": 0.07,
    "gilbert_damping": 0.3,
    "exchange_constant_J_per_m": 1e-11,
    "perpendicular_anisotropy_J_per_m3": 4.8e5,
    "dmi_constant_J_per_m2": -1.2e-3,
}


@dataclass(frozen=True)
class DwDeviceParams:
    """Behavioral parameters of a domain-wall conductance device."""

    length: float = 320e-9  # m
    min_displacement_step: float = 20e-9  # m
    tmr: float = 3.0  # (R_AP - R_P) / R_P
    parallel_conductance: float = 10e-6  # S, fully parallel state
    # Slope calibrated so the full-traverse current of the 160 nm neuron track
    # is 4 uA at the 10 ns programming pulse: 160e-9 / (4e-6 * 10e-9).
    displacement_per_current_time: float = 4.0e6  # m per A*s
    programming_pulse_duration: float = 10e-9  # s
    calibration_metadata: Mapping[str, object] = field(
        default_factory=lambda: dict(DEFAULT_DW_CALIBRATION)
    )

    def __post_init__(self) -> None:
        if self.length <= 0 or self.min_displacement_step <= 0:
            raise InvalidParameterError("length and displacement step must be > 0")
        ratio = self.length / self.min_displacement_step
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise InvalidParameterError(
                "length must be a positive integer multiple of the displacement step"
            )
        if self.tmr <= 0:
            raise InvalidParameterError("tmr must be > 0")
        if self.parallel_conductance <= 0:
            raise InvalidParameterError("parallel_conductance must be > 0")

    @property
    def n_levels(self) -> int:
        """Number of programmable conductance levels."""
        return int(round(self.length / self.min_displacement_step))

    @property
    def antiparallel_conductance(self) -> float:
        """Minimum conductance G_AP = G_P / (1 + TMR)."""
        return self.parallel_conductance / (1.0 + self.tmr)


def dw_displace(
    device: DwDeviceParams,
    current: float,
    duration: float,
    position: float = 0.0,
) -> float:
    """Domain-wall displacement for a programming pulse, clamped to the track.

    Displacement is linear in current * duration below saturation; the wall
    never leaves [0, length], so the return value is clamped to
    [-position, length - position].
    """
    dx = device.displacement_per_current_time * current * duration
    return float(np.clip(dx, -position, device.length - position))


def dw_conductance(device: DwDeviceParams, position: float) -> float:
    """Conductance at a given wall position: affine from G_AP at 0 to G_P at L."""
    if position < 0 or position > device.length:
        raise InvalidArgumentError(
            f"position {position} outside [0, {device.length}]"
        )
    g_ap = device.antiparallel_conductance
    g_p = device.parallel_conductance
    return float(g_ap + (g_p - g_ap) * (position / device.length))


def neuron_dw_defaults() -> DwDeviceParams:
    """Domain-wall device used as the neuron (shorter track, 8 levels)."""
    return DwDeviceParams(length=160e-9)


@dataclass(frozen=True)
class NeuronParams:
    """Saturating-linear neuron built from a domain-wall device.

    ``critical_current`` traverses the full track in one programming pulse;
    the output is the normalized wall position quantized to ``output_levels``
    steps.  The neuron is reset to position 0 before every evaluation, so the
    transfer function is stateless.
    """

    device: DwDeviceParams = field(default_factory=neuron_dw_defaults)
    critical_current: float = 4e-6  # A
    output_levels: int = 8
    transfer_gain: float = 1.0

    def __post_init__(self) -> None:
        if self.critical_current <= 0:
            raise InvalidParameterError("critical_current must be > 0")
        if self.output_levels < 2:
            raise InvalidParameterError("output_levels must be >= 2")
        if self.transfer_gain <= 0:
            raise InvalidParameterError("transfer_gain must be > 0")


def neuron_transfer(
    input_current: float | np.ndarray, params: NeuronParams
) -> float | np.ndarray:
    """Saturating-linear activation with discrete output resolution.

    y = clamp(I / I_critical, 0, 1), rounded to the nearest of
    ``output_levels`` uniformly spaced values, scaled by ``transfer_gain``.
    """
    y = np.clip(np.asarray(input_current, dtype=float) / params.critical_current, 0.0, 1.0)
    steps = params.output_levels - 1
    quantized = np.rint(y * steps) / steps
    out = params.transfer_gain * quantized
    if np.isscalar(input_current):
        return float(out)
    return out
