"""Conductance crossbar emulation: signed weight mapping, reads, converters.

Weights live on two conductance lines per input (a "positive" and a
"negative" line).  The magnitude is quantized onto the device's conductance
grid and programmed on the line matching the weight's sign; the other line
idles at the minimum conductance, so the differential column current realizes
the signed product.  Sigma-path weights are nonnegative by construction and
use the same mapping; signs there ride on the inputs (bipolar DAC).

All reads are ideal Kirchhoff sums: no IR drop, sneak paths, or sensing
noise.  Programmed-conductance variation is modeled as a single multiplicative
Gaussian perturbation per cell, applied when a Monte-Carlo network instance is
materialized.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataFormatError, InvalidArgumentError, InvalidParameterError
from .magnetodynamics import DwDeviceParams
from .sampling import GaussianSampler


def _round_half_away(x: np.ndarray | float) -> np.ndarray | float:
    """Round to nearest integer, ties away from zero (np.rint ties to even)."""
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def quantize(value, levels: int, lo: float, hi: float):
    """Clamp ``value`` to [lo, hi] and return the nearest of ``levels`` codes."""
    if levels < 2:
        raise InvalidParameterError("levels must be >= 2")
    if not lo < hi:
        raise InvalidParameterError("range must satisfy lo < hi")
    v = np.clip(np.asarray(value, dtype=float), lo, hi)
    idx = _round_half_away((v - lo) / (hi - lo) * (levels - 1))
    out = idx.astype(int)
    if np.isscalar(value):
        return int(out)
    return out


@dataclass
class ConductanceMatrix:
    """A programmed pair of conductance arrays realizing one weight matrix.

    ``signed_codes[k, j]`` is the quantized weight level with its sign
    (input row k, output column j); ``g_pos``/``g_neg`` hold the realized
    conductances, which coincide with the ideal grid until variation is
    applied.  ``w_max`` records the magnitude that maps to the top level so
    weights can be recovered from codes.
    """

    g_pos: np.ndarray
    g_neg: np.ndarray
    signed_codes: np.ndarray
    levels: int
    g_min: float
    g_max: float
    supply_voltage: float
    w_max: float

    def __post_init__(self) -> None:
        self.g_pos = np.asarray(self.g_pos, dtype=float)
        self.g_neg = np.asarray(self.g_neg, dtype=float)
        self.signed_codes = np.asarray(self.signed_codes, dtype=int)
        if self.g_pos.shape != self.g_neg.shape or self.g_pos.shape != self.signed_codes.shape:
            raise InvalidParameterError("conductance and code arrays must share shape")
        if self.levels < 2:
            raise InvalidParameterError("levels must be >= 2")
        if not 0 < self.g_min < self.g_max:
            raise InvalidParameterError("need 0 < g_min < g_max")
        if self.supply_voltage <= 0 or self.w_max <= 0:
            raise InvalidParameterError("supply_voltage and w_max must be > 0")

    @property
    def shape(self) -> tuple[int, int]:
        return self.g_pos.shape

    @property
    def conductance_step(self) -> float:
        return (self.g_max - self.g_min) / (self.levels - 1)

    def grid_and_exclusivity_ok(self, atol: float = 1e-18) -> bool:
        """True if conductances sit on the grid and signs are exclusive.

        Grid membership only holds before variation; sign exclusivity is a
        property of the programmed codes and survives variation.
        """
        step = self.conductance_step
        for g in (self.g_pos, self.g_neg):
            k = (g - self.g_min) / step
            if not np.allclose(k, np.round(k), atol=atol / step):
                return False
            if np.any((g < self.g_min - atol) | (g > self.g_max + atol)):
                return False
        return self.codes_sign_exclusive()

    def codes_sign_exclusive(self) -> bool:
        # one sign per cell by construction of the signed code representation
        return bool(np.all(np.abs(self.signed_codes) <= self.levels - 1))


def map_weights_to_conductance(
    weights: np.ndarray,
    device: DwDeviceParams | None = None,
    levels: int | None = None,
    w_max: float | None = None,
    supply_voltage: float = 0.1,
) -> ConductanceMatrix:
    """Quantize signed weights onto the two-line conductance representation.

    |w| is quantized to ``levels`` codes on [0, w_max]; the code lands on the
    line matching sign(w) as g_min + code * (g_max - g_min)/(levels - 1), and
    the opposite line holds g_min.  Zero maps to g_min on both lines.
    """
    device = device if device is not None else DwDeviceParams()
    levels = levels if levels is not None else device.n_levels
    w = np.atleast_2d(np.asarray(weights, dtype=float))
    if w_max is None:
        w_max = float(np.percentile(np.abs(w), 99.9))
    if w_max <= 0:
        raise InvalidParameterError("w_max must be > 0")

    g_min = device.antiparallel_conductance
    g_max = device.parallel_conductance
    mag_codes = quantize(np.abs(w), levels, 0.0, w_max)
    signed = np.sign(w).astype(int) * mag_codes
    step = (g_max - g_min) / (levels - 1)
    g_pos = g_min + step * np.where(signed > 0, mag_codes, 0)
    g_neg = g_min + step * np.where(signed < 0, mag_codes, 0)
    return ConductanceMatrix(
        g_pos=g_pos,
        g_neg=g_neg,
        signed_codes=signed,
        levels=levels,
        g_min=g_min,
        g_max=g_max,
        supply_voltage=supply_voltage,
        w_max=w_max,
    )


def unmap_conductance(cm: ConductanceMatrix) -> np.ndarray:
    """Recover the quantized weight matrix encoded by the programmed codes."""
    return cm.signed_codes / (cm.levels - 1) * cm.w_max


def column_read(
    x: np.ndarray,
    g_pos_col: np.ndarray,
    g_neg_col: np.ndarray,
    supply_voltage: float,
) -> float:
    """Differential column current for normalized inputs x in [-1, 1].

    Each input drives its row pair at x_k * supply_voltage; the column wire
    sums I = sum_k V_k * (g_pos[k] - g_neg[k]).
    """
    x = np.asarray(x, dtype=float)
    g_pos_col = np.asarray(g_pos_col, dtype=float)
    g_neg_col = np.asarray(g_neg_col, dtype=float)
    if x.shape != g_pos_col.shape or x.shape != g_neg_col.shape:
        raise InvalidArgumentError(
            f"dimension mismatch: x {x.shape}, column {g_pos_col.shape}"
        )
    return float((x * supply_voltage) @ (g_pos_col - g_neg_col))


def layer_forward_mean(x: np.ndarray, cm: ConductanceMatrix) -> np.ndarray:
    """Column currents of the mean crossbar for one input vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (cm.shape[0],):
        raise InvalidArgumentError(
            f"input length {x.shape} does not match {cm.shape[0]} rows"
        )
    return (x * cm.supply_voltage) @ (cm.g_pos - cm.g_neg)


def layer_forward_sigma(
    x: np.ndarray, cm: ConductanceMatrix, sampler: GaussianSampler
) -> np.ndarray:
    """Column currents of the sigma crossbar with fresh per-column noise.

    Columns are read sequentially; each read scales the inputs by a freshly
    drawn standardized vector z (one entry per row), so no z is ever shared
    between columns.  The sign of x_k * z_k rides on the input line.
    """
    x = np.asarray(x, dtype=float)
    n_rows, n_cols = cm.shape
    if x.shape != (n_rows,):
        raise InvalidArgumentError(
            f"input length {x.shape} does not match {n_rows} rows"
        )
    out = np.empty(n_cols)
    diff = cm.g_pos - cm.g_neg
    for j in range(n_cols):
        z = sampler.sample(n_rows)
        out[j] = (x * z * cm.supply_voltage) @ diff[:, j]
    return out


def layer_forward_sigma_batch(
    x_batch: np.ndarray, cm: ConductanceMatrix, sampler: GaussianSampler
) -> np.ndarray:
    """Vectorized sigma-path read for a batch of inputs.

    Draws one (batch, columns, rows) noise block from the sampler stream; the
    segments per (input, column) pair are disjoint by construction, matching
    the sequential single-input semantics statistically.
    """
    x_batch = np.atleast_2d(np.asarray(x_batch, dtype=float))
    n_rows, n_cols = cm.shape
    if x_batch.shape[1] != n_rows:
        raise InvalidArgumentError("batch width does not match crossbar rows")
    z = sampler.sample((x_batch.shape[0], n_cols, n_rows))
    diff = cm.g_pos - cm.g_neg
    # out[b, j] = sum_k x[b,k] z[b,j,k] diff[k,j]
    return cm.supply_voltage * np.einsum(
        "bk,bjk,kj->bj", x_batch, z, diff, optimize=True
    )


def apply_variation(
    cm: ConductanceMatrix,
    sigma_pct: float,
    rng: np.random.Generator,
) -> ConductanceMatrix:
    """Perturb every stored conductance by g * (1 + eps), eps ~ N(0, sigma_pct).

    Results are clamped to the physical [g_min, g_max] range; programmed codes
    are retained so the intent of the cell (sign, level) is still known.
    """
    if sigma_pct < 0:
        raise InvalidParameterError("sigma_pct must be >= 0")
    if sigma_pct == 0:
        g_pos, g_neg = cm.g_pos.copy(), cm.g_neg.copy()
    else:
        g_pos = cm.g_pos * (1.0 + sigma_pct * rng.standard_normal(cm.shape))
        g_neg = cm.g_neg * (1.0 + sigma_pct * rng.standard_normal(cm.shape))
        g_pos = np.clip(g_pos, cm.g_min, cm.g_max)
        g_neg = np.clip(g_neg, cm.g_min, cm.g_max)
    return ConductanceMatrix(
        g_pos=g_pos,
        g_neg=g_neg,
        signed_codes=cm.signed_codes.copy(),
        levels=cm.levels,
        g_min=cm.g_min,
        g_max=cm.g_max,
        supply_voltage=cm.supply_voltage,
        w_max=cm.w_max,
    )


# ---------------------------------------------------------------------------
# Converters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConverterSpec:
    """Input DAC and output ADC resolutions with their full-scale ranges.

    Codes are sign-magnitude: magnitude codes span [0, 2^bits - 1] and map
    uniformly onto [0, full_scale]; negative codes mirror to negative values
    (bipolar operation for the sigma path).
    """

    dac_bits: int = 8
    adc_bits: int = 8
    input_full_scale: float = 1.0
    output_full_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.dac_bits < 1 or self.adc_bits < 1:
            raise InvalidParameterError("converter bits must be >= 1")
        if self.input_full_scale <= 0 or self.output_full_scale <= 0:
            raise InvalidParameterError("full scales must be positive")

    @property
    def dac_levels(self) -> int:
        return 2**self.dac_bits

    @property
    def adc_levels(self) -> int:
        return 2**self.adc_bits

    @property
    def adc_lsb(self) -> float:
        return self.output_full_scale / (self.adc_levels - 1)


def dac(code, spec: ConverterSpec):
    """Convert integer codes to analog values over the input full scale."""
    c = np.asarray(code)
    top = spec.dac_levels - 1
    if np.any(np.abs(c) > top):
        raise InvalidArgumentError(f"DAC code magnitude exceeds {top}")
    out = c / top * spec.input_full_scale
    if np.isscalar(code):
        return float(out)
    return out


def adc(value, spec: ConverterSpec):
    """Clamp to the output full scale and round to the nearest code."""
    top = spec.adc_levels - 1
    v = np.clip(
        np.asarray(value, dtype=float),
        -spec.output_full_scale,
        spec.output_full_scale,
    )
    out = _round_half_away(v / spec.output_full_scale * top).astype(int)
    if np.isscalar(value):
        return int(out)
    return out


def adc_decode(code, spec: ConverterSpec):
    """Digital value represented by an ADC code (inverse of the code map)."""
    out = np.asarray(code) / (spec.adc_levels - 1) * spec.output_full_scale
    if np.isscalar(code):
        return float(out)
    return out


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

def conductance_matrix_to_dict(cm: ConductanceMatrix) -> dict:
    return {
        "shape": list(cm.shape),
        "levels": cm.levels,
        "g_min": cm.g_min,
        "g_max": cm.g_max,
        "supply_voltage": cm.supply_voltage,
        "w_max": cm.w_max,
        "signed_codes_row_major": cm.signed_codes.ravel(order="C").tolist(),
    }


def conductance_matrix_from_dict(payload: dict) -> ConductanceMatrix:
    try:
        shape = tuple(payload["shape"])
        levels = int(payload["levels"])
        g_min = float(payload["g_min"])
        g_max = float(payload["g_max"])
        supply = float(payload["supply_voltage"])
        w_max = float(payload["w_max"])
        codes = np.array(payload["signed_codes_row_major"], dtype=int).reshape(shape)
    except (KeyError, TypeError, ValueError) as exc:
        raise DataFormatError(f"malformed conductance matrix record: {exc}") from exc
    if np.any(np.abs(codes) > levels - 1):
        raise DataFormatError("codes exceed the stated level range")
    step = (g_max - g_min) / (levels - 1)
    g_pos = g_min + step * np.where(codes > 0, codes, 0)
    g_neg = g_min + step * np.where(codes < 0, -codes, 0)
    return ConductanceMatrix(
        g_pos=g_pos,
        g_neg=g_neg,
        signed_codes=codes,
        levels=levels,
        g_min=g_min,
        g_max=g_max,
        supply_voltage=supply,
        w_max=w_max,
    )


def save_conductance_matrix(cm: ConductanceMatrix, path: str | Path) -> None:
    Path(path).write_text(json.dumps(conductance_matrix_to_dict(cm)))


def load_conductance_matrix(path: str | Path) -> ConductanceMatrix:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"not a valid JSON artifact: {exc}") from exc
    return conductance_matrix_from_dict(payload)
