"""Per-inference energy accounting for the stochastic crossbar pipeline.

Every energy figure is an itemized ledger entry (label, count, unit energy),
grouped into two categories: the random-number unit (device bits plus the
adders that average them into samples) and everything hanging off the
crossbars (Joule heating during reads, converters, activation-noise
multipliers, neuron resets).  Peripheral unit energies are calibration
constants, not measured ground truth; the defaults are chosen so that the
reference 784-200-200-10 network lands at its published operating point.

Counts derive from the network dimensions: one fresh noise sample per
(row, column) pair per pass, one input DAC conversion per row per column
read with no shared-row amortization, one ADC conversion per column read.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import InvalidArgumentError, InvalidParameterError
from .hardware import HardwareNetwork

RNG_CATEGORY = "rng"
CROSSBAR_CATEGORY = "crossbar_and_peripherals"


@dataclass(frozen=True)
class EnergyConstants:
    """Unit energies and electrical assumptions for one inference pass."""

    trng_bit_energy: float = 57e-15  # J per stochastic device bit
    crossbar_supply_voltage: float = 0.1  # V
    column_read_time: float = 10e-9  # s
    dac_energy_per_conversion: float = 7.6e-13
    adc_energy_per_conversion: float = 2.0e-12
    accumulator_energy_per_add: float = 4.4e-13
    neuron_reset_energy: float = 5.0e-14
    multiplier_energy_per_op: float = 2.0e-13

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if value < 0:
                raise InvalidParameterError(f"{name} must be >= 0, got {value}")


@dataclass(frozen=True)
class EnergyEntry:
    """One itemized line: subtotal is exactly count * unit_energy."""

    label: str
    category: str
    count: int
    unit_energy: float

    def __post_init__(self) -> None:
        if self.count < 0 or self.unit_energy < 0:
            raise InvalidParameterError("counts and unit energies must be >= 0")
        if self.category not in (RNG_CATEGORY, CROSSBAR_CATEGORY):
            raise InvalidParameterError(f"unknown category {self.category!r}")

    @property
    def subtotal(self) -> float:
        return self.count * self.unit_energy


@dataclass
class EnergyLedger:
    """Itemized energy report with exact additivity by construction."""

    entries: list[EnergyEntry] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def category_totals(self) -> dict[str, float]:
        totals = {RNG_CATEGORY: 0.0, CROSSBAR_CATEGORY: 0.0}
        for e in self.entries:
            totals[e.category] += e.subtotal
        return totals

    @property
    def grand_total(self) -> float:
        return float(sum(e.subtotal for e in self.entries))

    def to_dict(self) -> dict:
        return {
            "entries": [
                {
                    "label": e.label,
                    "category": e.category,
                    "count": e.count,
                    "unit_energy_joules": e.unit_energy,
                    "subtotal_joules": e.subtotal,
                }
                for e in self.entries
            ],
            "category_totals_joules": self.category_totals,
            "grand_total_joules": self.grand_total,
            "metadata": dict(self.metadata),
        }

    def format_table(self) -> str:
        lines = [
            f"{'component':<38} {'count':>12} {'unit (J)':>12} {'subtotal (nJ)':>14}"
        ]
        lines.append("-" * 80)
        for e in self.entries:
            lines.append(
                f"{e.label:<38} {e.count:>12d} {e.unit_energy:>12.3e} "
                f"{e.subtotal * 1e9:>14.4f}"
            )
        lines.append("-" * 80)
        for cat, total in self.category_totals.items():
            lines.append(f"{cat:<38} {'':>12} {'':>12} {total * 1e9:>14.4f}")
        lines.append(f"{'grand total':<38} {'':>12} {'':>12} {self.grand_total * 1e9:>14.4f}")
        return "\n".join(lines)


def rng_energy(random_bits_used: int, adds: int, constants: EnergyConstants) -> float:
    """Energy of the random-number unit: device bits plus averaging adds."""
    if random_bits_used < 0 or adds < 0:
        raise InvalidArgumentError("counts must be >= 0")
    return (
        random_bits_used * constants.trng_bit_energy
        + adds * constants.accumulator_energy_per_add
    )


def crossbar_read_energy(
    g_pos_col: np.ndarray,
    g_neg_col: np.ndarray,
    input_voltages: np.ndarray,
    constants: EnergyConstants,
) -> float:
    """Energy of one column read: Joule heating plus its converters and reset.

    Joule term is sum_k V_k^2 (g_pos[k] + g_neg[k]) * read_time; each of the
    K rows costs one DAC conversion, the column output one ADC conversion,
    and the column neuron one reset.
    """
    g_pos_col = np.asarray(g_pos_col, dtype=float)
    g_neg_col = np.asarray(g_neg_col, dtype=float)
    v = np.asarray(input_voltages, dtype=float)
    if g_pos_col.shape != g_neg_col.shape or g_pos_col.shape != v.shape:
        raise InvalidArgumentError("column arrays and voltages must share a shape")
    joule = float(
        np.sum(v**2 * (g_pos_col + g_neg_col)) * constants.column_read_time
    )
    return (
        joule
        + v.size * constants.dac_energy_per_conversion
        + constants.adc_energy_per_conversion
        + constants.neuron_reset_energy
    )


def inference_energy_report(
    hw: HardwareNetwork,
    constants: EnergyConstants | None = None,
    n_samples: int = 1,
    drive_fraction: float = 1.0,
) -> EnergyLedger:
    """Walk the full stochastic-pass schedule and itemize its energy.

    Joule heating uses the programmed conductances with every row driven at
    ``drive_fraction`` of the supply voltage (a worst-case envelope; actual
    image-dependent drive is lower but contributes well under 1% of the
    total).  All counts scale linearly with ``n_samples``.
    """
    constants = constants if constants is not None else EnergyConstants()
    if n_samples < 1:
        raise InvalidArgumentError("n_samples must be >= 1")
    if not 0.0 <= drive_fraction <= 1.0:
        raise InvalidArgumentError("drive_fraction must lie in [0, 1]")

    cfg = hw.sampler_config
    dims = hw.dims
    cells_per_pass = sum(k * j for k, j in zip(dims[:-1], dims[1:]))
    columns_per_pass = sum(dims[1:])
    hidden_neurons = sum(dims[1:-1])

    z_samples = cells_per_pass * n_samples
    bits = z_samples * cfg.rows_averaged * cfg.bit_width
    adds = z_samples * (cfg.rows_averaged - 1)
    dac_conversions = 2 * cells_per_pass * n_samples  # mean and noise paths
    adc_conversions = 2 * columns_per_pass * n_samples
    multiplies = cells_per_pass * n_samples
    resets = hidden_neurons * n_samples

    entries = [
        EnergyEntry("stochastic device bits", RNG_CATEGORY, bits, constants.trng_bit_energy),
        EnergyEntry(
            "sample averaging adds", RNG_CATEGORY, adds, constants.accumulator_energy_per_add
        ),
        EnergyEntry(
            "input dac conversions",
            CROSSBAR_CATEGORY,
            dac_conversions,
            constants.dac_energy_per_conversion,
        ),
        EnergyEntry(
            "column adc conversions",
            CROSSBAR_CATEGORY,
            adc_conversions,
            constants.adc_energy_per_conversion,
        ),
        EnergyEntry(
            "activation-noise products",
            CROSSBAR_CATEGORY,
            multiplies,
            constants.multiplier_energy_per_op,
        ),
        EnergyEntry(
            "neuron resets", CROSSBAR_CATEGORY, resets, constants.neuron_reset_energy
        ),
    ]

    v_drive = drive_fraction * constants.crossbar_supply_voltage
    for li, layer in enumerate(hw.layers):
        for path, cm in (("mean", layer.mean_matrix), ("noise", layer.sigma_matrix)):
            n_rows, n_cols = cm.shape
            per_layer = float(
                v_drive**2 * np.sum(cm.g_pos + cm.g_neg) * constants.column_read_time
            )
            count = n_cols * n_samples
            unit = per_layer * n_samples / count if count else 0.0
            entries.append(
                EnergyEntry(
                    f"layer {li + 1} {path}-path column joule",
                    CROSSBAR_CATEGORY,
                    count,
                    unit,
                )
            )

    metadata = {
        "dims": dims,
        "n_samples": n_samples,
        "drive_fraction": drive_fraction,
        "rows_averaged": cfg.rows_averaged,
        "bit_width": cfg.bit_width,
        "adc_accounting": "one conversion per column read (not per layer output)",
        "joule_drive": "all rows at drive_fraction of supply during every read",
    }
    return EnergyLedger(entries=entries, metadata=metadata)
