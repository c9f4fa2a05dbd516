"""Physical constants and the single GHz <-> kelvin conversion point.

Schedule energies are stored as frequencies (E/h, in GHz).  Everything that
mixes an energy with a temperature goes through this module so the unit
convention lives in exactly one place.
"""
from __future__ import annotations

from dataclasses import dataclass

PLANCK_H = 6.62607015e-34  # J s (exact SI)
BOLTZMANN_K = 1.380649e-23  # J/K (exact SI)

# Temperature equivalent of a 1 GHz quantum: h * 1e9 / k_B.
GHZ_TO_KELVIN = PLANCK_H * 1.0e9 / BOLTZMANN_K


def energy_over_kt(energy_ghz: float, temperature_k: float) -> float:
    """Dimensionless E / k_B T for an energy given as a frequency in GHz."""
    if temperature_k <= 0:
        raise ValueError(f"temperature must be positive, got {temperature_k} K")
    return energy_ghz * GHZ_TO_KELVIN / temperature_k


def kelvin_from_ghz(energy_ghz: float) -> float:
    return energy_ghz * GHZ_TO_KELVIN


@dataclass(frozen=True)
class DevicePreset:
    """Operating constants of one annealer installation."""

    name: str
    temperature_k: float  # dilution refrigerator temperature
    b1_half_ghz: float    # B(1)/2, the Ising energy scale at the end of the anneal
    n0: int               # Monte Carlo sweeps per unit dimensionless annealing time


DEVICE_PRESETS = {
    "nasa": DevicePreset("nasa", 0.0121, 6.344, 1000),
    "burnaby": DevicePreset("burnaby", 0.0135, 5.930, 1500),
}

# Warmer setting used for the high-temperature simulation runs.
HOT_TEMPERATURE_K = 0.050


def equivalent_temperature_k(device: DevicePreset, schedule_b1_ghz: float) -> float:
    """Temperature giving a rescaled schedule the device's k_B T / (B(1)/2) ratio.

    Used to run the dimensionless linear schedule "at" a device temperature:
    T_equiv = T_device * (B_sched(1)/2) / (B_device(1)/2).
    """
    return device.temperature_k * (0.5 * schedule_b1_ghz) / device.b1_half_ghz
