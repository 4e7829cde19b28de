"""Physical constants and the dimensionless scalings shared by all modules.

Everything dynamical runs in scaled units: time in 1/Gamma2 (Gamma2 is the
ground-state coherence decay rate, half the atomic linewidth), rates and
Rabi frequencies in units of Gamma2, detuning Delta = delta/Gamma2.
Conversion to SI happens only in diagnostics and file output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PhysicalConstants:
    """Fixed atomic and optical constants of the rubidium D2 pump transition."""

    gamma2: float = math.pi * 6.066e6   # coherence decay rate (1/s)
    i_sat: float = 1.669                # saturation intensity (mW/cm^2)
    g_factor: float = 0.5               # ground-state Lande factor
    wavelength: float = 780.24e-9       # pump wavelength (m)
    larmor_coeff: float = 0.23          # scaled Larmor frequency per gauss


CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class ScaledUnits:
    """Dimensionless unit system derived from the constants."""

    time_unit: float              # seconds per scaled time unit (1/Gamma2)
    detuning: float               # Delta = delta/Gamma2
    rabi_sq_per_intensity: float  # |Omega'|^2 per unit of I/I_sat


def scaled_units(detuning: float, constants: PhysicalConstants = CONSTANTS) -> ScaledUnits:
    return ScaledUnits(
        time_unit=1.0 / constants.gamma2,
        detuning=detuning,
        rabi_sq_per_intensity=2.0,
    )


def larmor_freq(bx: float, constants: PhysicalConstants = CONSTANTS) -> float:
    """Scaled Larmor angular frequency Omega'_x for a transverse field in gauss.

    Odd and linear in the field; negative fields flip the precession sense.
    """
    if not math.isfinite(bx):
        raise ValueError(f"magnetic field must be finite, got {bx!r}")
    return constants.larmor_coeff * bx


def rabi_sq_from_intensity(intensity: float, constants: PhysicalConstants = CONSTANTS) -> float:
    """|Omega'|^2 of one circular component from its intensity in mW/cm^2."""
    if intensity < 0:
        raise ValueError(f"intensity must be non-negative, got {intensity!r}")
    return 2.0 * intensity / constants.i_sat


def intensity_from_rabi_sq(rabi_sq: float, constants: PhysicalConstants = CONSTANTS) -> float:
    return 0.5 * rabi_sq * constants.i_sat


def detuning_from_linewidths(delta_over_gamma: float) -> float:
    """Scaled detuning Delta from a detuning quoted in natural linewidths Gamma.

    Gamma2 is half of Gamma, so e.g. -10 Gamma maps to Delta = -20.
    """
    return 2.0 * delta_over_gamma


def seconds_from_scaled(t_scaled, constants: PhysicalConstants = CONSTANTS):
    return t_scaled / constants.gamma2


def scaled_from_seconds(t_seconds, constants: PhysicalConstants = CONSTANTS):
    return t_seconds * constants.gamma2


def hertz_from_scaled_cycles(freq_cycles, constants: PhysicalConstants = CONSTANTS):
    """Cycles per scaled time unit -> Hz."""
    return freq_cycles * constants.gamma2


def larmor_frequency_hz(bx: float, constants: PhysicalConstants = CONSTANTS) -> float:
    """Larmor frequency in Hz (cycles per second) for a field in gauss."""
    return larmor_freq(bx, constants) * constants.gamma2 / (2.0 * math.pi)
