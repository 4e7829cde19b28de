"""Sliding multipole spin-density waves in a cold-atom cloud with mirror feedback."""

__version__ = "0.1.0"

from .bloch import AtomicField, bloch_rhs, combine_rates, decay_rates, pump_rates, seed_noise, step_atoms
from .constants import CONSTANTS, PhysicalConstants, larmor_freq, rabi_sq_from_intensity
from .loop import FourierFilter, Grid, ProbeConfig, RunRecord, RunState, SimConfig, flip_field, loop_step, run
from .optics import OpticalField, Susceptibility, medium_transmit, mirror_reflect, propagate_free, to_linear_basis

__all__ = [
    "AtomicField", "CONSTANTS", "FourierFilter", "Grid", "OpticalField",
    "PhysicalConstants", "ProbeConfig", "RunRecord", "RunState", "SimConfig",
    "Susceptibility", "bloch_rhs", "combine_rates", "decay_rates", "flip_field", "larmor_freq",
    "loop_step", "medium_transmit", "mirror_reflect", "propagate_free",
    "pump_rates", "rabi_sq_from_intensity", "run", "seed_noise", "step_atoms",
    "to_linear_basis",
]
