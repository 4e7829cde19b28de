"""Simulation driver: pump, slab, mirror round trip, atomic stepping, probes.

One cycle per atomic step: the fixed pump enters the cloud, the transmitted
field makes the (instantaneous) round trip to the mirror through the slit
filter, and the atoms advance one RK4 step under the sum of the forward
field at the entrance and the reentrant field at the exit.  Retardation in
the feedback is neglected; the field adjusts adiabatically between steps.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from . import bloch
from .bloch import AtomicField, seed_noise, step_atoms
from .constants import CONSTANTS, larmor_freq, rabi_sq_from_intensity
from .errors import ConfigError, SimulationDiverged
from .optics import (
    FourierFilter,
    Grid,
    OpticalField,
    Susceptibility,
    medium_transmit,
    nominal_pattern_wavenumber,
    par_intensity,
    perp_intensity,
    resolve_filter,
    round_trip_kernel,
    super_gaussian_envelope,
    x_polarized_pump,
)

DEFAULT_CUT_CHANNELS = ("w", "v", "u", "i_perp", "i_sigma_plus")
RUNAWAY_FACTOR = 1e3


@dataclass(frozen=True)
class ProbeConfig:
    """Cadences (scaled time) and channels recorded during a run.

    Cadences left at None are derived from the Larmor period at config
    validation: the detector and cut cadences resolve the doubled-frequency
    modulation with >= 20 samples per period.
    """

    detector_every: float | None = None
    cuts_every: float | None = None
    snapshot_every: float | None = None
    cut_channels: tuple = DEFAULT_CUT_CHANNELS
    detector_aperture: float = 0.5  # fraction of the x extent the photodiode sees


@dataclass(frozen=True)
class SimConfig:
    od: float = 70.0
    delta: float = -20.0
    intensity: float = 5.0          # pump intensity, mW/cm^2
    bx: float = 0.5                 # transverse magnetic field, gauss
    bz: float = 0.0                 # longitudinal field, gauss (enters optics only)
    mirror_distance: float = -0.015  # meters; negative = virtual mirror inside cloud
    reflectivity: float = 1.0
    grid: Grid = dc_field(default_factory=Grid)
    filter: FourierFilter = dc_field(default_factory=FourierFilter)
    r_decay: float = 1.5e-4         # residual ground-state decay, scaled
    dt: float | None = None         # scaled step; None = auto
    duration: float = 2000.0        # scaled time
    noise_amplitude: float = 1e-3
    seed: int = 0
    probes: ProbeConfig = dc_field(default_factory=ProbeConfig)
    pump_envelope: str = "plane"    # plane | supergaussian
    envelope_waist_fraction: float = 0.7
    check_physicality: bool = False
    field_schedule: tuple = ()      # ((time, bx), ...) applied in order

    @property
    def omega_x(self) -> float:
        return larmor_freq(self.bx)

    @property
    def omega_z(self) -> float:
        return larmor_freq(self.bz)

    @property
    def pump_amplitude(self) -> float:
        """Scaled Rabi amplitude of each circular pump component."""
        return math.sqrt(0.5 * rabi_sq_from_intensity(self.intensity))

    @property
    def larmor_period(self) -> float:
        ox = abs(self.omega_x)
        return 2.0 * math.pi / ox if ox > 0 else math.inf

    def susceptibility(self) -> Susceptibility:
        return Susceptibility(od=self.od, delta=self.delta, omega_z=self.omega_z)

    def effective_dt(self) -> float:
        if self.dt is not None:
            return self.dt
        # fastest retained scales: Larmor period and the coherence decay at the
        # highest field the loop can build up (pump plus fully reflected return)
        boost = (1.0 + math.sqrt(self.reflectivity)) ** 2
        abs_sq = 2.0 * rabi_sq_from_intensity(self.intensity) * boost
        s_max = abs_sq / (1.0 + self.delta**2)
        gamma_c_max = self.r_decay + (5.0 / 6.0) * s_max
        scale = min(self.larmor_period, 1.0 / gamma_c_max)
        return scale / 20.0

    def validate(self) -> list:
        """Collect every violation; empty list means the config is usable."""
        problems = []
        if self.intensity < 0:
            problems.append(f"intensity: must be non-negative, got {self.intensity}")
        if not 0.0 <= self.reflectivity <= 1.0:
            problems.append(f"reflectivity: must lie in [0, 1], got {self.reflectivity}")
        if self.od < 0:
            problems.append(f"od: must be non-negative, got {self.od}")
        if self.r_decay <= 0:
            problems.append(f"r_decay: must be positive, got {self.r_decay}")
        if self.duration < 0:
            problems.append(f"duration: must be non-negative, got {self.duration}")
        if self.noise_amplitude < 0:
            problems.append(f"noise.amplitude: must be non-negative, got {self.noise_amplitude}")
        if self.grid.nx < 1 or self.grid.ny < 1 or self.grid.pixel <= 0:
            problems.append(f"grid: invalid shape or pixel size {self.grid}")
        if self.filter.orientation not in ("x", "y", "none"):
            problems.append(f"filter.orientation: must be x, y or none, got {self.filter.orientation!r}")
        if self.filter.half_width < 0:
            problems.append(f"filter.half_width: must be non-negative, got {self.filter.half_width}")
        if self.pump_envelope not in ("plane", "supergaussian"):
            problems.append(f"pump_envelope: must be plane or supergaussian, got {self.pump_envelope!r}")
        if self.dt is not None and self.dt <= 0:
            problems.append(f"dt: must be positive, got {self.dt}")
        q_nom = nominal_pattern_wavenumber(self.mirror_distance)
        if q_nom is not None and self.grid.pixel > 0 and q_nom >= math.pi / self.grid.pixel:
            problems.append(
                "grid.pixel: too coarse to resolve the diffractive pattern scale "
                f"(nominal q = {q_nom:.3e} rad/m >= Nyquist {math.pi / self.grid.pixel:.3e})")
        if self.delta == 0:
            warnings.warn("delta = 0 is outside the validity of the adiabatic "
                          "elimination; results are formal only", stacklevel=2)
        if self.omega_x != 0 and self.duration < 20 * self.larmor_period:
            warnings.warn("duration shorter than 20 Larmor periods; spectral "
                          "diagnostics will be coarse", stacklevel=2)
        return problems

    def validated(self) -> "SimConfig":
        problems = self.validate()
        if problems:
            raise ConfigError("; ".join(problems))
        return self


@dataclass
class RunState:
    """Complete integration state; copy() checkpoints it bit-exactly."""

    atoms: AtomicField
    forward: OpticalField          # pump at the cloud entrance, held fixed
    time: float
    step_index: int
    bx: float
    rng: np.random.Generator
    exit_field: OpticalField | None = None
    reentrant: OpticalField | None = None

    def copy(self) -> "RunState":
        rng = np.random.default_rng()
        rng.bit_generator.state = self.rng.bit_generator.state
        return RunState(
            atoms=self.atoms.copy(),
            forward=self.forward.copy(),
            time=self.time,
            step_index=self.step_index,
            bx=self.bx,
            rng=rng,
            exit_field=None if self.exit_field is None else self.exit_field.copy(),
            reentrant=None if self.reentrant is None else self.reentrant.copy(),
        )


@dataclass
class RunRecord:
    """In-memory result of a run: scalar probes, 1D cuts, field snapshots."""

    config: dict
    version: str
    omega_x: float
    pump_amplitude: float
    detector_times: np.ndarray = None
    detector_perp: np.ndarray = None        # aperture-weighted photodiode signal
    detector_perp_full: np.ndarray = None   # full-grid sum
    detector_par: np.ndarray = None
    cut_times: np.ndarray = None
    cuts: dict = dc_field(default_factory=dict)   # channel -> (nt, nx)
    snapshot_times: np.ndarray = None
    atom_snapshots: np.ndarray = None       # (ns, 8, ny, nx)
    exit_plus: np.ndarray = None            # (ns, ny, nx) complex
    exit_minus: np.ndarray = None
    flip_times: tuple = ()
    aborted: bool = False
    abort_message: str = ""

    @property
    def pixel_size(self) -> float:
        return self.config["grid"]["pixel"]

    @property
    def grid_shape(self):
        return (self.config["grid"]["ny"], self.config["grid"]["nx"])

    @property
    def time_unit_s(self) -> float:
        return 1.0 / CONSTANTS.gamma2


def initial_state(config: SimConfig) -> RunState:
    grid = config.grid
    envelope = None
    if config.pump_envelope == "supergaussian":
        envelope = super_gaussian_envelope(grid, config.envelope_waist_fraction)
    pump = x_polarized_pump(config.pump_amplitude, grid.shape, envelope)
    atoms = AtomicField.zeros(grid.shape)
    atoms = seed_noise(atoms, config.noise_amplitude, config.seed)
    return RunState(atoms=atoms, forward=pump, time=0.0, step_index=0,
                    bx=config.bx, rng=np.random.default_rng(config.seed))


class LoopWorkspace:
    """Precomputed spectral kernel and susceptibility for the step loop."""

    def __init__(self, config: SimConfig):
        self.chi = config.susceptibility()
        filt = resolve_filter(config.filter, config.mirror_distance)
        self.kernel = round_trip_kernel(config.grid, config.mirror_distance,
                                        CONSTANTS.wavelength, filt,
                                        config.reflectivity)
        self.dt = config.effective_dt()
        self.runaway = RUNAWAY_FACTOR * max(config.pump_amplitude, 1e-30)


def loop_step(state: RunState, config: SimConfig,
              workspace: LoopWorkspace | None = None) -> RunState:
    """One feedback cycle: transmit, mirror round trip, step the atoms.

    The interacting drive is the forward pump at the entrance together with
    the reentrant beam at the exit; being counter-propagating, their pump
    rates add incoherently (the wavelength-scale interference grating is
    washed out by atomic motion and neglected).
    """
    ws = workspace if workspace is not None else LoopWorkspace(config)
    exit_field = medium_transmit(state.forward, state.atoms, ws.chi)
    re_plus = np.fft.ifft2(np.fft.fft2(exit_field.e_plus) * ws.kernel)
    re_minus = np.fft.ifft2(np.fft.fft2(exit_field.e_minus) * ws.kernel)
    reentrant = OpticalField(re_plus, re_minus, plane="reentrant")
    peak = max(np.abs(re_plus).max(), np.abs(re_minus).max())
    if not np.isfinite(peak) or peak > ws.runaway:
        raise SimulationDiverged(
            f"runaway field: |e| reached {peak:.3e} (> {ws.runaway:.3e})",
            step_index=state.step_index)
    atoms = step_atoms(state.atoms, (state.forward, reentrant), ws.dt,
                       delta=config.delta, omega_x=larmor_freq(state.bx),
                       r=config.r_decay, step_index=state.step_index)
    return RunState(atoms=atoms, forward=state.forward, time=state.time + ws.dt,
                    step_index=state.step_index + 1, bx=state.bx, rng=state.rng,
                    exit_field=exit_field, reentrant=reentrant)


def flip_field(state: RunState, new_bx: float) -> RunState:
    """Replace the transverse field instantaneously; nothing else changes."""
    return replace(state, bx=new_bx)


def _cadence_steps(every: float | None, dt: float, fallback_steps: int) -> int:
    if every is None:
        return fallback_steps
    return max(1, round(every / dt))


def _probe_cadences(config: SimConfig, dt: float):
    """Steps between detector samples, cut samples and snapshots."""
    ox = abs(config.omega_x)
    if ox > 0:
        mod_period = math.pi / ox  # doubled-frequency modulation period
        det_steps = max(1, round(mod_period / 32.0 / dt))
        cut_steps = max(1, round(mod_period / 24.0 / dt))
        snap_steps = max(1, round(10.0 * config.larmor_period / dt))
    else:
        n_steps = max(1, round(config.duration / dt))
        det_steps = max(1, n_steps // 2000)
        cut_steps = max(1, n_steps // 1000)
        snap_steps = max(1, n_steps // 20)
    p = config.probes
    return (_cadence_steps(p.detector_every, dt, det_steps),
            _cadence_steps(p.cuts_every, dt, cut_steps),
            _cadence_steps(p.snapshot_every, dt, snap_steps))


def _config_echo(config: SimConfig) -> dict:
    g, f, p = config.grid, config.filter, config.probes
    return {
        "od": config.od, "delta": config.delta, "intensity": config.intensity,
        "bx": config.bx, "bz": config.bz,
        "mirror_distance": config.mirror_distance,
        "reflectivity": config.reflectivity,
        "grid": {"nx": g.nx, "ny": g.ny, "pixel": g.pixel},
        "filter": {"orientation": f.orientation, "half_width": f.half_width,
                   "center": f.center, "center_half_width": f.center_half_width},
        "r_decay": config.r_decay, "dt": config.effective_dt(),
        "duration": config.duration,
        "noise": {"amplitude": config.noise_amplitude, "seed": config.seed},
        "probes": {"detector_every": p.detector_every, "cuts_every": p.cuts_every,
                   "snapshot_every": p.snapshot_every,
                   "cut_channels": list(p.cut_channels),
                   "detector_aperture": p.detector_aperture},
        "pump_envelope": config.pump_envelope,
        "envelope_waist_fraction": config.envelope_waist_fraction,
        "check_physicality": config.check_physicality,
        "field_schedule": [list(item) for item in config.field_schedule],
    }


def _cut_value(channel: str, state: RunState):
    """y-averaged 1D cut of one observable from the current state."""
    if channel in bloch.VAR_NAMES:
        idx = bloch.VAR_NAMES.index(channel)
        return state.atoms.data[idx].mean(axis=0)
    exit_field = state.exit_field
    if channel == "i_perp":
        return perp_intensity(exit_field).mean(axis=0)
    if channel == "i_par":
        return par_intensity(exit_field).mean(axis=0)
    if channel == "i_sigma_plus":
        return (np.abs(exit_field.e_plus) ** 2).mean(axis=0)
    if channel == "i_sigma_minus":
        return (np.abs(exit_field.e_minus) ** 2).mean(axis=0)
    if channel == "y2_plus_z2":
        return (state.atoms.y2 + state.atoms.z2).mean(axis=0)
    if channel == "y1_minus_z1":
        return (state.atoms.y1 - state.atoms.z1).mean(axis=0)
    raise ConfigError(f"unknown cut channel {channel!r}")


def _aperture_slice(nx: int, fraction: float):
    width = max(1, round(nx * fraction))
    start = (nx - width) // 2
    return slice(start, start + width)


def run(config: SimConfig) -> RunRecord:
    """Integrate a full run and collect the scheduled probes.

    On divergence the partial record is attached to the raised exception so
    callers can still persist what was measured.
    """
    from . import __version__

    config = config.validated()
    dt = config.effective_dt()
    n_steps = round(config.duration / dt)
    det_steps, cut_steps, snap_steps = _probe_cadences(config, dt)
    ws = LoopWorkspace(config)
    state = initial_state(config)
    # the probes read state.exit_field, so prime it with the initial optics
    state = replace(state, exit_field=medium_transmit(state.forward, state.atoms, ws.chi))

    record = RunRecord(config=_config_echo(config), version=__version__,
                       omega_x=config.omega_x,
                       pump_amplitude=config.pump_amplitude)
    det_t, det_perp, det_perp_full, det_par = [], [], [], []
    cut_t = []
    cut_data = {ch: [] for ch in config.probes.cut_channels}
    snap_t, snap_atoms, snap_ep, snap_em = [], [], [], []
    sl = _aperture_slice(config.grid.nx, config.probes.detector_aperture)
    schedule = sorted(config.field_schedule)
    flips_done = []

    def probe(step):
        if step % det_steps == 0:
            i_perp = perp_intensity(state.exit_field)
            i_par = par_intensity(state.exit_field)
            det_t.append(state.time)
            det_perp.append(float(i_perp[:, sl].sum()))
            det_perp_full.append(float(i_perp.sum()))
            det_par.append(float(i_par[:, sl].sum()))
        if step % cut_steps == 0:
            cut_t.append(state.time)
            for ch in cut_data:
                cut_data[ch].append(_cut_value(ch, state))
        if step % snap_steps == 0 or step == n_steps:
            snap_t.append(state.time)
            snap_atoms.append(state.atoms.data.copy())
            snap_ep.append(state.exit_field.e_plus.copy())
            snap_em.append(state.exit_field.e_minus.copy())
        if config.check_physicality and step % cut_steps == 0:
            bloch.check_physical(state.atoms)

    def finalize():
        record.detector_times = np.array(det_t)
        record.detector_perp = np.array(det_perp)
        record.detector_perp_full = np.array(det_perp_full)
        record.detector_par = np.array(det_par)
        record.cut_times = np.array(cut_t)
        record.cuts = {ch: np.array(rows) for ch, rows in cut_data.items()}
        record.snapshot_times = np.array(snap_t)
        record.atom_snapshots = np.array(snap_atoms)
        record.exit_plus = np.array(snap_ep)
        record.exit_minus = np.array(snap_em)
        record.flip_times = tuple(flips_done)

    try:
        probe(0)
        for step in range(1, n_steps + 1):
            while schedule and state.time >= schedule[0][0]:
                _, new_bx = schedule.pop(0)
                state = flip_field(state, new_bx)
                flips_done.append((state.time, new_bx))
            state = loop_step(state, config, ws)
            probe(step)
    except SimulationDiverged as err:
        record.aborted = True
        record.abort_message = str(err)
        finalize()
        err.record = record
        raise
    finalize()
    return record
