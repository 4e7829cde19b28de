"""Growth-rate scan: linear stability of the homogeneous state per wavenumber.

For each probe wavenumber the relaxed homogeneous state is perturbed with a
tiny cosine on the unstable variables (w, v) and integrated with the full
loop.  About a homogeneous background the linearized dynamics decouples
Fourier bins exactly, so the deviation is re-projected onto the seeded bin
pair and renormalized periodically: a power iteration on the exact
linearization that stays clean for arbitrarily long fits (nonlinear leakage
and rounding-seeded faster modes are projected away).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .bloch import AtomicField, V, W
from .constants import CONSTANTS
from .loop import LoopWorkspace, ProbeConfig, SimConfig, initial_state, loop_step, run
from .optics import FourierFilter, Grid, resolve_filter


@dataclass
class ScanResult:
    wavenumbers: np.ndarray      # rad/m
    growth_rates: np.ndarray     # 1/Gamma2 units
    frequencies: np.ndarray      # mode angular frequency, scaled
    q_c: float | None            # sub-bin interpolated maximizer (None below threshold)
    gamma_max: float
    below_threshold: bool

    @property
    def critical_wavelength(self) -> float | None:
        return None if self.q_c is None else 2.0 * np.pi / self.q_c

    @property
    def perpendicular_period(self) -> float | None:
        """Spatial period of the orthogonal-polarization channel (half the
        fundamental: its intensity is quadratic in the perturbation)."""
        return None if self.q_c is None else np.pi / self.q_c

    def as_rows(self):
        for q, g, f in zip(self.wavenumbers, self.growth_rates, self.frequencies):
            yield q, g, f


def relax_homogeneous(config: SimConfig, duration: float = 30000.0) -> np.ndarray:
    """Converged homogeneous atomic state (8,) under the full feedback loop.

    Solved on a 1x1 grid: a homogeneous state stays homogeneous, the mirror
    round trip reduces to the DC phasor, and the cost is negligible.
    """
    tiny = replace(
        config,
        grid=Grid(nx=1, ny=1, pixel=config.grid.pixel),
        filter=FourierFilter("none"),
        noise_amplitude=0.0,
        duration=duration,
        dt=3.0 * config.effective_dt(),  # no spatial scales to resolve here
        probes=ProbeConfig(detector_every=duration, cuts_every=duration,
                           snapshot_every=duration, cut_channels=("w",)),
        field_schedule=(),
    )
    record = run(tiny)
    return record.atom_snapshots[-1][:, 0, 0]


def _grid_bins(config: SimConfig, q_min: float | None, q_max: float | None):
    """FFT bins of the scan grid within [q_min, q_max]."""
    nx = config.grid.nx
    dq = 2.0 * np.pi / (nx * config.grid.pixel)
    filt = resolve_filter(config.filter, config.mirror_distance)
    if q_max is None:
        if filt is not None and filt.center is not None:
            half = filt.center_half_width if filt.center_half_width is not None \
                else 0.5 * abs(filt.center)
            q_max = abs(filt.center) + half
        else:
            # one full round-trip phase cycle: the first diffractive band
            k = 2.0 * np.pi / CONSTANTS.wavelength
            q_max = float(np.sqrt(2.0 * np.pi * k / abs(config.mirror_distance)))
    if q_min is None:
        q_min = 3.0 * dq
    j_min = max(1, int(np.ceil(q_min / dq)))
    j_max = min(nx // 2 - 1, int(np.floor(q_max / dq)))
    return np.arange(j_min, j_max + 1), dq


def critical_wavenumber_scan(config: SimConfig, q_min: float | None = None,
                             q_max: float | None = None, bin_step: int = 1,
                             duration: float = 500.0, seed_amplitude: float = 1e-8,
                             renorm_steps: int = 10) -> ScanResult:
    """Exponential growth rate of each transverse wavenumber bin.

    The default range spans the first diffractive band (up to the filter
    annulus when one is configured).  Reports the interpolated maximizer as
    q_c, or below_threshold when no bin grows.
    """
    config = config.validated()
    base = relax_homogeneous(config)
    bins, dq = _grid_bins(config, q_min, q_max)
    if bin_step > 1:
        bins = bins[::bin_step]

    scan_grid = Grid(nx=config.grid.nx, ny=1, pixel=config.grid.pixel)
    scan_config = replace(config, grid=scan_grid, noise_amplitude=0.0, duration=0.0,
                          field_schedule=())
    ws = LoopWorkspace(scan_config)
    nx = scan_grid.nx
    x = np.arange(nx) * scan_grid.pixel
    base_grid = np.repeat(base[:, None, None], nx, axis=2)

    growth = np.empty(len(bins))
    freqs = np.empty(len(bins))
    n_steps = max(renorm_steps, int(round(duration / ws.dt)))
    for i, j in enumerate(bins):
        q = j * dq
        atoms = AtomicField(base_grid.copy())
        seed = seed_amplitude * np.cos(q * x)
        atoms.data[W] += seed
        atoms.data[V] += seed
        state = initial_state(scan_config)
        state.atoms = atoms
        log_amp, phases, times = [], [], []
        accum = 0.0
        for step in range(1, n_steps + 1):
            state = loop_step(state, scan_config, ws)
            if step % renorm_steps == 0:
                dev = state.atoms.data - base_grid
                spec = np.fft.fft(dev, axis=2)
                keep = np.zeros(nx, dtype=bool)
                keep[j] = keep[-j] = True
                spec[:, :, ~keep] = 0.0
                amp = float(np.sqrt((np.abs(spec[:, 0, j] / nx) ** 2).sum()))
                phases.append(float(np.angle(spec[W, 0, j])))
                log_amp.append(accum + np.log(amp))
                times.append(state.time)
                dev = np.fft.ifft(spec, axis=2).real
                accum += np.log(amp / seed_amplitude)
                state.atoms = AtomicField(base_grid + dev * (seed_amplitude / amp))
        times = np.array(times)
        lo = len(times) // 3
        growth[i] = np.polyfit(times[lo:], np.array(log_amp)[lo:], 1)[0]
        freqs[i] = abs(np.polyfit(times[lo:], np.unwrap(np.array(phases))[lo:], 1)[0])

    qs = bins * dq
    i_best = int(np.argmax(growth))
    gamma_max = float(growth[i_best])
    if gamma_max <= 0.0:
        return ScanResult(qs, growth, freqs, None, gamma_max, True)
    q_c = float(qs[i_best])
    if 0 < i_best < len(bins) - 1 and bin_step == 1:
        gm, g0, gp = growth[i_best - 1], growth[i_best], growth[i_best + 1]
        denom = gm - 2.0 * g0 + gp
        if denom < 0:
            q_c = float(qs[i_best] + 0.5 * (gm - gp) / denom * dq)
    return ScanResult(qs, growth, freqs, q_c, gamma_max, False)
