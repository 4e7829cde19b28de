"""Observable extraction: multipole fields, spectra, drift, chirality, contrast.

All functions are pure views over immutable run records; nothing here feeds
back into the dynamics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bloch import AtomicField
from .constants import CONSTANTS, larmor_frequency_hz
from .errors import AnalysisError, InsufficientRecordError, NoPeakError, UndersampledError
from .loop import RunRecord

_SQRT2 = np.sqrt(2.0)


# ---------------------------------------------------------------------------
# multipole decomposition

@dataclass
class MultipoleField:
    """Dipole vector and the five quadrupole combinations per pixel.

    quad rows, in order: m_x m_y + m_y m_x, m_x m_z + m_z m_x,
    m_y m_z + m_z m_y, m_x^2 - m_y^2, 3 m_z^2 - m^2.
    """

    m: np.ndarray     # (3, ny, nx): m_x, m_y, m_z
    quad: np.ndarray  # (5, ny, nx)


def to_multipoles(atoms: AtomicField) -> MultipoleField:
    """Exact linear map from the eight atomic variables to the multipoles."""
    d = atoms.data
    u, v, w, x, y1, z1, y2, z2 = d
    m = np.stack([-(y1 + z1) / _SQRT2, (y2 + z2) / _SQRT2, -w])
    quad = np.stack([-v, -(y1 - z1) / _SQRT2, (y2 - z2) / _SQRT2, u, x])
    return MultipoleField(m=m, quad=quad)


def from_multipoles(mp: MultipoleField) -> AtomicField:
    """Inverse of to_multipoles (the map is a bijection on these components)."""
    m_x, m_y, m_z = mp.m
    q_xy, q_xz, q_yz, q_aniso, q_zz = mp.quad
    w = -m_z
    u = q_aniso
    v = -q_xy
    x = q_zz
    y1_plus_z1 = -_SQRT2 * m_x
    y1_minus_z1 = -_SQRT2 * q_xz
    y2_plus_z2 = _SQRT2 * m_y
    y2_minus_z2 = _SQRT2 * q_yz
    y1 = 0.5 * (y1_plus_z1 + y1_minus_z1)
    z1 = 0.5 * (y1_plus_z1 - y1_minus_z1)
    y2 = 0.5 * (y2_plus_z2 + y2_minus_z2)
    z2 = 0.5 * (y2_plus_z2 - y2_minus_z2)
    return AtomicField(np.stack([u, v, w, x, y1, z1, y2, z2]))


# ---------------------------------------------------------------------------
# detector time series and temporal spectra

def detector_series(record: RunRecord, aperture: bool = True):
    """(times, integrated orthogonal-polarization power) from a record.

    aperture=True returns the finite-photodiode signal (a centered window of
    the transverse plane); False the full-grid sum.  A rigid traveling wave
    keeps the full-grid sum constant (spectral power is conserved mode by
    mode), so temporal modulation is only visible through a finite aperture,
    like the physical photodiode behind the finite beam.
    """
    times = record.detector_times
    if len(times) > 2:
        dts = np.diff(times)
        if not np.allclose(dts, dts[0], rtol=1e-6, atol=1e-12):
            raise AnalysisError("detector samples are not uniformly spaced")
    series = record.detector_perp if aperture else record.detector_perp_full
    return times, series


@dataclass
class SpectrumPeak:
    freq_scaled: float   # cycles per scaled time unit
    freq_hz: float
    amplitude: float
    bin_width_scaled: float

    @property
    def bin_width_hz(self) -> float:
        return self.bin_width_scaled * CONSTANTS.gamma2


def spectrum_peak(times, series, skip_fraction: float = 0.3,
                  min_snr: float = 5.0) -> SpectrumPeak:
    """Dominant non-DC peak of a uniformly sampled series.

    Hann window, mean subtraction, quadratic sub-bin interpolation on the
    log amplitude.  Raises NoPeakError when nothing clears min_snr times the
    median spectral floor.
    """
    times = np.asarray(times, dtype=float)
    series = np.asarray(series, dtype=float)
    n0 = int(len(series) * skip_fraction)
    s = series[n0:]
    t = times[n0:]
    if len(s) < 16:
        raise AnalysisError("series too short for spectral analysis")
    cadence = t[1] - t[0]
    s = s - s.mean()
    amp = np.abs(np.fft.rfft(s * np.hanning(len(s))))
    if len(amp) < 4:
        raise AnalysisError("series too short for spectral analysis")
    k = int(np.argmax(amp[1:]) + 1)
    floor = float(np.median(amp[1:]))
    if floor <= 0 or amp[k] < min_snr * floor:
        raise NoPeakError(
            f"no AC signal: peak/floor = {amp[k] / floor if floor else np.inf:.2f} "
            f"< {min_snr}")
    delta = 0.0
    if 1 <= k - 1 and k + 1 < len(amp) and amp[k - 1] > 0 and amp[k + 1] > 0:
        lm, l0, lp = np.log(amp[k - 1]), np.log(amp[k]), np.log(amp[k + 1])
        denom = lm - 2.0 * l0 + lp
        if denom < 0:
            delta = 0.5 * (lm - lp) / denom
    bin_width = 1.0 / (len(s) * cadence)
    freq = (k + delta) * bin_width
    return SpectrumPeak(freq_scaled=freq, freq_hz=freq * CONSTANTS.gamma2,
                        amplitude=float(amp[k]), bin_width_scaled=bin_width)


# ---------------------------------------------------------------------------
# spatial structure: dominant mode, chirality, multipole sequence

def dominant_spatial_bin(cut: np.ndarray, skip_fraction: float = 0.5) -> int:
    """Strongest non-DC spatial bin of a (nt, nx) cut, by time-averaged power."""
    rows = cut[int(len(cut) * skip_fraction):]
    rows = rows - rows.mean(axis=1, keepdims=True)
    power = (np.abs(np.fft.rfft(rows, axis=1)) ** 2).mean(axis=0)
    return int(np.argmax(power[1:]) + 1)


def _snapshot_cut(record: RunRecord, index: int):
    """y-averaged (8, nx) atomic cut from snapshot `index`."""
    return record.atom_snapshots[index].mean(axis=1)


def _mode_phase(cut_1d: np.ndarray, j: int) -> float:
    return float(np.angle(np.fft.fft(cut_1d - cut_1d.mean())[j]))


def _fundamental_bin(snap) -> int:
    """Fundamental spatial bin of a snapshot cut, anchored on the orientation.

    w is modulated at the fundamental period in every regime; v can grow a
    dominant harmonic deep in saturation, which would double the apparent
    ladder steps.
    """
    w = snap[2]
    return int(np.argmax(np.abs(np.fft.rfft(w - w.mean()))[1:]) + 1)


def multipole_phase_steps(record: RunRecord, snapshot_index: int = -1,
                          j: int | None = None):
    """Relative spatial phases along the ladder v, y2+z2, w, y1-z1 at the
    fundamental mode (degrees, each in (-180, 180]).

    A drifting multipole wave steps by -90 deg times (drift sign) times
    (field sign) around the ladder; the total winding is +-360 for the
    screw state.
    """
    snap = _snapshot_cut(record, snapshot_index)
    u, v, w, x, y1, z1, y2, z2 = snap
    channels = [("v", v), ("y2+z2", y2 + z2), ("w", w), ("y1-z1", y1 - z1)]
    if j is None:
        j = _fundamental_bin(snap)
    phases = {name: _mode_phase(arr, j) for name, arr in channels}
    names = [name for name, _ in channels]
    steps = []
    for a, b in zip(names, names[1:] + names[:1]):
        d = phases[b] - phases[a]
        steps.append(np.degrees((d + np.pi) % (2.0 * np.pi) - np.pi))
    return names, steps, j


def chirality_sign(record: RunRecord, snapshot_index: int = -1,
                   j: int | None = None) -> int:
    """Handedness of the spatial screw: +1 for a right-handed screw along +x.

    Read from the relative spatial phase of the (y2+z2) and v modes at the
    fundamental; it is the symmetry-broken invariant preserved when the
    magnetic field flips.
    """
    snap = _snapshot_cut(record, snapshot_index)
    v = snap[1]
    s = snap[6] + snap[7]
    if j is None:
        j = _fundamental_bin(snap)
    dphi = _mode_phase(s, j) - _mode_phase(v, j)
    return 1 if np.sin(dphi) > 0 else -1


# ---------------------------------------------------------------------------
# drift extraction

@dataclass
class DriftReport:
    mod_freq_hz: float        # detected AC frequency of the orthogonal channel
    larmor_ratio: float       # mod_freq / (2 * Larmor frequency)
    drift_velocity_ms: float  # signed, meters per second
    direction: int            # sign of the velocity along +x
    chirality: int            # +1 right-handed screw
    stripe_period_m: float    # wavelength of the tracked channel
    fundamental_freq_hz: float  # temporal frequency of the tracked atomic mode

    def consistency_error(self) -> float:
        """Relative mismatch of |v| against frequency times wavelength."""
        expected = self.fundamental_freq_hz * self.stripe_period_m
        if expected == 0:
            return np.inf
        return abs(abs(self.drift_velocity_ms) - expected) / expected


def drift_velocity(record: RunRecord, channel: str = "w",
                   skip_fraction: float = 0.5) -> DriftReport:
    """Drift of the dominant spatial mode of `channel` via its phase slope.

    The complex mode amplitude of a wave drifting with speed v rotates at
    q*v; a least-squares fit of the unwrapped phase gives the velocity, the
    sign gives the direction.  Raises UndersampledError when the phase jumps
    by more than pi between samples.
    """
    if channel not in record.cuts:
        raise AnalysisError(f"channel {channel!r} not recorded in this run")
    cut = record.cuts[channel]
    times = record.cut_times
    n0 = int(len(times) * skip_fraction)
    rows, t = cut[n0:], times[n0:]
    j = dominant_spatial_bin(cut, skip_fraction)
    nx = cut.shape[1]
    pixel = record.pixel_size
    q = 2.0 * np.pi * j / (nx * pixel)

    modes = np.fft.fft(rows - rows.mean(axis=1, keepdims=True), axis=1)[:, j]
    raw = np.angle(modes)
    jumps = np.abs((np.diff(raw) + np.pi) % (2.0 * np.pi) - np.pi)
    if np.any(jumps > 0.95 * np.pi):
        raise UndersampledError(
            "phase advances by more than pi between cut samples; rerun with a "
            "denser cut cadence")
    phi = np.unwrap(raw)
    slope = np.polyfit(t, phi, 1)[0]          # rad per scaled time
    velocity = -slope / q * CONSTANTS.gamma2  # m/s

    fundamental_hz = abs(slope) / (2.0 * np.pi) * CONSTANTS.gamma2
    try:
        det = spectrum_peak(*detector_series(record), skip_fraction=skip_fraction)
        mod_freq_hz = det.freq_hz
    except (NoPeakError, AnalysisError):
        mod_freq_hz = float("nan")
    f_larmor = larmor_frequency_hz(abs(record.config["bx"]))
    ratio = mod_freq_hz / (2.0 * f_larmor) if f_larmor > 0 else float("nan")
    return DriftReport(
        mod_freq_hz=mod_freq_hz,
        larmor_ratio=ratio,
        drift_velocity_ms=float(velocity),
        direction=int(np.sign(velocity)) if velocity != 0 else 0,
        chirality=chirality_sign(record),
        stripe_period_m=2.0 * np.pi / q,
        fundamental_freq_hz=fundamental_hz,
    )


# ---------------------------------------------------------------------------
# camera emulation: contrast against integration time

@dataclass
class ContrastCurve:
    tau_values: np.ndarray  # seconds
    contrast: np.ndarray    # Fourier-peak amplitude, arbitrary units
    stripe_bin: int


def _interp_row(cut, times, t):
    """Piecewise-linear sample of a (nt, nx) cut at time t."""
    i = int(np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(times) - 2))
    frac = (t - times[i]) / (times[i + 1] - times[i])
    frac = min(max(frac, 0.0), 1.0)
    return cut[i] + frac * (cut[i + 1] - cut[i])


def _integrate_window(cut, times, t0, t1):
    """Mean of the linear interpolant of the cut over exactly [t0, t1].

    Exact window endpoints avoid the cadence-quantization bias that a
    samples-only trapezoid shows for windows of a few samples.
    """
    if t1 <= t0:
        return _interp_row(cut, times, t0)
    v0 = _interp_row(cut, times, t0)
    v1 = _interp_row(cut, times, t1)
    i0 = np.searchsorted(times, t0, side="right")
    i1 = np.searchsorted(times, t1, side="left")
    grid_t = np.concatenate(([t0], times[i0:i1], [t1]))
    grid_v = np.vstack([v0[None, :], cut[i0:i1], v1[None, :]])
    return np.trapezoid(grid_v, grid_t, axis=0) / (t1 - t0)


def contrast_vs_integration(record: RunRecord, taus, n_images: int = 40,
                            seed: int = 0, channel: str = "i_perp",
                            skip_fraction: float = 0.3,
                            min_span_factor: float = 40.0) -> ContrastCurve:
    """Stripe contrast of time-integrated images versus integration time.

    For each integration time the channel cut is integrated over n_images
    windows at random start times, each image is Fourier transformed, and
    the transform magnitudes at the stripe wavenumber are averaged.  For a
    rigidly drifting sinusoid this reproduces the |sin(pi f tau)/(pi f tau)|
    envelope with zeros where the wave slides by full periods.
    """
    if channel not in record.cuts:
        raise AnalysisError(f"channel {channel!r} not recorded in this run")
    taus = np.asarray(list(taus), dtype=float)
    cut = record.cuts[channel]
    times = record.cut_times
    unit = record.time_unit_s
    t0 = times[0] + (times[-1] - times[0]) * skip_fraction
    span = (times[-1] - t0) * unit
    max_tau = float(taus.max())
    if span < max_tau * max(1.0, min_span_factor / n_images) or span < 2 * max_tau:
        raise InsufficientRecordError(
            f"record spans {span:.3e} s after transient, too short for "
            f"tau up to {max_tau:.3e} s")
    j = dominant_spatial_bin(cut, skip_fraction)
    rng = np.random.default_rng(seed)
    usable = times[(times >= t0) & (times <= times[-1] - max_tau / unit)]
    if len(usable) < 2:
        raise InsufficientRecordError("no usable start times after the transient")

    contrast = np.empty(len(taus))
    nx = cut.shape[1]
    for i, tau in enumerate(taus):
        tau_scaled = tau / unit
        starts = rng.uniform(usable[0], usable[-1], size=n_images)
        amps = np.empty(n_images)
        for m, ts in enumerate(starts):
            image = _integrate_window(cut, times, ts, ts + tau_scaled)
            amps[m] = np.abs(np.fft.rfft(image - image.mean())[j]) / nx
        contrast[i] = amps.mean()
    return ContrastCurve(tau_values=taus, contrast=contrast, stripe_bin=j)


def contrast_vs_field(records: dict, tau: float, **kwargs):
    """Contrast at fixed integration time across runs keyed by field value."""
    fields = np.array(sorted(records))
    values = np.empty(len(fields))
    for i, b in enumerate(fields):
        curve = contrast_vs_integration(records[b], [tau], **kwargs)
        values[i] = curve.contrast[0]
    return fields, values
