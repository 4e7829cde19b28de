"""Optical pipeline: thin-cloud transmission, mirror round trip, slit filter.

The two circular field components are scaled Rabi amplitudes on a periodic
transverse grid.  The cloud is diffractively thin: per pixel the forward
beams see a 2x2 linear transfer across the slab, solved exactly with the
closed-form matrix exponential.  Free-space propagation to the feedback
mirror and back is a pure spectral phase multiplier, so an FFT round trip;
the slit filter is a binary mask applied in the same Fourier plane.

All functions are pure: input fields are never modified in place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bloch import AtomicField
from .constants import CONSTANTS, PhysicalConstants
from .errors import SimulationDiverged


@dataclass(frozen=True)
class Grid:
    """Periodic transverse grid; x runs along the last array axis."""

    nx: int = 512
    ny: int = 8
    pixel: float = 8e-6  # meters

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def extent_x(self) -> float:
        return self.nx * self.pixel

    @property
    def extent_y(self) -> float:
        return self.ny * self.pixel

    def wavenumbers(self):
        """(qy, qx) broadcastable arrays in rad/m."""
        qx = 2.0 * np.pi * np.fft.fftfreq(self.nx, d=self.pixel)
        qy = 2.0 * np.pi * np.fft.fftfreq(self.ny, d=self.pixel)
        return qy[:, None], qx[None, :]

    def x_coords(self):
        return np.arange(self.nx) * self.pixel


@dataclass(frozen=True)
class FourierFilter:
    """Slit mask in the Fourier plane.

    orientation "x" passes wavevectors near the qx axis (modulation along x,
    stripes along y); "y" the transpose; "none" disables filtering.
    half_width is the transverse pass half-width in wavenumber bins.  An
    optional center (rad/m) adds an annular gate on the total wavenumber
    around |q| = center; "auto" resolves it to the first diffractive band of
    the configured mirror distance.  The annulus stands in for the
    high-wavenumber damping (thick-medium diffraction, finite apertures)
    that the thin-slab model lacks: without it every 2*pi branch of the
    round-trip phasor is equally unstable.  center_half_width is the annulus
    half-width in rad/m (None: half the center).  The DC bin always passes.
    """

    orientation: str = "x"
    half_width: int = 3
    center: float | str | None = "auto"
    center_half_width: float | None = None


@dataclass
class OpticalField:
    """Pair of complex circular Rabi amplitudes on the grid."""

    e_plus: np.ndarray
    e_minus: np.ndarray
    plane: str = "entrance"  # entrance | exit | reentrant | total

    def copy(self) -> "OpticalField":
        return OpticalField(self.e_plus.copy(), self.e_minus.copy(), self.plane)

    def total_power(self) -> float:
        return float(np.sum(np.abs(self.e_plus) ** 2 + np.abs(self.e_minus) ** 2))


@dataclass(frozen=True)
class Susceptibility:
    """Linear response of the unpolarized cloud to the two circular components.

    chi_plus/chi_minus are the susceptibilities multiplied by k*L, the only
    combination the thin slab needs, so no physical cloud thickness enters.
    omega_z is the scaled longitudinal Larmor frequency (0 for purely
    transverse fields); it splits the two circular channels.
    """

    od: float
    delta: float
    omega_z: float = 0.0

    @property
    def chi_plus(self) -> complex:
        return self.od * (1j + self.delta - self.omega_z) / (1.0 + self.delta**2)

    @property
    def chi_minus(self) -> complex:
        return self.od * (1j + self.delta + self.omega_z) / (1.0 + self.delta**2)


def x_polarized_pump(amplitude: float, shape, envelope=None) -> OpticalField:
    """Plane-wave pump linearly polarized along x.

    In the circular decomposition used here an x-polarized beam has
    sigma- amplitude equal to minus the sigma+ amplitude (relative phase
    pi), which makes the orthogonal linear channel exactly dark.
    """
    e_plus = np.full(shape, amplitude, dtype=complex)
    if envelope is not None:
        e_plus = e_plus * envelope
    return OpticalField(e_plus, -e_plus.copy(), plane="entrance")


def super_gaussian_envelope(grid: Grid, waist_fraction: float = 0.7,
                            order: int = 8) -> np.ndarray:
    """Flat-top envelope for finite-beam runs; breaks strict periodicity."""
    x = (np.arange(grid.nx) - grid.nx / 2.0) * grid.pixel
    y = (np.arange(grid.ny) - grid.ny / 2.0) * grid.pixel
    w = 0.5 * waist_fraction * min(grid.extent_x, grid.extent_y if grid.ny > 1
                                   else grid.extent_x)
    rho = np.sqrt(y[:, None] ** 2 + x[None, :] ** 2) / w
    return np.exp(-(rho**order))


def medium_transmit(field: OpticalField, atoms: AtomicField,
                    chi: Susceptibility) -> OpticalField:
    """Exact thin-slab transfer of both circular components, per pixel.

    The z-propagation across the cloud is a linear 2x2 system with
    z-constant coefficients set by the local atomic state; the slab
    transfer matrix is its closed-form matrix exponential.  The diagonal
    couples to orientation w and alignment x, the off-diagonal to the
    Delta-m=2 coherence (u, v), which exchanges the circular components.
    """
    u, v, w, x = atoms.u, atoms.v, atoms.w, atoms.x
    half_p = 0.5j * chi.chi_plus
    half_m = 0.5j * chi.chi_minus
    a = half_p * (1.0 + 0.75 * w + 0.05 * x)
    b = half_p * 0.15 * (u - 1j * v)
    c = half_m * 0.15 * (u + 1j * v)
    d = half_m * (1.0 - 0.75 * w + 0.05 * x)

    mu = 0.5 * (a + d)
    dif = 0.5 * (a - d)
    q = np.sqrt(dif * dif + b * c)
    coshq = np.cosh(q)
    # sinh(q)/q with a series fallback at small |q|
    small = np.abs(q) < 1e-8
    q_safe = np.where(small, 1.0, q)
    sinhc = np.where(small, 1.0 + q * q / 6.0, np.sinh(q_safe) / q_safe)
    emu = np.exp(mu)

    t11 = emu * (coshq + sinhc * dif)
    t22 = emu * (coshq - sinhc * dif)
    t12 = emu * sinhc * b
    t21 = emu * sinhc * c

    out_p = t11 * field.e_plus + t12 * field.e_minus
    out_m = t21 * field.e_plus + t22 * field.e_minus
    if not (np.all(np.isfinite(out_p.view(float))) and np.all(np.isfinite(out_m.view(float)))):
        raise SimulationDiverged("non-finite slab transmission (optical density too large?)")
    return OpticalField(out_p, out_m, plane="exit")


def _bin_distance(n: int) -> np.ndarray:
    """|bin index| distance from DC for an FFT axis of length n."""
    return np.abs(np.fft.fftfreq(n) * n)


def resolve_filter(filt: FourierFilter | None, mirror_distance: float,
                   wavelength: float = CONSTANTS.wavelength) -> FourierFilter | None:
    """Replace center="auto" with the first-band center for this geometry."""
    if filt is None or filt.center != "auto":
        return filt
    if mirror_distance == 0:
        return FourierFilter(filt.orientation, filt.half_width, None, None)
    k = 2.0 * np.pi / wavelength
    center = float(np.sqrt(1.25 * np.pi * k / abs(mirror_distance)))
    return FourierFilter(filt.orientation, filt.half_width, center,
                         filt.center_half_width)


def filter_mask(filt: FourierFilter | None, grid: Grid) -> np.ndarray:
    """Boolean pass mask on the FFT grid; DC always passes."""
    if filt is None or filt.orientation == "none":
        return np.ones(grid.shape, dtype=bool)
    if filt.orientation not in ("x", "y"):
        raise ValueError(f"unknown filter orientation {filt.orientation!r}")
    if filt.center == "auto":
        raise ValueError("filter center 'auto' must be resolved against a mirror "
                         "distance first (see resolve_filter)")
    bins_x = _bin_distance(grid.nx)[None, :]
    bins_y = _bin_distance(grid.ny)[:, None]
    perp = bins_y if filt.orientation == "x" else bins_x
    mask = np.broadcast_to(perp <= filt.half_width, grid.shape).copy()
    if filt.center is not None:
        qy, qx = grid.wavenumbers()
        q_abs = np.sqrt(qx**2 + qy**2)
        half = filt.center_half_width if filt.center_half_width is not None \
            else 0.5 * abs(filt.center)
        annulus = np.abs(q_abs - abs(filt.center)) <= half
        mask &= annulus
    mask[0, 0] = True
    return mask


def propagation_phasor(grid: Grid, distance: float, wavelength: float) -> np.ndarray:
    """Spectral phase factor exp(i q^2 z / (2k)) for free propagation over z."""
    k = 2.0 * np.pi / wavelength
    qy, qx = grid.wavenumbers()
    q_sq = qx**2 + qy**2
    return np.exp(1j * q_sq * distance / (2.0 * k))


def round_trip_kernel(grid: Grid, mirror_distance: float, wavelength: float,
                      filt: FourierFilter | None, reflectivity: float) -> np.ndarray:
    """Combined spectral multiplier for one mirror round trip (distance 2d)."""
    if not 0.0 <= reflectivity <= 1.0:
        raise ValueError(f"reflectivity must lie in [0, 1], got {reflectivity!r}")
    kernel = propagation_phasor(grid, 2.0 * mirror_distance, wavelength)
    kernel = kernel * filter_mask(filt, grid)
    return np.sqrt(reflectivity) * kernel


def propagate_free(field: OpticalField, distance: float, wavelength: float,
                   grid: Grid, filt: FourierFilter | None = None,
                   plane: str = "reentrant") -> OpticalField:
    """FFT round trip over `distance`; optionally fused with the slit filter.

    Pure phase multiplication in Fourier space, so total power is conserved
    exactly (up to FFT rounding) when no filter is applied.  Negative
    distances are allowed (virtual mirror inside the cloud).
    """
    kernel = propagation_phasor(grid, distance, wavelength)
    if filt is not None:
        kernel = kernel * filter_mask(filt, grid)
    out_p = np.fft.ifft2(np.fft.fft2(field.e_plus) * kernel)
    out_m = np.fft.ifft2(np.fft.fft2(field.e_minus) * kernel)
    return OpticalField(out_p, out_m, plane=plane)


def apply_filter(spectrum_plus: np.ndarray, spectrum_minus: np.ndarray,
                 filt: FourierFilter | None, grid: Grid):
    """Apply the slit mask to a field pair already in Fourier representation."""
    mask = filter_mask(filt, grid)
    return spectrum_plus * mask, spectrum_minus * mask


def mirror_reflect(field: OpticalField, reflectivity: float) -> OpticalField:
    """Amplitude scaling by sqrt(R); the circular basis is preserved."""
    if not 0.0 <= reflectivity <= 1.0:
        raise ValueError(f"reflectivity must lie in [0, 1], got {reflectivity!r}")
    amp = np.sqrt(reflectivity)
    return OpticalField(amp * field.e_plus, amp * field.e_minus, plane="reentrant")


def to_linear_basis(field: OpticalField):
    """(e_parallel, e_perp) linear components for an x-polarized input.

    Convention fixed so that a pure-x input (e_minus = -e_plus) gives
    e_perp = 0; the orthogonal channel is dark below threshold.
    """
    e_par = (field.e_minus - field.e_plus) / np.sqrt(2.0)
    e_perp = 1j * (field.e_minus + field.e_plus) / np.sqrt(2.0)
    return e_par, e_perp


def from_linear_basis(e_par, e_perp, plane: str = "entrance") -> OpticalField:
    """Inverse of to_linear_basis."""
    e_minus = (e_par - 1j * e_perp) / np.sqrt(2.0)
    e_plus = (-e_par - 1j * e_perp) / np.sqrt(2.0)
    return OpticalField(e_plus, e_minus, plane=plane)


def perp_intensity(field: OpticalField) -> np.ndarray:
    _, e_perp = to_linear_basis(field)
    return np.abs(e_perp) ** 2


def par_intensity(field: OpticalField) -> np.ndarray:
    e_par, _ = to_linear_basis(field)
    return np.abs(e_par) ** 2


def phase_difference(e_plus, e_minus):
    """Relative phase phi_L between the circular components (sigma- lags by phi_L)."""
    return np.angle(e_plus * np.conj(e_minus))


def nominal_pattern_wavenumber(mirror_distance: float,
                               wavelength: float = CONSTANTS.wavelength) -> float | None:
    """Rough diffractive pattern scale used for grid-resolution checks only.

    The true critical wavenumber comes from the numerical growth-rate scan;
    this estimate (round-trip phase of pi) is for Nyquist validation.
    """
    if mirror_distance == 0:
        return None
    k = 2.0 * np.pi / wavelength
    return float(np.sqrt(np.pi * k / abs(mirror_distance)))
