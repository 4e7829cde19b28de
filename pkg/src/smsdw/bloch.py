"""Ground-state dynamics of the driven F=1 manifold on the transverse grid.

Eight real variables per pixel describe the ground-state density matrix:
the Delta-m=2 coherence quadratures (u, v), the orientation w, the
longitudinal alignment x, and the Delta-m=1 coherence quadratures
(y1, z1, y2, z2).  Populations are not evolved; they reconstruct from
(w, x) with unit trace.  All rates are in units of Gamma2 and time steps
in units of 1/Gamma2.

There is no cross-pixel coupling in this module: every pixel evolves under
its own local optical field, so the update is a plain data-parallel map.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SimulationDiverged

U, V, W, X, Y1, Z1, Y2, Z2 = range(8)
VAR_NAMES = ("u", "v", "w", "x", "y1", "z1", "y2", "z2")

_SQRT2 = np.sqrt(2.0)


@dataclass
class AtomicField:
    """Stack of the eight atomic variables, shape (8, ny, nx)."""

    data: np.ndarray

    @classmethod
    def zeros(cls, shape) -> "AtomicField":
        return cls(np.zeros((8,) + tuple(shape)))

    def copy(self) -> "AtomicField":
        return AtomicField(self.data.copy())

    @property
    def grid_shape(self):
        return self.data.shape[1:]

    @property
    def u(self):
        return self.data[U]

    @property
    def v(self):
        return self.data[V]

    @property
    def w(self):
        return self.data[W]

    @property
    def x(self):
        return self.data[X]

    @property
    def y1(self):
        return self.data[Y1]

    @property
    def z1(self):
        return self.data[Z1]

    @property
    def y2(self):
        return self.data[Y2]

    @property
    def z2(self):
        return self.data[Z2]


@dataclass
class PumpRates:
    """Optical pumping rates evaluated from a frozen field snapshot.

    p_plus/p_minus drive the stretched transitions, p_lam_plus/p_lam_minus
    are the two-photon (Raman) drivers of the Delta-m=2 coherence, s and d
    are their sum and difference, and the primed rates enter the light
    shifts of the Delta-m=1 coherences.
    """

    p_plus: np.ndarray
    p_minus: np.ndarray
    p_lam_plus: np.ndarray
    p_lam_minus: np.ndarray
    s: np.ndarray
    d: np.ndarray
    p_plus_prime: np.ndarray
    p_minus_prime: np.ndarray
    delta: float


@dataclass
class DecayRates:
    """Per-pixel decay rates and light-shift difference rates (units of Gamma2)."""

    gamma_w: np.ndarray
    gamma_x: np.ndarray
    gamma_c: np.ndarray
    gamma_y: np.ndarray
    gamma_z: np.ndarray
    d_y: np.ndarray
    d_z: np.ndarray
    r: float


def pump_rates(omega_plus, omega_minus, delta: float) -> PumpRates:
    """Pump and Raman rates of one beam from its scaled circular Rabi amplitudes."""
    den = 1.0 + delta * delta
    abs_p = omega_plus.real**2 + omega_plus.imag**2
    abs_m = omega_minus.real**2 + omega_minus.imag**2
    cross = np.conj(omega_plus) * omega_minus
    p_plus = abs_p / den
    p_minus = abs_m / den
    return PumpRates(
        p_plus=p_plus,
        p_minus=p_minus,
        p_lam_plus=2.0 * cross.real / den,
        p_lam_minus=-2.0 * cross.imag / den,
        s=p_plus + p_minus,
        d=p_plus - p_minus,
        p_plus_prime=abs_p / den,
        p_minus_prime=abs_m / den,
        delta=delta,
    )


def combine_rates(first: PumpRates, *others: PumpRates) -> PumpRates:
    """Incoherent sum of the pump rates of counter-propagating beams.

    The forward pump and the reentrant beam travel in opposite directions,
    so their interference grating lives on the wavelength scale and is
    washed out by atomic motion.  What survives is the sum of each beam's
    bilinears, i.e. the rates add beam by beam; cross-beam products are
    dropped.  Within one beam the two circular components stay mutually
    coherent, so the Raman drivers keep their relative-phase sensitivity.
    """
    result = first
    for other in others:
        if other.delta != result.delta:
            raise ValueError("cannot combine rates evaluated at different detunings")
        result = PumpRates(
            p_plus=result.p_plus + other.p_plus,
            p_minus=result.p_minus + other.p_minus,
            p_lam_plus=result.p_lam_plus + other.p_lam_plus,
            p_lam_minus=result.p_lam_minus + other.p_lam_minus,
            s=result.s + other.s,
            d=result.d + other.d,
            p_plus_prime=result.p_plus_prime + other.p_plus_prime,
            p_minus_prime=result.p_minus_prime + other.p_minus_prime,
            delta=result.delta,
        )
    return result


def decay_rates(rates: PumpRates, r: float) -> DecayRates:
    """Decay and light-shift rates for the same field snapshot as `rates`.

    The coherence decay carries a correction of minus one third of the total
    primed rate (the primed rates are |Omega'|^2 / (1 + Delta^2), so this is
    the printed |Omega'|^2 form).  r is the residual ground-state decay from
    atomic motion; it keeps every rate strictly positive with the pump off.
    """
    s = rates.s
    pp, pm = rates.p_plus_prime, rates.p_minus_prime
    return DecayRates(
        gamma_w=r + s / 6.0,
        gamma_x=r + (11.0 / 18.0) * s,
        gamma_c=r + (7.0 / 6.0) * s - (pp + pm) / 3.0,
        gamma_y=r + pp + (7.0 / 12.0) * pm,
        gamma_z=r + (7.0 / 12.0) * pp + pm,
        d_y=pp - (7.0 / 12.0) * pm,
        d_z=(7.0 / 12.0) * pp - pm,
        r=r,
    )


def bloch_rhs(state: np.ndarray, rates: PumpRates, decays: DecayRates,
              omega_x: float) -> np.ndarray:
    """Time derivative of the eight atomic variables (shape preserved).

    Implements the full coupled system including every magnetic precession
    term (transverse field omega_x, scaled) and every light-shift term.
    """
    u, v, w, x, y1, z1, y2, z2 = state
    delta = rates.delta
    plp, plm = rates.p_lam_plus, rates.p_lam_minus
    s, d = rates.s, rates.d
    pp, pm = rates.p_plus_prime, rates.p_minus_prime
    ox = omega_x / _SQRT2

    out = np.empty_like(state)
    out[U] = (-decays.gamma_c * u + (5.0 / 6.0) * d * delta * v
              + (1.0 / 6.0) * plm * delta * w - (1.0 / 9.0) * plp * x
              + (5.0 / 18.0) * plp
              - ox * (z2 - y2))
    out[V] = (-decays.gamma_c * v - (5.0 / 6.0) * d * delta * u
              + (1.0 / 6.0) * plp * delta * w + (1.0 / 9.0) * plm * x
              - (5.0 / 18.0) * plm
              + ox * (z1 - y1))
    out[W] = (-decays.gamma_w * w - (1.0 / 6.0) * plm * delta * u
              - (1.0 / 6.0) * plp * delta * v - (1.0 / 9.0) * d * x
              + (5.0 / 18.0) * d
              - ox * (y2 + z2))
    out[X] = (-decays.gamma_x * x - (1.0 / 3.0) * plp * u
              + (1.0 / 3.0) * plm * v + (1.0 / 3.0) * d * w
              + (5.0 / 18.0) * s
              + 3.0 * ox * (y2 - z2))
    out[Y1] = (-decays.gamma_y * y1 + delta * decays.d_y * y2
               + (pm / 6.0 + (delta * plm - plp) / 12.0) * z1
               + (delta * pm / 6.0 + (delta * plp + plm) / 12.0) * z2
               + ox * v)
    out[Y2] = (-decays.gamma_y * y2 - delta * decays.d_y * y1
               - (delta * pm / 6.0 - (delta * plp + plm) / 12.0) * z1
               + (pm / 6.0 + (plp - delta * plm) / 12.0) * z2
               + ox * (w - x - u))
    out[Z1] = (-decays.gamma_z * z1 + delta * decays.d_z * z2
               + (pp / 6.0 - (delta * plm + plp) / 12.0) * y1
               - (delta * pp / 6.0 + (delta * plp - plm) / 12.0) * y2
               - ox * v)
    out[Z2] = (-decays.gamma_z * z2 - delta * decays.d_z * z1
               + (delta * pp / 6.0 - (delta * plp - plm) / 12.0) * y1
               + (pp / 6.0 + (delta * plm + plp) / 12.0) * y2
               + ox * (w + x + u))
    return out


def step_atoms(field: AtomicField, optical, dt: float, *, delta: float,
               omega_x: float, r: float, step_index=None) -> AtomicField:
    """Advance the atoms one classic RK4 step under a frozen optical drive.

    `optical` is either a single field or a sequence of beams making up the
    interacting field (forward pump at the entrance plus reentrant beam at
    the exit); the beams' pump rates add incoherently.  The optical loop is
    re-solved outside, once per step; within a step the rates are constants
    and the system is linear in the state, so fixed-step RK4 is both cheap
    and accurate here.
    """
    beams = optical if isinstance(optical, (tuple, list)) else (optical,)
    rates = combine_rates(*(pump_rates(b.e_plus, b.e_minus, delta) for b in beams))
    decays = decay_rates(rates, r)
    f = field.data
    k1 = bloch_rhs(f, rates, decays, omega_x)
    k2 = bloch_rhs(f + 0.5 * dt * k1, rates, decays, omega_x)
    k3 = bloch_rhs(f + 0.5 * dt * k2, rates, decays, omega_x)
    k4 = bloch_rhs(f + dt * k3, rates, decays, omega_x)
    new = f + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(new)):
        raise SimulationDiverged("non-finite atomic variables", step_index=step_index)
    return AtomicField(new)


def seed_noise(field: AtomicField, amplitude: float, seed: int) -> AtomicField:
    """Add independent uniform noise in [-amplitude, amplitude] to w and v.

    These are the linearly unstable variables; seeding them zero-mean keeps
    the drift direction unbiased.  Reproducible for a fixed seed.
    """
    if amplitude < 0:
        raise ValueError("noise amplitude must be non-negative")
    if amplitude == 0:
        return field.copy()
    rng = np.random.default_rng(seed)
    out = field.copy()
    shape = field.grid_shape
    out.data[W] += rng.uniform(-amplitude, amplitude, size=shape)
    out.data[V] += rng.uniform(-amplitude, amplitude, size=shape)
    return out


def reconstruct_populations(field: AtomicField) -> np.ndarray:
    """Zeeman populations (rho_-1-1, rho_00, rho_11) from (w, x); trace is 1."""
    w, x = field.data[W], field.data[X]
    rho_zero = (1.0 - x) / 3.0
    stretched_half = (2.0 + x) / 6.0
    return np.stack([stretched_half - 0.5 * w, rho_zero, stretched_half + 0.5 * w])


def check_physical(field: AtomicField, tol: float = 1e-6) -> None:
    """Assert reconstructed populations lie in [0, 1] and coherences in range."""
    pops = reconstruct_populations(field)
    if pops.min() < -tol or pops.max() > 1.0 + tol:
        raise SimulationDiverged(
            f"populations outside [0, 1]: min {pops.min():.3e}, max {pops.max():.3e}")
    trace_err = np.abs(pops.sum(axis=0) - 1.0).max()
    if trace_err > 1e-12:
        raise SimulationDiverged(f"population trace deviates by {trace_err:.3e}")
    coher = np.hypot(field.u, field.v).max()
    if coher > 1.0 + tol or np.abs(field.w).max() > 1.0 + tol:
        raise SimulationDiverged("coherence or orientation above physical bound")
