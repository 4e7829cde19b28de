import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smsdw.bloch import (
    U, V, W, X, Y1, Z1, Y2, Z2,
    AtomicField,
    bloch_rhs,
    combine_rates,
    decay_rates,
    pump_rates,
    reconstruct_populations,
    seed_noise,
    step_atoms,
)
from smsdw.constants import larmor_freq
from smsdw.optics import OpticalField

SQRT2 = np.sqrt(2.0)


def dark_field(shape=(1, 1)):
    return OpticalField(np.zeros(shape, complex), np.zeros(shape, complex))


def uniform_field(e_plus, e_minus, shape=(1, 1)):
    return OpticalField(np.full(shape, e_plus, complex), np.full(shape, e_minus, complex))


# ---------------------------------------------------------------------------
# pump and decay rates

def test_pump_rates_x_polarized_real_amplitudes():
    a = 1.3
    r = pump_rates(np.array(a + 0j), np.array(a + 0j), -20.0)
    assert r.p_plus == pytest.approx(a**2 / 401.0)
    assert r.p_minus == pytest.approx(a**2 / 401.0)
    assert r.p_lam_plus == pytest.approx(2 * a**2 / 401.0)
    assert r.p_lam_minus == pytest.approx(0.0, abs=1e-15)
    assert r.s == pytest.approx(2 * a**2 / 401.0)
    assert r.d == pytest.approx(0.0, abs=1e-16)


def test_pump_rates_single_component_has_no_raman():
    r = pump_rates(np.array(0.9 + 0j), np.array(0.0 + 0j), -20.0)
    assert r.p_lam_plus == pytest.approx(0.0, abs=1e-16)
    assert r.p_lam_minus == pytest.approx(0.0, abs=1e-16)
    assert r.d == pytest.approx(r.p_plus)


@pytest.mark.parametrize("phi_l", [0.0, 0.3, np.pi / 2, 2.0, np.pi])
def test_pump_rates_relative_phase(phi_l):
    a = 0.7
    r = pump_rates(np.array(a + 0j), np.array(a * np.exp(-1j * phi_l)), -20.0)
    scale = 2 * a**2 / 401.0
    assert r.p_lam_plus == pytest.approx(scale * np.cos(phi_l), abs=1e-15)
    assert r.p_lam_minus == pytest.approx(scale * np.sin(phi_l), abs=1e-15)


@given(st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False),
       st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False))
def test_raman_magnitude_identity(op, om):
    # (P_lam+^2 + P_lam-^2)(1+D^2) equals 4|O+|^2|O-|^2/(1+D^2)
    delta = -20.0
    r = pump_rates(np.array(op), np.array(om), delta)
    lhs = (r.p_lam_plus**2 + r.p_lam_minus**2) * (1 + delta**2)
    rhs = 4 * abs(op) ** 2 * abs(om) ** 2 / (1 + delta**2)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-12)


def test_combine_rates_adds_beam_bilinears():
    a = pump_rates(np.array(1.0 + 0j), np.array(-1.0 + 0j), -20.0)
    b = pump_rates(np.array(0.5j), np.array(0.2 + 0j), -20.0)
    tot = combine_rates(a, b)
    assert tot.p_plus == pytest.approx(a.p_plus + b.p_plus)
    assert tot.p_lam_minus == pytest.approx(a.p_lam_minus + b.p_lam_minus)
    assert tot.s == pytest.approx(a.s + b.s)
    with pytest.raises(ValueError):
        combine_rates(a, pump_rates(np.array(1.0 + 0j), np.array(0j), -10.0))


def test_decay_rates_positive_and_ordered():
    r = pump_rates(np.array(1.2 + 0j), np.array(-0.8 + 0.1j), -20.0)
    d = decay_rates(r, 1.5e-4)
    for g in (d.gamma_w, d.gamma_x, d.gamma_c, d.gamma_y, d.gamma_z):
        assert g >= d.r > 0
    # coherence decay reduces to r + (5/6) S for identical primed rates
    assert d.gamma_c == pytest.approx(d.r + (5.0 / 6.0) * r.s)


# ---------------------------------------------------------------------------
# right-hand side structure

def test_rhs_pure_decay():
    state = np.zeros((8, 1, 1))
    state[W] = 0.4
    rates = pump_rates(np.zeros((1, 1), complex), np.zeros((1, 1), complex), -20.0)
    decays = decay_rates(rates, 1.5e-4)
    out = bloch_rhs(state, rates, decays, 0.0)
    assert out[W][0, 0] == pytest.approx(-1.5e-4 * 0.4)
    out[W] = 0
    assert np.allclose(out, 0.0)


def test_rhs_matches_dipole_precession_generator():
    # with pumping off the magnetization obeys m' = (Omega, 0, 0) x m
    rng = np.random.default_rng(7)
    state = rng.normal(0, 0.1, size=(8, 1, 1))
    ox = 0.115
    rates = pump_rates(np.zeros((1, 1), complex), np.zeros((1, 1), complex), -20.0)
    decays = decay_rates(rates, 0.0)
    out = bloch_rhs(state, rates, decays, ox)
    m_y = (state[Y2] + state[Z2]) / SQRT2
    m_z = -state[W]
    dm_y = (out[Y2] + out[Z2]) / SQRT2
    dm_z = -out[W]
    dm_x = -(out[Y1] + out[Z1]) / SQRT2
    assert dm_y == pytest.approx(-ox * m_z)
    assert dm_z == pytest.approx(ox * m_y)
    assert dm_x == pytest.approx(0.0, abs=1e-15)


def test_rhs_matches_quadrupole_precession_generator():
    rng = np.random.default_rng(11)
    state = rng.normal(0, 0.1, size=(8, 1, 1))
    ox = 0.23
    rates = pump_rates(np.zeros((1, 1), complex), np.zeros((1, 1), complex), -20.0)
    decays = decay_rates(rates, 0.0)
    out = bloch_rhs(state, rates, decays, ox)
    assert out[U] == pytest.approx(ox * (state[Y2] - state[Z2]) / SQRT2)
    assert out[V] == pytest.approx(-ox * (state[Y1] - state[Z1]) / SQRT2)
    assert out[X] == pytest.approx(3 * ox * (state[Y2] - state[Z2]) / SQRT2)
    assert (out[Y1] - out[Z1]) == pytest.approx(SQRT2 * ox * state[V])
    assert (out[Y2] - out[Z2]) == pytest.approx(
        -SQRT2 * ox * (state[X] + state[U]))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_rhs_consistent_with_integrator_finite_difference(seed):
    # central difference of the RK4 flow reproduces the RHS to O(h^2)
    rng = np.random.default_rng(seed)
    state = AtomicField(rng.normal(0, 0.05, size=(8, 2, 3)))
    field = OpticalField(
        rng.normal(0, 0.5, (2, 3)) + 1j * rng.normal(0, 0.5, (2, 3)),
        rng.normal(0, 0.5, (2, 3)) + 1j * rng.normal(0, 0.5, (2, 3)))
    kwargs = dict(delta=-20.0, omega_x=0.115, r=1.5e-4)
    h = 1e-3
    fwd = step_atoms(state, field, h, **kwargs)
    bwd = step_atoms(state, field, -h, **kwargs)
    diff = (fwd.data - bwd.data) / (2 * h)
    rates = pump_rates(field.e_plus, field.e_minus, -20.0)
    decays = decay_rates(rates, 1.5e-4)
    rhs = bloch_rhs(state.data, rates, decays, 0.115)
    assert np.allclose(diff, rhs, rtol=1e-6, atol=1e-10)


# ---------------------------------------------------------------------------
# integration oracles (closed forms computed in the test, not the package)

def test_free_precession_matches_closed_form():
    bx = 0.5
    ox = larmor_freq(bx)
    period = 2 * np.pi / ox
    dt = period / 200
    m0 = 0.5
    atoms = AtomicField.zeros((1, 1))
    atoms.data[W] -= m0          # m_z(0) = m0, m_y(0) = 0
    dark = dark_field()
    t = 0.0
    worst = 0.0
    for _ in range(2000):
        m_y = (atoms.data[Y2] + atoms.data[Z2])[0, 0] / SQRT2
        m_z = -atoms.data[W][0, 0]
        worst = max(worst,
                    abs(m_y - m0 * np.cos(ox * t + np.pi / 2)),
                    abs(m_z - m0 * np.cos(ox * t)))
        atoms = step_atoms(atoms, dark, dt, delta=-20.0, omega_x=ox, r=0.0)
        t += dt
    assert worst < 1e-6


def test_free_precession_sense_flips_with_field():
    ox = larmor_freq(0.5)
    period = 2 * np.pi / ox
    dt = period / 200
    for sign in (+1.0, -1.0):
        atoms = AtomicField.zeros((1, 1))
        atoms.data[W] -= 1.0
        for _ in range(50):  # quarter period
            atoms = step_atoms(atoms, dark_field(), dt, delta=-20.0,
                               omega_x=sign * ox, r=0.0)
        m_y = (atoms.data[Y2] + atoms.data[Z2])[0, 0] / SQRT2
        assert np.sign(m_y) == -sign


def test_quadrupole_doubling_and_amplitude_ratios():
    ox = larmor_freq(0.5)
    period = 2 * np.pi / ox
    dt = period / 200
    v0, q0 = 0.2, 0.2
    atoms = AtomicField.zeros((1, 1))
    atoms.data[V] += v0
    atoms.data[Y2] += q0 / SQRT2
    atoms.data[Z2] -= q0 / SQRT2
    n = 2000  # ten Larmor periods, integer bins
    series = {k: np.empty(n) for k in ("v", "p", "u", "g", "x")}
    for i in range(n):
        series["v"][i] = atoms.data[V][0, 0]
        series["p"][i] = (atoms.data[Y1] - atoms.data[Z1])[0, 0] / SQRT2
        series["u"][i] = atoms.data[U][0, 0]
        series["g"][i] = (atoms.data[Y2] - atoms.data[Z2])[0, 0] / SQRT2
        series["x"][i] = atoms.data[X][0, 0]
        atoms = step_atoms(atoms, dark_field(), dt, delta=-20.0, omega_x=ox, r=0.0)
    spectra = {k: np.abs(np.fft.rfft(s)) for k, s in series.items()}
    peak = {k: int(sp[1:].argmax() + 1) for k, sp in spectra.items()}
    assert peak["v"] == 10 and peak["p"] == 10          # Larmor line
    assert peak["u"] == 20 and peak["g"] == 20 and peak["x"] == 20  # doubled
    amp = {k: 2 * spectra[k][peak[k]] / n for k in spectra}
    assert amp["u"] / amp["g"] == pytest.approx(0.5, rel=0.01)
    assert amp["x"] / amp["g"] == pytest.approx(1.5, rel=0.01)
    # quadrature pairs: v ~ cos, (y1-z1)/sqrt2 ~ cos(...-pi/2) for positive field
    tt = np.arange(n) * dt
    assert np.allclose(series["v"], v0 * np.cos(ox * tt), atol=1e-5)
    assert np.allclose(series["p"], v0 * np.cos(ox * tt - np.pi / 2), atol=1e-5)


def test_stationary_coherence_weak_pump():
    # stationary coherence amplitudes against the driven-decay balance
    delta = -20.0
    r = 1.5e-4
    a = np.sqrt(1e-8)
    phi_l = 0.7
    field = uniform_field(a, a * np.exp(-1j * phi_l))
    rates = pump_rates(field.e_plus, field.e_minus, delta)
    decays = decay_rates(rates, r)
    atoms = AtomicField.zeros((1, 1))
    dt = 200.0
    for _ in range(700):  # ~20 coherence lifetimes
        atoms = step_atoms(atoms, field, dt, delta=delta, omega_x=0.0, r=r)
    u_expect = (5.0 / 18.0) * rates.p_lam_plus[0, 0] / decays.gamma_c[0, 0]
    v_expect = -(5.0 / 18.0) * rates.p_lam_minus[0, 0] / decays.gamma_c[0, 0]
    assert atoms.data[U][0, 0] == pytest.approx(u_expect, rel=1e-4)
    assert atoms.data[V][0, 0] == pytest.approx(v_expect, rel=1e-4)


# ---------------------------------------------------------------------------
# populations, physicality, noise

def test_population_reconstruction_trace():
    rng = np.random.default_rng(0)
    atoms = AtomicField(rng.normal(0, 0.2, size=(8, 4, 4)))
    pops = reconstruct_populations(atoms)
    assert np.abs(pops.sum(axis=0) - 1.0).max() < 1e-12
    assert pops[2] - pops[0] == pytest.approx(atoms.data[W])


def test_population_conservation_under_integration():
    field = uniform_field(1.7, -1.7, (2, 2))
    atoms = AtomicField.zeros((2, 2))
    atoms = seed_noise(atoms, 1e-3, 1)
    for _ in range(300):
        atoms = step_atoms(atoms, field, 1.0, delta=-20.0, omega_x=0.115, r=1.5e-4)
    pops = reconstruct_populations(atoms)
    assert np.abs(pops.sum(axis=0) - 1.0).max() < 1e-12
    assert pops.min() > -1e-6 and pops.max() < 1 + 1e-6


def test_step_atoms_rejects_divergent_state():
    from smsdw.errors import SimulationDiverged

    atoms = AtomicField.zeros((1, 1))
    atoms.data[W] = 1e300
    huge = uniform_field(1e160, 1e160)
    with np.errstate(all="ignore"), pytest.raises(SimulationDiverged):
        step_atoms(atoms, huge, 1e6, delta=-20.0, omega_x=0.0, r=1.5e-4)


def test_seed_noise_reproducible_and_bounded():
    base = AtomicField.zeros((16, 16))
    a = seed_noise(base, 1e-3, 42)
    b = seed_noise(base, 1e-3, 42)
    c = seed_noise(base, 1e-3, 43)
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)
    assert np.abs(a.data[W]).max() <= 1e-3
    assert np.abs(a.data[V]).max() <= 1e-3
    untouched = [U, X, Y1, Z1, Y2, Z2]
    assert np.allclose(a.data[untouched], 0.0)


def test_seed_noise_zero_amplitude_is_identity():
    base = AtomicField.zeros((4, 4))
    base.data[U] = 0.3
    out = seed_noise(base, 0.0, 5)
    assert np.array_equal(out.data, base.data)
    with pytest.raises(ValueError):
        seed_noise(base, -1e-3, 5)
