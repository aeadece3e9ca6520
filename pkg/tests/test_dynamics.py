import math
import warnings

import numpy as np
import pytest
from scipy import integrate

from lambscat import errors
from lambscat.dynamics import (Characteristics, InitialData, boundary_derivatives_fd,
                               class_d_state_from_field, energy, evolve, field_snapshot,
                               fit_decay_rate, fornberg_weights, lift_class_D)
from lambscat.model_core import NormalizedModel
from lambscat.potentials import PolynomialPotential
from lambscat.presets import acoustic_shell, gaussian_pulse, lamb_chain, two_mode
from lambscat.profiles import FieldProfile, GaussianTerm
from lambscat.spectral import point_spectrum

LAMB = lamb_chain()
THETA2 = NormalizedModel.from_arrays([-1.0], [1.0], 2.0)
SHELL = acoustic_shell()


def right_mover(center=5.0, sigma=1.0, amplitude=1.0):
    phi = FieldProfile.gaussian(amplitude, center, sigma)
    # phi_dot = -phi' = 2 sigma A u e^{-sigma u^2}
    return phi, FieldProfile((GaussianTerm(2 * sigma * amplitude, center, sigma, 1),))


# --- class-D lift --------------------------------------------------------------------

def test_lift_bump_gives_zero():
    y = lift_class_D(two_mode(), FieldProfile.bump(1.0, 5.5, 0.5))
    assert np.all(y == 0.0)


def test_lift_lamb_gaussian():
    y = lift_class_D(LAMB, FieldProfile.gaussian(1.0, 0.0, 1.0))
    assert y == pytest.approx([1.0], abs=1e-15)


def test_lift_theta2_gaussian():
    # v_1 = 2 phi'(0) + phi(0) = 1
    y = lift_class_D(THETA2, FieldProfile.gaussian(1.0, 0.0, 1.0))
    assert y == pytest.approx([1.0], abs=1e-15)


def test_lift_two_mode_by_hand():
    m = two_mode()
    phi = FieldProfile.gaussian(1.0, 0.3, 1.0)
    d = phi.derivatives_at(0.0, 2)
    # v = (p_1 phi, p_2 phi) = (phi, phi'' - 2 phi'), M = [[c1, c2], [l1 c1, l2 c2]]
    v = np.array([d[0], d[2] - 2 * d[1]])
    M = np.array([[1.0, 1.0], [-1.0, -2.0]])
    np.testing.assert_allclose(lift_class_D(m, phi), np.linalg.solve(M, v), rtol=1e-13)


def test_lift_satisfies_boundary_condition():
    # first row of M y = v is <c, y> = theta phi'(0) + phi(0)
    m = NormalizedModel.from_arrays([-1.0, -3.0, 0.5], [0.7, -1.2, 0.4], -0.8)
    phi = FieldProfile.gaussian(1.0, 0.4, 2.0)
    y = lift_class_D(m, phi)
    assert float(m.c @ y) == pytest.approx(m.theta * float(phi(0.0, 1)) + float(phi(0.0)))


# --- characteristics -----------------------------------------------------------------

def test_characteristics_zero():
    ch = Characteristics(InitialData.zero(LAMB))
    s = np.linspace(0, 10, 11)
    assert np.all(ch.a(s) == 0) and np.all(ch.b(-s) == 0)


def test_characteristics_right_mover():
    phi, phidot = right_mover()
    ch = Characteristics(InitialData.compatible(LAMB, phi, phidot))
    s = np.linspace(0, 12, 241)
    assert np.max(np.abs(ch.a_prime(s))) <= 1e-15
    np.testing.assert_allclose(ch.b_prime(-s), -phi(s, 1), atol=1e-15)


def test_characteristics_gaussian_split():
    phi = gaussian_pulse()
    ch = Characteristics(InitialData.compatible(LAMB, phi))
    x = np.linspace(0, 12, 121)
    np.testing.assert_allclose(ch.a_prime(x), 0.5 * phi(x, 1), atol=1e-16)
    np.testing.assert_allclose(ch.b_prime(-x), -0.5 * phi(x, 1), atol=1e-16)


def test_reconstruction_identities():
    phi = gaussian_pulse(4.0, 1.5) + FieldProfile.bump(0.4, 7.0, 1.0)
    phidot = FieldProfile.gaussian(0.3, 6.0, 0.8)
    ch = Characteristics(InitialData(phi, phidot, np.zeros(1), np.zeros(1)))
    x = np.linspace(0, 15, 301)
    np.testing.assert_allclose(ch.a(x) + ch.b(-x), phi(x), atol=1e-13)
    np.testing.assert_allclose(ch.a_prime(x) + ch.b_prime(-x), phidot(x), atol=1e-15)
    # a' is the derivative of a
    ref = [integrate.quad(lambda s: float(ch.a_prime(s)), xi, 40.0, epsabs=1e-13)[0] for xi in x[::30]]
    np.testing.assert_allclose(ch.a(x[::30]), -np.array(ref), atol=1e-11)


def test_characteristics_domain():
    ch = Characteristics(InitialData.zero(LAMB))
    with pytest.raises(errors.OutOfRange):
        ch.a(-1.0)
    with pytest.raises(errors.OutOfRange):
        ch.b(1.0)


# --- reduced dynamics ----------------------------------------------------------------

def oracle_ivp(model, data, ts):
    """Independent solve of the boundary ODE with an adaptive high-order method."""
    ch = Characteristics(data)
    n, th, c, lam = model.n, model.theta, model.c, model.lam

    if th == 0.0:
        def rhs(t, u):
            y, yd = u[:n], u[n:]
            phip = 2 * float(ch.a_prime(t)) - c @ yd
            return np.concatenate([yd, lam * y + c * phip])
        u0 = np.concatenate([data.y0, data.ydot0])
    else:
        def rhs(t, u):
            b, y, yd = u[0], u[1:n + 1], u[n + 1:]
            phip = (c @ y - float(ch.a(t)) - b) / th
            return np.concatenate([[float(ch.a_prime(t)) - phip], yd, lam * y + c * phip])
        u0 = np.concatenate([[float(ch.b(0.0))], data.y0, data.ydot0])
    sol = integrate.solve_ivp(rhs, (0, ts[-1]), u0, method="DOP853", t_eval=ts,
                              rtol=1e-12, atol=1e-14, max_step=0.05)
    off = 0 if th == 0.0 else 1
    return sol.y[off: off + n].T


@pytest.mark.parametrize("model", [LAMB, SHELL, two_mode(), THETA2,
                                   NormalizedModel.from_arrays([-1.0, -4.0, 2.0], [0.5, 1.0, 0.3], -0.7)],
                         ids=["lamb", "shell", "two_mode", "theta2", "mixed"])
def test_against_adaptive_oracle(model):
    data = InitialData.compatible(model, gaussian_pulse(5.0, 1.0))
    tr = evolve(model, data, 10.0, 1e-3)
    ts = tr.t[::500]
    ref = oracle_ivp(model, data, ts)
    assert np.max(np.abs(tr.y[::500] - ref)) <= 1e-8


def test_zero_data_is_zero():
    tr = evolve(LAMB, InitialData.zero(LAMB), 5.0, 1e-2)
    assert np.all(tr.y == 0) and np.all(tr.ydot == 0) and np.all(tr.energy == 0)


def test_causality():
    data = InitialData.compatible(two_mode(), FieldProfile.bump(1.0, 5.5, 0.5))
    tr = evolve(two_mode(), data, 8.0, 1e-3)
    early = tr.t < 5.0
    assert np.max(np.abs(tr.y[early])) <= 1e-12
    assert np.max(np.abs(tr.y[~early])) > 1e-3


def test_state_dimension_is_degree():
    assert evolve(LAMB, InitialData.zero(LAMB), 1.0, 0.1).state_dim == 2
    assert evolve(SHELL, InitialData.zero(SHELL), 1.0, 0.05).state_dim == 3


@pytest.mark.parametrize("model", [LAMB, SHELL, two_mode(),
                                   NormalizedModel.from_arrays([-1.0, -4.0, -9.0], [0.5, 1.0, 0.3], -0.7)],
                         ids=["lamb", "shell", "two", "three"])
def test_energy_conservation(model):
    data = InitialData.compatible(model, gaussian_pulse(), y0=None)
    tr = evolve(model, data, 20.0, 1e-3)
    assert np.max(tr.energy_drift()) <= 1e-6


def test_energy_order_four():
    data = InitialData.compatible(LAMB, gaussian_pulse(5.0, 4.0))
    d1 = np.max(evolve(LAMB, data, 20.0, 1e-2).energy_drift())
    d2 = np.max(evolve(LAMB, data, 20.0, 5e-3).energy_drift())
    assert d1 / d2 >= 10.0


def test_energy_at_zero_matches_closed_form():
    # 1/2 int phi0'^2 for phi0 = exp(-(x - 5)^2) is 1/2 sqrt(pi/2) up to e^{-50}
    data = InitialData.compatible(LAMB, gaussian_pulse())
    assert energy(LAMB, data).total == pytest.approx(0.5 * math.sqrt(math.pi / 2), rel=1e-12)
    assert energy(LAMB, InitialData.zero(LAMB)).total == 0.0


def test_energy_with_oscillator_and_boundary_terms():
    phi = FieldProfile.gaussian(0.5, 0.0, 1.0)
    data = InitialData.compatible(SHELL, phi, y0=[0.2], ydot0=[-0.3])
    e = energy(SHELL, data)
    lam, c, th = SHELL.lam[0], SHELL.c[0], SHELL.theta
    grad = 0.5 * integrate.quad(lambda x: (float(phi(x, 1))) ** 2, 0, 20)[0]
    bnd = -(0.5 - c * 0.2) ** 2 / (2 * th)
    expected = grad + 0.5 * 0.09 - 0.5 * lam * 0.04 + bnd
    assert e.total == pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("model", [LAMB, SHELL], ids=["lamb", "shell"])
def test_energy_breakdown_matches_trajectory(model):
    data = InitialData.compatible(model, gaussian_pulse(5.0, 1.0))
    tr = evolve(model, data, 10.0, 1e-3)
    for t in (0.0, 2.5, 4.0, 9.0):
        assert energy(model, (tr, t)).total == pytest.approx(tr.energy[tr.index_of(t)], rel=1e-8)


def test_boundary_residuals_small():
    for model in (LAMB, SHELL, THETA2):
        tr = evolve(model, InitialData.compatible(model, gaussian_pulse(5.0)), 8.0, 1e-3)
        assert np.max(tr.boundary_residuals()) <= 1e-8


def test_incompatible_theta_zero_data():
    with pytest.raises(errors.ModelValidationError):
        InitialData.compatible(LAMB, FieldProfile.gaussian(1.0, 0.0, 1.0))
    bad = InitialData(FieldProfile.gaussian(1.0, 0.0, 1.0), FieldProfile.zero(), np.zeros(1), np.zeros(1))
    with pytest.raises(errors.ModelValidationError):
        evolve(LAMB, bad, 1.0, 0.01)


def test_stiff_warning():
    with pytest.warns(errors.StiffWarning):
        evolve(SHELL, InitialData.zero(SHELL), 1.0, 0.2)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        evolve(SHELL, InitialData.zero(SHELL), 1.0, 0.05)


def test_blowup_reported():
    v = PolynomialPotential.from_expression("-y**4", 1)
    data = InitialData(FieldProfile.zero(), FieldProfile.zero(), np.array([0.0]), np.array([3.0]))
    with pytest.raises(errors.NonFiniteState):
        evolve(LAMB, data, 50.0, 1e-2, potential=v)


def test_runaway_mode_grows_at_bound_state_rate():
    # theta > 0 carries a positive eigenvalue x^2; its mode grows like e^{x t}
    x = math.sqrt(point_spectrum(THETA2).eigenvalues[0])
    tr = evolve(THETA2, InitialData.compatible(THETA2, gaussian_pulse()), 30.0, 1e-3)
    assert -fit_decay_rate(tr, 15.0, 30.0) == pytest.approx(x, rel=1e-3)


def test_decay_rate_lamb():
    tr = evolve(LAMB, InitialData.compatible(LAMB, gaussian_pulse()), 20.0, 1e-3)
    assert fit_decay_rate(tr, 10.0, 20.0) == pytest.approx(0.5, rel=0.05)


# --- field reconstruction ------------------------------------------------------------

def test_right_mover_translates_freely():
    phi, phidot = right_mover()
    tr = evolve(LAMB, InitialData.compatible(LAMB, phi, phidot), 6.0, 1e-3)
    xs = np.linspace(0, 20, 401)
    for t in (1.0, 3.0, 6.0):
        f, fd = field_snapshot(tr, t, xs)
        # the Gaussian is only e^{-25} small at the boundary, not zero
        np.testing.assert_allclose(f, phi(xs - t), atol=1e-10)
        np.testing.assert_allclose(fd, phidot(xs - t), atol=1e-9)


def test_snapshot_at_zero_reproduces_data():
    phi = gaussian_pulse(4.0, 2.0)
    phidot = FieldProfile.gaussian(0.5, 6.0, 1.0)
    tr = evolve(SHELL, InitialData(phi, phidot, np.zeros(1), np.zeros(1)), 1.0, 1e-3)
    xs = np.linspace(0, 12, 121)
    f, fd = field_snapshot(tr, 0.0, xs)
    np.testing.assert_allclose(f, phi(xs), atol=1e-13)
    np.testing.assert_allclose(fd, phidot(xs), atol=1e-15)


def test_snapshot_zero_data_and_range():
    tr = evolve(LAMB, InitialData.zero(LAMB), 2.0, 1e-2)
    f, fd = field_snapshot(tr, 1.0, np.linspace(0, 5, 11))
    assert np.all(f == 0) and np.all(fd == 0)
    with pytest.raises(errors.OutOfRange):
        field_snapshot(tr, 3.0, [0.0])
    with pytest.raises(errors.OutOfRange):
        field_snapshot(tr, 1.0, [-0.5])


def test_restart_from_state():
    model = two_mode()
    data = InitialData.compatible(model, gaussian_pulse(5.0))
    tr = evolve(model, data, 8.0, 1e-3)
    later = evolve(model, tr.state_at(3.0), 5.0, 1e-3)
    np.testing.assert_allclose(later.y[-1], tr.y[-1], atol=1e-9)
    np.testing.assert_allclose(later.ydot[-1], tr.ydot[-1], atol=1e-9)


def test_field_snapshot_solves_wave_equation():
    # phi_tt = phi_xx on x > 0, checked by central differences in both variables
    tr = evolve(SHELL, InitialData.compatible(SHELL, gaussian_pulse(5.0)), 6.0, 1e-3)
    h = 0.01
    xs = np.linspace(0.5, 4.0, 8)
    t = 4.0
    ft = [field_snapshot(tr, t + k * h, xs)[0] for k in (-1, 0, 1)]
    fxx = (field_snapshot(tr, t, xs + h)[0] - 2 * ft[1] + field_snapshot(tr, t, xs - h)[0]) / h**2
    ftt = (ft[0] - 2 * ft[1] + ft[2]) / h**2
    assert np.max(np.abs(ftt - fxx)) <= 1e-3


# --- nonlinear extension -------------------------------------------------------------

def test_harmonic_potential_reproduces_linear_run():
    model = two_mode()
    data = InitialData.compatible(model, gaussian_pulse(5.0))
    lin = evolve(model, data, 10.0, 1e-3)
    non = evolve(model, data, 10.0, 1e-3, potential=PolynomialPotential.harmonic(model))
    assert np.max(np.abs(lin.y - non.y)) <= 1e-8


def test_quartic_conserves_energy():
    v = PolynomialPotential.from_expression("y**4 + y**2", 1)
    data = InitialData.compatible(LAMB, gaussian_pulse(5.0, 1.0, 2.0))
    tr = evolve(LAMB, data, 20.0, 1e-3, potential=v)
    assert np.max(tr.energy_drift()) <= 1e-6
    assert v.growth_condition()["satisfied"]


# --- class D -------------------------------------------------------------------------

def test_fornberg_weights():
    w = fornberg_weights(np.arange(-2, 3) * 1.0, 2)
    np.testing.assert_allclose(w * 12, [-1, 16, -30, 16, -1], atol=1e-13)
    w = fornberg_weights(np.arange(-1, 2) * 1.0, 1)
    np.testing.assert_allclose(w, [-0.5, 0, 0.5], atol=1e-15)


def test_boundary_derivatives_fd_on_free_data():
    phi, phidot = right_mover(5.0)
    tr = evolve(LAMB, InitialData.compatible(LAMB, phi, phidot), 3.0, 1e-3)
    d = boundary_derivatives_fd(tr, 2.0, 2, h=0.01)
    exact = [float(phi(-2.0, k)) for k in range(3)]
    np.testing.assert_allclose(d, exact, atol=1e-9)


def test_class_d_invariance_two_mode():
    model = two_mode()
    data = InitialData.class_d(model, gaussian_pulse(5.0, 1.0), FieldProfile.gaussian(0.5, 4.0, 1.0))
    tr = evolve(model, data, 10.0, 1e-3)
    for t in np.linspace(1.0, 9.0, 10):
        t = tr.t[tr.index_of(round(t, 3))]
        assert np.max(np.abs(class_d_state_from_field(tr, t) - tr.y[tr.index_of(t)])) <= 1e-5
