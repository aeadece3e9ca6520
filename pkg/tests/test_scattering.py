import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from lambscat import errors
from lambscat.dynamics import InitialData, evolve
from lambscat.model_core import NormalizedModel
from lambscat.presets import acoustic_shell, gaussian_pulse, lamb_chain, pauli_fierz, two_mode
from lambscat.profiles import FieldProfile, GaussianTerm
from lambscat.scattering import (build_lp_semigroup, dissipativity_margin, incoming_rep,
                                 lp_evolve_check, lp_semigroup_of_model, outgoing_rep,
                                 parseval_residuals, scattering_relation_error,
                                 transfer_function, translation_covariance_check,
                                 translation_reps, verify_scattering_relation)
from _randmodels import random_model

LAMB = lamb_chain()
SHELL = acoustic_shell()


def right_mover(center=5.0):
    phi = FieldProfile.gaussian(1.0, center, 1.0)
    return phi, FieldProfile((GaussianTerm(2.0, center, 1.0, 1),))


@pytest.fixture(scope="module")
def lamb_reps():
    return translation_reps(LAMB, InitialData.compatible(LAMB, gaussian_pulse()), 60.0, 0.01)


# --- transfer function ---------------------------------------------------------------

def test_transfer_at_zero_is_minus_one():
    for m in (LAMB, SHELL, two_mode()):
        assert transfer_function(m)(0.0) == -1.0


def test_transfer_lamb_at_one():
    # p(i) = -i, p(-i) = i
    assert transfer_function(LAMB)(1.0) == pytest.approx(1.0 + 0j, abs=1e-15)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_transfer_unimodular(seed):
    m = random_model(np.random.default_rng(seed))
    tf = transfer_function(m)
    k = np.linspace(-50, 50, 1001)
    s = tf(k)
    assert np.max(np.abs(np.abs(s) - 1.0)) <= 1e-12
    # independent evaluation through numpy's descending-order polyval
    desc = tf.p.coeffs[::-1]
    ref = -np.polyval(desc, 1j * k) / np.polyval(desc, -1j * k)
    np.testing.assert_allclose(s, ref, rtol=1e-12)


# --- translation representations -----------------------------------------------------

def test_zero_data_gives_zero_profiles():
    rep = translation_reps(LAMB, InitialData.zero(LAMB), 10.0, 0.05)
    assert np.all(rep.f_minus == 0) and np.all(rep.f_plus == 0)
    assert rep.energy == 0.0
    assert scattering_relation_error(rep, transfer_function(LAMB)) == 0.0


def test_right_mover_profiles():
    phi, phidot = right_mover()
    data = InitialData.compatible(LAMB, phi, phidot)
    rep = outgoing_rep(LAMB, data, 20.0, 0.01)
    N = rep.grid.size // 2
    x = -rep.grid[:N]
    np.testing.assert_allclose(rep.f_plus[:N], 0.5 * (phidot(x) - phi(x, 1)), atol=1e-15)
    assert np.max(np.abs(rep.f_minus[N:])) <= 1e-15
    # nothing reaches the boundary beyond the e^{-25} tail
    assert np.max(np.abs(rep.f_plus[N + 1:])) <= 1e-9


def test_time_symmetric_data():
    data = InitialData.compatible(SHELL, gaussian_pulse())
    out = outgoing_rep(SHELL, data, 30.0, 0.01)
    inc = incoming_rep(SHELL, data, 30.0, 0.01)
    N = out.grid.size // 2
    # a'(-s) = -b'(s)
    np.testing.assert_allclose(inc.f_minus[:N], -out.f_plus[N + 1:][::-1], atol=1e-14)


def test_lamb_parseval(lamb_reps):
    r_sum, r_minus = parseval_residuals(lamb_reps)
    assert r_sum <= 1e-3 and r_minus <= 1e-3
    # the energy norm is twice the energy
    assert lamb_reps.energy_norm_sq == pytest.approx(2 * lamb_reps.energy)
    assert lamb_reps.norm_sq("minus") == pytest.approx(lamb_reps.energy, rel=1e-6)


def test_lamb_scattering_relation(lamb_reps):
    tf = transfer_function(LAMB)
    assert scattering_relation_error(lamb_reps, tf) <= 1e-3
    assert scattering_relation_error(lamb_reps, tf, tail=False) <= 1e-3


def test_two_mode_scattering_and_refinement():
    m = two_mode()
    data = InitialData.compatible(m, gaussian_pulse())
    coarse = verify_scattering_relation(m, data, 60.0, 0.02)
    fine = verify_scattering_relation(m, data, 60.0, 0.01)
    assert fine <= 1e-3
    assert coarse / fine >= 2.0
    rep = translation_reps(m, data, 60.0, 0.01)
    assert max(parseval_residuals(rep)) <= 1e-3


def test_shell_identities():
    data = InitialData.compatible(SHELL, gaussian_pulse(5.0, 2.0))
    rep = translation_reps(SHELL, data, 40.0, 0.01)
    assert max(parseval_residuals(rep)) <= 1e-6
    assert scattering_relation_error(rep, transfer_function(SHELL)) <= 1e-6


def test_shell_with_displaced_oscillator():
    # the data violate the boundary condition, so b' jumps at the origin
    data = InitialData.compatible(SHELL, gaussian_pulse(), y0=[0.2])
    rep = translation_reps(SHELL, data, 40.0, 0.01)
    assert max(parseval_residuals(rep)) <= 1e-3
    assert scattering_relation_error(rep, transfer_function(SHELL)) <= 1e-3


def test_point_spectrum_blocks_scattering():
    pf = pauli_fierz()
    with pytest.raises(errors.PointSpectrumPresent) as info:
        outgoing_rep(pf, InitialData.compatible(pf, gaussian_pulse()), 20.0, 0.05)
    assert len(info.value.eigenvalues) == 1


def test_insufficient_window():
    with pytest.raises(errors.InsufficientDecay):
        outgoing_rep(LAMB, InitialData.compatible(LAMB, gaussian_pulse()), 3.0, 0.01)


def test_grid_must_divide():
    with pytest.raises(ValueError):
        outgoing_rep(LAMB, InitialData.zero(LAMB), 1.005, 0.01 * math.pi)


def test_covariance():
    data = InitialData.compatible(LAMB, gaussian_pulse())
    assert translation_covariance_check(LAMB, data, 0.0) == 0.0
    assert translation_covariance_check(LAMB, data, 1.0) <= 1e-6
    phi, phidot = right_mover(8.0)
    rm = InitialData.compatible(LAMB, phi, phidot)
    assert translation_covariance_check(LAMB, rm, 2.0) <= 1e-8


# --- Lax-Phillips semigroup ----------------------------------------------------------

def test_lp_single_root():
    sg = build_lp_semigroup([(1.0, 1)])
    np.testing.assert_array_equal(sg.B, [[1.0]])
    np.testing.assert_allclose(sg.gram, [[0.5]], rtol=1e-15)
    dev, norm = lp_evolve_check(sg, math.log(2.0))
    assert sg.evolution(math.log(2.0))[0, 0] == pytest.approx(0.5, rel=1e-14)
    assert norm == pytest.approx(0.5, rel=1e-14)
    assert dev <= 1e-15


def test_lp_double_root():
    sg = build_lp_semigroup([(1.0, 2)])
    np.testing.assert_array_equal(sg.B, [[1, 1], [0, 1]])
    np.testing.assert_allclose(sg.gram, [[0.5, -0.25], [-0.25, 0.25]], rtol=1e-15)


def test_lp_identity_at_zero():
    sg = lp_semigroup_of_model(two_mode())
    dev, norm = lp_evolve_check(sg, 0.0)
    assert dev == 0.0
    assert norm == pytest.approx(1.0, abs=1e-14)


def test_lp_lamb():
    sg = lp_semigroup_of_model(LAMB)
    assert sg.dim == 2
    assert np.count_nonzero(sg.B - np.diag(np.diag(sg.B))) == 0
    ts = np.linspace(0.1, 10.0, 100)
    norms = [lp_evolve_check(sg, t)[1] for t in ts]
    assert np.all(np.diff(norms) <= 1e-12) and norms[0] <= 1.0
    # decay at the slowest resonance, e^{-t/2} up to a bounded oscillating factor
    n50, n100 = lp_evolve_check(sg, 50.0)[1], lp_evolve_check(sg, 100.0)[1]
    assert math.log(n50 / n100) / 50.0 == pytest.approx(0.5, rel=0.02)


@pytest.mark.parametrize("model,dim", [(LAMB, 2), (SHELL, 3), (two_mode(), 4)])
def test_lp_dimension(model, dim):
    assert lp_semigroup_of_model(model).dim == dim


def test_lp_rejects_left_roots():
    with pytest.raises(errors.RootInLeftHalfPlane):
        build_lp_semigroup([(-0.5, 1)])
    with pytest.raises(errors.PointSpectrumPresent):
        lp_semigroup_of_model(pauli_fierz())


@settings(max_examples=20, deadline=None)
@given(st.lists(st.tuples(st.floats(0.1, 3.0), st.floats(-3.0, 3.0), st.integers(1, 3)),
                min_size=1, max_size=3, unique_by=lambda r: round(r[0], 1)))
def test_gram_against_quadrature(spec):
    roots = [(complex(a, b), m) for a, b, m in spec]
    sg = build_lp_semigroup(roots)
    idx = sg.basis_index()

    def basis(a, x):
        j, k = idx[a]
        return x**k * np.exp(roots[j][0] * x)

    for a in range(sg.dim):
        for b in range(sg.dim):
            re = integrate.quad(lambda x: (np.conj(basis(a, x)) * basis(b, x)).real, -np.inf, 0)[0]
            im = integrate.quad(lambda x: (np.conj(basis(a, x)) * basis(b, x)).imag, -np.inf, 0)[0]
            assert abs(sg.gram[a, b] - complex(re, im)) <= 1e-8 * max(1.0, abs(sg.gram[a, b]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_lp_dissipation_is_boundary_flux(seed):
    # d/dt ||f(. - t)||^2 on (-inf, 0] is -|f(0)|^2: G B + B* G = e e*, e_a = phi_a(0)
    m = random_model(np.random.default_rng(seed), n_max=4, negative_only=True,
                     theta_range=(-3.0, 0.0))
    sg = lp_semigroup_of_model(m)
    e = np.array([1.0 if k == 0 else 0.0 for _, k in sg.basis_index()])
    D = sg.dissipation()
    scale = np.max(np.abs(sg.gram)) * np.max(np.abs(sg.B))
    assert np.max(np.abs(D - np.outer(e, e))) <= 1e-9 * max(1.0, scale)
    assert dissipativity_margin(sg) >= -1e-10 * max(1.0, scale)
    for t in (0.5, 2.0, 7.0):
        dev, norm = lp_evolve_check(sg, t)
        assert dev <= 1e-10 * max(1.0, np.max(np.abs(sg.exact_evolution(t))))
        assert norm <= 1.0 + 1e-10
