"""Exact time evolution through the d'Alembert reduction.

On the half-line the field is ``phi(t, x) = a(x + t) + b(t - x)``.  The
incoming part ``a`` is fixed by the initial data; the outgoing part ``b`` on
``(0, inf)`` is produced by the boundary.  The boundary condition
``theta phi'(t,0) + phi(t,0) = <c, y>`` and the oscillator equation
``y'' = L y + c phi'(t,0)`` then close into a finite system:

* ``theta != 0``: state ``(b, y, y')`` with ``b' = a' + (a + b - <c,y>)/theta``;
* ``theta == 0``: state ``(y, y')`` with ``phi'(t,0) = 2 a'(t) - <c, y'>`` and
  ``b = <c, y> - a`` recovered algebraically.

Its dimension is the degree of the boundary polynomial.  The PDE itself is
never discretized; the only error sources are the RK4 step, quadrature and
Hermite interpolation of ``b``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline

from ._linalg import solve_pivoted
from .char_poly import _pk_coeffs, build_p_closed_form
from .errors import (IllConditioned, ModelValidationError, NonFiniteState, OutOfRange,
                     QuadratureFailure, SingularM, StiffWarning)
from .model_core import NormalizedModel
from .potentials import PolynomialPotential
from .profiles import FieldProfile

COMPAT_TOL = 1e-10


# --- initial data --------------------------------------------------------------------

def lift_class_D(model: NormalizedModel, phi) -> np.ndarray:
    """``M^{-1} v(phi)`` with ``v_k = p_k(d/dx) phi (0+)`` and ``M = V diag(c)``."""
    n = model.n
    pk = _pk_coeffs(model, n)
    order = max(len(p) for p in pk) - 1
    derivs = np.array([float(phi(0.0, k)) for k in range(order + 1)])
    v = np.array([float(np.dot(p, derivs[: len(p)])) for p in pk])
    M = (model.lam[None, :] ** np.arange(n)[:, None]) * model.c[None, :]
    try:
        return solve_pivoted(M, v, max_pivot_ratio=1e15)
    except IllConditioned as exc:
        raise SingularM(str(exc)) from exc


@dataclass(frozen=True)
class InitialData:
    phi0: object
    phidot0: object
    y0: np.ndarray
    ydot0: np.ndarray
    mode: str = "compatible"

    @classmethod
    def class_d(cls, model: NormalizedModel, phi0, phidot0) -> "InitialData":
        """Oscillator state slaved to the field's boundary derivatives."""
        return cls(phi0, phidot0, lift_class_D(model, phi0), lift_class_D(model, phidot0), "classD")

    @classmethod
    def compatible(cls, model: NormalizedModel, phi0, phidot0=None, y0=None, ydot0=None
                   ) -> "InitialData":
        phidot0 = FieldProfile.zero() if phidot0 is None else phidot0
        y0 = np.zeros(model.n) if y0 is None else np.asarray(y0, dtype=float)
        ydot0 = np.zeros(model.n) if ydot0 is None else np.asarray(ydot0, dtype=float)
        if y0.shape != (model.n,) or ydot0.shape != (model.n,):
            raise ModelValidationError("oscillator initial data must have length n")
        if model.theta == 0.0:
            gap = abs(float(phi0(0.0)) - float(model.c @ y0))
            if gap > COMPAT_TOL:
                raise ModelValidationError(
                    f"theta = 0 requires phi0(0) = <c, y0>; mismatch {gap:.3e}")
        return cls(phi0, phidot0, y0, ydot0, "compatible")

    @classmethod
    def zero(cls, model: NormalizedModel) -> "InitialData":
        return cls.compatible(model, FieldProfile.zero())

    def time_reversed(self) -> "InitialData":
        """``(phi, y, -phi_dot, -y_dot)``; its forward run is the backward run of ``self``."""
        return InitialData(self.phi0, _Negated(self.phidot0), self.y0, -self.ydot0, self.mode)


class _Negated:
    def __init__(self, profile):
        self.profile = profile

    def __call__(self, x, k=0):
        return -self.profile(x, k)

    def tail_integral(self, x):
        return -self.profile.tail_integral(x)

    def support(self):
        return self.profile.support()


# --- characteristics -----------------------------------------------------------------

class Characteristics:
    """``a`` on ``[0, inf)`` and ``b`` on ``(-inf, 0]`` with the additive constant set to 0.

    ``a(x) = -1/2 int_x^inf (phi_dot + phi')`` and
    ``b(-x) = 1/2 int_x^inf (phi_dot - phi')``.
    """

    def __init__(self, data: InitialData):
        self.phi0 = data.phi0
        self.phidot0 = data.phidot0

    def a(self, s):
        s = np.asarray(s, dtype=float)
        _require(np.all(s >= -1e-14), "a is only known on [0, inf) from the data")
        s = np.maximum(s, 0.0)
        return 0.5 * self.phi0(s) - 0.5 * self.phidot0.tail_integral(s)

    def a_prime(self, s):
        s = np.maximum(np.asarray(s, dtype=float), 0.0)
        return 0.5 * (self.phidot0(s) + self.phi0(s, 1))

    def b(self, s):
        s = np.asarray(s, dtype=float)
        _require(np.all(s <= 1e-14), "b is only known on (-inf, 0] from the data")
        x = np.maximum(-s, 0.0)
        return 0.5 * self.phidot0.tail_integral(x) + 0.5 * self.phi0(x)

    def b_prime(self, s):
        x = np.maximum(-np.asarray(s, dtype=float), 0.0)
        return 0.5 * (self.phidot0(x) - self.phi0(x, 1))

    def support(self):
        lo, hi = self.phi0.support()
        lo2, hi2 = self.phidot0.support()
        if hi == lo:
            return lo2, hi2
        if hi2 == lo2:
            return lo, hi
        return min(lo, lo2), max(hi, hi2)


def build_characteristics(data: InitialData) -> Characteristics:
    return Characteristics(data)


def _require(cond, msg):
    if not cond:
        raise OutOfRange(msg)


# --- reduced system ------------------------------------------------------------------

@numba.njit(cache=True)
def _rhs(theta, lam, c, nonlinear, coefs, exps, a, ap, u, du):
    n = lam.size
    if theta != 0.0:
        cy = 0.0
        for i in range(n):
            cy += c[i] * u[1 + i]
        r = a + u[0] - cy
        phip = -r / theta
        bp = ap + r / theta
        du[0] = bp
        off = 1
    else:
        cyd = 0.0
        for i in range(n):
            cyd += c[i] * u[n + i]
        phip = 2.0 * ap - cyd
        bp = cyd - ap
        off = 0
    for i in range(n):
        du[off + i] = u[off + n + i]
    if nonlinear:
        for i in range(n):
            du[off + n + i] = c[i] * phip
        for p in range(coefs.size):
            for j in range(n):
                e = exps[p, j]
                if e == 0:
                    continue
                g = coefs[p] * e
                for i in range(n):
                    ei = exps[p, i] - 1 if i == j else exps[p, i]
                    if ei > 0:
                        g *= u[off + i] ** ei
                du[off + n + j] -= g
    else:
        for i in range(n):
            du[off + n + i] = lam[i] * u[off + i] + c[i] * phip
    du[du.size - 1] = bp * bp - ap * ap
    return bp, phip


@numba.njit(cache=True)
def _rk4(theta, lam, c, nonlinear, coefs, exps, avals, apvals, u0, K, dt,
         out_u, out_bp, out_phip):
    m = u0.size
    u = u0.copy()
    k1 = np.empty(m)
    k2 = np.empty(m)
    k3 = np.empty(m)
    k4 = np.empty(m)
    tmp = np.empty(m)
    for k in range(K + 1):
        bp, phip = _rhs(theta, lam, c, nonlinear, coefs, exps, avals[2 * k], apvals[2 * k], u, k1)
        for i in range(m):
            out_u[k, i] = u[i]
        out_bp[k] = bp
        out_phip[k] = phip
        if k == K:
            break
        for i in range(m):
            tmp[i] = u[i] + 0.5 * dt * k1[i]
        _rhs(theta, lam, c, nonlinear, coefs, exps, avals[2 * k + 1], apvals[2 * k + 1], tmp, k2)
        for i in range(m):
            tmp[i] = u[i] + 0.5 * dt * k2[i]
        _rhs(theta, lam, c, nonlinear, coefs, exps, avals[2 * k + 1], apvals[2 * k + 1], tmp, k3)
        for i in range(m):
            tmp[i] = u[i] + dt * k3[i]
        _rhs(theta, lam, c, nonlinear, coefs, exps, avals[2 * k + 2], apvals[2 * k + 2], tmp, k4)
        finite = True
        for i in range(m):
            u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not np.isfinite(u[i]):
                finite = False
        if not finite:
            return k + 1
    return -1


# --- energy --------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyBreakdown:
    field_gradient: float
    field_kinetic: float
    oscillator_kinetic: float
    oscillator_potential: float
    boundary: float

    @property
    def total(self) -> float:
        return (self.field_gradient + self.field_kinetic + self.oscillator_kinetic
                + self.oscillator_potential + self.boundary)

    def as_dict(self) -> dict:
        return {"field_gradient": self.field_gradient, "field_kinetic": self.field_kinetic,
                "oscillator_kinetic": self.oscillator_kinetic,
                "oscillator_potential": self.oscillator_potential,
                "boundary": self.boundary, "total": self.total}


def _quad(f, lo, hi, points=None):
    if hi <= lo:
        return 0.0
    val, err = integrate.quad(f, lo, hi, points=points, limit=400, epsabs=1e-14, epsrel=1e-12)
    if err > 1e-10 * max(1.0, abs(val)):
        raise QuadratureFailure(f"quadrature error estimate {err:.2e} on [{lo}, {hi}]")
    return val


def _oscillator_terms(model, y, ydot, potential):
    kin = 0.5 * float(ydot @ ydot)
    if potential is None:
        pot = -0.5 * float(np.sum(model.lam * y * y))
    else:
        pot = potential.value(y)
    return kin, pot


def _boundary_term(model, phi_at_0, y):
    if model.theta == 0.0:
        return 0.0
    gap = phi_at_0 - float(model.c @ y)
    return -gap * gap / (2.0 * model.theta)


def energy(model: NormalizedModel, state, potential: Optional[PolynomialPotential] = None
           ) -> EnergyBreakdown:
    """Energy of ``InitialData`` or of ``(trajectory, t)`` at a grid time ``t``."""
    if isinstance(state, tuple):
        traj, t = state
        return traj.energy_breakdown(t)
    data: InitialData = state
    lo, hi = Characteristics(data).support()
    grad = 0.5 * _quad(lambda x: float(data.phi0(x, 1)) ** 2, 0.0, hi, _pts(lo, hi))
    kin = 0.5 * _quad(lambda x: float(data.phidot0(x)) ** 2, 0.0, hi, _pts(lo, hi))
    ok, op = _oscillator_terms(model, data.y0, data.ydot0, potential)
    bnd = _boundary_term(model, float(data.phi0(0.0)), data.y0)
    return EnergyBreakdown(grad, kin, ok, op, bnd)


def _pts(lo, hi):
    pts = [p for p in np.linspace(lo, hi, 9) if lo < p < hi]
    return pts or None


# --- trajectory ----------------------------------------------------------------------

@dataclass
class Trajectory:
    model: NormalizedModel
    data: InitialData
    chars: Characteristics
    potential: Optional[PolynomialPotential]
    t: np.ndarray
    y: np.ndarray
    ydot: np.ndarray
    b: np.ndarray
    bprime: np.ndarray
    phiprime0: np.ndarray
    flux: np.ndarray          # int_0^t (b'^2 - a'^2) ds
    field_energy0: float
    state_dim: int
    dt: float
    _spline: CubicHermiteSpline = field(init=False, repr=False)

    def __post_init__(self):
        self._spline = CubicHermiteSpline(self.t, self.b, self.bprime)

    @property
    def T(self) -> float:
        return float(self.t[-1])

    @property
    def energy(self) -> np.ndarray:
        kin = 0.5 * np.sum(self.ydot**2, axis=1)
        if self.potential is None:
            pot = -0.5 * np.sum(self.model.lam * self.y**2, axis=1)
        else:
            pot = np.array([self.potential.value(v) for v in self.y])
        bnd = -0.5 * self.model.theta * self.phiprime0**2
        return self.field_energy0 + self.flux + kin + pot + bnd

    def energy_drift(self) -> np.ndarray:
        e = self.energy
        return np.abs(e - e[0]) / abs(e[0]) if e[0] != 0 else np.abs(e - e[0])

    def b_at(self, s):
        shape = np.shape(s)
        s = np.atleast_1d(np.asarray(s, dtype=float))
        _require(np.all(s <= self.T + 1e-12), "b requested beyond the integrated horizon")
        neg = s <= 0
        out = np.empty_like(s)
        out[neg] = self.chars.b(s[neg])
        out[~neg] = self._spline(s[~neg])
        return out.reshape(shape)

    def bprime_at(self, s):
        shape = np.shape(s)
        s = np.atleast_1d(np.asarray(s, dtype=float))
        _require(np.all(s <= self.T + 1e-12), "b' requested beyond the integrated horizon")
        neg = s <= 0
        out = np.empty_like(s)
        out[neg] = self.chars.b_prime(s[neg])
        out[~neg] = self._spline(s[~neg], 1)
        return out.reshape(shape)

    def index_of(self, t: float) -> int:
        k = int(round(t / self.dt))
        if k < 0 or k >= self.t.size or abs(self.t[k] - t) > 1e-9 * max(1.0, abs(t)):
            raise OutOfRange(f"t = {t} is not a grid time of this trajectory")
        return k

    def boundary_residuals(self) -> np.ndarray:
        """``|theta phi'(t,0) + phi(t,0) - <c, y>|`` at every grid time."""
        a = self.chars.a(self.t)
        phi0 = a + self.b
        return np.abs(self.model.theta * self.phiprime0 + phi0 - self.y @ self.model.c)

    def energy_breakdown(self, t: float) -> EnergyBreakdown:
        """Energy parts at grid time ``t`` by quadrature over the field profile."""
        k = self.index_of(t)
        t = float(self.t[k])
        ap = self.chars.a_prime
        lo, hi = self.chars.support()
        # x in [0, t]: b'(t - x) is the emitted wave, sampled on the grid knots
        grad_in = kin_in = 0.0
        if k > 0:
            s = self.t[: k + 1]
            x = t - s
            apx = ap(x + t)
            bpx = self.bprime[: k + 1]
            grad_in = 0.5 * integrate.simpson((apx - bpx) ** 2, x=s)
            kin_in = 0.5 * integrate.simpson((apx + bpx) ** 2, x=s)
        # x in [t, inf): both pieces come straight from the data
        bp0 = self.chars.b_prime
        top = max(hi, t + hi, t)
        pts = _pts(t, top)
        grad_out = 0.5 * _quad(lambda x: float(ap(x + t) - bp0(t - x)) ** 2, t, top, pts)
        kin_out = 0.5 * _quad(lambda x: float(ap(x + t) + bp0(t - x)) ** 2, t, top, pts)
        ok, op = _oscillator_terms(self.model, self.y[k], self.ydot[k], self.potential)
        phi_at_0 = float(self.chars.a(t)) + float(self.b[k])
        bnd = _boundary_term(self.model, phi_at_0, self.y[k])
        return EnergyBreakdown(grad_in + grad_out, kin_in + kin_out, ok, op, bnd)

    def state_at(self, t: float) -> InitialData:
        """The state at grid time ``t`` as new initial data."""
        k = self.index_of(t)
        t = float(self.t[k])
        return InitialData(_SnapshotProfile(self, t, False), _SnapshotProfile(self, t, True),
                           self.y[k].copy(), self.ydot[k].copy(), "compatible")


class _SnapshotProfile:
    """``phi(t0, .)`` or ``phi_dot(t0, .)`` read off a trajectory (derivative order <= 1)."""

    def __init__(self, traj: Trajectory, t0: float, velocity: bool):
        self.traj = traj
        self.t0 = t0
        self.velocity = velocity

    def __call__(self, x, k=0):
        x = np.asarray(x, dtype=float)
        tr, t0 = self.traj, self.t0
        if self.velocity:
            if k != 0:
                raise NotImplementedError("snapshot velocity exposes its value only")
            return tr.chars.a_prime(x + t0) + tr.bprime_at(t0 - x)
        if k == 0:
            return tr.chars.a(x + t0) + tr.b_at(t0 - x)
        if k == 1:
            return tr.chars.a_prime(x + t0) - tr.bprime_at(t0 - x)
        raise NotImplementedError("snapshot fields expose derivatives up to order 1")

    def tail_integral(self, x):
        x = np.asarray(x, dtype=float)
        tr, t0 = self.traj, self.t0
        if self.velocity:
            return tr.b_at(t0 - x) - tr.chars.a(x + t0)
        raise NotImplementedError("tail integral of a snapshot field is not needed")

    def support(self):
        lo, hi = self.traj.chars.support()
        return 0.0, max(hi, 0.0) + self.t0


def evolve(model: NormalizedModel, data: InitialData, T: float, dt: float,
           potential: Optional[PolynomialPotential] = None) -> Trajectory:
    """Integrate the reduced boundary system with classical RK4 on ``[0, T]``."""
    if dt <= 0 or T < 0:
        raise ValueError("need dt > 0 and T >= 0")
    theta = model.theta
    if theta != 0.0 and dt > abs(theta) / 5.0:
        warnings.warn(f"dt = {dt:g} exceeds |theta|/5 = {abs(theta) / 5:g}; the boundary "
                      "relaxation is under-resolved", StiffWarning, stacklevel=2)
    if theta == 0.0:
        gap = abs(float(data.phi0(0.0)) - float(model.c @ data.y0))
        if gap > COMPAT_TOL:
            raise ModelValidationError(f"theta = 0 requires phi0(0) = <c, y0>; mismatch {gap:.3e}")
    K = max(1, int(math.ceil(T / dt - 1e-9))) if T > 0 else 0
    dt_eff = T / K if K else dt
    chars = Characteristics(data)
    half = np.arange(2 * K + 1) * (0.5 * dt_eff)
    avals = np.asarray(chars.a(half), dtype=float) if theta != 0.0 else np.zeros(half.size)
    apvals = np.asarray(chars.a_prime(half), dtype=float)
    n = model.n
    if theta != 0.0:
        u0 = np.concatenate([[float(chars.b(0.0))], data.y0, data.ydot0, [0.0]])
    else:
        u0 = np.concatenate([data.y0, data.ydot0, [0.0]])
    state_dim = u0.size - 1
    if state_dim != build_p_closed_form(model).degree:
        raise AssertionError("reduced state dimension differs from deg p")
    nonlinear = potential is not None
    if nonlinear:
        coefs, exps = potential.coefs, potential.exponents.astype(np.int64)
        if potential.n != n:
            raise ModelValidationError("potential dimension differs from the model")
    else:
        coefs, exps = np.zeros(1), np.zeros((1, n), dtype=np.int64)
    out_u = np.zeros((K + 1, u0.size))
    out_bp = np.zeros(K + 1)
    out_phip = np.zeros(K + 1)
    fail = _rk4(float(theta), model.lam.astype(float), model.c.astype(float), nonlinear,
                coefs.astype(float), exps, avals, apvals, u0.astype(float), K, float(dt_eff),
                out_u, out_bp, out_phip)
    if fail >= 0:
        raise NonFiniteState(f"state overflowed at t = {fail * dt_eff:g}")
    t = np.arange(K + 1) * dt_eff
    off = 1 if theta != 0.0 else 0
    y = out_u[:, off: off + n]
    ydot = out_u[:, off + n: off + 2 * n]
    if theta != 0.0:
        b = out_u[:, 0]
    else:
        b = y @ model.c - chars.a(t)
    lo, hi = chars.support()
    e_field = (_quad(lambda x: float(chars.a_prime(x)) ** 2, 0.0, hi, _pts(lo, hi))
               + _quad(lambda x: float(chars.b_prime(-x)) ** 2, 0.0, hi, _pts(lo, hi)))
    return Trajectory(model, data, chars, potential, t, y.copy(), ydot.copy(), np.array(b),
                      out_bp, out_phip, out_u[:, -1].copy(), e_field, state_dim, dt_eff)


# --- field reconstruction ------------------------------------------------------------

def field_snapshot(traj: Trajectory, t: float, xs):
    """``(phi(t, x), phi_dot(t, x))`` for ``x >= 0``."""
    xs = np.asarray(xs, dtype=float)
    if t < 0 or t > traj.T + 1e-12:
        raise OutOfRange(f"t = {t} outside [0, {traj.T}]")
    if np.any(xs < 0):
        raise OutOfRange("field points must satisfy x >= 0")
    return _field(traj, t, xs)


def _field(traj, t, xs):
    phi = traj.chars.a(xs + t) + traj.b_at(t - xs)
    phidot = traj.chars.a_prime(xs + t) + traj.bprime_at(t - xs)
    return phi, phidot


def fornberg_weights(offsets, order: int) -> np.ndarray:
    """Finite-difference weights for the ``order``-th derivative at 0 on ``offsets``."""
    x = np.asarray(offsets, dtype=float)
    m = x.size
    c = np.zeros((m, order + 1))
    c1, c4 = 1.0, x[0]
    c[0, 0] = 1.0
    for i in range(1, m):
        mn = min(i, order)
        c2, c5 = 1.0, c4
        c4 = x[i]
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def boundary_derivatives_fd(traj: Trajectory, t: float, order: int, h: float = 0.01):
    """``d^k/dx^k phi(t, 0+)`` for ``k <= order`` by fourth-order central differences.

    Uses the smooth continuation ``a(x + t) + b(t - x)`` to small negative ``x``;
    requires ``t`` larger than the stencil half-width.
    """
    out = np.zeros(order + 1)
    for k in range(order + 1):
        m = (k + 1) // 2 + 1
        offs = np.arange(-m, m + 1) * h
        if t < m * h:
            raise OutOfRange("t too small for the central stencil")
        w = fornberg_weights(offs, k)
        phi = traj.chars.a(offs + t) + traj.b_at(t - offs)
        out[k] = float(w @ phi) / 1.0
    return out


def class_d_state_from_field(traj: Trajectory, t: float, h: float = 0.01) -> np.ndarray:
    """Recompute ``y(t) = M^{-1} v(phi(t, .))`` from finite-difference boundary derivatives."""
    model = traj.model
    n = model.n
    pk = _pk_coeffs(model, n)
    order = max(len(p) for p in pk) - 1
    d = boundary_derivatives_fd(traj, t, order, h)
    v = np.array([float(np.dot(p, d[: len(p)])) for p in pk])
    M = (model.lam[None, :] ** np.arange(n)[:, None]) * model.c[None, :]
    return solve_pivoted(M, v, max_pivot_ratio=1e15)


def fit_decay_rate(traj: Trajectory, t0: float, t1: float) -> float:
    """Least-squares slope of ``log ||(y, y')||`` over ``[t0, t1]``, sign flipped."""
    sel = (traj.t >= t0) & (traj.t <= t1)
    r = np.sqrt(np.sum(traj.y[sel] ** 2, axis=1) + np.sum(traj.ydot[sel] ** 2, axis=1))
    if r.size < 2 or np.any(r <= 0):
        raise ValueError("trajectory vanishes on the fitting window")
    return float(-np.polyfit(traj.t[sel], np.log(r), 1)[0])
