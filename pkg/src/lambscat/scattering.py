"""Lax-Phillips scattering layer.

Translation representations are read off simulated trajectories:
``f_- = a'`` and ``f_+ = b'`` as functions on the whole line.  ``f_+`` on the
positive axis comes from a forward run, ``f_-`` on the negative axis from a
forward run of the time-reversed data (``a'(-s) = -b~'(s)``).

The finite-dimensional semigroup acts on the span of ``x^k e^{z_j x}`` on
``(-inf, 0]``, one block per resonance ``z_j`` of multiplicity ``nu_j``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate, linalg

from ._linalg import expm
from .char_poly import RealPolynomial, RootSet, build_p_closed_form, roots_of_model
from .dynamics import InitialData, Trajectory, energy, evolve
from .errors import InsufficientDecay, PointSpectrumPresent, RootInLeftHalfPlane
from .model_core import NormalizedModel
from .spectral import point_spectrum, pp_empty_check

TRUNCATION_RTOL = 1e-6


@dataclass
class TranslationRep:
    """Samples of ``f_-`` and ``f_+`` on ``x_k = -X + k h``; NaN where not computed."""

    grid: np.ndarray
    f_minus: np.ndarray
    f_plus: np.ndarray
    truncation_mass: float                # L2 mass beyond the grid not covered by the tails
    energy: float                         # E = 1/2 (Q + |phi_dot|^2 + |y_dot|^2)
    model: Optional[NormalizedModel] = None
    forward: Optional[Trajectory] = None
    backward: Optional[Trajectory] = None
    junction: dict = field(default_factory=dict)   # one-sided limits at x = 0

    def tail_state(self, which: str):
        """Reduced state at the end of the run that produced the far end of ``f_which``."""
        traj = self.forward if which == "plus" else self.backward
        return None if traj is None else _final_state(traj)

    def _tail_operator(self):
        A, ell = free_generator(self.model)
        return expm(A * self.h), ell

    def tail_norm_sq(self, which: str) -> float:
        """``h sum_{k>=0} |f(x_end + k h)|^2`` over the free-decay continuation."""
        u = self.tail_state(which)
        E, ell = self._tail_operator()
        # P - E^T P E = l l^T
        P = linalg.solve_discrete_lyapunov(E.T, np.outer(ell, ell))
        return self.h * float(u @ P @ u)

    @property
    def h(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def X(self) -> float:
        return float(self.grid[-1])

    @property
    def energy_norm_sq(self) -> float:
        """``||(phi, y, phi_dot, y_dot)||_E^2 = Q + |phi_dot|^2 + |y_dot|^2 = 2E``."""
        return 2.0 * self.energy

    def norm_sq(self, which: str, tail: bool = True) -> float:
        """``||f||^2`` by the trapezoid rule; with ``tail`` the rule runs over the whole line.

        The far end produced by a run is continued by the exact free decay,
        the other end is data that has already vanished there.
        """
        f = self._samples(which)
        # at a jump the rule needs the mean of the squared one-sided limits
        left, right = self.junction.get(which, (f[f.size // 2],) * 2)
        fix = self.h * (0.5 * (left**2 + right**2) - f[f.size // 2] ** 2)
        if not tail:
            return float(integrate.trapezoid(f * f, dx=self.h)) + fix
        run_end = -1 if which == "plus" else 0
        data_end = 0 if which == "plus" else -1
        inner = self.h * float(np.sum(f[1:-1] ** 2))
        has_run = self.tail_state(which) is not None
        far = self.tail_norm_sq(which) if has_run else self.h * f[run_end] ** 2
        return inner + far + self.h * f[data_end] ** 2 + fix

    def _samples(self, which):
        f = self.f_minus if which == "minus" else self.f_plus
        if np.any(np.isnan(f)):
            raise ValueError(f"f_{which} is only partially sampled")
        return f

    def reflected(self):
        """The R-convention profiles ``R^-(x) = f_-(-x)``, ``R^+(x) = f_+(-x)`` on the same grid."""
        return self.f_minus[::-1].copy(), self.f_plus[::-1].copy()


@dataclass(frozen=True)
class TransferFunction:
    p: RealPolynomial

    def __call__(self, kappas):
        k = np.asarray(kappas, dtype=float)
        return -self.p(1j * k) / self.p(-1j * k)


def transfer_eval(tf: TransferFunction, kappas) -> np.ndarray:
    return tf(kappas)


def transfer_function(model: NormalizedModel) -> TransferFunction:
    return TransferFunction(build_p_closed_form(model))


# --- translation representations -----------------------------------------------------

def _require_pp_empty(model):
    if not pp_empty_check(model):
        raise PointSpectrumPresent(point_spectrum(model).eigenvalues)


def _grid(X, h):
    N = int(round(X / h))
    if N < 1 or abs(N * h - X) > 1e-9 * X:
        raise ValueError("X must be a positive integer multiple of h")
    return -X + h * np.arange(2 * N + 1), N


def free_generator(model: NormalizedModel):
    """``(A, l)`` with ``u' = A u`` and ``b' = l . u`` once the incoming wave has passed.

    Its spectrum is ``{-z_j}``, so the continuation decays like the resonances.
    """
    n = model.n
    lam, c, theta = model.lam, model.c, model.theta
    if theta != 0.0:
        A = np.zeros((2 * n + 1, 2 * n + 1))
        A[0, 0] = 1.0 / theta
        A[0, 1: n + 1] = -c / theta
        A[1: n + 1, n + 1:] = np.eye(n)
        A[n + 1:, 0] = -c / theta
        A[n + 1:, 1: n + 1] = np.diag(lam) + np.outer(c, c) / theta
        ell = A[0].copy()
    else:
        A = np.zeros((2 * n, 2 * n))
        A[:n, n:] = np.eye(n)
        A[n:, :n] = np.diag(lam)
        A[n:, n:] = -np.outer(c, c)
        ell = np.concatenate([np.zeros(n), c])
    return A, ell


def _final_state(traj: Trajectory) -> np.ndarray:
    parts = [traj.y[-1], traj.ydot[-1]]
    if traj.model.theta != 0.0:
        parts.insert(0, [traj.b[-1]])
    return np.concatenate(parts)


def _emitted(model, data, X, h, substeps):
    """``b'`` on ``[0, X]`` sampled at spacing ``h`` from a forward run."""
    traj = evolve(model, data, X, h / substeps)
    return traj.bprime[::substeps].copy(), traj


def _data_mass(fn, lo, hi):
    if hi <= lo:
        return 0.0
    return integrate.quad(lambda s: float(fn(s)) ** 2, lo, hi, limit=200)[0]


def outgoing_rep(model: NormalizedModel, data: InitialData, X: float, h: float,
                 substeps: int = 1) -> TranslationRep:
    """``f_+`` on ``[-X, X]`` and ``f_-`` on ``[0, X]``."""
    _require_pp_empty(model)
    xs, N = _grid(X, h)
    e = energy(model, data).total
    chars_data = _chars(data)
    f_plus = np.empty_like(xs)
    f_plus[: N + 1] = chars_data.b_prime(xs[: N + 1])
    bp, traj = _emitted(model, data, X, h, substeps)
    # b' may jump at 0 for data off the boundary condition: keep the mean there
    f_plus[N + 1:] = bp[1:]
    junction = (float(f_plus[N]), float(bp[0]))
    f_plus[N] = 0.5 * sum(junction)
    f_minus = np.full_like(xs, np.nan)
    f_minus[N:] = chars_data.a_prime(xs[N:])
    lo, hi = chars_data.support()
    mass = (_data_mass(chars_data.b_prime, -max(hi, X), -X)
            + _data_mass(chars_data.a_prime, X, max(hi, X)))
    _check_mass(mass, e)
    return TranslationRep(xs, f_minus, f_plus, mass, e, model, forward=traj,
                          junction={"plus": junction})


def incoming_rep(model: NormalizedModel, data: InitialData, X: float, h: float,
                 substeps: int = 1) -> TranslationRep:
    """``f_-`` on ``[-X, X]`` (via the time-reversed run) and ``f_+`` on ``[-X, 0]``."""
    _require_pp_empty(model)
    xs, N = _grid(X, h)
    e = energy(model, data).total
    chars_data = _chars(data)
    f_minus = np.empty_like(xs)
    f_minus[N:] = chars_data.a_prime(xs[N:])
    bp_rev, traj = _emitted(model, data.time_reversed(), X, h, substeps)
    # a'(-s) = -b~'(s); grid index N - k holds x = -k h
    f_minus[:N] = -bp_rev[:0:-1]
    junction = (float(-bp_rev[0]), float(f_minus[N]))
    f_minus[N] = 0.5 * sum(junction)
    f_plus = np.full_like(xs, np.nan)
    f_plus[: N + 1] = chars_data.b_prime(xs[: N + 1])
    lo, hi = chars_data.support()
    mass = (_data_mass(chars_data.a_prime, X, max(hi, X))
            + _data_mass(chars_data.b_prime, -max(hi, X), -X))
    _check_mass(mass, e)
    return TranslationRep(xs, f_minus, f_plus, mass, e, model, backward=traj,
                          junction={"minus": junction})


def translation_reps(model: NormalizedModel, data: InitialData, X: float, h: float,
                     substeps: int = 1) -> TranslationRep:
    """Both profiles on the whole grid."""
    out = outgoing_rep(model, data, X, h, substeps)
    inc = incoming_rep(model, data, X, h, substeps)
    out.f_minus = inc.f_minus
    out.truncation_mass = max(out.truncation_mass, inc.truncation_mass)
    out.backward = inc.backward
    out.junction.update(inc.junction)
    return out


def _chars(data):
    from .dynamics import Characteristics
    return Characteristics(data)


def _check_mass(mass, e):
    if e > 0 and mass > TRUNCATION_RTOL * e:
        raise InsufficientDecay(f"L2 mass {mass:.3e} outside the window exceeds "
                                f"{TRUNCATION_RTOL:g} E; increase X")


def parseval_residuals(rep: TranslationRep, tail: bool = True):
    """``(|N - (|f_-|^2 + |f_+|^2)| / N, |N - 2 |f_-|^2| / N)`` with ``N = ||.||_E^2 = 2E``."""
    nm, npl = rep.norm_sq("minus", tail), rep.norm_sq("plus", tail)
    norm = rep.energy_norm_sq
    if norm == 0:
        return abs(nm + npl), abs(2 * nm)
    return abs(norm - (nm + npl)) / norm, abs(norm - 2 * nm) / norm


# --- Fourier check -------------------------------------------------------------------

def fourier_samples(rep: TranslationRep, which: str, tail: bool = True):
    """Fourier integrals ``int f(x) e^{-i kappa x} dx`` at ``kappa_m = pi m / X``, ``|m| <= N/2``.

    Plain mode is the trapezoid rule on ``[-X, X]``; on the uniform grid it is
    a length-``2N`` DFT once the two end samples are merged.  With ``tail`` the
    trapezoid sum is extended over the whole line: the run's far end continues
    as ``l E^k u`` with ``E = e^{A h}``, a geometric series summed in closed form.
    """
    f = rep._samples(which)
    N = (f.size - 1) // 2
    M = N // 2
    m = np.arange(-M, M + 1)
    kappa = math.pi * m / rep.X
    sign = np.where(m % 2 == 0, 1.0, -1.0)        # e^{i kappa X} = (-1)^m
    g = f[:-1].astype(complex)
    if not tail:
        g[0] = 0.5 * (f[0] + f[-1])
        return kappa, rep.h * sign * np.fft.fft(g)[m % (2 * N)]
    g[0] = 0.0
    vals = rep.h * sign * np.fft.fft(g)[m % (2 * N)]
    u = rep.tail_state(which)
    h = rep.h
    if which == "plus":
        far = (h * _geometric_form(rep, u, np.exp(-1j * kappa * h)) if u is not None
               else h * f[-1] * np.ones_like(kappa))
        return kappa, vals + sign * far + sign * h * f[0]
    # f_-(-X - k h) = -b~'(X + k h)
    far = (-h * _geometric_form(rep, u, np.exp(1j * kappa * h)) if u is not None
           else h * f[0] * np.ones_like(kappa))
    return kappa, vals + sign * far + sign * h * f[-1]


def _geometric_form(rep, u, w):
    """``sum_{k>=0} w^k l E^k u = l (I - w E)^{-1} u`` for each ``w``."""
    E, ell = rep._tail_operator()
    d = E.shape[0]
    mats = np.eye(d)[None] - w[:, None, None] * E[None].astype(complex)
    rhs = np.broadcast_to(u.astype(complex), (w.size, d))[..., None]
    return np.linalg.solve(mats, rhs)[..., 0] @ ell


def scattering_relation_error(rep: TranslationRep, tf: TransferFunction, tail: bool = True
                              ) -> float:
    kappa, fm = fourier_samples(rep, "minus", tail)
    _, fp = fourier_samples(rep, "plus", tail)
    den = np.linalg.norm(fm)
    if den == 0:
        return 0.0
    return float(np.linalg.norm(fp - tf(kappa) * fm) / den)


def verify_scattering_relation(model: NormalizedModel, data: InitialData, X: float, h: float,
                               substeps: int = 1, tail: bool = True) -> float:
    """Relative l2 error of ``f^_+ = s f^_-`` over the sampled wavenumbers."""
    rep = translation_reps(model, data, X, h, substeps)
    return scattering_relation_error(rep, transfer_function(model), tail)


def translation_covariance_check(model: NormalizedModel, data: InitialData, t: float,
                                 X: float = 30.0, h: float = 0.01) -> float:
    """``sup |R'_+(x) - R_+(x - t)|`` with ``R_+(x) = f_+(-x)`` and ``R'_+`` from the state at ``t``."""
    _require_pp_empty(model)
    xs, N = _grid(X, h)
    k = int(round(t / h))
    if k < 0 or abs(k * h - t) > 1e-9 * max(1.0, t):
        raise ValueError("t must be a non-negative multiple of h")
    if k == 0:
        return 0.0
    traj = evolve(model, data, X + t, h)
    later = traj.state_at(traj.t[k])
    rep_t = outgoing_rep(model, later, X, h)
    # R_+(x - t) = f_+(t - x) = b'(t - x); the forward run covers t - x in [t - X, t + X]
    s = t - xs
    f_shift = traj.bprime_at(s)
    r_later = rep_t.f_plus[::-1]
    return float(np.max(np.abs(r_later - f_shift)))


# --- Lax-Phillips semigroup ----------------------------------------------------------

@dataclass(frozen=True)
class LPSemigroup:
    roots: tuple          # ((z_j, nu_j), ...)
    B: np.ndarray
    gram: np.ndarray

    @property
    def dim(self) -> int:
        return self.B.shape[0]

    def basis_index(self):
        """``(root position j, power k)`` for each basis vector."""
        return [(j, k) for j, (_, nu) in enumerate(self.roots) for k in range(nu)]

    def evolution(self, t: float) -> np.ndarray:
        return expm(-t * self.B)

    def exact_evolution(self, t: float) -> np.ndarray:
        """Coefficient matrix of translation by ``t``: ``binom(k, i) (-t)^{k-i} e^{-z t}``."""
        C = np.zeros((self.dim, self.dim), dtype=complex)
        off = 0
        for z, nu in self.roots:
            ez = np.exp(-z * t)
            for k in range(nu):
                for i in range(k + 1):
                    C[off + i, off + k] = math.comb(k, i) * (-t) ** (k - i) * ez
            off += nu
        return C

    def g_norm(self, E: np.ndarray) -> float:
        """Operator norm of ``E`` in the metric ``v* G v``."""
        R = np.linalg.cholesky(self.gram).conj().T      # G = R* R
        A = np.linalg.solve(R.T, (R @ E).T).T            # R E R^-1
        return float(np.linalg.norm(A, 2))

    def dissipation(self) -> np.ndarray:
        return self.gram @ self.B + self.B.conj().T @ self.gram


def build_lp_semigroup(roots) -> LPSemigroup:
    """Generator and Gram matrix on the span of ``x^k e^{z_j x}``, ``x <= 0``."""
    pairs = roots.roots if isinstance(roots, RootSet) else tuple(roots)
    pairs = tuple((complex(z), int(m)) for z, m in pairs)
    for z, _ in pairs:
        if z.real <= 0:
            raise RootInLeftHalfPlane(f"root {z} has non-positive real part")
    dim = sum(m for _, m in pairs)
    B = np.zeros((dim, dim), dtype=complex)
    zs, ks = [], []
    off = 0
    for z, nu in pairs:
        for k in range(nu):
            B[off + k, off + k] = z
            if k:
                B[off + k - 1, off + k] = k
            zs.append(z)
            ks.append(k)
        off += nu
    zs = np.array(zs)
    ks = np.array(ks)
    # G_ab = int_{-inf}^0 conj(phi_a) phi_b
    s = ks[:, None] + ks[None, :]
    fact = np.array([math.factorial(int(v)) for v in s.ravel()], dtype=float).reshape(s.shape)
    G = (-1.0) ** s * fact / (zs.conj()[:, None] + zs[None, :]) ** (s + 1)
    G = 0.5 * (G + G.conj().T)
    try:
        np.linalg.cholesky(G)
    except np.linalg.LinAlgError as exc:
        raise ArithmeticError("Gram matrix is not positive definite") from exc
    return LPSemigroup(pairs, B, G)


def lp_semigroup_of_model(model: NormalizedModel) -> LPSemigroup:
    _require_pp_empty(model)
    return build_lp_semigroup(roots_of_model(model))


def lp_evolve_check(sg: LPSemigroup, t: float):
    """``(max |e^{-tB} - exact|, ||e^{-tB}||_G)``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    E = sg.evolution(t)
    dev = float(np.max(np.abs(E - sg.exact_evolution(t))))
    return dev, sg.g_norm(E)


def dissipativity_margin(sg: LPSemigroup) -> float:
    """Smallest eigenvalue of the Hermitian part of ``G B + B* G``."""
    D = sg.dissipation()
    return float(np.linalg.eigvalsh(0.5 * (D + D.conj().T)).min())
