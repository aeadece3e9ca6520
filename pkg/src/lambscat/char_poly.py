"""The boundary polynomial ``p`` and its roots.

``p`` is built twice: from the recursion ``p_1 = theta z + 1``,
``p_k = z^2 p_{k-1} - <w, L^{k-2} w> z`` corrected by a Vandermonde solve, and
from the closed form ``(theta z + 1) det(z^2 - L) - z sum_j (...) z^{2(n-j)}``.
The closed form is the production path; the Vandermonde route verifies it.
Roots with negative real part are bound states (``lambda = z^2``), those with
positive real part are resonances.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import List, Sequence, Tuple

import numpy as np

from ._linalg import solve_pivoted
from .errors import ImaginaryAxisRoot, ModelValidationError, NoConvergence
from .model_core import NormalizedModel

TRIM_RTOL = 1e-14
CLUSTER_RADIUS = 1e-7
IMAG_AXIS_TOL = 1e-8


@dataclass(frozen=True)
class RealPolynomial:
    """Real polynomial with coefficients in ascending degree order."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float).ravel()
        if c.size == 0 or not np.any(c):
            raise ValueError("the zero polynomial has no degree")
        scale = np.max(np.abs(c))
        nz = np.flatnonzero(np.abs(c) > TRIM_RTOL * scale)
        c = c[: nz[-1] + 1].copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, z):
        # Horner, highest coefficient first
        z = np.asarray(z)
        acc = np.zeros_like(z, dtype=np.result_type(z, float))
        for a in self.coeffs[::-1]:
            acc = acc * z + a
        return acc

    def deriv(self) -> "RealPolynomial":
        if self.degree == 0:
            return _ZERO_DERIV
        k = np.arange(1, self.coeffs.size)
        return RealPolynomial(self.coeffs[1:] * k)

    def norm1(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))

    def __eq__(self, other):
        if not isinstance(other, RealPolynomial):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())


class _ZeroDerivative:
    degree = -1
    coeffs = np.zeros(1)

    def __call__(self, z):
        return np.zeros_like(np.asarray(z), dtype=complex)


_ZERO_DERIV = _ZeroDerivative()


@dataclass(frozen=True)
class RootSet:
    """Distinct roots with multiplicities, split by the sign of the real part."""

    roots: Tuple[Tuple[complex, int], ...]
    eigen_roots: Tuple[Tuple[complex, int], ...] = ()
    resonances: Tuple[Tuple[complex, int], ...] = ()

    @property
    def degree(self) -> int:
        return sum(m for _, m in self.roots)

    def values(self) -> np.ndarray:
        """All roots repeated by multiplicity."""
        return np.array([z for z, m in self.roots for _ in range(m)], dtype=complex)


# --- construction --------------------------------------------------------------------

def _pmul(a, b):
    return np.convolve(a, b)


def _padd(a, b):
    out = np.zeros(max(len(a), len(b)))
    out[: len(a)] += a
    out[: len(b)] += b
    return out


def _pk_coeffs(model: NormalizedModel, k_max: int) -> List[np.ndarray]:
    mu = model.moments
    seq = [np.array([1.0, model.theta])]
    for k in range(2, k_max + 1):
        prev = seq[-1]
        nxt = _padd(_pmul([0.0, 0.0, 1.0], prev), [0.0, -mu[k - 2]])
        seq.append(nxt)
    return seq


def build_pk_sequence(model: NormalizedModel, k_max: int) -> List[RealPolynomial]:
    """``p_1, ..., p_{k_max}`` from the two-term recursion."""
    if not 1 <= k_max <= model.n + 1:
        raise ValueError(f"k_max must lie in [1, n+1] = [1, {model.n + 1}]")
    return [RealPolynomial(c) for c in _pk_coeffs(model, k_max)]


def _exact_residual(lam, d):
    """``lambda_i^n - sum_j d_j lambda_i^j`` in rational arithmetic, rounded once."""
    n = len(lam)
    out = np.empty(n)
    dq = [Fraction(float(v)) for v in d]
    for i, l in enumerate(lam):
        lq = Fraction(float(l))
        acc = Fraction(0)
        for j in range(n - 1, -1, -1):      # Horner
            acc = acc * lq + dq[j]
        out[i] = float(lq**n - acc)
    return out


def vandermonde_correction(model: NormalizedModel, refine: int = 3) -> np.ndarray:
    """Solve ``V^T d = (lambda_i^n)``: ``d_j = sum_i lambda_i^n (V^-1)_ij``.

    ``V`` reaches condition numbers near 1e12 for clustered eigenvalues, so the
    pivoted solve is followed by a few refinement steps with exact residuals.
    """
    lam = model.lam
    n = model.n
    vt = lam[:, None] ** np.arange(n)[None, :]
    d = solve_pivoted(vt, lam**n)
    for _ in range(refine):
        delta = solve_pivoted(vt, _exact_residual(lam, d))
        d = d + delta
        if np.max(np.abs(delta)) <= 1e-16 * np.max(np.abs(d)):
            break
    return d


def build_p_vandermonde(model: NormalizedModel) -> RealPolynomial:
    """``p = p_{n+1} - sum_j d_j p_j`` (verification route)."""
    n = model.n
    pk = _pk_coeffs(model, n + 1)
    d = vandermonde_correction(model)
    p = pk[n].copy()
    for j in range(n):
        p = _padd(p, -d[j] * pk[j])
    return RealPolynomial(p)


def elementary_symmetric(lam) -> np.ndarray:
    """``a_0..a_n`` with ``prod_i (x - lambda_i) = sum_j a_j x^{n-j}``."""
    a = np.array([1.0])
    for l in lam:
        a = np.append(a, 0.0) - l * np.append(0.0, a)
    return a


def build_p_closed_form(model: NormalizedModel) -> RealPolynomial:
    """``p(z) = (theta z + 1) det(z^2 - L) - z sum_j (sum_{k<=j} a_{j-k} mu_{k-1}) z^{2(n-j)}``.

    The inner sum equals ``sum_i c_i^2 q_{i, j}`` where ``q_i`` holds the
    coefficients of ``det(x - L) / (x - lambda_i)``.  It is evaluated in that
    per-mode form: expanding through the moments cancels badly once
    ``|lambda|`` reaches ~10 (up to 1e-10 relative at n = 8).
    """
    n = model.n
    lam = model.lam
    a = elementary_symmetric(lam)
    det_part = np.zeros(2 * n + 1)
    det_part[2 * (n - np.arange(n + 1))] = a
    p = _pmul(det_part, [1.0, model.theta])
    inner = np.zeros(n)
    for i in range(n):
        inner += model.c[i] ** 2 * elementary_symmetric(np.delete(lam, i))
    for j in range(1, n + 1):
        p[2 * (n - j) + 1] -= inner[j - 1]
    return RealPolynomial(p)


def boundary_polynomial(model: NormalizedModel) -> RealPolynomial:
    return build_p_closed_form(model)


# --- roots ---------------------------------------------------------------------------

def _aberth(c_desc: np.ndarray, max_iter: int):
    """Aberth-Ehrlich iteration on the monic polynomial with descending coefficients.

    A root is frozen once its residual is at the rounding level of Horner's
    rule or its correction stops moving it.
    """
    deg = c_desc.size - 1
    dc = c_desc[:-1] * np.arange(deg, 0, -1)
    abs_c = np.abs(c_desc)
    eps = np.finfo(float).eps
    radius = 1.0 + np.max(abs_c[1:])
    angles = 2 * np.pi * np.arange(deg) / deg + 0.4
    z = radius * np.exp(1j * angles)
    active = np.ones(deg, dtype=bool)
    for it in range(max_iter):
        idx = np.flatnonzero(active)
        za = z[idx]
        pz = np.polyval(c_desc, za)
        bound = 2 * eps * np.polyval(abs_c, np.abs(za))
        done = np.abs(pz) <= bound
        dpz = np.polyval(dc, za)
        ratio = pz / np.where(dpz == 0, 1e-300, dpz)
        diff = za[:, None] - z[None, :]
        diff[np.arange(idx.size), idx] = 1.0
        inv = 1.0 / diff
        inv[np.arange(idx.size), idx] = 0.0
        s = inv.sum(axis=1)
        step = ratio / (1.0 - ratio * s)
        step[done] = 0.0
        z[idx] = za - step
        small = np.abs(step) <= 4 * eps * np.maximum(1.0, np.abs(za))
        active[idx[done | small]] = False
        if not active.any():
            return z, it + 1, True
    return z, max_iter, False


def relative_residual(p: RealPolynomial, z: complex) -> float:
    """Backward error ``|p(z)| / sum_k |a_k| |z|^k``; equals ``|p(z)|/||p||_1`` on the unit disc."""
    scale = float(np.sum(np.abs(p.coeffs) * abs(z) ** np.arange(p.coeffs.size)))
    if scale == 0.0:
        return 0.0      # z = 0 and p(0) = 0 exactly
    return float(abs(p(z))) / scale


def _cluster(z: np.ndarray, radius: float):
    groups: List[List[complex]] = []
    for r in z:
        for g in groups:
            if abs(np.mean(g) - r) <= radius * max(1.0, abs(r)):
                g.append(r)
                break
        else:
            groups.append([r])
    return [(complex(np.mean(g)), len(g)) for g in groups]


def find_roots(p: RealPolynomial, max_iter: int = 500) -> RootSet:
    """All complex roots of ``p`` with multiplicities (unclassified)."""
    if p.degree < 1:
        raise ValueError("polynomial degree must be at least 1")
    c_desc = p.coeffs[::-1] / p.coeffs[-1]
    if p.degree == 1:
        z = np.array([-c_desc[1] + 0j])
    else:
        z, _, ok = _aberth(c_desc, max_iter)
        if not ok:
            res = np.max(np.abs(np.polyval(c_desc, z)))
            if res > 1e-10 * np.sum(np.abs(c_desc)):
                raise NoConvergence("Aberth iteration hit the iteration cap", z, res)
    raw = list(z)
    clusters = _cluster(np.array(raw), CLUSTER_RADIUS)
    dp = p.deriv()
    polished = []
    for r, m in clusters:
        if m == 1:
            # one Newton step, kept only if it does not increase the residual
            d = dp(r)
            if d != 0:
                cand = r - p(r) / d
                if abs(p(cand)) <= abs(p(r)):
                    r = cand
        polished.append((complex(r), m))
    polished = _pair_conjugates(polished)
    for r, m in polished:
        res = relative_residual(p, r)
        if res > 1e-10:
            raise NoConvergence(f"root {r} has relative residual {res:.3e}", r, res)
    polished.sort(key=lambda t: (t[0].real, t[0].imag))
    return RootSet(tuple(polished))


def _pair_conjugates(roots):
    """Make real roots exactly real and complex roots exactly conjugate-paired.

    A root is paired with the nearest other root to its conjugate when that
    partner is closer than the root's own mirror image; otherwise it is real.
    """
    pending = list(roots)
    candidates = []
    for i, (r, _) in enumerate(pending):
        if r.imag <= 0:
            continue
        for j, (q, _) in enumerate(pending):
            if j != i and q.imag < 0:
                d = abs(q.conjugate() - r)
                if d < abs(r.imag):
                    candidates.append((d, i, j))
    candidates.sort()
    used = set()
    out = []
    for _, i, j in candidates:
        if i in used or j in used:
            continue
        used.update((i, j))
        (r, m), (q, mq) = pending[i], pending[j]
        avg = 0.5 * (r + q.conjugate())
        out.append((avg, m))
        out.append((avg.conjugate(), mq))
    for k, (r, m) in enumerate(pending):
        if k not in used:
            out.append((complex(r.real, 0.0), m))
    return out


def classify_roots(model: NormalizedModel, roots: RootSet) -> RootSet:
    """Split roots into bound-state roots (Re z < 0, real) and resonances (Re z > 0)."""
    if np.min(np.abs(model.lam)) < 1e-12:
        raise ModelValidationError("classification needs det L != 0")
    eig, res = [], []
    for z, m in roots.roots:
        if abs(z.real) < IMAG_AXIS_TOL:
            raise ImaginaryAxisRoot(f"root {z} lies on the imaginary axis")
        if z.real < 0:
            if abs(z.imag) > IMAG_AXIS_TOL:
                raise ImaginaryAxisRoot(f"left half-plane root {z} is not real")
            eig.append((complex(z.real, 0.0), m))
        else:
            res.append((z, m))
    return RootSet(roots.roots, tuple(eig), tuple(res))


def roots_of_model(model: NormalizedModel) -> RootSet:
    return classify_roots(model, find_roots(build_p_closed_form(model)))
