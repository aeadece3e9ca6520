"""Model data, metric normalization, the Weyl function Gamma and the Krein pairing.

A generalized Lamb model couples the wave equation on the half-line to an
n-dimensional oscillator ``y'' = L y + w phi'(t, 0+)`` through the boundary
condition ``theta phi'(0+) + phi(0+) = <w, y>``.  Everything downstream works
in the orthonormal eigenbasis of ``L``, where the model reduces to the triple
``(lambda, c, theta)`` held by :class:`NormalizedModel`.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._linalg import jacobi_eigh
from .errors import (DegenerateChain, DuplicateEigenvalue, ModelValidationError,
                     PoleAtZ, ZeroCoupling)

#: relative eigenvalue gap below which two eigenvalues count as equal
DISTINCT_RTOL = 1e-9
#: distance from the excluded set {z <= 0} U {lambda_i} below which Gamma refuses
POLE_TOL = 1e-12


@dataclass(frozen=True)
class ModelSpec:
    """Model in the eigenbasis of ``L`` with a diagonal (possibly non-unit) metric."""

    eigenvalues: tuple
    coupling: tuple
    theta: float = 0.0
    metric: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", tuple(float(v) for v in self.eigenvalues))
        object.__setattr__(self, "coupling", tuple(float(v) for v in self.coupling))
        object.__setattr__(self, "theta", float(self.theta))
        if self.metric is not None:
            object.__setattr__(self, "metric", tuple(float(v) for v in self.metric))

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    def weights(self) -> np.ndarray:
        if self.metric is None:
            return np.ones(self.n)
        return np.asarray(self.metric)


@dataclass(frozen=True)
class NormalizedModel:
    """The triple ``(lambda, c, theta)`` in an orthonormal eigenbasis of ``L``.

    ``moments[k]`` is ``<w, L^k w> = sum_i c_i^2 lambda_i^k`` for ``k <= 2n``.
    """

    lam: np.ndarray
    c: np.ndarray
    theta: float
    moments: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.lam)

    @classmethod
    def from_arrays(cls, lam, c, theta=0.0) -> "NormalizedModel":
        lam = np.array(lam, dtype=float)
        c = np.array(c, dtype=float)
        if lam.ndim != 1 or lam.shape != c.shape or lam.size == 0:
            raise ModelValidationError("eigenvalues and coupling must be equal-length, non-empty")
        if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(c)) and np.isfinite(theta)):
            raise ModelValidationError("model data must be finite")
        check_distinct(lam)
        zero = np.flatnonzero(c == 0.0)
        if zero.size:
            raise ZeroCoupling(zero)
        n = lam.size
        moments = np.array([np.sum(c**2 * lam**k) for k in range(2 * n + 1)])
        lam.setflags(write=False)
        c.setflags(write=False)
        moments.setflags(write=False)
        return cls(lam, c, float(theta), moments)

    @property
    def det_L(self) -> float:
        return float(np.prod(self.lam))

    def as_dict(self) -> dict:
        return {"lambda": self.lam.tolist(), "c": self.c.tolist(), "theta": self.theta}

    def __eq__(self, other):
        if not isinstance(other, NormalizedModel):
            return NotImplemented
        return (np.array_equal(self.lam, other.lam) and np.array_equal(self.c, other.c)
                and self.theta == other.theta)

    def __hash__(self):
        return hash((self.lam.tobytes(), self.c.tobytes(), self.theta))


@dataclass(frozen=True)
class ChainSpec:
    """Chain of ``n`` point masses attached to a string of tension ``tension``."""

    masses: tuple
    springs: tuple
    tension: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))
        object.__setattr__(self, "springs", tuple(float(k) for k in self.springs))
        object.__setattr__(self, "tension", float(self.tension))
        if len(self.masses) != len(self.springs) or not self.masses:
            raise ModelValidationError("masses and springs must be equal-length, non-empty")
        if min(self.masses) <= 0 or min(self.springs) <= 0 or self.tension <= 0:
            raise ModelValidationError("chain masses, springs and tension must be positive")


def check_distinct(lam, rtol=DISTINCT_RTOL, error=DuplicateEigenvalue):
    lam = np.sort(np.asarray(lam, dtype=float))
    if lam.size < 2:
        return
    gap = np.min(np.diff(lam))
    scale = np.max(np.abs(lam))
    if gap <= rtol * scale:
        raise error(f"eigenvalues are not distinct (min gap {gap:.3e})")


def normalize(spec: ModelSpec) -> NormalizedModel:
    """Map a diagonal-metric model to the orthonormal eigenbasis, ``c_i = sqrt(g_i) w_i``."""
    g = spec.weights()
    if g.shape != (spec.n,) or len(spec.coupling) != spec.n:
        raise ModelValidationError("eigenvalues, coupling and metric lengths differ")
    if np.any(g <= 0):
        raise ModelValidationError("metric weights must be strictly positive")
    c = np.sqrt(g) * np.asarray(spec.coupling)
    return NormalizedModel.from_arrays(spec.eigenvalues, c, spec.theta)


def denormalize_coupling(model: NormalizedModel, metric=None) -> np.ndarray:
    """Inverse of the coupling map in :func:`normalize`."""
    g = np.ones(model.n) if metric is None else np.asarray(metric, dtype=float)
    return model.c / np.sqrt(g)


def drop_decoupled(spec: ModelSpec) -> ModelSpec:
    """Remove the eigen-directions carrying zero coupling.

    Those directions evolve independently of the field (they belong to
    ``sigma_w(L)``); the caller opts in to discarding them explicitly.
    """
    keep = [i for i, w in enumerate(spec.coupling) if w != 0.0]
    if not keep:
        raise ModelValidationError("every coupling component vanishes")
    metric = None if spec.metric is None else tuple(spec.metric[i] for i in keep)
    return ModelSpec(tuple(spec.eigenvalues[i] for i in keep),
                     tuple(spec.coupling[i] for i in keep), spec.theta, metric)


def chain_matrix(chain: ChainSpec) -> np.ndarray:
    """The (non-symmetric) stiffness-over-mass matrix ``L`` of the chain."""
    m = np.asarray(chain.masses)
    k = np.asarray(chain.springs)
    n = m.size
    L = np.zeros((n, n))
    if n == 1:
        L[0, 0] = -k[0] / m[0]
        return L
    L[0, 0] = -k[0] / m[0]
    L[0, 1] = k[0] / m[0]
    for j in range(1, n):
        L[j, j - 1] = k[j - 1] / m[j]
        L[j, j] = -(k[j - 1] + k[j]) / m[j]
        if j + 1 < n:
            L[j, j + 1] = k[j] / m[j]
    return L


def chain_stiffness(chain: ChainSpec) -> np.ndarray:
    """Symmetric stiffness matrix of the chain, the quadratic form of its potential."""
    k = np.asarray(chain.springs)
    n = k.size
    lam = np.zeros((n, n))
    for j in range(n):
        lam[j, j] = k[j] + (k[j - 1] if j > 0 else 0.0)
        if j + 1 < n:
            lam[j, j + 1] = lam[j + 1, j] = -k[j]
    return lam


def symmetrized_chain(chain: ChainSpec) -> np.ndarray:
    """``D L D^-1`` with ``D = diag(sqrt(M_j / T))``: a symmetric Jacobi matrix."""
    d = np.sqrt(np.asarray(chain.masses) / chain.tension)
    Lt = d[:, None] * chain_matrix(chain) / d[None, :]
    return 0.5 * (Lt + Lt.T)


def build_chain(chain: ChainSpec) -> NormalizedModel:
    Lt = symmetrized_chain(chain)
    lam, U = jacobi_eigh(Lt)
    try:
        check_distinct(lam, error=DegenerateChain)
    except DegenerateChain as exc:
        raise DegenerateChain(f"chain eigensolve produced coincident eigenvalues: {exc}") from exc
    e1 = np.zeros(len(lam))
    e1[0] = np.sqrt(chain.tension / chain.masses[0])
    c = U.T @ e1
    # eigenvector signs are arbitrary; fix c_i > 0
    c = np.abs(c)
    return NormalizedModel.from_arrays(lam, c, 0.0)


def _check_z(model: NormalizedModel, z: complex) -> None:
    if z.imag == 0.0 and z.real <= POLE_TOL:
        raise PoleAtZ(f"z={z} lies on the cut (-inf, 0]")
    if abs(z) <= POLE_TOL:
        raise PoleAtZ("z is at the branch point 0")
    d = np.min(np.abs(z - model.lam))
    if d <= POLE_TOL * max(1.0, abs(z)):
        raise PoleAtZ(f"z={z} is at an eigenvalue of L")


def gamma(model: NormalizedModel, z: complex) -> complex:
    """``Gamma(z) = -(1/sqrt(z) + sum_i c_i^2 / (z - lambda_i))``, principal root."""
    z = complex(z)
    _check_z(model, z)
    sz = cmath.sqrt(z)
    return -(1.0 / sz + complex(np.sum(model.c**2 / (z - model.lam))))


def krein_pairing(model: NormalizedModel, u: complex, z: complex) -> complex:
    """Closed-form pairing of the deficiency vectors ``G_u`` and ``G_z``.

    The field part is ``int_0^inf e^{-(sqrt u + sqrt z) x} dx / (sqrt u sqrt z)``
    and the oscillator part ``sum c_i^2 / ((u - lambda_i)(z - lambda_i))``.
    """
    su, sz = cmath.sqrt(complex(u)), cmath.sqrt(complex(z))
    field_part = 1.0 / (su * sz * (su + sz))
    osc = complex(np.sum(model.c**2 / ((u - model.lam) * (z - model.lam))))
    return field_part + osc


def krein_identity_residual(model: NormalizedModel, z: complex, u: complex) -> float:
    """``|Gamma(z) - Gamma(u) - (z - u) P(u, z)|``; zero up to rounding."""
    z, u = complex(z), complex(u)
    gz = gamma(model, z)
    gu = gamma(model, u)
    if z == u:
        return 0.0
    return abs(gz - gu - (z - u) * krein_pairing(model, u, z))
