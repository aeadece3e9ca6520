"""Closed-form field profiles on the half-line.

A :class:`FieldProfile` is a finite sum of Gaussian-polynomial terms
``A (x - x0)^q exp(-sigma (x - x0)^2)`` and compactly supported bumps
``A exp(-1 / (1 - ((x - x0)/r)^2))``.  Values and derivatives of any order are
exact (polynomial recurrences), and tail integrals ``int_x^inf`` are closed
form for the Gaussian terms and composite Gauss-Legendre for bumps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Tuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy import special



@dataclass(frozen=True)
class GaussianTerm:
    amplitude: float
    center: float
    sigma: float = 1.0
    power: int = 0

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("Gaussian width parameter sigma must be positive")
        if int(self.power) != self.power or self.power < 0:
            raise ValueError("power must be a non-negative integer")

    def derivative(self, x, k: int = 0):
        u = np.asarray(x, dtype=float) - self.center
        poly = _gauss_deriv_poly(self.power, self.sigma, k)
        return self.amplitude * poly(u) * np.exp(-self.sigma * u * u)

    def tail_integral(self, x):
        u = np.asarray(x, dtype=float) - self.center
        return self.amplitude * _gauss_tail(self.power, self.sigma, u)

    def support(self) -> Tuple[float, float]:
        # exp(-sigma u^2) < 1e-40 beyond this radius (polynomial factor included)
        r = math.sqrt(95.0 / self.sigma) + math.sqrt(self.power / self.sigma)
        return self.center - r, self.center + r

    def to_dict(self):
        return {"kind": "gaussian", "amplitude": self.amplitude, "center": self.center,
                "sigma": self.sigma, "power": int(self.power)}


@dataclass(frozen=True)
class BumpTerm:
    amplitude: float
    center: float
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("bump radius must be positive")
        if self.center - self.radius < 0:
            raise ValueError("bump support must lie in [0, inf)")

    def derivative(self, x, k: int = 0):
        x = np.asarray(x, dtype=float)
        s = (x - self.center) / self.radius
        inside = np.abs(s) < 1.0
        out = np.zeros_like(s)
        si = s[inside]
        d = 1.0 - si * si
        q = _bump_deriv_poly(k)
        out[inside] = q(si) / d ** (2 * k) * np.exp(-1.0 / d)
        return self.amplitude * out / self.radius**k

    def tail_integral(self, x):
        """Composite Gauss-Legendre on a fixed panel partition; partial panels get their own rule."""
        x = np.asarray(x, dtype=float)
        lo, hi = self.support()
        edges = np.linspace(lo, hi, _BUMP_PANELS + 1)
        nodes, weights = _GL_NODES
        half = 0.5 * (edges[1:] - edges[:-1])
        mid = 0.5 * (edges[1:] + edges[:-1])
        panel = (half[:, None] * weights[None, :]
                 * self.derivative(mid[:, None] + half[:, None] * nodes[None, :])).sum(axis=1)
        right = np.concatenate([np.cumsum(panel[::-1])[::-1], [0.0]])   # int over [edges[j], hi]
        flat = np.clip(np.atleast_1d(x).ravel(), lo, hi)
        j = np.clip(np.searchsorted(edges, flat, side="right") - 1, 0, _BUMP_PANELS - 1)
        end = edges[j + 1]
        h = 0.5 * (end - flat)
        m = 0.5 * (end + flat)
        part = (h[:, None] * weights[None, :]
                * self.derivative(m[:, None] + h[:, None] * nodes[None, :])).sum(axis=1)
        out = part + right[j + 1]
        return out.reshape(np.shape(x)) if np.ndim(x) else float(out[0])

    def support(self) -> Tuple[float, float]:
        return self.center - self.radius, self.center + self.radius

    def to_dict(self):
        return {"kind": "bump", "amplitude": self.amplitude, "center": self.center,
                "radius": self.radius}


_BUMP_PANELS = 64
_GL_NODES = np.polynomial.legendre.leggauss(20)


@lru_cache(maxsize=None)
def _gauss_deriv_poly(q: int, sigma: float, k: int) -> Polynomial:
    # d/du [P(u) e^{-sigma u^2}] = (P' - 2 sigma u P) e^{-sigma u^2}
    p = Polynomial([0.0] * q + [1.0])
    for _ in range(k):
        p = p.deriv() - Polynomial([0.0, 2.0 * sigma]) * p
    return p


@lru_cache(maxsize=None)
def _bump_deriv_poly(k: int) -> Polynomial:
    # f^{(k)} = Q_k(s) / (1 - s^2)^{2k} * exp(-1/(1 - s^2))
    q = Polynomial([1.0])
    d = Polynomial([1.0, 0.0, -1.0])
    s = Polynomial([0.0, 1.0])
    for j in range(k):
        q = q.deriv() * d * d + 4 * j * s * q * d - 2 * s * q
    return q


def _gauss_tail(q: int, sigma: float, u):
    """``int_u^inf v^q exp(-sigma v^2) dv`` by the integration-by-parts recursion."""
    u = np.asarray(u, dtype=float)
    g = np.exp(-sigma * u * u)
    i0 = 0.5 * math.sqrt(math.pi / sigma) * special.erfc(math.sqrt(sigma) * u)
    i1 = g / (2.0 * sigma)
    if q == 0:
        return i0
    if q == 1:
        return i1
    prev2, prev1 = i0, i1
    for m in range(2, q + 1):
        cur = u ** (m - 1) * g / (2.0 * sigma) + (m - 1) / (2.0 * sigma) * prev2
        prev2, prev1 = prev1, cur
    return prev1


class FieldProfile:
    """Sum of closed-form terms; the zero profile has no terms."""

    def __init__(self, terms=()):
        self.terms = tuple(terms)

    @classmethod
    def zero(cls) -> "FieldProfile":
        return cls(())

    @classmethod
    def gaussian(cls, amplitude=1.0, center=5.0, sigma=1.0, power=0) -> "FieldProfile":
        return cls((GaussianTerm(amplitude, center, sigma, power),))

    @classmethod
    def bump(cls, amplitude=1.0, center=5.5, radius=0.5) -> "FieldProfile":
        return cls((BumpTerm(amplitude, center, radius),))

    def __call__(self, x, k: int = 0):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for t in self.terms:
            out = out + t.derivative(x, k)
        return out

    derivative = __call__

    def derivatives_at(self, x: float, order: int) -> np.ndarray:
        """``[f(x), f'(x), ..., f^{(order)}(x)]``."""
        return np.array([float(self(x, k)) for k in range(order + 1)])

    def tail_integral(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for t in self.terms:
            out = out + t.tail_integral(x)
        return out

    def support(self) -> Tuple[float, float]:
        """Interval outside of which every term is negligible (below ~1e-40)."""
        if not self.terms:
            return (0.0, 0.0)
        los, his = zip(*(t.support() for t in self.terms))
        return max(0.0, min(los)), max(0.0, max(his))

    @property
    def is_zero(self) -> bool:
        return all(t.amplitude == 0 for t in self.terms)

    def __add__(self, other: "FieldProfile") -> "FieldProfile":
        return FieldProfile(self.terms + other.terms)

    def scaled(self, factor: float) -> "FieldProfile":
        terms = []
        for t in self.terms:
            d = dict(t.__dict__)
            d["amplitude"] = factor * t.amplitude
            terms.append(type(t)(**d))
        return FieldProfile(terms)

    def to_list(self):
        return [t.to_dict() for t in self.terms]

    @classmethod
    def from_list(cls, items) -> "FieldProfile":
        terms = []
        for item in items or ():
            item = dict(item)
            kind = item.pop("kind", "gaussian")
            if kind == "gaussian":
                terms.append(GaussianTerm(float(item.get("amplitude", 1.0)),
                                          float(item["center"]),
                                          float(item.get("sigma", 1.0)),
                                          int(item.get("power", 0))))
            elif kind == "bump":
                terms.append(BumpTerm(float(item.get("amplitude", 1.0)),
                                      float(item["center"]), float(item["radius"])))
            else:
                raise ValueError(f"unknown profile term kind {kind!r}")
        return cls(terms)

    def __repr__(self):
        return f"FieldProfile({list(self.terms)!r})"
