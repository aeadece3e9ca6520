"""Polynomial oscillator potentials for the anharmonic extension.

A potential is stored as a table of monomials ``coef * prod_i y_i^{e_i}`` in
the normalized eigenbasis coordinates, so the integrator can evaluate the
gradient without calling back into Python.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp

from .model_core import NormalizedModel


@dataclass(frozen=True)
class PolynomialPotential:
    coefs: np.ndarray        # shape (P,)
    exponents: np.ndarray    # shape (P, n), non-negative ints
    expression: str = ""

    @property
    def n(self) -> int:
        return self.exponents.shape[1]

    @classmethod
    def from_terms(cls, terms: dict, n: int, expression: str = "") -> "PolynomialPotential":
        items = [(tuple(int(e) for e in k), float(v)) for k, v in terms.items() if v != 0]
        if not items:
            items = [((0,) * n, 0.0)]
        exps = np.array([k for k, _ in items], dtype=np.int64).reshape(len(items), n)
        coefs = np.array([v for _, v in items], dtype=float)
        return cls(coefs, exps, expression)

    @classmethod
    def from_expression(cls, expr: str, n: int) -> "PolynomialPotential":
        """Parse ``expr`` in variables ``y1..yn`` (``y`` is accepted when ``n == 1``)."""
        syms = sp.symbols(" ".join(f"y{i + 1}" for i in range(n)))
        syms = (syms,) if n == 1 else tuple(syms)
        local = {f"y{i + 1}": s for i, s in enumerate(syms)}
        if n == 1:
            local["y"] = syms[0]
        parsed = sp.sympify(expr, locals=local)
        extra = parsed.free_symbols - set(syms)
        if extra:
            raise ValueError(f"unknown symbols in potential: {sorted(map(str, extra))}")
        poly = sp.Poly(sp.expand(parsed), *syms)
        if not all(c.is_real for c in poly.coeffs()):
            raise ValueError("potential coefficients must be real numbers")
        return cls.from_terms({m: float(c) for m, c in poly.terms()}, n, str(expr))

    @classmethod
    def harmonic(cls, model: NormalizedModel) -> "PolynomialPotential":
        """``V(y) = -1/2 <L y, y>``: reproduces the linear dynamics."""
        n = model.n
        terms = {}
        for i, lam in enumerate(model.lam):
            e = [0] * n
            e[i] = 2
            terms[tuple(e)] = -0.5 * lam
        return cls.from_terms(terms, n, "-1/2 <Ly, y>")

    def value(self, y) -> float:
        y = np.asarray(y, dtype=float)
        return float(np.sum(self.coefs * np.prod(y[None, :] ** self.exponents, axis=1)))

    def gradient(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        g = np.zeros(self.n)
        for coef, e in zip(self.coefs, self.exponents):
            for j in range(self.n):
                if e[j] == 0:
                    continue
                ee = e.copy()
                ee[j] -= 1
                g[j] += coef * e[j] * np.prod(y ** ee)
        return g

    def degree(self) -> int:
        return int(self.exponents.sum(axis=1).max())

    def growth_condition(self, samples: int = 20000, seed: int = 0) -> dict:
        """Check ``V(y) >= c1 |y|^2 - c2`` through the leading homogeneous part.

        Sufficient test: the top-degree form has even degree >= 2 and is
        positive on the unit sphere (exact for one variable, sampled otherwise).
        Reported, never enforced.
        """
        deg = self.degree()
        top = self.exponents.sum(axis=1) == deg
        if deg < 2 or deg % 2:
            return {"satisfied": False, "degree": deg,
                    "reason": "leading degree must be even and at least 2"}
        if self.n == 1:
            lead = float(self.coefs[top].sum())
            ok = lead > 0
            return {"satisfied": ok, "degree": deg,
                    "reason": f"leading coefficient {lead:g}" + (" > 0" if ok else " <= 0")}
        rng = np.random.default_rng(seed)
        u = rng.normal(size=(samples, self.n))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
        u = np.vstack([u, np.eye(self.n), -np.eye(self.n)])
        vals = (u[:, None, :] ** self.exponents[top][None, :, :]).prod(axis=2) @ self.coefs[top]
        m = float(vals.min())
        return {"satisfied": m > 0, "degree": deg,
                "reason": f"min of leading form on sampled unit sphere {m:.3g}"}
