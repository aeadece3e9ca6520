"""Spectrum of the coupled operator.

The essential spectrum is always ``(-inf, 0]``.  Positive eigenvalues
``lambda = x^2`` solve ``1/x + sum_i c_i^2 / (x^2 - lambda_i) = theta`` for
``x > 0``; the left-hand side is strictly decreasing between its poles, which
makes a sign-change scan plus bisection reliable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy.optimize import brentq

from .errors import ScanIncomplete
from .model_core import NormalizedModel, gamma

ESSENTIAL_SPECTRUM = (-math.inf, 0.0)
PROBES = 4096


@dataclass(frozen=True)
class BoundState:
    eigenvalue: float
    decay_rate: float          # field part is exp(-decay_rate * x)
    y: np.ndarray              # oscillator part, same gauge as the field part
    norm: float = field(default=0.0)   # sqrt(||e^{-x sqrt(lambda)}||^2 + ||y||^2)


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: Tuple[float, ...]
    bound_states: Tuple[BoundState, ...]
    essential: Tuple[float, float] = ESSENTIAL_SPECTRUM

    @property
    def pp_empty(self) -> bool:
        return len(self.eigenvalues) == 0


def essential_spectrum(model: NormalizedModel | None = None) -> Tuple[float, float]:
    return ESSENTIAL_SPECTRUM


def pp_empty_check(model: NormalizedModel) -> bool:
    """No positive eigenvalue iff ``sigma(L) < 0`` and ``theta <= 0``."""
    return bool(np.all(model.lam < 0) and model.theta <= 0)


def secular_function(model: NormalizedModel, x):
    x = np.asarray(x, dtype=float)
    return (1.0 / x + np.sum(model.c[:, None] ** 2 / (x[None, ...] ** 2 - model.lam[:, None]), axis=0)
            - model.theta)


def scan_bound(model: NormalizedModel) -> float:
    """Right end of the scan range.

    The heuristic ``2(1 + max sqrt|lambda_i|)(1 + sum c_i^2 + |theta|)`` is
    widened, for ``theta > 0``, to a point beyond which the secular function is
    provably negative.
    """
    s = float(np.sum(model.c**2))
    xmax = 2.0 * (1.0 + np.max(np.sqrt(np.abs(model.lam)))) * (1.0 + s + abs(model.theta))
    if model.theta > 0:
        lam_pos = max(0.0, float(np.max(model.lam)))
        # for x^2 >= 2 lambda_max: sum c^2/(x^2 - lambda) <= 2 s / x^2
        safe = max(math.sqrt(2.0 * lam_pos), 2.0 / model.theta, math.sqrt(4.0 * s / model.theta))
        xmax = max(xmax, 2.0 * safe)
    return xmax


def _probe_grid(lo, hi, count):
    # geometric clustering towards both (possibly singular) ends
    u = np.linspace(0.0, 1.0, count + 2)[1:-1]
    width = hi - lo
    t = 0.5 * (1 - np.cos(np.pi * u))
    pts = lo + width * t
    tiny = np.geomspace(1e-12, 1e-3, 64)
    return np.unique(np.concatenate([pts, lo + width * tiny, hi - width * tiny]))


def point_spectrum(model: NormalizedModel) -> SpectralData:
    xmax = scan_bound(model)
    poles = np.sort(np.sqrt(model.lam[model.lam > 0]))
    if poles.size and poles[-1] >= xmax:
        xmax = 2.0 * poles[-1]
    edges = np.concatenate([[0.0], poles, [xmax]])
    roots = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        xs = _probe_grid(lo, hi, PROBES)
        if hi == xmax:
            xs = xs[xs <= hi]
        fs = secular_function(model, xs)
        ok = np.isfinite(fs)
        xs, fs = xs[ok], fs[ok]
        for i in np.flatnonzero(np.sign(fs[:-1]) * np.sign(fs[1:]) < 0):
            r = brentq(lambda x: float(secular_function(model, x)[0]), xs[i], xs[i + 1],
                       xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
            roots.append(r)
        for i in np.flatnonzero(fs == 0):
            roots.append(float(xs[i]))
    tail = np.linspace(xmax, 10 * xmax, 257)
    ft = secular_function(model, tail)
    if not (np.all(ft > 0) or np.all(ft < 0)):
        raise ScanIncomplete(f"secular function changes sign beyond x = {xmax:.6g}")
    roots = sorted(set(roots))
    states = tuple(bound_state(model, x) for x in roots)
    return SpectralData(tuple(x * x for x in roots), states)


def bound_state(model: NormalizedModel, x: float) -> BoundState:
    """Eigenvector ``(e^{-x s}, y)`` for the eigenvalue ``x^2``; ``y = -x (x^2 - L)^{-1} c``."""
    y = -x * model.c / (x * x - model.lam)
    norm = math.sqrt(1.0 / (2.0 * x) + float(y @ y))
    y.setflags(write=False)
    return BoundState(x * x, x, y, norm)


def eigen_residuals(model: NormalizedModel, state: BoundState):
    """Residuals of ``theta + Gamma(lambda) = 0``, of the boundary condition and of
    ``(lambda - L) y = -sqrt(lambda) c``."""
    lam = state.eigenvalue
    x = state.decay_rate
    r_gamma = abs(model.theta + gamma(model, lam))
    # phi = e^{-x s}: phi(0) = 1, phi'(0) = -x
    r_bc = abs(model.theta * (-x) + 1.0 - float(model.c @ state.y))
    r_vec = float(np.max(np.abs((lam - model.lam) * state.y + x * model.c)))
    return r_gamma, r_bc, r_vec
