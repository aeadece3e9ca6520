"""Physical models expressed as generalized Lamb models.

Each preset maps its physical parameters to ``(metric g, L, w, theta)`` with
a one-dimensional oscillator space (or the tridiagonal chain), and
normalizes through :func:`lambscat.model_core.normalize`.
"""

from __future__ import annotations

import math

from .model_core import ChainSpec, ModelSpec, NormalizedModel, build_chain, normalize
from .profiles import FieldProfile


def lamb_chain(masses=(1.0,), springs=(1.0,), tension=1.0) -> NormalizedModel:
    """Point masses on springs attached to a string; ``n = len(masses)``."""
    return build_chain(ChainSpec(tuple(masses), tuple(springs), tension))


def pauli_fierz_spec(m=1.0, omega=1.0, e=1.0) -> ModelSpec:
    """Renormalized dipole oscillator: ``g = 2/(3 m w^2)``, ``L = -w^2``, ``w = e w^2``."""
    if m <= 0 or omega <= 0 or e == 0:
        raise ValueError("need m > 0, omega > 0 and e != 0")
    return ModelSpec((-omega**2,), (e * omega**2,), 2.0 * e**2 / (3.0 * m),
                     (2.0 / (3.0 * m * omega**2),))


def pauli_fierz(m=1.0, omega=1.0, e=1.0) -> NormalizedModel:
    return normalize(pauli_fierz_spec(m, omega, e))


def acoustic_shell_spec(M=1.0, K=1.0, R0=1.0) -> ModelSpec:
    """Elastic spherical shell in an acoustic field, radial motion only."""
    if M <= 0 or K <= 0 or R0 <= 0:
        raise ValueError("need M, K, R0 > 0")
    w2 = K / M
    return ModelSpec((-w2 / (1.0 + R0),), (-4.0 * math.pi * w2 * R0**2 / (1.0 + R0),),
                     -R0 / (1.0 + R0), (1.0 / (4.0 * math.pi * K),))


def acoustic_shell(M=1.0, K=1.0, R0=1.0) -> NormalizedModel:
    return normalize(acoustic_shell_spec(M, K, R0))


def two_mode() -> NormalizedModel:
    """The ``n = 2`` test model ``lambda = (-1, -2)``, ``c = (1, 1)``, ``theta = 0``."""
    return NormalizedModel.from_arrays([-1.0, -2.0], [1.0, 1.0], 0.0)


def gaussian_pulse(center=5.0, sigma=1.0, amplitude=1.0) -> FieldProfile:
    """Standard test pulse ``A exp(-sigma (x - x0)^2)``, at rest."""
    return FieldProfile.gaussian(amplitude, center, sigma)
