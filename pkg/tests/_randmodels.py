"""Seeded random models shared by the unit and acceptance tests."""

import numpy as np

from lambscat.model_core import NormalizedModel

MIN_GAP = 0.05
# resonance widths scale like c_i^2; below this the imaginary-axis guard fires
MIN_COUPLING = 0.05


def random_lambdas(rng, n, negative_only=False):
    while True:
        mag = rng.uniform(0.1, 10.0, size=n)
        sign = -np.ones(n) if negative_only else rng.choice([-1.0, 1.0], size=n)
        lam = np.sort(sign * mag)
        if n == 1 or np.min(np.diff(lam)) >= MIN_GAP:
            return lam


def random_couplings(rng, n):
    mag = rng.uniform(MIN_COUPLING, 5.0, size=n)
    return rng.choice([-1.0, 1.0], size=n) * mag


def random_model(rng, n_max=8, theta_zero=False, negative_only=False, theta_range=(-3.0, 3.0)):
    n = int(rng.integers(1, n_max + 1))
    lam = random_lambdas(rng, n, negative_only)
    c = random_couplings(rng, n)
    theta = 0.0 if theta_zero else float(rng.uniform(*theta_range))
    return NormalizedModel.from_arrays(lam, c, theta)


def model_batch(seed, count, n_max=8, zero_every=4, **kw):
    """``count`` models; every ``zero_every``-th one has ``theta = 0`` exactly."""
    rng = np.random.default_rng(seed)
    return [random_model(rng, n_max, theta_zero=(i % zero_every == zero_every - 1), **kw)
            for i in range(count)]
