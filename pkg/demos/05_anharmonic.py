"""
Anharmonic oscillators
======================

The reduction works for any polynomial potential ``V(y)``.  With
``V = -1/2 <L y, y>`` it reproduces the linear model exactly; a quartic
potential that grows at infinity keeps the flow global and conserves energy.
"""

import numpy as np

from lambscat.dynamics import InitialData, evolve
from lambscat.potentials import PolynomialPotential
from lambscat.presets import gaussian_pulse, lamb_chain, two_mode

m = two_mode()
data = InitialData.compatible(m, gaussian_pulse(center=5.0))
lin = evolve(m, data, 10.0, 1e-3)
harm = evolve(m, data, 10.0, 1e-3, potential=PolynomialPotential.harmonic(m))
print("harmonic potential vs linear run, sup |dy|:", np.abs(lin.y - harm.y).max())

lamb = lamb_chain()
for amp in (0.5, 2.0, 4.0):
    d = InitialData.compatible(lamb, gaussian_pulse(5.0, 1.0, amp))
    for expr in ("y**2/2", "y**4 + y**2"):
        v = PolynomialPotential.from_expression(expr, 1)
        tr = evolve(lamb, d, 20.0, 1e-3, potential=v)
        print(f"A = {amp}  V = {expr:12s} max |y| = {np.abs(tr.y).max():.4f}  "
              f"drift = {tr.energy_drift().max():.1e}  "
              f"growth condition: {v.growth_condition()['satisfied']}")
