"""
Energy bookkeeping and relaxation of the oscillator
===================================================

A Gaussian pulse starting at x = 5 travels to the origin, kicks the mass and
is partly reflected.  The field is never discretized: d'Alembert's formula
reduces the problem to an ODE for the oscillator and the emitted wave.
"""

import numpy as np

from lambscat.char_poly import roots_of_model
from lambscat.dynamics import InitialData, energy, evolve, field_snapshot, fit_decay_rate
from lambscat.presets import gaussian_pulse, lamb_chain

model = lamb_chain()
data = InitialData.compatible(model, gaussian_pulse(center=5.0))
traj = evolve(model, data, T=20.0, dt=1e-3)

print("t      |y|          E(t)            pieces (grad, kin, osc kin, osc pot)")
for t in (0.0, 4.0, 6.0, 10.0, 20.0):
    k = traj.index_of(t)
    e = energy(model, (traj, t))
    print(f"{t:5.1f}  {abs(traj.y[k, 0]):.3e}  {traj.energy[k]:.12f}  "
          f"({e.field_gradient:.4f}, {e.field_kinetic:.4f}, "
          f"{e.oscillator_kinetic:.4f}, {e.oscillator_potential:.4f})")
print("max relative energy drift:", traj.energy_drift().max())

# Nothing moves before the pulse arrives
print("max |y| for t < 4:", np.abs(traj.y[traj.t < 4.0]).max())

# After the pulse has left, the oscillator rings down at the slowest resonance rate
rate = fit_decay_rate(traj, 10.0, 20.0)
target = min(z.real for z, _ in roots_of_model(model).resonances)
print(f"fitted decay rate {rate:.4f}, min Re z = {target:.4f}")

# A coarse look at the field: the reflected pulse at t = 10
xs = np.linspace(0.0, 16.0, 17)
phi, _ = field_snapshot(traj, 10.0, xs)
for x, v in zip(xs, phi):
    print(f"x = {x:4.1f}  phi = {v:+.4f}  " + "#" * int(40 * abs(v)))
