"""
Spectrum and resonances of the three model families
===================================================

A mass on a spring attached to a string, a renormalized dipole oscillator and
an elastic shell in an acoustic field all fit the same template: a wave field
on the half-line coupled at the origin to a finite oscillator system.  This
script builds each one, prints its normalized data and reads off bound states
and resonances from the roots of the boundary polynomial ``p``.
"""

import numpy as np

from lambscat.char_poly import build_p_closed_form, build_p_vandermonde, roots_of_model
from lambscat.presets import acoustic_shell, lamb_chain, pauli_fierz, two_mode
from lambscat.spectral import point_spectrum, pp_empty_check

np.set_printoptions(precision=6, suppress=True)

models = {
    "string + one mass (M=T=K=1)": lamb_chain(),
    "string + three masses": lamb_chain((1.0, 2.0, 0.5), (1.0, 1.5, 2.0), 1.0),
    "dipole oscillator (m=w=e=1)": pauli_fierz(),
    "acoustic shell (M=K=R0=1)": acoustic_shell(),
    "two modes, theta = 0": two_mode(),
}

for name, m in models.items():
    print(f"\n== {name}")
    print(f"   lambda = {m.lam}, c = {m.c}, theta = {m.theta:.6g}")
    p = build_p_closed_form(m)
    pv = build_p_vandermonde(m)
    print(f"   p (ascending) = {p.coeffs}")
    print(f"   recursion route differs by {np.max(np.abs(p.coeffs - pv.coeffs)):.1e}")
    rs = roots_of_model(m)
    for z, mult in rs.roots:
        kind = "bound state, lambda = %.6f" % (z.real ** 2) if z.real < 0 else "resonance"
        print(f"   root {z:.6f}  (x{mult})  {kind}")
    sd = point_spectrum(m)
    print(f"   eigenvalues from the secular equation: {list(np.round(sd.eigenvalues, 6))}")
    print(f"   empty point spectrum predicted: {pp_empty_check(m)}")

# The dipole oscillator has theta > 0 and hence one positive eigenvalue.  Its
# eigenfunction grows in time: the classical runaway solution.
pf = pauli_fierz()
lam = point_spectrum(pf).eigenvalues[0]
print(f"\nrunaway growth rate of the dipole oscillator: sqrt(lambda) = {np.sqrt(lam):.6f}")

# Slowest decay rate of the one-mass string: min Re z over the resonances
rs = roots_of_model(lamb_chain())
print("slowest resonance decay rate of the one-mass string:",
      min(z.real for z, _ in rs.resonances))
