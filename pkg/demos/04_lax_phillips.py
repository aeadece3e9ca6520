"""
The Lax-Phillips semigroup on the resonance space
=================================================

Translation to the left, restricted to functions on (-inf, 0] spanned by
``x^k e^{z_j x}``, is a finite-dimensional contraction semigroup whose
generator has the resonances as eigenvalues.
"""

import numpy as np

from lambscat.scattering import (build_lp_semigroup, dissipativity_margin,
                                 lp_evolve_check, lp_semigroup_of_model)
from lambscat.presets import acoustic_shell, lamb_chain, two_mode

for name, m in (("one-mass string", lamb_chain()), ("acoustic shell", acoustic_shell()),
                ("two modes", two_mode())):
    sg = lp_semigroup_of_model(m)
    print(f"\n== {name}: dim K = {sg.dim}, resonances {[complex(round(z.real, 4), round(z.imag, 4)) for z, _ in sg.roots]}")
    print(f"   min eigenvalue of G B + B* G: {dissipativity_margin(sg):.2e}")
    for t in (0.0, 1.0, 5.0, 10.0):
        dev, norm = lp_evolve_check(sg, t)
        print(f"   t = {t:4.1f}  ||Z^t||_G = {norm:.6f}  expm vs exact translation {dev:.1e}")

# A repeated resonance gives a Jordan block
sg = build_lp_semigroup([(1.0, 2)])
print("\ndouble root at z = 1:\nB =\n", sg.B.real, "\nGram =\n", sg.gram.real)
