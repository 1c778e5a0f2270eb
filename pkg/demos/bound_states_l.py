"""
The single bound state of the cylinder
======================================

Below the phase transition the cylinder carries exactly one eigenvalue
under the continuous spectrum. The secular function is the Casoratian of
the solutions decaying in n -> +inf and n -> -inf, matched at n = 0.
"""
from __future__ import annotations

import numpy as np

from couplespec.spectral_l import (DEFAULT_RANGE, deficiency_probe, determinant_roots, find_bound_states,
                                   negative_spectrum_sweep, secular_roots)

for a in (0.2, 0.5, 0.8, 1.0):
    (s,) = find_bound_states(a)
    print(f"alpha={a}: Lambda_0 = {s.Lambda:.15g}  (K history {[k for k, _ in s.refinement_history]})")

# small coupling: the level sits at -alpha^4/64 to leading order
(s,) = find_bound_states(1e-3, (-10, -1e-300))
print("alpha=1e-3:", s.Lambda, "vs", -(1e-3) ** 4 / 64)

# a dense determinant of the same truncation is an independent oracle
det = determinant_roots(0.5, (-10, -1e-8), K=128)
sec, _ = secular_roots(0.5, (-10, -1e-8), K=128, closure="dirichlet")
print("determinant vs secular at K=128:", det[0], sec[0])

# the phase transition: deficiency indices and negative spectrum
for a in (0.5, 1.0, 2.0):
    print(a, deficiency_probe(a, 1j).classification)

tab = negative_spectrum_sweep(2.0, [1, 10, 100, 1000])
print("alpha=2, eigenvalue totals per K:", dict(zip(tab.K_values, tab.totals.tolist())))
print("interval counts n(t):")
print(np.array(tab.counts))
print(tab.disclaimer)
print("range used for bound states:", DEFAULT_RANGE)
