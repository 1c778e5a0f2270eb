"""
Model families and their elementary invariants
===============================================

The cylinder family L and the strip family M differ from the free
Laplacian only through the jump condition at x = 0.
"""
from __future__ import annotations

import math

import numpy as np

from couplespec.model import L, M, ac_multiplicity, characteristic_roots, singular_points, sl_regularity

# continuous spectrum of the uncoupled problems: a step function in lambda
for lam in (0.0, 0.5, 1.0, 2.5):
    print(f"lambda={lam:4}  L: {ac_multiplicity(L(0), lam):2d}", end="")
    print(f"   M: {ac_multiplicity(M(0), lam + 1):2d}  (at lambda+1)")

# the characteristic roots are real below alpha = 1 and unimodular above
for a in (0.5, 1.0, 2.0):
    r = characteristic_roots(a)
    print(a, np.round(r.as_tuple(), 6), "moduli", np.round(np.abs(r.as_tuple()), 12))

# ellipticity fails exactly where alpha |cos y| = 1
pts = singular_points(L(2.0))
print("degenerate points on the cylinder at alpha=2:", [round(y / math.pi, 6) for y in pts], "(units of pi)")
print("regular at y = 0?", sl_regularity(L(2.0), 0.0).regular)
print("regular at y = pi/3?", sl_regularity(L(2.0), math.pi / 3).regular)
print("strip points at alpha=2:", [round(y, 6) for y in singular_points(M(2.0))])
