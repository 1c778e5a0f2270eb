"""
The strip and its Jacobi matrix
===============================

For the strip the eigenvalues below the threshold 1 are tied to the
eigenvalues of a zero-diagonal Jacobi matrix above 1/alpha; the two counts
differ by at most one.
"""
from __future__ import annotations

import numpy as np

from couplespec.spectral_m import (asymptotic_entry_check, build_jacobi, counting_curve, log_law_fit,
                                   m_find_bound_states, sandwich_check)

for a in (0.5, 0.9, 0.99, 0.9999):
    spec = m_find_bound_states(a)
    print(f"alpha={a}: {[round(s.Lambda, 10) for s in spec]}")

J = build_jacobi(6)
print("first entries:", np.round(J.matrix.offdiag, 10))
chk = asymptotic_entry_check(10**4)
print(f"entry excess ~ c/n^2: fitted c = {chk.c_fit:.5f}")

for a in np.linspace(0.3, 0.99, 4):
    r = sandwich_check(a)
    print(f"alpha={a:.3f}: N_M={r.count_M} N_J={r.count_J} difference={r.difference}")

pts = counting_curve([1 + 10.0**-k for k in range(2, 7)])
fit = log_law_fit(pts)
print("counts near mu = 1:", [p.count for p in pts])
print(f"log-law fit: slope {fit.slope:.3f}, R^2 {fit.r_squared:.3f}")
