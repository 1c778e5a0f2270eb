"""
Quadratic forms on exponential trial functions
==============================================

Closed forms for the free form, the interface term and the norm, plus the
explicit trial functions that drive the form to -inf above alpha = 1.
"""
from __future__ import annotations

from couplespec.forms import (TrialFunction, lemma_bound_check, rayleigh_minimize, self_consistent_ground_state,
                              sharpness_ratio, two_mode_witness, window_witness)

t = TrialFunction.from_modes([(1, 1, 1.0), (2, 1, 2.0)])
print("bound check:", lemma_bound_check(t))
print("sharpness on a window of 50 modes:", round(sharpness_ratio(50), 4))

print("two-mode witness, alpha=3, N=5:", two_mode_witness(3, 1, 5))
print("window witness, alpha=1.5:", window_witness(1.5, 1, 20, 40))

for N in (5, 10, 20, 40):
    print(f"alpha=1.5, modes {N}..{4 * N}: min quotient {rayleigh_minimize(1.5, (N, 4 * N)).value:.1f}")
for w in (2, 8, 32):
    print(f"alpha=0.9, modes -{w}..{w}: min quotient {rayleigh_minimize(0.9, (-w, w)).value:.4f}")

sc = self_consistent_ground_state(0.5, (-8, 8))
print("self-consistent Ritz level at alpha=0.5:", sc.Lambda, "converged", sc.converged)
