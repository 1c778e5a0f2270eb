"""
The mode recurrence
===================

Exponential-profile solutions reduce to a three-term recurrence in the
mode index. Forward propagation picks the dominant solution, Miller's
backward recursion the minimal one.
"""
from __future__ import annotations

import math

from couplespec.model import L, characteristic_roots
from couplespec.recurrence import (RecurrenceParams, casoratian, fit_asymptotics, identity_residual,
                                   minimal_solution, propagate, two_sided)

p = RecurrenceParams(L(0.5), -1.0)
lam = characteristic_roots(0.5)
print("decaying root 2 - sqrt(3) =", lam.lambda_plus_minus)

up = propagate(p, (0, 1), "up", 400)
print("dominant rate from a fit:", fit_asymptotics(up, (100, 400)).lambda_est.real)

low = minimal_solution(p, "plus", 0)
fit = fit_asymptotics(low, (100, 300))
print(f"minimal: rate {fit.lambda_est.real:.8f}, power {fit.power_est.real:.4f}")
# the raw ratio still carries the n^(-1/2) prefactor at n = 200
print("raw C_201/C_200 =", low.ratio(201, 200).real)

# the Casoratian of two solutions does not depend on n
print("Casoratian at n=5, 50:", casoratian(low, up, 5), casoratian(low, up, 50))

# for non-real Lambda the quadratic identity holds to rounding
q = RecurrenceParams(L(0.7), 0.3 + 1.2j)
sol = two_sided(q, (1.0, 0.5 - 0.2j), -41, 41)
print("identity residual:", identity_residual(q, sol, 40))

# above alpha = 1 all four roots are unimodular: no decay in either direction
q = RecurrenceParams(L(2.0), 1j)
f = fit_asymptotics(propagate(q, (0, 1), "up", 400), (100, 300))
print("|lambda| at alpha = 2:", abs(f.lambda_est))

# at alpha = 1 the roots merge and decay turns algebraic, n^(-sqrt(-Lambda))
r = RecurrenceParams(L(1.0), -4.0)
s = minimal_solution(r, "plus", 0)
f = fit_asymptotics(s, (s.n_hi // 4, s.n_hi // 2))
print(f"alpha=1: power {f.power_est.real:.3f} vs {-math.sqrt(4.0)}")
