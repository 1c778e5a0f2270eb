"""
Singular solutions above the transition
=======================================

For alpha > 1 the adjoint picks up solutions that blow up like
|x|^(-1/2) at the points where ellipticity fails. Near such a point the
mode sum is replaced by a polylogarithm of order 1/2.
"""
from __future__ import annotations

import math

from couplespec.singular import BRANCHES, model_sum_fit, singular_point, singularity_fit, v_sum

print("v(0.01) =", v_sum(0.01), " two-term estimate", math.sqrt(math.pi / 0.01) - 1.4603545088095868)
f = model_sum_fit()
print(f"model sum ~ A z^p: p = {f.exponent:.4f}, A/sqrt(pi) = {abs(f.amplitude) / math.sqrt(math.pi):.5f}")

for a in (1.5, 2.0, 4.0):
    row = []
    for b in BRANCHES:
        fit = singularity_fit(a, b)
        row.append(f"{b}: y={singular_point(a, b):.4f} p={fit.exponent:+.4f}")
    print(f"alpha={a}:", "  ".join(row))

off = singularity_fit(2.0, "++", y=singular_point(2.0, "++") + 0.5)
print("half a radian off the point the exponent is", round(off.exponent, 3))
