"""Mode sums of the singular solutions for alpha > 1 and their square-root
blow-up at the degeneracy points of the interface condition.

With y(alpha) = arccos(1/alpha) the four leading-order branches are

    (s, +):  sum_{n>0}  n^{-1/2} e^{ i n (y + s y(alpha))}      e^{-|x| sqrt(n^2 - Lambda)}
    (s, -):  sum_{m>0}  m^{-1/2} e^{-i m (y + s y(alpha) - pi)} e^{-|x| sqrt(m^2 - Lambda)}

for s = +1 ("+") and s = -1 ("-").  Replacing sqrt(n^2 - Lambda) by n turns
each branch into the model sum v(z) = sum n^{-1/2} e^{-n z}, which behaves
like Gamma(1/2) z^{-1/2} as z -> 0.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gamma, zeta

from .model import DomainError

BRANCHES = ("++", "-+", "+-", "--")
SWITCH_RE = 1e-3
CHUNK = 1 << 16

# zeta(1/2), e.g. DLMF 25.6 / OEIS A059750; the other zeta(1/2 - k) follow
# from the functional equation with zeta(k + 1/2) > 1 (see _zeta_half_minus)
ZETA_HALF = -1.4603545088095868


def _zeta_half_minus(kmax: int) -> np.ndarray:
    """zeta(1/2 - k), k = 0..kmax, via
    zeta(1 - s) = 2 (2 pi)^{-s} cos(pi s / 2) Gamma(s) zeta(s) at s = k + 1/2."""
    out = np.empty(kmax + 1)
    out[0] = ZETA_HALF
    for k in range(1, kmax + 1):
        s = k + 0.5
        out[k] = 2.0 * (2 * math.pi) ** (-s) * math.cos(math.pi * s / 2) * gamma(s) * zeta(s, 1)
    return out


_ZETA_TABLE = _zeta_half_minus(90)


def _reduce(z: complex) -> complex:
    im = math.remainder(z.imag, 2 * math.pi)  # in [-pi, pi]
    return complex(z.real, im)


def _v_direct(z: complex, tol: float = 1e-13) -> complex:
    x = z.real
    # tail after N terms is below e^{-N x} / (sqrt(N) (1 - e^{-x}))
    n_max = max(8, int(math.ceil(math.log(1.0 / (tol * -math.expm1(-x))) / x)))
    total = 0j
    for start in range(1, n_max + 1, CHUNK):
        n = np.arange(start, min(start + CHUNK, n_max + 1), dtype=float)
        total += np.sum(np.exp(-n * z) / np.sqrt(n))
    return complex(total)


def _v_expansion(z: complex) -> complex:
    # Gamma(1/2) z^{-1/2} + sum_k zeta(1/2 - k) (-z)^k / k!
    total = math.sqrt(math.pi) / cmath.sqrt(z)
    term = 1.0 + 0j
    for k in range(len(_ZETA_TABLE)):
        if k:
            term *= -z / k
        add = _ZETA_TABLE[k] * term
        total += add
        if k > 4 and abs(add) < 1e-17:
            break
    return total


def v_sum(z: complex) -> complex:
    """sum_{n>=1} n^{-1/2} e^{-n z} for Re z > 0, absolute accuracy ~1e-10.

    Direct summation for Re z >= 1e-3, otherwise the expansion around the
    threshold (convergent for |z| < 2 pi after reducing Im z mod 2 pi).
    """
    z = complex(z)
    if not z.real > 0:
        raise DomainError("v_sum needs Re z > 0")
    z = _reduce(z)
    if z.real >= SWITCH_RE:
        return _v_direct(z)
    return _v_expansion(z)


def y_alpha(alpha: float) -> float:
    if not alpha > 1:
        raise DomainError("singular solutions exist for alpha > 1")
    return math.acos(1.0 / alpha)


def _branch(branch: str) -> tuple[int, int]:
    if branch not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES} or 'all'")
    return (1 if branch[0] == "+" else -1), (1 if branch[1] == "+" else -1)


def singular_point(alpha: float, branch: str) -> float:
    """Angle in [0, 2 pi) where the branch blows up."""
    s, side = _branch(branch)
    ya = y_alpha(alpha)
    y = -s * ya if side > 0 else math.pi - s * ya
    return y % (2 * math.pi)


def branch_phase(alpha: float, branch: str, y) -> np.ndarray:
    """theta with the branch equal to sum n^{-1/2} e^{i n theta} e^{-|x| ...}."""
    s, side = _branch(branch)
    ya = y_alpha(alpha)
    y = np.asarray(y, dtype=float)
    return y + s * ya if side > 0 else -(y + s * ya - math.pi)


def model_argument(alpha: float, branch: str, x, y) -> np.ndarray:
    """z with the model-sum version of the branch equal to v_sum(z)."""
    return np.abs(np.asarray(x, dtype=float)) - 1j * branch_phase(alpha, branch, y)


def _partial_one(theta: float, ax: float, lam: complex, n_max: int) -> complex:
    total = 0j
    for start in range(1, n_max + 1, CHUNK):
        n = np.arange(start, min(start + CHUNK, n_max + 1), dtype=float)
        kap = np.sqrt(n * n - lam + 0j)
        total += np.sum(np.exp(1j * n * theta - ax * kap) / np.sqrt(n))
    return complex(total)


def default_n_max(x: float) -> int:
    return int(math.ceil(36.0 / max(abs(x), 1e-12)))


def singular_solution_partial(alpha: float, Lambda: complex, branch: str, x, y,
                              n_max: int | None = None):
    """Leading-order branch sum truncated at n_max (default: e^{-|x| n_max} ~ 1e-16).

    ``branch='all'`` adds the four branches.
    """
    if branch == "all":
        return sum(singular_solution_partial(alpha, Lambda, b, x, y, n_max) for b in BRANCHES)
    x_arr, y_arr = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    theta = branch_phase(alpha, branch, y_arr)
    lam = complex(Lambda)
    out = np.empty(x_arr.shape, dtype=complex)
    for idx in np.ndindex(x_arr.shape):
        ax = abs(float(x_arr[idx]))
        nm = n_max if n_max is not None else default_n_max(ax)
        if ax == 0 and n_max is None:
            raise DomainError("x = 0 needs an explicit n_max")
        out[idx] = _partial_one(float(theta[idx]), ax, lam, int(nm))
    return complex(out) if out.ndim == 0 else out


@dataclass
class SingularProfile:
    alpha: float
    branch: str
    singular_point: float
    Lambda: complex
    samples: list = field(default_factory=list)  # (z, value)

    def __post_init__(self):
        if any(complex(z).real <= 0 for z, _ in self.samples):
            raise ValueError("every sample needs Re z > 0")

    def to_rows(self) -> list[tuple]:
        return [(complex(z).real, complex(z).imag, complex(v).real, complex(v).imag)
                for z, v in self.samples]


def singular_profile(alpha: float, branch: str, x_grid, y: float | None = None,
                     Lambda: complex = -1.0) -> SingularProfile:
    """Samples of one branch along a ray of fixed y (default: its singular point)."""
    yj = singular_point(alpha, branch)
    yy = yj if y is None else float(y)
    xs = np.asarray(x_grid, dtype=float)
    vals = singular_solution_partial(alpha, Lambda, branch, xs, np.full_like(xs, yy))
    zs = model_argument(alpha, branch, xs, yy)
    return SingularProfile(float(alpha), branch, yj, complex(Lambda),
                           [(complex(z), complex(v)) for z, v in zip(zs, vals)])


class PowerFit(NamedTuple):
    exponent: float
    amplitude: complex
    background: complex
    r_squared: float
    loglog_slope: float


def fit_power(x, values) -> PowerFit:
    """Fit values ~ A x^p + B (complex A, B) by variable projection in p.

    The constant B absorbs the bounded background, which otherwise biases
    the plain log-log slope (also reported).
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(values, dtype=complex)
    if x.size < 8:
        raise ValueError("need at least 8 samples")
    lx = np.log(x)

    def solve(p):
        A = np.column_stack([x ** p, np.ones_like(x)]).astype(complex)
        coef, *_ = np.linalg.lstsq(A, v, rcond=None)
        return coef, float(np.sum(np.abs(A @ coef - v) ** 2))

    # coarse scan then bounded refinement
    grid = np.linspace(-1.5, 2.0, 141)
    errs = [solve(p)[1] for p in grid]
    k = int(np.argmin(errs))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(lambda p: solve(p)[1], bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10})
    p = float(res.x)
    coef, sse = solve(p)
    sst = float(np.sum(np.abs(v - v.mean()) ** 2))
    r2 = 1.0 - sse / sst if sst > 0 else float("nan")
    slope = float(np.polyfit(lx, np.log(np.abs(v)), 1)[0])
    return PowerFit(p, complex(coef[0]), complex(coef[1]), r2, slope)


def singularity_fit(alpha: float, branch: str, x_grid=None, Lambda: complex = -1.0,
                    y: float | None = None) -> PowerFit:
    """Exponent and amplitude of the blow-up along the ray y = y_j."""
    if x_grid is None:
        x_grid = np.geomspace(1e-4, 1e-2, 12)
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.size < 8:
        raise ValueError("x_grid needs at least 8 points")
    prof = singular_profile(alpha, branch, x_grid, y, Lambda)
    return fit_power(x_grid, [v for _, v in prof.samples])


def model_sum_fit(x_grid=None) -> PowerFit:
    """The same fit on v_sum along real z; exponent -1/2, amplitude sqrt(pi)."""
    if x_grid is None:
        x_grid = np.geomspace(1e-4, 1e-2, 12)
    x_grid = np.asarray(x_grid, dtype=float)
    return fit_power(x_grid, [v_sum(complex(x)) for x in x_grid])
