"""Strip family M_alpha: bound states below the threshold 1, the Jacobi
matrix of the threshold Birman-Schwinger problem, and eigenvalue counts.

In the gauge w_n = i^n v_n the strip modes n >= 1 obey the cylinder
recurrence with v_0 = 0, so a bound state is a Lambda in (0, 1) at which
the decaying solution from n = +inf vanishes at n = 0.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy.optimize import brentq

from . import recurrence as rec
from .model import M as strip
from .spectral_l import BoundState
from .tridiag import SymTridiagonal, count_above

DELTA = 1e-8       # lower end of the search, above 0
DELTA_THR = 1e-8   # gap below the threshold Lambda = 1


def _params(alpha: float, Lambda) -> rec.RecurrenceParams:
    return rec.RecurrenceParams(strip(alpha), Lambda)


def m_secular_value(alpha: float, Lambda: float, K: int = 64, normalized: bool = True) -> float:
    """v_0 of the decaying solution started at n = K, relative to v_1.

    With ``normalized=False`` the pair (v_0, v_1) is scaled to unit length
    instead, which removes the poles at zeros of v_1.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    if not Lambda < 1:
        raise ValueError("Lambda must lie below the threshold 1")
    if K < 16:
        raise ValueError("K must be >= 16")
    sol = rec._backward_from(_params(alpha, Lambda), "plus", K, 0, alpha <= 1.0)
    v0 = complex(sol.values[0])
    v1 = complex(sol.values[1]) * math.exp(sol.log_scale[1] - sol.log_scale[0])
    if normalized:
        return float((v0 / v1).real)
    return float(v0.real / math.hypot(abs(v0), abs(v1)))


def _m_secular_grid(alpha: float, lams: np.ndarray, K: int) -> np.ndarray:
    lams = np.asarray(lams, dtype=float)
    if alpha <= 1.0:
        r = np.array([rec.tail_ratio(_params(alpha, x), K).real for x in lams])
    else:
        r = np.zeros_like(lams)
    cur, nxt = np.ones_like(lams), r
    for n in range(K, 0, -1):
        p = -2.0 / alpha * np.sqrt(n * n - lams)
        prev = -((n + 0.5) * nxt + p * cur) / (n - 0.5)
        s = np.maximum(np.abs(prev), np.abs(cur))
        cur, nxt = prev / s, cur / s
    return cur / np.hypot(cur, nxt)


def strip_matrix(alpha: float, Lambda: float, K: int) -> SymTridiagonal:
    """Truncation on modes 1..K, tail-closed at K for alpha <= 1."""
    n = np.arange(1, K + 1, dtype=float)
    diag = -2.0 / alpha * np.sqrt(n * n - float(Lambda))
    off = n[1:] - 0.5
    if alpha <= 1.0:
        diag[-1] += (K + 0.5) * rec.tail_ratio(_params(alpha, Lambda), K).real
    return SymTridiagonal(diag, off)


def m_count_below(alpha: float, Lambda: float, K: int) -> int:
    """Eigenvalues of the truncated strip problem below ``Lambda`` (<= 1)."""
    return count_above(strip_matrix(alpha, Lambda, K), 0.0)


def m_determinant_sign(alpha: float, Lambda: float, K: int) -> float:
    return float(np.linalg.slogdet(strip_matrix(alpha, Lambda, K).to_dense())[0])


def _grid(n: int) -> np.ndarray:
    # geometric in the distance to the threshold
    return 1.0 - np.geomspace(1.0 - DELTA, DELTA_THR, n)


def m_roots(alpha: float, K: int, n_grid: int = 400) -> tuple[list[float], int]:
    """Roots in (DELTA, 1 - DELTA_THR) and the Sturm count of the same range."""
    lo, hi = DELTA, 1.0 - DELTA_THR
    expected = m_count_below(alpha, hi, K) - m_count_below(alpha, lo, K)

    def f(x):
        return m_secular_value(alpha, x, K, normalized=False)

    n = n_grid
    roots: list[float] = []
    for _ in range(5):
        grid = _grid(n)
        vals = _m_secular_grid(alpha, grid, K)
        roots = []
        for k in range(len(grid) - 1):
            if vals[k] == 0.0:
                roots.append(float(grid[k]))
            elif vals[k] * vals[k + 1] < 0:
                roots.append(float(brentq(f, grid[k], grid[k + 1], xtol=1e-300,
                                          rtol=4 * np.finfo(float).eps, maxiter=400)))
        if len(roots) >= expected:
            break
        n *= 4
    return sorted(roots), expected


class StripSpectrum(list):
    """Bound states of M_alpha; ``unresolved_near_threshold`` counts the
    eigenvalues in [1 - DELTA_THR, 1) found by Sturm count only."""

    unresolved_near_threshold: int
    K: int

    def __init__(self, states, unresolved: int = 0, K: int = 0):
        super().__init__(states)
        self.unresolved_near_threshold = unresolved
        self.K = K

    @property
    def count_below_threshold(self) -> int:
        return len(self) + self.unresolved_near_threshold


def _strip_state(alpha, Lambda, K, converged, history) -> BoundState:
    sol = rec._backward_from(_params(alpha, Lambda), "plus", K, 0, alpha <= 1.0)
    v = sol.scaled().real[1:-1]  # n = 1 .. K
    n = np.arange(1, K + 1, dtype=float)
    v = v / math.sqrt(np.sum(v * v / (2 * np.sqrt(n * n - Lambda))))
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return BoundState(float(Lambda), v, K, converged, list(history), 1, "M", float(alpha))


def m_find_bound_states(alpha: float, K: int = 64, tol: float = 1e-10, K_max: int = 4096,
                        n_grid: int = 400) -> StripSpectrum:
    """Eigenvalues of M_alpha in (0, 1) by the strip secular function.

    Coefficients of the returned states are v_n (the symmetric gauge);
    the physical amplitudes are i^n v_n.
    """
    alpha = float(alpha)
    if not 0 < alpha < 1:
        raise ValueError("need 0 < alpha < 1")
    history: dict[int, list] = {}
    prev: list[float] | None = None
    Kc = int(K)
    while True:
        roots, _ = m_roots(alpha, Kc, n_grid)
        for j, r in enumerate(roots):
            history.setdefault(j, []).append((Kc, r))
        moves = [min((abs(r - p) for p in prev), default=None) if prev else None for r in roots]
        done = prev is not None and len(roots) == len(prev) and all(
            m is not None and m < tol for m in moves)
        if done or 2 * Kc > K_max:
            unresolved = m_count_below(alpha, 1.0, Kc) - m_count_below(alpha, 1.0 - DELTA_THR, Kc)
            states = [_strip_state(alpha, r, Kc, bool(moves[j] is not None and moves[j] < tol),
                                   history[j]) for j, r in enumerate(roots)]
            return StripSpectrum(states, unresolved, Kc)
        prev = roots
        Kc *= 2


# ---------------------------------------------------------------- Jacobi matrix


def jacobi_entry(n):
    """j_{n,n-1} = (n - 1/2) / (2 (n^2-1)^{1/4} (n^2-2n)^{1/4}), n >= 3."""
    n = np.asarray(n, dtype=float)
    if np.any(n < 3):
        raise ValueError("entry formula is singular at n = 2 ((n^2-2n)^{1/4} = 0); need n >= 3")
    out = (n - 0.5) / (2.0 * ((n * n - 1.0) * (n * n - 2.0 * n)) ** 0.25)
    return float(out) if out.ndim == 0 else out


def jacobi_excess(n):
    """j_{n,n-1} - 1/2 without cancellation."""
    n = np.asarray(n, dtype=float)
    if np.any(n < 3):
        raise ValueError("need n >= 3")
    # j = (1/2) ((n-1/2)^4 / c)^{1/4}, c = (n^2-1)(n^2-2n); the numerator
    # minus c is 5n^2/2 - 5n/2 + 1/16 exactly
    c = (n * n - 1.0) * (n * n - 2.0 * n)
    diff = (2.5 * n * n - 2.5 * n + 0.0625) / c
    out = 0.5 * np.expm1(0.25 * np.log1p(diff))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class JacobiM:
    N: int
    index_start: int
    matrix: SymTridiagonal

    @property
    def modes(self) -> range:
        return range(self.index_start - 1, self.index_start - 1 + self.N)


def build_jacobi(N: int, index_start: int = 3) -> JacobiM:
    """Zero-diagonal Jacobi matrix on modes index_start-1 .. index_start-2+N."""
    N = int(N)
    index_start = int(index_start)
    if index_start < 3:
        raise ValueError("index_start must be >= 3: the entry j_{2,1} contains (n^2-2n)^{1/4} = 0")
    if N < 1:
        raise ValueError("N must be >= 1")
    n = np.arange(index_start, index_start + N - 1, dtype=float)
    off = jacobi_entry(n) if N > 1 else np.zeros(0)
    return JacobiM(N, index_start, SymTridiagonal(np.zeros(N), np.atleast_1d(off)))


class EntryCheck(NamedTuple):
    c_fit: float
    residual: float
    c_stated: float
    c_expansion: float


def asymptotic_entry_check(N: int) -> EntryCheck:
    """Fit n^2 (j_{n,n-1} - 1/2) = c on n in [N/2, N]; residual is
    max n^2 |j - 1/2 - c n^{-2}|."""
    if N < 100:
        raise ValueError("N must be >= 100")
    n = np.arange(N // 2, N + 1, dtype=float)
    y = n * n * jacobi_excess(n)
    c = float(np.mean(y))
    return EntryCheck(c, float(np.max(np.abs(y - c))), 0.5, 5.0 / 16.0)


def default_n_rule(mu: float) -> int:
    return max(512, math.ceil(50.0 * (mu - 1.0) ** -0.5))


def count_jacobi_above(mu: float, N: int, index_start: int = 3) -> int:
    return count_above(build_jacobi(N, index_start).matrix, mu)


@dataclass
class CountingPoint:
    mu: float
    count: int
    N: int
    stable: bool


def _stable_count(mu, N0, index_start, max_doublings):
    N = N0
    c = count_jacobi_above(mu, N, index_start)
    for _ in range(max_doublings):
        c2 = count_jacobi_above(mu, 2 * N, index_start)
        N *= 2
        if c2 == c:
            return CountingPoint(float(mu), c, N, True)
        c = c2
    return CountingPoint(float(mu), c, N, False)


def counting_curve(mu_grid, N_rule: Callable[[float], int] | None = None, index_start: int = 3,
                   max_doublings: int = 4, threads: int | None = None) -> list[CountingPoint]:
    """N_+(mu; J_N) per mu, N doubled until the count repeats."""
    mus = [float(m) for m in mu_grid]
    if any(m <= 1 for m in mus):
        raise ValueError("every mu must exceed 1")
    rule = N_rule or default_n_rule

    def one(mu):
        return _stable_count(mu, int(rule(mu)), index_start, max_doublings)

    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(one, mus))
    return [one(m) for m in mus]


class LogFit(NamedTuple):
    slope: float
    intercept: float
    r_squared: float


def log_law_fit(points: list[CountingPoint]) -> LogFit:
    """Least squares count ~ slope |log(mu - 1)| + intercept."""
    x = np.array([abs(math.log(p.mu - 1.0)) for p in points])
    y = np.array([p.count for p in points], dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum((y - pred) ** 2)) / ss_tot if ss_tot > 0 else float("nan")
    return LogFit(float(slope), float(intercept), r2)


# ---------------------------------------------------------------- sandwich


@dataclass
class SandwichReport:
    alpha: float
    count_M: int
    count_J: int
    difference: int
    K: int
    N: int
    converged_M: bool
    converged_J: bool
    index_start: int = 3
    notes: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.converged_M and self.converged_J

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "count_M": self.count_M, "count_J": self.count_J,
                "difference": self.difference, "K": self.K, "N": self.N,
                "converged_M": self.converged_M, "converged_J": self.converged_J,
                "index_start": self.index_start, "notes": dict(self.notes)}


def sandwich_check(alpha: float, K: int = 64, tol: float = 1e-10, index_start: int = 3,
                   N: int | None = None) -> SandwichReport:
    """count_M = N_-(1; M_alpha), count_J = N_+(1/alpha; J); the two should
    differ by 0 or 1."""
    alpha = float(alpha)
    if not 0 < alpha < 1:
        raise ValueError("need 0 < alpha < 1")
    spec = m_find_bound_states(alpha, K, tol)
    conv_m = all(s.converged for s in spec)
    mu = 1.0 / alpha
    pt = _stable_count(mu, N or default_n_rule(mu), index_start, 4)
    cm = spec.count_below_threshold
    return SandwichReport(alpha, cm, pt.count, cm - pt.count, spec.K, pt.N, conv_m, pt.stable,
                          index_start, {"eigenvalues": [s.Lambda for s in spec],
                                        "unresolved_near_threshold": spec.unresolved_near_threshold})
