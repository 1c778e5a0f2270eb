"""Three-term recurrence engine.

Exponential-profile solutions W = sum_n w_n e^{iny} e^{-|x| sqrt(n^2 - Lambda)}
satisfy the transmission condition iff

    Q_{n+1} w_{n+1} + P_n w_n + Q_n w_{n-1} = 0,
    Q_n = n - 1/2,   P_n = -(2/alpha) sqrt(n^2 - Lambda),

with the principal branch Re sqrt >= 0.  The strip family reduces to the
same recurrence on n >= 1 with w_0 = 0 after the gauge w_n = i^n v_n
(see :func:`strip_gauge`).

Values are carried as mantissa * exp(log_scale) so that solutions growing
like (2/alpha)^n never overflow.
"""

from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .model import Kind, ModelSpec

RESCALE_EVERY = 32
RESCALE_LIMIT = 1e50
MILLER_RTOL = 1e-12


class BranchCutError(ValueError):
    """n^2 - Lambda fell on the negative real axis."""


class ConvergenceError(RuntimeError):
    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history or []


@dataclass(frozen=True)
class RecurrenceParams:
    model: ModelSpec
    Lambda: complex

    def __post_init__(self):
        if not self.model.alpha > 0:
            raise ValueError("alpha = 0 decouples the modes; the recurrence is undefined")
        object.__setattr__(self, "Lambda", complex(self.Lambda))

    @property
    def alpha(self) -> float:
        return self.model.alpha

    @property
    def is_strip(self) -> bool:
        return self.model.kind is Kind.StripM


def _sqrt_branch(n: int, lam: complex) -> complex:
    arg = n * n - lam
    if arg.imag == 0.0 and arg.real < 0.0:
        raise BranchCutError(f"n^2 - Lambda = {arg.real} < 0 at n={n}")
    return cmath.sqrt(arg)


def coefficients_at(params: RecurrenceParams, n: int) -> tuple[float, complex]:
    """Return (Q_n, P_n)."""
    n = int(n)
    if params.is_strip and n < 1:
        raise ValueError("strip recurrence is defined for n >= 1 only")
    return n - 0.5, -2.0 / params.alpha * _sqrt_branch(n, params.Lambda)


def _p_table(params: RecurrenceParams, lo: int, hi: int) -> list[complex]:
    """P_n for n = lo..hi inclusive."""
    if params.is_strip and lo < 1:
        raise ValueError("strip recurrence is defined for n >= 1 only")
    ns = np.arange(lo, hi + 1, dtype=float)
    arg = ns * ns - params.Lambda
    bad = (arg.imag == 0.0) & (arg.real < 0.0)
    if bad.any():
        raise BranchCutError(f"n^2 - Lambda on the branch cut at n={lo + int(np.argmax(bad))}")
    return (-2.0 / params.alpha * np.sqrt(arg.astype(complex))).tolist()


@dataclass(frozen=True)
class RecurrenceSolution:
    """Solution on the window [n_lo, n_hi]; C_n = values[n - n_lo] * exp(log_scale[n - n_lo])."""

    params: RecurrenceParams
    n_lo: int
    values: np.ndarray
    log_scale: np.ndarray
    converged: bool = True
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.values.setflags(write=False)
        self.log_scale.setflags(write=False)

    @property
    def n_hi(self) -> int:
        return self.n_lo + len(self.values) - 1

    @property
    def window(self) -> tuple[int, int]:
        return self.n_lo, self.n_hi

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_lo, self.n_hi + 1)

    def covers(self, lo: int, hi: int) -> bool:
        return self.n_lo <= lo and hi <= self.n_hi

    def _idx(self, n: int) -> int:
        if not self.n_lo <= n <= self.n_hi:
            raise IndexError(f"index {n} outside window [{self.n_lo}, {self.n_hi}]")
        return n - self.n_lo

    def value(self, n: int) -> complex:
        i = self._idx(n)
        return complex(self.values[i]) * math.exp(self.log_scale[i])

    def ratio(self, n: int, m: int) -> complex:
        """C_n / C_m without forming either coefficient."""
        i, j = self._idx(n), self._idx(m)
        return complex(self.values[i] / self.values[j]) * math.exp(self.log_scale[i] - self.log_scale[j])

    def scaled(self, ref: float | None = None) -> np.ndarray:
        """All coefficients multiplied by exp(-ref); ref defaults to the max log scale."""
        if ref is None:
            ref = float(self.log_scale.max()) if len(self.log_scale) else 0.0
        with np.errstate(under="ignore"):
            return self.values * np.exp(self.log_scale - ref)

    def log_abs(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.values)) + self.log_scale

    def normalized(self, n_ref: int) -> "RecurrenceSolution":
        i = self._idx(n_ref)
        v = self.values[i]
        if v == 0:
            raise ZeroDivisionError(f"solution vanishes at n={n_ref}")
        return RecurrenceSolution(self.params, self.n_lo, self.values / v,
                                  self.log_scale - self.log_scale[i], self.converged, dict(self.info))

    def restrict(self, lo: int, hi: int) -> "RecurrenceSolution":
        i, j = self._idx(lo), self._idx(hi)
        return RecurrenceSolution(self.params, lo, self.values[i:j + 1].copy(),
                                  self.log_scale[i:j + 1].copy(), self.converged, dict(self.info))

    def residuals(self) -> np.ndarray:
        """Relative residual of the recurrence at every interior index."""
        lo, hi = self.n_lo + 1, self.n_hi - 1
        if hi < lo:
            return np.zeros(0)
        out = np.empty(hi - lo + 1)
        p = _p_table(self.params, lo, hi)
        for k, n in enumerate(range(lo, hi + 1)):
            s = self.log_scale[n - self.n_lo]
            a = (n + 0.5) * self.values[n + 1 - self.n_lo] * math.exp(self.log_scale[n + 1 - self.n_lo] - s)
            b = p[k] * self.values[n - self.n_lo]
            c = (n - 0.5) * self.values[n - 1 - self.n_lo] * math.exp(self.log_scale[n - 1 - self.n_lo] - s)
            scale = max(abs(a), abs(b), abs(c))
            out[k] = abs(a + b + c) / scale if scale > 0 else 0.0
        return out


def _run(qs_next, ps, qs_prev, c_prev: complex, c_cur: complex, s: float, n_start: int, step: int):
    """Core loop.  Returns (mantissas, scales) of the generated coefficients.

    Going up:   C_{n+1} = -(P_n C_n + Q_n C_{n-1}) / Q_{n+1}
    Going down: C_{n-1} = -(P_n C_n + Q_{n+1} C_{n+1}) / Q_n
    The caller supplies matching coefficient lists.
    """
    out_v = []
    out_s = []
    since = 0
    n = n_start
    for k in range(len(ps)):
        c_new = -(ps[k] * c_cur + qs_prev[k] * c_prev) / qs_next[k]
        c_prev, c_cur = c_cur, c_new
        since += 1
        big = max(abs(c_prev), abs(c_cur))
        if since >= RESCALE_EVERY or big > RESCALE_LIMIT:
            if not math.isfinite(big):
                raise OverflowError(f"recurrence overflowed despite rescaling at n={n + step * (k + 1)}")
            if big > 0:
                c_prev /= big
                c_cur /= big
                s += math.log(big)
                out_v.append(c_cur)
                out_s.append(s)
                since = 0
                continue
            since = 0
        out_v.append(c_cur)
        out_s.append(s)
    return out_v, out_s


def propagate(params: RecurrenceParams, seed: tuple[complex, complex], direction: str,
              steps: int, n0: int = 0) -> RecurrenceSolution:
    """Propagate from the seed (C_{n0-1}, C_{n0}).

    ``direction='up'`` produces C_{n0+1} .. C_{n0+steps}; ``'down'``
    produces C_{n0-2} .. C_{n0-1-steps}.  The returned window includes
    both seed values.
    """
    steps = int(steps)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    c_prev, c_cur = complex(seed[0]), complex(seed[1])
    if direction == "up":
        p = _p_table(params, n0, n0 + steps - 1)
        q_next = [n0 + k + 0.5 for k in range(steps)]
        q_prev = [n0 + k - 0.5 for k in range(steps)]
        vals, scales = _run(q_next, p, q_prev, c_prev, c_cur, 0.0, n0, 1)
        values = np.array([c_prev, c_cur] + vals, dtype=complex)
        log_scale = np.array([0.0, 0.0] + scales)
        return RecurrenceSolution(params, n0 - 1, values, log_scale)
    if direction == "down":
        top = n0 - 1
        p = _p_table(params, top - steps + 1, top)[::-1]
        q_next = [top - k - 0.5 for k in range(steps)]  # Q_n divides
        q_prev = [top - k + 0.5 for k in range(steps)]  # Q_{n+1} multiplies C_{n+1}
        vals, scales = _run(q_next, p, q_prev, c_cur, c_prev, 0.0, top, -1)
        values = np.array((vals[::-1] + [c_prev, c_cur]), dtype=complex)
        log_scale = np.array(scales[::-1] + [0.0, 0.0])
        return RecurrenceSolution(params, top - steps, values, log_scale)
    raise ValueError("direction must be 'up' or 'down'")


def join(lower: RecurrenceSolution, upper: RecurrenceSolution) -> RecurrenceSolution:
    """Glue two pieces of one solution that overlap in at least one index."""
    if lower.params != upper.params:
        raise ValueError("solutions belong to different recurrences")
    if upper.n_lo > lower.n_hi or upper.n_lo < lower.n_lo:
        raise ValueError("pieces must overlap")
    n = upper.n_lo
    # rescale upper to agree with lower at the largest shared value
    shared = min(lower.n_hi, upper.n_hi) - n + 1
    j = int(np.argmax(np.abs(upper.values[:shared])))
    if upper.values[j] == 0:
        raise ValueError("pieces vanish on their overlap")
    r = lower.values[n + j - lower.n_lo] / upper.values[j]
    shift = lower.log_scale[n + j - lower.n_lo] - upper.log_scale[j]
    keep = n - lower.n_lo
    values = np.concatenate([lower.values[:keep], upper.values * r])
    log_scale = np.concatenate([lower.log_scale[:keep], upper.log_scale + shift])
    return RecurrenceSolution(lower.params, lower.n_lo, values, log_scale,
                              lower.converged and upper.converged)


def two_sided(params: RecurrenceParams, seed: tuple[complex, complex], n_lo: int, n_hi: int,
              n0: int = 0) -> RecurrenceSolution:
    """Solution through the seed (C_{n0-1}, C_{n0}) on [n_lo, n_hi]."""
    if not n_lo <= n0 - 1 < n0 <= n_hi:
        raise ValueError("window must contain the seed indices")
    parts = []
    if n0 - 1 > n_lo:
        parts.append(propagate(params, seed, "down", n0 - 1 - n_lo, n0))
    if n_hi > n0:
        parts.append(propagate(params, seed, "up", n_hi - n0, n0))
    if not parts:
        return RecurrenceSolution(params, n0 - 1, np.array(seed, dtype=complex), np.zeros(2))
    sol = parts[0]
    for part in parts[1:]:
        sol = join(sol, part)
    return sol


# --- asymptotic tail ratio of the minimal solution -------------------------

_SERIES_ORDER = 14


def _series_mul(a, b, m):
    return np.convolve(a, b)[:m]


def _series_recip(a, m):
    r = np.zeros(m, dtype=complex)
    r[0] = 1.0 / a[0]
    for k in range(1, m):
        r[k] = -np.dot(a[1:k + 1], r[k - 1::-1][:k]) / a[0]
    return r


def _series_residual(a, alpha, lam, m):
    """Taylor coefficients in x = 1/n of

        (1 + x/2) f(x) + (1 - x/2) / f(x / (1 - x)) - (2/alpha) sqrt(1 - Lambda x^2),

    where f(1/n) = w_{n+1}/w_n; all coefficients vanish for an exact ratio.
    """
    f = np.zeros(m, dtype=complex)
    f[:len(a)] = a[:m]
    u = np.ones(m, dtype=complex)
    u[0] = 0.0
    comp = np.zeros(m, dtype=complex)
    power = np.zeros(m, dtype=complex)
    power[0] = 1.0
    for k in range(m):
        comp += f[k] * power
        power = _series_mul(power, u, m)
    t1 = _series_mul(np.array([1.0, 0.5], dtype=complex), f, m)
    t2 = _series_mul(np.array([1.0, -0.5], dtype=complex), _series_recip(comp, m), m)
    root = np.zeros(m, dtype=complex)
    coef = 1.0
    for k in range(0, (m + 1) // 2):
        if 2 * k < m:
            root[2 * k] = coef * (-lam) ** k
        coef *= (0.5 - k) / (k + 1)
    return t1 + t2 - (2.0 / alpha) * root


def tail_series(alpha: float, Lambda: complex, order: int = _SERIES_ORDER) -> np.ndarray | None:
    """Coefficients a_k with w_{n+1}/w_n ~ sum_k a_k n^{-k} for the
    minimal solution as n -> +inf, or None when no minimal solution
    exists (alpha > 1)."""
    a = _tail_series_cached(float(alpha), complex(Lambda), int(order))
    return None if a is None else a.copy()


@functools.lru_cache(maxsize=4096)
def _tail_series_cached(alpha: float, lam: complex, order: int) -> np.ndarray | None:
    if alpha > 1.0:
        return None
    m = order + 3
    a = np.zeros(order + 1, dtype=complex)
    if alpha == 1.0:
        # double root: leading ratio 1, power n^{-sqrt(-Lambda)}
        a[0] = 1.0
        a[1] = -cmath.sqrt(-lam)
        if a[1] == 0:
            return a[:2]
        start, shift = 2, 1
    else:
        a[0] = 1.0 / alpha - cmath.sqrt(1.0 / alpha ** 2 - 1.0)
        start, shift = 1, 0
    for k in range(start, order + 1):
        a[k] = 0.0
        g0 = _series_residual(a, alpha, lam, m)[k + shift]
        a[k] = 1.0
        g1 = _series_residual(a, alpha, lam, m)[k + shift]
        slope = g1 - g0
        if slope == 0 or not np.isfinite(slope):
            return a[:k]
        a[k] = -g0 / slope
    return a


def tail_ratio(params: RecurrenceParams, n: int, side: str = "plus") -> complex | None:
    """Asymptotic estimate of C_{n+1}/C_n (plus) or C_{n-1}/C_n (minus,
    with n < 0) for the minimal solution, summed to its smallest term."""
    a = tail_series(params.alpha, params.Lambda)
    if a is None:
        return None
    m = abs(int(n))
    terms = a * (1.0 / m) ** np.arange(len(a))
    total = terms[0]
    for k in range(1, len(terms)):
        if k > 1 and abs(terms[k]) > abs(terms[k - 1]):
            break
        total += terms[k]
    total = complex(total)
    return total if side == "plus" else -total


def _backward_from(params: RecurrenceParams, side: str, n_start: int, n_match: int,
                   closure: bool) -> RecurrenceSolution:
    n_start = abs(int(n_start))
    if side == "plus":
        r = tail_ratio(params, n_start) if closure else None
        seed = (1.0, 0.0 if r is None else r)  # (C_N, C_{N+1})
        sol = propagate(params, seed, "down", n_start - n_match, n_start + 1)
    elif side == "minus":
        if params.is_strip:
            raise ValueError("strip recurrence is one-sided")
        r = tail_ratio(params, -n_start, "minus") if closure else None
        seed = (0.0 if r is None else r, 1.0)  # (C_{-N-1}, C_{-N})
        sol = propagate(params, seed, "up", n_match + n_start, -n_start)
    else:
        raise ValueError("side must be 'plus' or 'minus'")
    return sol


def minimal_solution(params: RecurrenceParams, side: str = "plus", n_match: int = 0,
                     n_start_hint: int | None = None, closure: bool = True,
                     max_doublings: int = 10, rtol: float = MILLER_RTOL) -> RecurrenceSolution:
    """Miller backward recursion for the solution decaying on ``side``.

    The start index is doubled from ``n_start_hint`` until the ratio
    C_{n_match +/- 1}/C_{n_match} settles to ``rtol``.  With ``closure``
    the recursion is seeded by the asymptotic tail ratio instead of zero,
    which matters when alpha is close to 1.  For alpha > 1 there is no
    decaying solution; the last iterate is returned with
    ``converged=False``.
    """
    if n_start_hint is None:
        n_start_hint = 4 * abs(n_match) + 200
    n_start = max(int(n_start_hint), abs(n_match) + 8)
    step = 1 if side == "plus" else -1
    history = []
    prev = None
    sol = None
    for _ in range(max_doublings + 1):
        sol = _backward_from(params, side, n_start, n_match, closure)
        probe = sol.ratio(n_match + step, n_match)
        history.append((n_start, probe))
        if prev is not None and abs(probe - prev) <= rtol * max(abs(probe), 1e-300):
            out = sol.normalized(n_match)
            return RecurrenceSolution(out.params, out.n_lo, out.values.copy(), out.log_scale.copy(),
                                      True, {"n_start": n_start, "history": history})
        prev = probe
        n_start *= 2
    out = sol.normalized(n_match)
    info = {"n_start": n_start // 2, "history": history}
    if params.alpha > 1.0:
        return RecurrenceSolution(out.params, out.n_lo, out.values.copy(), out.log_scale.copy(), False, info)
    if params.alpha == 1.0:
        info["power_law_regime"] = True
        return RecurrenceSolution(out.params, out.n_lo, out.values.copy(), out.log_scale.copy(), False, info)
    last = ", ".join(repr(h[1]) for h in history[-2:])
    raise ConvergenceError(
        f"Miller recursion did not settle after {max_doublings} doublings; last iterates {last}",
        history)


def casoratian(a: RecurrenceSolution, b: RecurrenceSolution, n: int) -> complex:
    """W_n = Q_{n+1} (a_{n+1} b_n - a_n b_{n+1})."""
    if a.params != b.params:
        raise ValueError("solutions belong to different recurrences")
    if not (a.covers(n, n + 1) and b.covers(n, n + 1)):
        raise ValueError(f"both solutions must cover [{n}, {n + 1}]")
    ia, ib = n - a.n_lo, n - b.n_lo
    sa, sb = a.log_scale[ia], b.log_scale[ib]
    a0, b0 = a.values[ia], b.values[ib]
    a1 = a.values[ia + 1] * math.exp(a.log_scale[ia + 1] - sa)
    b1 = b.values[ib + 1] * math.exp(b.log_scale[ib + 1] - sb)
    return complex((n + 0.5) * (a1 * b0 - a0 * b1) * math.exp(sa + sb))


def identity_residual(params: RecurrenceParams, solution: RecurrenceSolution, N: int) -> float:
    """Relative defect of

        sum_{|n|<=N} |C_n|^2 Im P_n = -Q_{N+1} Im(C_{N+1} conj C_N) - Q_{-N} Im(C_{-N-1} conj C_{-N}).
    """
    if params.is_strip:
        raise ValueError("the two-sided identity applies to the cylinder recurrence")
    N = int(N)
    if not solution.covers(-N - 1, N + 1):
        raise ValueError(f"solution must cover [{-N - 1}, {N + 1}]")
    sub = solution.restrict(-N - 1, N + 1)
    c = sub.scaled()
    p = np.array(_p_table(params, -N, N))
    inner = c[1:-1]
    lhs = float(np.sum(np.abs(inner) ** 2 * p.imag))
    rhs = float(-(N + 0.5) * (c[-1] * np.conj(c[-2])).imag
                - (-N - 0.5) * (c[0] * np.conj(c[1])).imag)
    return abs(lhs - rhs) / (abs(lhs) + abs(rhs) + 1e-300)


class AsymptoticFit(NamedTuple):
    lambda_est: complex
    power_est: complex
    residual: float


def fit_asymptotics(solution: RecurrenceSolution, fit_window: tuple[int, int],
                    fix_lambda: complex | None = None) -> AsymptoticFit:
    """Least-squares fit log C_n ~ m log(lambda) + p log(m) + const, m = |n|.

    On a negative window the fitted lambda is the outward ratio C_{n-1}/C_n.
    The phase of C_n is unwrapped around its median step so that
    alternating signs do not confuse the fit.  With ``fix_lambda`` only
    p and the constant are fitted.
    """
    lo, hi = sorted(int(v) for v in fit_window)
    if hi - lo + 1 < 8:
        raise ValueError("fit window needs at least 8 points")
    if lo < 0 < hi:
        raise ValueError("fit window must lie on one side of n = 0")
    sub = solution.restrict(lo, hi)
    if np.any(sub.values == 0):
        raise ValueError("solution vanishes inside the fit window")
    n = sub.indices
    if hi <= 0:
        order = np.argsort(-n)  # outward from 0
    else:
        order = np.argsort(n)
    m = np.abs(n[order]).astype(float)
    if np.any(m == 0):
        keep = m > 0
        m = m[keep]
        order = order[keep]
    vals = sub.values[order]
    scales = sub.log_scale[order]
    logmod = np.log(np.abs(vals)) + scales
    steps = vals[1:] / vals[:-1]
    base = np.angle(np.median(steps.real) + 1j * np.median(steps.imag))
    d = np.angle(steps * np.exp(-1j * base))
    phase = np.angle(vals[0]) + np.concatenate([[0.0], np.cumsum(base + d)])
    y = logmod + 1j * phase
    if fix_lambda is None:
        A = np.column_stack([m, np.log(m), np.ones_like(m)])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        lam = complex(np.exp(coef[0]))
        p = complex(coef[1])
        fitted = A @ coef
    else:
        loglam = complex(np.log(complex(fix_lambda)))
        A = np.column_stack([np.log(m), np.ones_like(m)])
        coef, *_ = np.linalg.lstsq(A, y - m * loglam, rcond=None)
        lam = complex(fix_lambda)
        p = complex(coef[0])
        fitted = A @ coef + m * loglam
    resid = float(np.sqrt(np.mean(np.abs(y - fitted) ** 2)))
    return AsymptoticFit(lam, p, resid)


def strip_gauge(v: np.ndarray, n_lo: int = 0) -> np.ndarray:
    """w_n = i^n v_n: maps the real symmetrized strip solution to the
    coefficients of the printed complex strip condition."""
    n = np.arange(n_lo, n_lo + len(v))
    return (1j ** (n % 4)) * np.asarray(v, dtype=complex)


def strip_condition_residual(params: RecurrenceParams, w: np.ndarray, n_lo: int = 0) -> np.ndarray:
    """Relative residual of -2 sqrt(n^2 - Lambda) w_n = i alpha ((n+1/2) w_{n+1} - (n-1/2) w_{n-1})
    at the interior indices of ``w`` (indices n_lo .. n_lo+len-1, n >= 1 interior)."""
    out = []
    for k in range(1, len(w) - 1):
        n = n_lo + k
        if n < 1:
            continue
        lhs = -2.0 * _sqrt_branch(n, params.Lambda) * w[k]
        rhs = 1j * params.alpha * ((n + 0.5) * w[k + 1] - (n - 0.5) * w[k - 1])
        scale = max(abs(lhs), abs(rhs), 1e-300)
        out.append(abs(lhs - rhs) / scale)
    return np.array(out)
