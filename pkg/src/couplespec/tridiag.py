"""Real symmetric tridiagonal kernel: Sturm counts, bisection, inverse iteration."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class SymTridiagonal:
    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        d = np.array(self.diag, dtype=float).reshape(-1)
        e = np.array(self.offdiag, dtype=float).reshape(-1)
        if d.size < 1:
            raise ValueError("dimension must be >= 1")
        if e.size != d.size - 1:
            raise ValueError(f"offdiag must have length {d.size - 1}, got {e.size}")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
            raise ValueError("entries must be finite")
        d.setflags(write=False)
        e.setflags(write=False)
        object.__setattr__(self, "diag", d)
        object.__setattr__(self, "offdiag", e)

    @property
    def dim(self) -> int:
        return self.diag.size

    @property
    def scale(self) -> float:
        """Infinity-norm bound (Gershgorin); 1 for the zero matrix."""
        r = np.abs(self.diag).copy()
        r[:-1] += np.abs(self.offdiag)
        r[1:] += np.abs(self.offdiag)
        s = float(r.max())
        return s if s > 0 else 1.0

    def gershgorin(self) -> tuple[float, float]:
        r = np.zeros(self.dim)
        r[:-1] += np.abs(self.offdiag)
        r[1:] += np.abs(self.offdiag)
        return float(np.min(self.diag - r)), float(np.max(self.diag + r))

    def __neg__(self) -> "SymTridiagonal":
        return SymTridiagonal(-self.diag, -self.offdiag)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        out = self.diag * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return out

    def to_dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)


def _pivot_floor(T: SymTridiagonal) -> float:
    return EPS * T.scale


def count_below(T: SymTridiagonal, mu: float) -> int:
    """Number of eigenvalues strictly below ``mu`` (negative LDL^T pivots of T - mu).

    A pivot smaller than eps*scale in modulus is replaced by +eps*scale,
    which is the limit from mu - 0 and therefore excludes an eigenvalue
    sitting exactly at mu.
    """
    d = T.diag.tolist()
    e2 = (T.offdiag * T.offdiag).tolist()
    floor = _pivot_floor(T)
    mu = float(mu)
    q = d[0] - mu
    if abs(q) < floor:
        q = floor
    count = 1 if q < 0 else 0
    for i in range(1, len(d)):
        q = d[i] - mu - e2[i - 1] / q
        if abs(q) < floor:
            q = floor
        if q < 0:
            count += 1
    return count


def count_below_many(T: SymTridiagonal, mus) -> np.ndarray:
    """Vectorized :func:`count_below` over an array of shifts."""
    mus = np.asarray(mus, dtype=float)
    shape = mus.shape
    mus = mus.reshape(-1)
    floor = _pivot_floor(T)
    q = T.diag[0] - mus
    q = np.where(np.abs(q) < floor, floor, q)
    count = (q < 0).astype(int)
    e2 = T.offdiag * T.offdiag
    for i in range(1, T.dim):
        q = T.diag[i] - mus - e2[i - 1] / q
        q = np.where(np.abs(q) < floor, floor, q)
        count += q < 0
    return count.reshape(shape)


def count_above(T: SymTridiagonal, mu: float) -> int:
    """Number of eigenvalues strictly above ``mu``; N_+(mu; T) = N_-(-mu; -T)."""
    return count_below(-T, -mu)


def count_equal(T: SymTridiagonal, mu: float, tol_eq: float | None = None) -> int:
    """Eigenvalues within ``tol_eq`` (default 1e-10 * scale) of mu."""
    if tol_eq is None:
        tol_eq = 1e-10 * T.scale
    return count_below(T, mu + tol_eq) - count_below(T, mu - tol_eq)


def eigenvalues_bisect(T: SymTridiagonal, interval: tuple[float, float], tol: float) -> list[float]:
    """All eigenvalues in the open interval (lo, hi) to absolute accuracy
    ``tol``, repeated by multiplicity."""
    lo, hi = map(float, interval)
    if not lo < hi:
        raise ValueError("need lo < hi")
    if not tol > 0:
        raise ValueError("tol must be positive")
    g_lo, g_hi = T.gershgorin()
    lo_c = max(lo, g_lo - 1.0)
    hi_c = min(hi, g_hi + 1.0)
    c_lo = T.dim - count_above(T, lo)  # eigenvalues <= lo
    c_hi = count_below(T, hi)
    if c_hi == c_lo:
        return []
    out: list[float] = []
    # stack of (a, b, count_below(a), count_below(b))
    stack = [(lo_c, hi_c, c_lo, c_hi)]
    while stack:
        a, b, ca, cb = stack.pop()
        if cb == ca:
            continue
        if b - a <= tol:
            out.extend([0.5 * (a + b)] * (cb - ca))
            continue
        m = 0.5 * (a + b)
        cm = count_below(T, m)
        stack.append((m, b, cm, cb))
        stack.append((a, m, ca, cm))
    return sorted(out)


def kth_eigenvalue(T: SymTridiagonal, k: int, tol: float) -> float:
    """The k-th smallest eigenvalue (k = 0 is the minimum)."""
    if not 0 <= k < T.dim:
        raise IndexError("eigenvalue index out of range")
    a, b = T.gershgorin()
    a -= tol
    b += tol
    while b - a > tol:
        m = 0.5 * (a + b)
        if count_below(T, m) > k:
            b = m
        else:
            a = m
    return 0.5 * (a + b)


def inverse_iteration(T: SymTridiagonal, mu_approx: float, tol: float = 1e-12,
                      max_iter: int = 50) -> np.ndarray:
    """Unit eigenvector for the eigenvalue nearest ``mu_approx``.

    Stops when ||T v - rho v|| <= 10 tol ||T||, rho the Rayleigh quotient;
    the sign is fixed so the largest component is positive.
    """
    n = T.dim
    norm = T.scale
    if n == 1:
        return np.ones(1)
    mu = float(mu_approx)
    shift = mu
    ab = np.zeros((3, n))
    ab[0, 1:] = T.offdiag
    ab[2, :-1] = T.offdiag
    rng = np.random.default_rng(12345)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        ab[1] = T.diag - shift
        try:
            w = solve_banded((1, 1), ab, v)
        except np.linalg.LinAlgError:
            shift = mu + 4 * EPS * norm * (1 + abs(mu))
            continue
        if not np.all(np.isfinite(w)):
            shift = mu + 4 * EPS * norm * (1 + abs(mu))
            continue
        v = w / np.linalg.norm(w)
        tv = T.matvec(v)
        res = np.linalg.norm(tv - float(v @ tv) * v)
        if res <= 10 * tol * norm:
            i = int(np.argmax(np.abs(v)))
            return v if v[i] > 0 else -v
    raise RuntimeError(f"inverse iteration did not converge in {max_iter} iterations")
