"""Quadratic forms on trial functions with one exponential per mode.

A trial function is U = sum_n c_n e^{-kappa_n |x|} (times the transverse
mode), so every form has a closed expression:

    ell0[U]  = sum |c_n|^2 (kappa_n^2 + n^2) / kappa_n
    ||U||^2  = sum |c_n|^2 / kappa_n
    b[U]     = sum (2n-1) Re(c_n conj c_{n-1})        (cylinder)
             = sum_{n>=2} (2n-1) Im(c_n conj c_{n-1}) (strip)

and ell_alpha = ell0 - alpha b.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.integrate import quad

from .model import Kind, ModelSpec
from .model import L as cylinder
from .tridiag import SymTridiagonal, inverse_iteration, kth_eigenvalue


class PreconditionError(ValueError):
    """The trial function lies outside the class where a bound holds."""


@dataclass(frozen=True)
class TrialFunction:
    n: np.ndarray
    c: np.ndarray
    kappa: np.ndarray
    model: ModelSpec

    def __post_init__(self):
        n = np.asarray(self.n, dtype=int).reshape(-1)
        c = np.asarray(self.c, dtype=complex).reshape(-1)
        k = np.asarray(self.kappa, dtype=float).reshape(-1)
        if not (n.size == c.size == k.size):
            raise ValueError("n, c, kappa must have equal length")
        if len(set(n.tolist())) != n.size:
            raise ValueError("mode indices must be distinct")
        if np.any(~(k > 0)):
            raise ValueError("every kappa must be positive")
        if self.model.kind is Kind.StripM and np.any(n < 1):
            raise ValueError("strip modes start at n = 1")
        order = np.argsort(n)
        object.__setattr__(self, "n", n[order])
        object.__setattr__(self, "c", c[order])
        object.__setattr__(self, "kappa", k[order])

    @classmethod
    def from_modes(cls, modes, model: ModelSpec | None = None) -> "TrialFunction":
        """Build from (n, c, kappa) triples."""
        modes = list(modes)
        n = [m[0] for m in modes]
        c = [m[1] for m in modes]
        k = [m[2] for m in modes]
        return cls(np.array(n), np.array(c), np.array(k), model or cylinder(0.0))

    def scaled(self, t: complex) -> "TrialFunction":
        return TrialFunction(self.n, t * self.c, self.kappa, self.model)

    def coefficient(self, n: int) -> complex:
        hit = np.nonzero(self.n == n)[0]
        return complex(self.c[hit[0]]) if hit.size else 0.0j


def ell0(trial: TrialFunction) -> float:
    c2 = np.abs(trial.c) ** 2
    k = trial.kappa
    return float(np.sum(c2 * (k * k + trial.n.astype(float) ** 2) / k))


# same closed form on the strip (sine modes, n >= 1)
m0 = ell0


def norm_squared(trial: TrialFunction) -> float:
    return float(np.sum(np.abs(trial.c) ** 2 / trial.kappa))


def mode_norm_squared(trial: TrialFunction, n: int) -> float:
    hit = np.nonzero(trial.n == n)[0]
    if not hit.size:
        return 0.0
    i = hit[0]
    return float(abs(trial.c[i]) ** 2 / trial.kappa[i])


def _adjacent(trial: TrialFunction):
    n = trial.n
    idx = np.nonzero(np.diff(n) == 1)[0]
    return n[idx + 1], trial.c[idx + 1], trial.c[idx]


def b_form(trial: TrialFunction) -> float:
    n, hi, lo = _adjacent(trial)
    prod = hi * np.conj(lo)
    if trial.model.kind is Kind.CylinderL:
        return float(np.sum((2 * n - 1) * prod.real))
    keep = n >= 2
    return float(np.sum((2 * n[keep] - 1) * prod[keep].imag))


def ell_alpha(trial: TrialFunction, alpha: float | None = None) -> float:
    a = trial.model.alpha if alpha is None else alpha
    return ell0(trial) - a * b_form(trial)


def quadrature_forms(trial: TrialFunction) -> dict:
    """ell0 and ||U||^2 from adaptive quadrature of the defining integrals;
    an independent check of the closed forms."""
    e0 = 0.0
    nn = 0.0
    for n, c, k in zip(trial.n, trial.c, trial.kappa):
        a2 = abs(c) ** 2
        deriv = quad(lambda x: a2 * k * k * math.exp(-2 * k * x), 0, math.inf,
                     epsabs=0, epsrel=1e-13)[0]
        val = quad(lambda x: a2 * math.exp(-2 * k * x), 0, math.inf, epsabs=0, epsrel=1e-13)[0]
        e0 += 2 * (deriv + n * n * val)
        nn += 2 * val
    return {"ell0": e0, "norm_squared": nn}


class BoundCheck(NamedTuple):
    lhs: float
    rhs: float
    passed: bool


def lemma_bound_check(trial: TrialFunction) -> BoundCheck:
    """|b[U]| <= ell0[U] - ||u_0||^2 for trials with u_0(0) = 0."""
    if trial.model.kind is not Kind.CylinderL:
        raise ValueError("use m_lemma_bound_check for the strip")
    if trial.coefficient(0) != 0:
        raise PreconditionError("the bound needs u_0(0) = 0; the n = 0 mode must be absent")
    lhs = abs(b_form(trial))
    rhs = ell0(trial) - mode_norm_squared(trial, 0)
    return BoundCheck(lhs, rhs, lhs <= rhs + 1e-12)


def m_lemma_bound_check(trial: TrialFunction) -> BoundCheck:
    """|b[U]| <= m0[U] on the strip."""
    if trial.model.kind is not Kind.StripM:
        raise ValueError("trial must be a strip trial")
    lhs = abs(b_form(trial))
    rhs = m0(trial)
    return BoundCheck(lhs, rhs, lhs <= rhs + 1e-12)


def window_trial(N: int, model: ModelSpec | None = None) -> TrialFunction:
    """Modes n in [N, 2N] with kappa_n = n and unit coefficients
    (times i^n on the strip, which aligns the phases of b)."""
    model = model or cylinder(0.0)
    n = np.arange(N, 2 * N + 1)
    c = np.ones(n.size, dtype=complex)
    if model.kind is Kind.StripM:
        c = 1j ** (n % 4)
    return TrialFunction(n, c, n.astype(float), model)


def sharpness_ratio(N: int, model: ModelSpec | None = None) -> float:
    """|b| / (right-hand side of the bound) on :func:`window_trial`."""
    t = window_trial(N, model)
    chk = lemma_bound_check(t) if t.model.kind is Kind.CylinderL else m_lemma_bound_check(t)
    return chk.lhs / chk.rhs


def two_mode_witness(alpha: float, M: float, N: int) -> float:
    """2(sqrt(N^2+M) + sqrt((N-1)^2+M)) - alpha (2N-1)."""
    return 2.0 * (math.sqrt(N * N + M) + math.sqrt((N - 1) ** 2 + M)) - alpha * (2 * N - 1)


def window_witness(alpha: float, M: float, N_lo: int, N_hi: int) -> float:
    """ell_alpha[U] + M ||U||^2 for c_n = 1, kappa_n = sqrt(n^2+M), N_lo <= n <= N_hi."""
    if not 2 <= N_lo < N_hi:
        raise ValueError("need 2 <= N_lo < N_hi")
    n = np.arange(N_lo, N_hi + 1, dtype=float)
    return float(2.0 * np.sum(np.sqrt(n * n + M)) - alpha * np.sum(2 * n[1:] - 1))


class RayleighResult(NamedTuple):
    value: float
    n: np.ndarray
    coeffs: np.ndarray
    kappa: np.ndarray


def rayleigh_minimize(alpha: float, mode_range: tuple[int, int],
                      kappa_rule: Callable[[np.ndarray], np.ndarray] | None = None,
                      M: float = 1.0, model: ModelSpec | str = "L") -> RayleighResult:
    """Minimum of (ell0 - alpha b + M ||U||^2)/||U||^2 - M over c.

    With d_n = c_n / sqrt(kappa_n) the problem is the lowest eigenvalue of
    the tridiagonal matrix diag(kappa^2 + n^2 + M), offdiag
    -alpha (2n-1) sqrt(kappa_n kappa_{n-1}) / 2.  On the strip the gauge
    c_n = i^n d_n turns the Im-coupling into the same real matrix.
    """
    if isinstance(model, ModelSpec):
        kind = model.kind
    else:
        kind = Kind.parse(model)
    lo, hi = map(int, mode_range)
    if lo > hi:
        raise ValueError("empty mode range")
    if kind is Kind.StripM and lo < 1:
        raise ValueError("strip modes start at n = 1")
    n = np.arange(lo, hi + 1, dtype=float)
    if kappa_rule is None:
        kap = np.sqrt(n * n + M)
    else:
        kap = np.asarray(kappa_rule(n), dtype=float)
    if np.any(~(kap > 0)):
        raise ValueError("kappa_rule must be positive")
    diag = kap * kap + n * n + M
    off = -alpha * (2 * n[1:] - 1) / 2.0 * np.sqrt(kap[1:] * kap[:-1])
    if kind is Kind.StripM:
        off = np.where(n[1:] >= 2, off, 0.0)
    H = SymTridiagonal(diag, off)
    tol = 1e-14 * H.scale
    mu = kth_eigenvalue(H, 0, tol)
    d = inverse_iteration(H, mu, tol=1e-13)
    mu = float(d @ H.matvec(d))  # second-order accurate in the eigenvector
    c = np.sqrt(kap) * d
    if kind is Kind.StripM:
        c = c * 1j ** (n.astype(int) % 4)
    return RayleighResult(mu - M, n.astype(int), c, kap)


class SelfConsistent(NamedTuple):
    Lambda: float
    iterations: int
    converged: bool
    history: list


def _rayleigh_at(alpha, mode_range, lam):
    return rayleigh_minimize(alpha, mode_range, lambda n: np.sqrt(n * n - lam), M=0.0).value


def self_consistent_ground_state(alpha: float, mode_range: tuple[int, int],
                                 Lambda_start: float | None = None, max_iter: int = 30,
                                 tol: float = 1e-10) -> SelfConsistent:
    """Iterate kappa_n = sqrt(n^2 - Lambda) and Lambda <- Rayleigh minimum.

    The Rayleigh value R(Lambda) is bounded below by the ground state and
    touches it at the fixed point, so the iteration is started from the
    smallest R on a coarse geometric grid unless ``Lambda_start`` is given.
    """
    if Lambda_start is None:
        grid = -np.geomspace(1e-8, 10.0, 60)
        vals = [_rayleigh_at(alpha, mode_range, g) for g in grid]
        lam = float(min(vals))
    else:
        lam = float(Lambda_start)
    hist = [lam]
    for it in range(1, max_iter + 1):
        if not lam < 0:
            return SelfConsistent(lam, it, False, hist)
        new = _rayleigh_at(alpha, mode_range, lam)
        hist.append(new)
        if abs(new - lam) < tol:
            return SelfConsistent(new, it, True, hist)
        lam = new
    return SelfConsistent(lam, max_iter, False, hist)
