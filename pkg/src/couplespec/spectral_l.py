"""Bound states and self-adjointness diagnostics for the cylinder family L_alpha.

A negative eigenvalue Lambda is a value for which the solution of the
three-term recurrence decaying as n -> +inf and the one decaying as
n -> -inf are proportional, i.e. their Casoratian vanishes.  Both decaying
solutions are generated by backward recursion from |n| = K, closed either
by w_{+-(K+1)} = 0 (Dirichlet cut) or by the asymptotic tail ratio of the
minimal solution.  The same two closures define tridiagonal truncations
T_K(Lambda) = J - alpha^{-1} D(Lambda), which are strictly increasing in
Lambda; the number of their positive eigenvalues counts the eigenvalues
of the truncated operator below Lambda.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import recurrence as rec
from .model import L as cylinder
from .tridiag import SymTridiagonal, count_above

DISCLAIMER = (
    "alpha > 1: the operator is not essentially self-adjoint; every eigenvalue reported here "
    "belongs to the Dirichlet-truncated mode system, one particular self-adjoint regularization. "
    "Individual eigenvalue positions depend on the chosen extension; only qualitative features "
    "(discreteness, unboundedness from below) are extension independent.")

DEFAULT_RANGE = (-1e4, -1e-8)


def resolve_closure(alpha: float, closure: str = "auto") -> str:
    if closure == "auto":
        return "asymptotic" if alpha <= 1.0 else "dirichlet"
    if closure not in ("asymptotic", "dirichlet"):
        raise ValueError(f"unknown closure {closure!r}")
    if closure == "asymptotic" and alpha > 1.0:
        raise ValueError("no minimal solution (and no asymptotic closure) for alpha > 1")
    return closure


def _params(alpha: float, Lambda) -> rec.RecurrenceParams:
    return rec.RecurrenceParams(cylinder(alpha), Lambda)


def _pair(sol: rec.RecurrenceSolution, n_near: int, n_far: int) -> tuple[complex, complex]:
    """(C_near, C_far) in a common scale, divided by their joint norm."""
    i, j = n_near - sol.n_lo, n_far - sol.n_lo
    c0 = complex(sol.values[i])
    c1 = complex(sol.values[j]) * math.exp(sol.log_scale[j] - sol.log_scale[i])
    s = math.hypot(abs(c0), abs(c1))
    return c0 / s, c1 / s


def _side_solutions(alpha, Lambda, K, closure):
    params = _params(alpha, Lambda)
    use_tail = resolve_closure(alpha, closure) == "asymptotic"
    plus = rec._backward_from(params, "plus", K, 0, use_tail)
    minus = rec._backward_from(params, "minus", K, 0, use_tail)
    return params, plus, minus


def _casoratian_parts(alpha, Lambda, K, closure):
    params, plus, minus = _side_solutions(alpha, Lambda, K, closure)
    a0, a1 = _pair(plus, 0, 1)
    b0, bm1 = _pair(minus, 0, -1)
    _, p0 = rec.coefficients_at(params, 0)
    # Q_1 (a_1 b_0 - a_0 b_1) with Q_1 b_1 = -(P_0 b_0 + Q_0 b_{-1})
    w = 0.5 * a1 * b0 + a0 * (p0 * b0 - 0.5 * bm1)
    return w, a0, b0


def secular_value(alpha: float, Lambda, K: int = 64, closure: str = "auto",
                  normalized: bool = True):
    """Casoratian at n = 0 of the two decaying solutions.

    ``normalized=True`` scales both solutions to 1 at n = 0, which gives
    Q_1 w_1/w_0 + P_0 + Q_0 w_{-1}/w_0.  ``normalized=False`` returns a
    pole-free multiple with the same zeros, used for bracketing.
    """
    if K < 16:
        raise ValueError("K must be >= 16")
    w, a0, b0 = _casoratian_parts(alpha, Lambda, K, closure)
    if normalized:
        w = w / (a0 * b0)
    if complex(Lambda).imag == 0.0:
        return float(w.real)
    return complex(w)


def truncation_matrix(alpha: float, Lambda: float, K: int, closure: str = "auto") -> SymTridiagonal:
    """T_K(Lambda) on modes -K..K: diag P_n, offdiag Q_n; with the asymptotic
    closure the two corner entries absorb the tail, P_{+-K} + Q_{K+1} r(K)."""
    closure = resolve_closure(alpha, closure)
    n = np.arange(-K, K + 1, dtype=float)
    diag = -2.0 / alpha * np.sqrt(n * n - float(Lambda))
    off = n[1:] - 0.5
    if closure == "asymptotic":
        r = rec.tail_ratio(_params(alpha, Lambda), K).real
        diag[-1] += (K + 0.5) * r
        diag[0] += (K + 0.5) * r
    return SymTridiagonal(diag, off)


def count_eigenvalues_below(alpha: float, Lambda: float, K: int, closure: str = "auto") -> int:
    """Eigenvalues of the truncated mode system below ``Lambda`` (< 0)."""
    return count_above(truncation_matrix(alpha, Lambda, K, closure), 0.0)


def truncated_determinant(alpha: float, Lambda: float, K: int, closure: str = "dirichlet"):
    """(sign, log|det|) of the dense truncation matrix; an oracle independent
    of the recurrence code path."""
    T = truncation_matrix(alpha, Lambda, K, closure).to_dense()
    return np.linalg.slogdet(T)


def _lambda_grid(lo: float, hi: float, n: int) -> np.ndarray:
    if not lo < hi < 0:
        raise ValueError("need lo < hi < 0")
    return -np.geomspace(-hi, -lo, n)


def _bisect_sign(f, a: float, b: float, fa: float) -> float:
    while True:
        m = 0.5 * (a + b)
        if m <= a or m >= b or (b - a) <= 4e-16 * abs(m):
            return m
        fm = f(m)
        if fm == 0:
            return m
        if (fm > 0) == (fa > 0):
            a, fa = m, fm
        else:
            b = m


def _dense_count(alpha: float, Lambda: float, K: int, closure: str) -> int:
    T = truncation_matrix(alpha, Lambda, K, closure).to_dense()
    return int(np.count_nonzero(np.linalg.eigvalsh(T) > 0))


def _brackets(count, grid: np.ndarray) -> list[tuple[float, float]]:
    """Split the grid cells until each holds exactly one jump of ``count``.

    Sign scans alone miss close pairs; the count sees them.
    """
    pts = sorted(float(x) for x in grid)
    cs = [count(x) for x in pts]
    out = []
    stack = [(pts[k], pts[k + 1], cs[k], cs[k + 1]) for k in range(len(pts) - 1)]
    while stack:
        a, b, ca, cb = stack.pop()
        if cb - ca <= 0:
            continue
        if cb - ca == 1:
            out.append((a, b))
            continue
        m = 0.5 * (a + b)
        if m <= a or m >= b:
            out.extend([(a, b)] * (cb - ca))  # unresolvable at double precision
            continue
        cm = count(m)
        stack += [(a, m, ca, cm), (m, b, cm, cb)]
    return sorted(out)


def determinant_roots(alpha: float, Lambda_range=DEFAULT_RANGE, K: int = 64,
                      closure: str = "dirichlet", n_grid: int = 400) -> list[float]:
    """Roots of det T_K(Lambda): brackets from the dense (LAPACK) inertia,
    then bisection on the slogdet sign."""
    lo, hi = Lambda_range
    grid = _lambda_grid(lo, hi, n_grid)

    def sgn(x):
        return float(truncated_determinant(alpha, x, K, closure)[0])

    roots = []
    for a, b in _brackets(lambda x: _dense_count(alpha, x, K, closure), grid):
        fa, fb = sgn(a), sgn(b)
        roots.append(_bisect_sign(sgn, a, b, fa) if fa != fb else 0.5 * (a + b))
    return sorted(roots)


def _polish(f, a, b):
    return brentq(f, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=400)


def secular_roots(alpha: float, Lambda_range=DEFAULT_RANGE, K: int = 64,
                  closure: str = "auto", n_grid: int = 400) -> tuple[list[float], int]:
    """Roots of the secular function in the range, and the Sturm count of
    the same truncation; count brackets resolve close pairs."""
    lo, hi = Lambda_range

    def f(x):
        return secular_value(alpha, x, K, closure, normalized=False)

    expected = (count_eigenvalues_below(alpha, hi, K, closure)
                - count_eigenvalues_below(alpha, lo, K, closure))
    grid = _lambda_grid(lo, hi, n_grid)
    roots = []
    for a, b in _brackets(lambda x: count_eigenvalues_below(alpha, x, K, closure), grid):
        fa, fb = f(a), f(b)
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(float(_polish(f, a, b)))
    return sorted(roots), expected


@dataclass
class BoundState:
    """Eigenvalue with its mode coefficients w_n, n = n_lo .. n_lo + len - 1.

    Coefficients are normalized by sum |w_n|^2 / (2 kappa_n) = 1 with
    kappa_n = sqrt(n^2 - Lambda), which is the L^2 norm of the eigenfunction
    built by :func:`eigenfunction_eval`.
    """

    Lambda: float
    coeffs: np.ndarray
    K: int
    converged: bool
    refinement_history: list = field(default_factory=list)
    n_lo: int = 0
    kind: str = "L"
    alpha: float = float("nan")

    @property
    def indices(self) -> np.ndarray:
        return np.arange(self.n_lo, self.n_lo + len(self.coeffs))

    def kappa(self) -> np.ndarray:
        n = self.indices.astype(float)
        return np.sqrt(n * n - self.Lambda)

    def mode_norm(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2 / (2 * self.kappa())))

    def recurrence_residual(self) -> np.ndarray:
        """|Q_{n+1} w_{n+1} + P_n w_n + Q_n w_{n-1}| / max|w| at interior n."""
        n = self.indices[1:-1].astype(float)
        w = np.asarray(self.coeffs, dtype=complex)
        p = -2.0 / self.alpha * np.sqrt(n * n - self.Lambda)
        r = (n + 0.5) * w[2:] + p * w[1:-1] + (n - 0.5) * w[:-2]
        return np.abs(r) / np.max(np.abs(w))

    def to_dict(self) -> dict:
        c = np.asarray(self.coeffs)
        return {
            "Lambda": float(self.Lambda),
            "K": int(self.K),
            "converged": bool(self.converged),
            "refinement_history": [[int(k), float(v)] for k, v in self.refinement_history],
            "n_lo": int(self.n_lo),
            "kind": self.kind,
            "alpha": float(self.alpha),
            "coeffs": [[float(z.real), float(z.imag)] for z in c.astype(complex)],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BoundState":
        c = np.array([complex(re, im) for re, im in d["coeffs"]])
        if not np.any(c.imag):
            c = c.real
        return cls(float(d["Lambda"]), c, int(d["K"]), bool(d["converged"]),
                   [(int(k), float(v)) for k, v in d["refinement_history"]],
                   int(d["n_lo"]), d["kind"], float(d["alpha"]))


def _glued_coefficients(alpha, Lambda, K, closure) -> np.ndarray:
    params, plus, minus = _side_solutions(alpha, Lambda, K, closure)
    a = plus.scaled()   # n = 0 .. K+1
    b = minus.scaled()  # n = -K-1 .. 0
    _, p0 = rec.coefficients_at(params, 0)
    b1 = (p0 * b[-1] - 0.5 * b[-2]) / -0.5
    # at an eigenvalue a = c b; fit c on n = 0, 1 (either entry may vanish)
    c = (a[0] * np.conj(b[-1]) + a[1] * np.conj(b1)) / (abs(b[-1]) ** 2 + abs(b1) ** 2)
    w = np.concatenate([c * b[1:-1], a[:-1]])  # n = -K .. K
    return w.real if complex(Lambda).imag == 0 else w


def _make_state(alpha, Lambda, K, closure, converged, history) -> BoundState:
    w = _glued_coefficients(alpha, Lambda, K, closure)
    n = np.arange(-K, K + 1, dtype=float)
    norm2 = np.sum(np.abs(w) ** 2 / (2 * np.sqrt(n * n - Lambda)))
    w = w / math.sqrt(norm2)
    i = int(np.argmax(np.abs(w)))
    if w[i] < 0:
        w = -w
    return BoundState(float(Lambda), w, K, converged, list(history), -K, "L", float(alpha))


def _match(prev: list[float], new: list[float], tol: float) -> list[float | None]:
    """For each root in ``new`` the displacement to the nearest previous root."""
    out = []
    for r in new:
        if not prev:
            out.append(None)
            continue
        out.append(min(abs(r - p) for p in prev))
    return out


def find_bound_states(alpha: float, Lambda_range=DEFAULT_RANGE, K: int = 64,
                      tol: float = 1e-10, K_max: int = 4096, closure: str = "auto",
                      n_grid: int = 400) -> list[BoundState]:
    """Negative eigenvalues of L_alpha in ``Lambda_range``.

    Roots of the secular function are bracketed on a geometric grid,
    checked against the Sturm count of the same truncation, polished with
    Brent's method and followed while K doubles until every root moves by
    less than ``tol``.  For alpha > 1 the result refers to the Dirichlet
    truncation only (see :data:`DISCLAIMER`).
    """
    alpha = float(alpha)
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    lo, hi = map(float, Lambda_range)
    closure = resolve_closure(alpha, closure)
    history: dict[int, list] = {}
    prev: list[float] | None = None
    Kc = int(K)
    while True:
        roots, _ = secular_roots(alpha, (lo, hi), Kc, closure, n_grid)
        moves = _match(prev or [], roots, tol)
        for j, r in enumerate(roots):
            history.setdefault(j, []).append((Kc, r))
        done = prev is not None and len(roots) == len(prev) and all(
            m is not None and m < tol for m in moves)
        if done or 2 * Kc > K_max:
            converged = [m is not None and m < tol for m in moves] if prev is not None \
                else [False] * len(roots)
            return [_make_state(alpha, r, Kc, closure, converged[j], history.get(j, []))
                    for j, r in enumerate(roots)]
        prev = roots
        Kc *= 2


def eigenfunction_eval(state: BoundState, x, y):
    """U(x, y) = (4 pi)^{-1/2} sum_n w_n e^{i n y} e^{-|x| kappa_n}."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = state.indices.astype(float)
    kap = state.kappa()
    xb, yb = np.broadcast_arrays(x, y)
    phase = np.exp(1j * np.multiply.outer(yb, n))
    decay = np.exp(-np.multiply.outer(np.abs(xb), kap))
    return (phase * decay) @ np.asarray(state.coeffs, dtype=complex) / math.sqrt(4 * math.pi)


# ---------------------------------------------------------------- deficiency


class InconclusiveError(RuntimeError):
    """Asymptotic fits too ambiguous to classify."""


@dataclass
class DeficiencyVerdict:
    alpha: float
    Lambda_test: complex
    classification: str  # "EssentiallySelfAdjoint" or "Deficiency22"
    evidence: dict

    def to_dict(self) -> dict:
        def enc(v):
            if isinstance(v, complex):
                return [v.real, v.imag]
            if isinstance(v, dict):
                return {k: enc(u) for k, u in v.items()}
            if isinstance(v, (list, tuple)):
                return [enc(u) for u in v]
            return v
        return {"alpha": self.alpha, "Lambda_test": enc(complex(self.Lambda_test)),
                "classification": self.classification, "evidence": enc(self.evidence)}


def _block_modulus_fit(logc: np.ndarray, m: np.ndarray, block: int = 16):
    """Fit log rms|C| over blocks of ``block`` indices against
    m log|lambda| + q log m + c0; works on log|C| to avoid overflow."""
    nb = len(logc) // block
    lc = logc[: nb * block].reshape(nb, block)
    mm = m[: nb * block].reshape(nb, block).mean(axis=1)
    top = lc.max(axis=1)
    y = top + 0.5 * np.log(np.mean(np.exp(2 * (lc - top[:, None])), axis=1))
    A = np.column_stack([mm, np.log(mm), np.ones_like(mm)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.max(np.abs(A @ coef - y)))
    return math.exp(coef[0]), float(coef[1]), resid


def _admissible(logc: np.ndarray, m: np.ndarray) -> bool:
    """Cauchy test on sum |C|^2 (m^2+1)^{-1/2} over dyadic shells."""
    lt = 2 * logc - 0.5 * np.log(m * m + 1.0)
    t = np.exp(lt - lt.max())
    N = len(t)
    cuts = [N // 16, N // 8, N // 4, N // 2, N]
    inc = [float(np.sum(t[a:b])) for a, b in zip(cuts[:-1], cuts[1:])]
    return inc[-1] < 0.75 * inc[-2] and inc[-2] < 0.75 * inc[-3]


def deficiency_probe(alpha: float, Lambda_test: complex = 1j, K: int = 400) -> DeficiencyVerdict:
    """Count admissible solutions of the recurrence at a non-real Lambda.

    On each side the two solutions through seeds (1, 0) and (0, 1) at
    n = 0 are propagated to |n| = K.  If both sides carry a two-dimensional
    admissible space (|lambda| = 1, algebraic decay) the deficiency indices
    are (2, 2).  Otherwise the only candidates are the minimal solutions;
    the global identity sum |C_n|^2 Im P_n = boundary terms forbids an
    admissible solution on the whole line, which is essential self-adjointness.
    """
    alpha = float(alpha)
    lam = complex(Lambda_test)
    if lam.imag == 0.0:
        raise ValueError("Lambda_test must be non-real")
    if K < 64:
        raise ValueError("K must be >= 64")
    params = _params(alpha, lam)
    dims, moduli, exponents, resid = {}, {}, {}, {}
    for side, direction in (("plus", "up"), ("minus", "down")):
        n_adm = 0
        mods, qs, rs = [], [], []
        for seed in ((1.0, 0.0), (0.0, 1.0)):
            if direction == "up":
                sol = rec.propagate(params, seed, "up", K, 0)      # n = -1 .. K
                lc = sol.log_abs()[2:]
            else:
                sol = rec.propagate(params, seed[::-1], "down", K, 1)  # n = -K .. 1
                lc = sol.log_abs()[::-1][2:]
            m = np.arange(1, K + 1, dtype=float)
            mod, q, r = _block_modulus_fit(lc[K // 4:], m[K // 4:])
            mods.append(mod)
            qs.append(q)
            rs.append(r)
            if _admissible(lc, m):
                n_adm += 1
        dims[side] = n_adm
        moduli[side] = mods
        exponents[side] = qs
        resid[side] = max(rs)

    evidence: dict = {"admissible_dims": dims, "lambda_moduli": moduli,
                      "modulus_fit_residual": resid, "K": K}
    on_circle = all(abs(x - 1.0) < 1e-3 for v in moduli.values() for x in v)
    if min(resid.values()) > 2.0:
        raise InconclusiveError(f"modulus fits too noisy: {resid}")
    if dims["plus"] == 2 and dims["minus"] == 2:
        if not on_circle:
            raise InconclusiveError("both solutions admissible but |lambda| != 1")
        return DeficiencyVerdict(alpha, lam, "Deficiency22", evidence)

    if alpha <= 1.0:
        plus = rec.minimal_solution(params, "plus", 0)
        minus = rec.minimal_solution(params, "minus", 0)
        if alpha == 1.0:
            hi = plus.n_hi - 2
            fp = rec.fit_asymptotics(plus, (hi // 4, hi), fix_lambda=1.0)
            evidence["power_law_exponents"] = {"minimal": fp.power_est,
                                               "generic_real_part": exponents["plus"]}
        a = plus.normalized(0)
        b = minus.normalized(0)
        w = rec.casoratian(a, b, 0) if a.covers(0, 1) and b.covers(0, 1) else None
        evidence["casoratian_minimal"] = w
        if w is not None and abs(w) < 1e-8:
            raise InconclusiveError("minimal solutions are proportional at a non-real Lambda")
    evidence["identity"] = "sum |C_n|^2 Im P_n has one sign; no admissible global solution"
    return DeficiencyVerdict(alpha, lam, "EssentiallySelfAdjoint", evidence)


# ---------------------------------------------------------------- alpha > 1


@dataclass
class SweepTable:
    alpha: float
    t0: float
    t_grid: np.ndarray
    K_values: tuple
    counts: np.ndarray  # shape (len(K_values), len(t_grid))
    totals: np.ndarray  # all eigenvalues below DEFAULT_RANGE[1], per K
    disclaimer: str = DISCLAIMER

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "t0": self.t0, "t_grid": [float(t) for t in self.t_grid],
                "K_values": list(self.K_values), "counts": self.counts.tolist(),
                "totals": self.totals.tolist(), "disclaimer": self.disclaimer}


def negative_spectrum_sweep(alpha: float, t_grid, K_values=(64, 128, 256, 512),
                            t0: float = 0.5, threads: int | None = None) -> SweepTable:
    """n(t) = #{eigenvalues of the Dirichlet truncation in (-t, -t0)}.

    ``totals`` counts every eigenvalue of the truncation below -1e-8, which
    for alpha <= 1 should be the single bound state.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any(t_grid <= t0):
        raise ValueError("every t must exceed t0")

    def row(K):
        base = count_eigenvalues_below(alpha, -t0, K, "dirichlet")
        total = count_eigenvalues_below(alpha, DEFAULT_RANGE[1], K, "dirichlet")
        return [base - count_eigenvalues_below(alpha, -t, K, "dirichlet") for t in t_grid], total

    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            rows = list(ex.map(row, K_values))
    else:
        rows = [row(K) for K in K_values]
    return SweepTable(float(alpha), float(t0), t_grid, tuple(int(k) for k in K_values),
                      np.array([r[0] for r in rows], dtype=int),
                      np.array([r[1] for r in rows], dtype=int))
