from __future__ import annotations

import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from couplespec.model import L, M, characteristic_roots
from couplespec.recurrence import (
    ConvergenceError,
    _backward_from,
    RecurrenceParams,
    casoratian,
    coefficients_at,
    fit_asymptotics,
    identity_residual,
    join,
    minimal_solution,
    propagate,
    strip_condition_residual,
    strip_gauge,
    tail_ratio,
    two_sided,
)


def test_coefficients_direct_substitution():
    q, p = coefficients_at(RecurrenceParams(L(0.5), -1), 0)
    assert q == -0.5 and p == -4
    q, p = coefficients_at(RecurrenceParams(L(1.0), -3), 2)
    assert q == 1.5
    assert abs(p + 2 * math.sqrt(7)) < 1e-15


def test_coefficient_branch_against_mpmath():
    _, p = coefficients_at(RecurrenceParams(L(2.0), 1j), 1)
    mpmath.mp.dps = 40
    ref = -mpmath.sqrt(mpmath.mpc(1, -1))
    assert abs(p - complex(ref)) < 1e-15
    assert (-p).real >= 0


def test_alpha_zero_rejected():
    with pytest.raises(ValueError):
        RecurrenceParams(L(0.0), -1)


def test_strip_rejects_n_zero():
    with pytest.raises(ValueError):
        coefficients_at(RecurrenceParams(M(0.5), 0.5), 0)


def test_one_step_from_zero_value():
    p = RecurrenceParams(L(0.7), -2.5)
    for n0 in (-5, 0, 3):
        sol = propagate(p, (1.0, 0.0), "up", 1, n0)
        q0, _ = coefficients_at(p, n0)
        q1, _ = coefficients_at(p, n0 + 1)
        assert abs(sol.value(n0 + 1) - (-q0 / q1)) < 1e-15


def test_zero_seed_gives_zero():
    sol = propagate(RecurrenceParams(L(0.5), -1), (0, 0), "up", 50)
    assert np.all(sol.scaled() == 0)


def test_forward_picks_dominant_root():
    # the n^{-1/2} factor shifts the raw ratio by O(1/n); the fitted rate is sharp
    p = RecurrenceParams(L(0.5), -1)
    sol = propagate(p, (0, 1), "up", 201, 0)
    lam = characteristic_roots(0.5).lambda_plus_plus
    r = sol.ratio(201, 200)
    assert abs(r - lam) < 2.0 / 200
    assert abs(r / (1 - 0.5 / 200) - lam) < 1e-3
    fit = fit_asymptotics(sol, (100, 201))
    assert abs(fit.lambda_est - lam) < 1e-4


def test_mantissa_stays_tame():
    sol = propagate(RecurrenceParams(L(0.5), -1), (0, 1), "up", 2000, 0)
    nz = np.abs(sol.values[sol.values != 0])
    assert nz.max() <= 1e100 and nz.min() >= 1e-100
    assert np.isfinite(sol.log_abs()[1:]).all()  # seed C_{-1} = 0


def test_down_matches_up():
    # short window: the backward run is ill-conditioned over long stretches
    p = RecurrenceParams(L(0.8), -0.3)
    up = propagate(p, (0.3, 1.0), "up", 6, -3)
    down = propagate(p, (up.value(2), up.value(3)), "down", 5, 3)
    scale = max(abs(up.value(n)) for n in range(-3, 4))
    for n in range(-3, 4):
        assert abs(down.value(n) - up.value(n)) < 1e-13 * scale


def test_interior_residual_small():
    p = RecurrenceParams(L(0.9), 0.4 + 0.3j)
    sol = two_sided(p, (1.0, 0.5j), -300, 300)
    assert np.max(sol.residuals()) < 1e-12


def test_scaling_linearity():
    p = RecurrenceParams(L(0.6), -2.0)
    a = propagate(p, (1.0, 2.0), "up", 300)
    b = propagate(p, (3j, 6j), "up", 300)
    assert np.allclose(b.scaled(0) / 3j, a.scaled(0), rtol=1e-13, atol=0)


def test_minimal_plus_decays():
    p = RecurrenceParams(L(0.5), -1)
    sol = minimal_solution(p, "plus", 0)
    assert sol.converged
    assert abs(sol.value(0) - 1) < 1e-15
    lam = characteristic_roots(0.5).lambda_plus_minus
    fit = fit_asymptotics(sol, (100, 300))
    assert abs(fit.lambda_est - lam) < 1e-5
    assert abs(fit.power_est + 0.5) < 0.05
    # raw ratio carries the O(1/n) correction of the n^{-1/2} prefactor
    assert abs(sol.ratio(201, 200) - lam) < 1e-3
    assert abs(sol.ratio(201, 200) - tail_ratio(p, 200)) < 1e-10


def test_minimal_minus_mirror():
    p = RecurrenceParams(L(0.5), -1)
    plus = minimal_solution(p, "plus", 0)
    minus = minimal_solution(p, "minus", 0)
    lam = characteristic_roots(0.5).lambda_plus_minus
    assert abs(abs(minus.ratio(-201, -200)) - abs(plus.ratio(201, 200))) < 1e-12
    fit = fit_asymptotics(minus, (-300, -100))
    assert abs(abs(fit.lambda_est) - lam) < 1e-5


def test_miller_seed_stability():
    p = RecurrenceParams(L(0.5), -1)
    a = _backward_from(p, "plus", 200, 0, closure=False).normalized(0)
    b = _backward_from(p, "plus", 400, 0, closure=False).normalized(0)
    assert abs(a.value(5) - b.value(5)) < 1e-12 * abs(b.value(5))


def test_miller_reports_nonconvergence():
    with pytest.raises(ConvergenceError) as err:
        minimal_solution(RecurrenceParams(L(0.5), -1), "plus", 0, max_doublings=0)
    assert len(err.value.history) == 1


def test_power_law_at_alpha_one():
    p = RecurrenceParams(L(1.0), -4)
    sol = minimal_solution(p, "plus", 0)
    hi = sol.n_hi
    fit = fit_asymptotics(sol, (hi // 4, hi // 2))
    assert abs(abs(fit.lambda_est) - 1) < 1e-4
    assert abs(fit.power_est.real + 2) < 0.05


def test_unit_modulus_above_one():
    p = RecurrenceParams(L(2.0), 1j)
    sol = propagate(p, (0, 1), "up", 400)
    fit = fit_asymptotics(sol, (100, 300))
    assert abs(abs(fit.lambda_est) - 1) < 1e-3


def test_casoratian_antisymmetric():
    p = RecurrenceParams(L(0.7), -1)
    a = propagate(p, (1, 2), "up", 30)
    assert casoratian(a, a, 10) == 0


def test_casoratian_constant():
    p = RecurrenceParams(L(0.7), -1.3)
    a = propagate(p, (1, 2), "up", 200)
    b = propagate(p, (0.5, -1j), "up", 200)
    w = np.array([casoratian(a, b, n) for n in range(0, 199)])
    # both solutions grow like lambda^n, so the rounding of W_n scales with
    # the size of the two products it cancels
    size = np.array([(n + 0.5) * (abs(a.value(n + 1) * b.value(n)) + abs(a.value(n) * b.value(n + 1)))
                     for n in range(0, 199)])
    assert np.max(np.abs(w - w[0]) / size) < 1e-12


def test_casoratian_constant_minimal_pair():
    # decaying times growing: no cancellation, W constant to full precision
    p = RecurrenceParams(L(0.5), -1)
    a = minimal_solution(p, "plus", 0)
    b = propagate(p, (0, 1), "up", 300, 0)
    w = np.array([casoratian(a, b, n) for n in range(0, 150)])
    assert np.max(np.abs(w - w[0])) < 1e-12 * abs(w[0])


def test_casoratian_vanishes_at_eigenvalue():
    from couplespec.spectral_l import find_bound_states

    state = find_bound_states(0.5)[0]
    p = RecurrenceParams(L(0.5), state.Lambda)
    plus = minimal_solution(p, "plus", 0)
    minus = minimal_solution(p, "minus", 1)
    # scale-free comparison: W / (|a_0 b_1| + |a_1 b_0|)
    w = casoratian(minus, plus, 0)
    norm = abs(minus.value(1) * plus.value(0)) + abs(minus.value(0) * plus.value(1))
    assert abs(w) / norm < 1e-8


def test_identity_real_case_trivial():
    p = RecurrenceParams(L(0.5), -1)
    sol = two_sided(p, (1.0, 0.3), -40, 40)
    c = sol.scaled()
    assert np.all(np.imag(c) == 0)
    assert identity_residual(p, sol, 20) == 0.0


def test_identity_random_seed():
    rng = np.random.default_rng(1)
    p = RecurrenceParams(L(0.5), 1 + 1j)
    seed = tuple(rng.normal(size=2) + 1j * rng.normal(size=2))
    sol = two_sided(p, seed, -51, 51)
    assert identity_residual(p, sol, 50) < 1e-10


def test_identity_minimal_above_one():
    p = RecurrenceParams(L(2.0), 1j)
    sol = minimal_solution(p, "plus", -101, n_start_hint=400, max_doublings=2)
    assert sol.covers(-101, 101)
    assert identity_residual(p, sol, 100) < 1e-9


@settings(max_examples=60, deadline=None)
@given(
    alpha=st.floats(0.05, 3.0),
    re=st.floats(-5, 5),
    im=st.floats(0.05, 5).flatmap(lambda v: st.sampled_from([v, -v])),
    s=st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1)),
)
def test_identity_property(alpha, re, im, s):
    if max(abs(v) for v in s) < 1e-3:
        return
    p = RecurrenceParams(L(alpha), complex(re, im))
    sol = two_sided(p, (complex(s[0], s[1]), complex(s[2], s[3])), -31, 31)
    assert identity_residual(p, sol, 30) < 1e-9


@settings(max_examples=40, deadline=None)
@given(alpha=st.floats(0.05, 3.0), re=st.floats(-10, 10), im=st.floats(-10, 10), n=st.integers(-50, 50))
def test_branch_consistency(alpha, re, im, n):
    lam = complex(re, im)
    if im == 0 and n * n < re:
        return
    _, p = coefficients_at(RecurrenceParams(L(alpha), lam), n)
    assert (-p).real >= 0
    assert abs(p * p - 4 / alpha**2 * (n * n - lam)) < 1e-12 * (1 + abs(p * p))


def test_strip_gauge_back_substitution():
    p = RecurrenceParams(M(0.6), 0.2)
    sol = propagate(p, (0.0, 1.0), "up", 60, 1)  # v_0 = 0, v_1 = 1
    v = sol.scaled(0)
    w = strip_gauge(v, sol.n_lo)
    res = strip_condition_residual(p, w, sol.n_lo)
    assert res.size == len(v) - 2
    assert np.max(res) < 1e-12


def test_tail_ratio_solves_characteristic():
    # leading term of the closure is the decaying root
    for a in (0.2, 0.5, 0.9):
        p = RecurrenceParams(L(a), -1.0)
        r = tail_ratio(p, 10**6)
        lam = characteristic_roots(a).lambda_plus_minus
        assert abs(r - lam) < 1e-5
        assert abs(tail_ratio(p, -(10**6), "minus") + r) < 1e-12


def test_exact_three_term_checked_by_hand():
    # C_{-1}=0, C_0=1 at alpha=1, Lambda=-3: C_1 = -P_0/Q_1 = 2 sqrt(3) / 0.5
    p = RecurrenceParams(L(1.0), -3)
    sol = propagate(p, (0, 1), "up", 1)
    _, p0 = coefficients_at(p, 0)
    assert abs(sol.value(1) - (-p0 / 0.5)) < 1e-14
    assert cmath.isclose(sol.value(1), 4 * math.sqrt(3), rel_tol=1e-15)
