from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from couplespec.forms import (
    PreconditionError,
    TrialFunction,
    b_form,
    ell0,
    ell_alpha,
    lemma_bound_check,
    m0,
    m_lemma_bound_check,
    norm_squared,
    quadrature_forms,
    rayleigh_minimize,
    self_consistent_ground_state,
    sharpness_ratio,
    two_mode_witness,
    window_trial,
    window_witness,
)
from couplespec.model import L, M

LAMBDA0 = {0.5: -0.0011413766149109, 0.9: -0.021643572219917}


def T(modes, model=None):
    return TrialFunction.from_modes(modes, model)


def test_ell0_single_mode():
    assert ell0(T([(1, 1, 1.0)])) == 2.0


def test_ell0_flat_zero_mode():
    eps = 1e-3
    t = T([(0, eps**-0.5, eps)])
    assert abs(ell0(t) - 1.0) < 1e-12
    q = quadrature_forms(T([(0, 0.1**-0.5, 0.1)]))
    assert abs(q["ell0"] - 1.0) < 1e-10


def test_homogeneity():
    t = T([(1, 1 + 2j, 1.3), (2, -0.5, 0.7), (3, 0.1j, 2.0)])
    for f in (ell0, b_form, norm_squared):
        assert abs(f(t.scaled(2.0)) - 4 * f(t)) < 1e-12 * max(1, abs(f(t)))
    z = 0.3 - 1.1j
    assert abs(ell_alpha(t.scaled(z), 0.7) - abs(z) ** 2 * ell_alpha(t, 0.7)) < 1e-12


def test_b_examples():
    eps = 0.01
    assert abs(b_form(T([(0, eps**-0.5, eps), (1, 1, 1)])) - eps**-0.5) < 1e-12
    N = 7
    assert b_form(T([(N, 1, 1.0), (N - 1, 1, 2.0)])) == 2 * N - 1
    assert b_form(T([(4, 3 + 1j, 2.0)])) == 0


def test_b_strip_uses_imaginary_part():
    t = T([(1, 1, 1.0), (2, 1j, 1.0)], M(0.5))
    assert b_form(t) == 3.0
    t = T([(1, 1, 1.0), (2, 1.0, 1.0)], M(0.5))
    assert b_form(t) == 0.0


def test_trial_validation():
    with pytest.raises(ValueError):
        T([(1, 1, 0.0)])
    with pytest.raises(ValueError):
        T([(1, 1, 1.0), (1, 2, 1.0)])
    with pytest.raises(ValueError):
        T([(0, 1, 1.0)], M(0.5))


def test_lemma_example():
    chk = lemma_bound_check(T([(1, 1, 1.0), (2, 1, 2.0)]))
    assert chk.lhs == 3.0 and chk.rhs == 6.0 and chk.passed


def test_lemma_precondition():
    with pytest.raises(PreconditionError):
        lemma_bound_check(T([(0, 1, 1.0), (1, 1, 1.0)]))


def test_m_lemma_single():
    chk = m_lemma_bound_check(T([(1, 1, 1.0)], M(0.5)))
    assert chk.lhs == 0 and chk.rhs == 2 and chk.passed


def _random_trial(rng, model, zero_allowed):
    lo = 1 if not zero_allowed else int(rng.integers(-10, 1))
    start = int(rng.integers(lo, lo + 10))
    n = np.arange(start, start + 20)
    n = n[n != 0] if not zero_allowed else n
    c = rng.normal(size=n.size) + 1j * rng.normal(size=n.size)
    k = np.exp(rng.uniform(-3, 3, size=n.size))
    return TrialFunction(n, c, k, model)


def test_lemma_random_many():
    rng = np.random.default_rng(7)
    fails = 0
    for _ in range(10_000):
        t = _random_trial(rng, L(0.5), False)
        if rng.random() < 0.5:  # include negative modes without n = 0
            t = TrialFunction(-t.n, t.c, t.kappa, t.model)
        fails += not lemma_bound_check(t).passed
    assert fails == 0


def test_m_lemma_random_many():
    rng = np.random.default_rng(8)
    assert all(m_lemma_bound_check(_random_trial(rng, M(0.5), False)).passed for _ in range(10_000))


@settings(max_examples=100, deadline=None)
@given(
    n0=st.integers(1, 30),
    c=st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
               min_size=2, max_size=12),
    logk=st.lists(st.floats(-4, 4), min_size=12, max_size=12),
    sign=st.sampled_from([1, -1]),
)
def test_lemma_property(n0, c, logk, sign):
    n = sign * (n0 + np.arange(len(c)))
    t = TrialFunction(n, np.array(c), np.exp(logk[: len(c)]), L(1.0))
    assert lemma_bound_check(t).passed


@settings(max_examples=25, deadline=None)
@given(
    n0=st.integers(0, 6),
    c=st.lists(st.floats(-3, 3), min_size=1, max_size=4),
    logk=st.lists(st.floats(-1, 1.5), min_size=4, max_size=4),
)
def test_closed_forms_match_quadrature(n0, c, logk):
    n = n0 + np.arange(len(c))
    t = TrialFunction(n, np.array(c), np.exp(logk[: len(c)]), L(0.5))
    q = quadrature_forms(t)
    assert abs(q["ell0"] - ell0(t)) <= 1e-10 * max(ell0(t), 1e-300)
    assert abs(q["norm_squared"] - norm_squared(t)) <= 1e-10 * max(norm_squared(t), 1e-300)


def test_sharpness():
    assert sharpness_ratio(50) >= 0.9
    assert sharpness_ratio(50, M(0.5)) >= 0.9
    assert sharpness_ratio(200) > sharpness_ratio(50)
    assert window_trial(5).n.tolist() == list(range(5, 11))


def test_two_mode_values():
    assert abs(two_mode_witness(3, 1, 5) - (2 * (math.sqrt(26) + math.sqrt(17)) - 27)) < 1e-14
    assert abs(two_mode_witness(3, 1, 5) + 8.5557) < 1e-4
    # the printed expression at N = 2 is negative; see the decisions ledger
    assert abs(two_mode_witness(3, 1, 2) - (2 * (math.sqrt(5) + math.sqrt(2)) - 9)) < 1e-14
    assert two_mode_witness(3, 1, 2) < 0


def test_two_mode_positive_at_alpha_two():
    N = np.arange(2, 10**6 + 1, dtype=float)
    vals = 2 * (np.sqrt(N * N + 1) + np.sqrt((N - 1) ** 2 + 1)) - 2 * (2 * N - 1)
    assert vals.min() > 0
    assert two_mode_witness(2, 1, 10**6) > 0


def test_two_mode_matches_forms():
    N, Mv = 9, 1.0
    t = T([(N, 1, math.sqrt(N * N + Mv)), (N - 1, 1, math.sqrt((N - 1) ** 2 + Mv))])
    assert abs(ell_alpha(t, 3.0) + Mv * norm_squared(t) - two_mode_witness(3.0, Mv, N)) < 1e-12


def test_window_witness():
    assert abs(window_witness(1.5, 1, 20, 40) + 539.3) < 0.05
    assert window_witness(1.1, 1, 50, 500) < 0
    assert window_witness(0.9, 1, 20, 40) > 0
    n = np.arange(20, 41)
    t = TrialFunction(n, np.ones(n.size), np.sqrt(n * n + 1.0), L(1.5))
    assert abs(ell_alpha(t) + norm_squared(t) - window_witness(1.5, 1, 20, 40)) < 1e-9
    with pytest.raises(ValueError):
        window_witness(1.5, 1, 1, 5)


@settings(max_examples=50, deadline=None)
@given(lo=st.integers(2, 200), width=st.integers(1, 300), Mv=st.floats(0.1, 10))
def test_window_positive_below_one(lo, width, Mv):
    assert window_witness(0.9, Mv, lo, lo + width) > 0


def test_rayleigh_single_mode():
    r = rayleigh_minimize(0.5, (3, 3), lambda n: 0 * n + 3.0, M=2.0)
    assert abs(r.value - (9 + 9)) < 1e-12  # kappa^2 + n^2 for unit norm c^2/kappa = 1


def test_rayleigh_monotone_in_range():
    prev = math.inf
    for hi in (2, 4, 8, 16):
        v = rayleigh_minimize(0.7, (-hi, hi), M=1.0).value
        assert v <= prev + 1e-12
        prev = v


def test_rayleigh_unbounded_above_one():
    vals = [rayleigh_minimize(1.5, (N, 4 * N)).value for N in (5, 10, 20, 40)]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert vals[-1] < -1000


def test_rayleigh_argmin_attains_value():
    r = rayleigh_minimize(0.8, (-5, 5), M=1.0)
    t = TrialFunction(r.n, r.coeffs, r.kappa, L(0.8))
    assert abs(ell_alpha(t) / norm_squared(t) - r.value) < 1e-10


def test_rayleigh_strip_gauge():
    r = rayleigh_minimize(0.8, (1, 10), model="M")
    t = TrialFunction(r.n, r.coeffs, r.kappa, M(0.8))
    assert abs(ell_alpha(t) / norm_squared(t) - r.value) < 1e-10


def test_rayleigh_above_ground_state():
    rng = np.random.default_rng(3)
    for a in (0.5, 0.9):
        for _ in range(20):
            s = rng.uniform(0.01, 5)
            v = rayleigh_minimize(a, (-6, 6), lambda n: np.sqrt(n * n + s), M=0.0).value
            assert v >= LAMBDA0[a] - 1e-8


@pytest.mark.parametrize("alpha,width", [(0.5, 8), (0.9, 30)])
def test_self_consistent_ground_state(alpha, width):
    # the window must cover the decay length of the root lambda_+^-(alpha)
    sc = self_consistent_ground_state(alpha, (-width, width))
    assert sc.converged
    assert sc.Lambda >= LAMBDA0[alpha] - 1e-12
    assert abs(sc.Lambda - LAMBDA0[alpha]) < 1e-6


def test_m0_alias():
    t = T([(1, 1, 2.0), (2, 1j, 1.0)], M(0.3))
    assert m0(t) == ell0(t)
