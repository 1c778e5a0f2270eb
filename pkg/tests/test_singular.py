from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from couplespec.model import DomainError, L, singular_points
from couplespec.singular import (
    BRANCHES,
    ZETA_HALF,
    SingularProfile,
    _v_direct,
    _v_expansion,
    _zeta_half_minus,
    fit_power,
    model_argument,
    model_sum_fit,
    singular_point,
    singular_profile,
    singular_solution_partial,
    singularity_fit,
    v_sum,
)

# sup over 0 < x <= 1 on the singular ray of |partial sum - v_sum|, Lambda = -1
REPLACEMENT_SUP = 0.16346562413444998


def test_zeta_constants_against_mpmath():
    mpmath.mp.dps = 30
    assert abs(ZETA_HALF - float(mpmath.zeta(0.5))) < 1e-16
    tab = _zeta_half_minus(12)
    for k in range(13):
        ref = float(mpmath.zeta(mpmath.mpf(0.5) - k))
        assert abs(tab[k] - ref) < 1e-14 * max(1.0, abs(ref))


def test_v_sum_near_threshold():
    v = v_sum(0.01)
    # leading two terms; the linear zeta(-1/2) z term adds ~0.002
    assert abs(v - (math.sqrt(math.pi / 0.01) + ZETA_HALF)) < 3e-3
    assert abs(v - mpmath.polylog(0.5, mpmath.exp(-0.01))) < 1e-10
    assert abs(v - _v_direct(0.01 + 0j)) < 1e-10


def test_v_sum_far():
    v = v_sum(10)
    assert abs(v - (math.exp(-10) + math.exp(-20) / math.sqrt(2))) < 1e-13
    assert abs(v.real - 4.5401e-5) < 1e-9


@settings(max_examples=60, deadline=None)
@given(re=st.floats(1e-5, 5), im=st.floats(-20, 20))
def test_v_sum_conjugation(re, im):
    z = complex(re, im)
    assert abs(v_sum(z.conjugate()) - v_sum(z).conjugate()) < 1e-12 * max(1, abs(v_sum(z)))


@settings(max_examples=40, deadline=None)
@given(re=st.floats(1e-5, 3), im=st.floats(-3, 3))
def test_v_sum_against_polylog(re, im):
    z = complex(re, im)
    mpmath.mp.dps = 30
    ref = complex(mpmath.polylog(0.5, mpmath.exp(-mpmath.mpc(re, im))))
    assert abs(v_sum(z) - ref) < 1e-10 * max(1, abs(ref))


def test_v_sum_periodic():
    z = 0.02 + 0.4j
    assert abs(v_sum(z) - v_sum(z + 2j * math.pi)) < 1e-12


def test_overlap_agreement():
    worst = 0.0
    for r in np.geomspace(1e-3, 1e-2, 6):
        for i in (-3.0, -0.5, 0.0, 0.7, 2.0, 3.1):
            z = complex(r, i)
            worst = max(worst, abs(_v_direct(z) - _v_expansion(z)))
    assert worst < 1e-9


def test_v_sum_domain():
    with pytest.raises(DomainError):
        v_sum(-0.1 + 1j)
    with pytest.raises(DomainError):
        v_sum(0j)


def test_model_sum_fit():
    f = model_sum_fit()
    assert abs(f.exponent + 0.5) < 0.01
    assert abs(abs(f.amplitude) / math.sqrt(math.pi) - 1) < 0.01
    assert f.r_squared > 0.999


@pytest.mark.parametrize("alpha", [1.5, 2.0, 4.0])
@pytest.mark.parametrize("branch", BRANCHES)
def test_exponent_at_every_singular_point(alpha, branch):
    f = singularity_fit(alpha, branch)
    assert abs(f.exponent + 0.5) < 0.02


def test_off_singular_ray_bounded():
    yj = singular_point(2.0, "++")
    f = singularity_fit(2.0, "++", y=yj + 0.5)
    assert f.exponent >= -0.05
    assert f.loglog_slope >= -0.05


def test_rays_far_from_all_points_regular():
    pts = np.array(sorted(singular_points(L(2.0))))
    for y in np.linspace(0, 2 * np.pi, 25, endpoint=False):
        d = np.min(np.abs((y - pts + np.pi) % (2 * np.pi) - np.pi))
        if d < 0.3:
            continue
        xs = np.geomspace(1e-4, 1e-2, 12)
        vals = singular_solution_partial(2.0, -1.0, "all", xs, np.full_like(xs, y))
        assert fit_power(xs, vals).exponent >= -0.1


def test_branch_points_match_model_core():
    for a in (1.5, 2.0, 4.0):
        ours = sorted(singular_point(a, b) for b in BRANCHES)
        theirs = sorted(singular_points(L(a)))
        assert np.allclose(ours, theirs, atol=1e-14)


def test_argmax_set_is_singular_points():
    ys = np.linspace(0, 2 * np.pi, 2001, endpoint=False)
    v = np.abs(singular_solution_partial(2.0, -1.0, "all", np.full_like(ys, 1e-3), ys))
    ext = np.concatenate([v[-1:], v, v[:1]])
    peaks = [i for i in range(len(v)) if ext[i + 1] > ext[i] and ext[i + 1] >= ext[i + 2]]
    top = sorted(sorted(peaks, key=lambda i: -v[i])[:4])
    h = ys[1] - ys[0]
    for y, yj in zip(ys[top], sorted(singular_points(L(2.0)))):
        assert abs(y - yj) <= h


def test_large_x_dominated_by_first_term():
    for b in BRANCHES:
        for y in (0.0, 1.0, 3.0):
            v = singular_solution_partial(2.0, -1.0, b, 5.0, y)
            assert abs(v) <= 2 * math.exp(-5 * math.sqrt(2))


def test_partial_sum_even_in_x():
    ys = np.linspace(0, 6, 9)
    a = singular_solution_partial(1.5, -1.0, "+-", np.full_like(ys, 0.05), ys)
    b = singular_solution_partial(1.5, -1.0, "+-", np.full_like(ys, -0.05), ys)
    assert np.array_equal(a, b)


def test_replacement_error_bounded():
    xs = np.geomspace(1e-3, 1, 30)
    for a in (1.5, 2.0, 4.0):
        for b in BRANCHES:
            yj = singular_point(a, b)
            p = singular_solution_partial(a, -1.0, b, xs, np.full_like(xs, yj))
            z = model_argument(a, b, xs, yj)
            d = max(abs(p[i] - v_sum(z[i])) for i in range(len(xs)))
            assert abs(d - REPLACEMENT_SUP) < 1e-6


def test_profile_rows_and_validation():
    prof = singular_profile(2.0, "-+", np.geomspace(1e-3, 1e-1, 5))
    rows = prof.to_rows()
    assert len(rows) == 5 and all(r[0] > 0 for r in rows)
    with pytest.raises(ValueError):
        SingularProfile(2.0, "++", 0.0, -1.0, [(-1 + 0j, 0j)])


def test_alpha_must_exceed_one():
    with pytest.raises(DomainError):
        singular_point(1.0, "++")


def test_fit_needs_eight_points():
    with pytest.raises(ValueError):
        singularity_fit(2.0, "++", np.geomspace(1e-4, 1e-2, 5))
