import math
import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lbmgks.cauchy import (
    bisect_boundary,
    characteristic_coeffs,
    det_symbol,
    fd_stability_verdict,
    is_schur_exact,
    lbm_necessary_conditions,
    lw_scan_boundary,
    lw_stability_boundary,
    relaxation_product,
    semisimple_circle_check,
    simple_von_neumann_test,
    stability_verdict,
    stencil_bound_check,
    trace_from_pencil,
    von_neumann_scan,
)
from lbmgks.scheme import amplification_matrix, make_scheme

from .oracles import D1Q2_COEFFS, LW_COEFFS, O4_COEFFS, coeff_tuple


def _trimmed(c):
    c = list(c)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return tuple(c)


@pytest.mark.parametrize("s2, C", [(F(3, 2), F(-1, 2)), (F(2), F(1, 3)), (F(1, 2), F(-3, 4))])
def test_d1q2_coefficients(s2, C):
    cs = characteristic_coeffs(make_scheme("d1q2", s2=s2, courant=C))
    for ell, expr in D1Q2_COEFFS.items():
        assert _trimmed(cs.d[ell]) == coeff_tuple(expr, s2=s2, C=C)
    assert (cs.r_bar, cs.p_bar) == (1, 1)


def test_lw_coefficients():
    rng = random.Random(7)
    for _ in range(5):
        s2, s3 = F(rng.randint(1, 19), 10), F(rng.randint(1, 19), 10)
        C = F(rng.choice([-1, 1]) * rng.randint(1, 9), 10)
        cs = characteristic_coeffs(make_scheme("d1q3-lw", s2=s2, s3=s3, courant=C))
        for ell, expr in LW_COEFFS.items():
            assert _trimmed(cs.d[ell]) == coeff_tuple(expr, s2=s2, s3=s3, C=C)


@pytest.mark.parametrize("C", [F(-1, 4), F(1, 8), F(-3, 8)])
def test_o4_coefficients(C):
    cs = characteristic_coeffs(make_scheme("d1q3-o4", courant=C))
    for ell, expr in O4_COEFFS.items():
        assert _trimmed(cs.d[ell]) == coeff_tuple(expr, C=C)


@pytest.mark.parametrize("C", [F(-1, 2), F(-1, 3), F(1, 5)])
def test_degenerate_leftmost_coefficient(C):
    cs = characteristic_coeffs(make_scheme("d1q2", s2=2 / (1 - C), courant=C))
    assert cs.r_bar == 0 and -1 not in cs.d


@pytest.mark.parametrize("name, params", [("d1q2", {}), ("d1q3-lw", {}), ("d1q3-o4", {}),
                                          ("d1q2", dict(s2=F(4, 3), courant=F(-1, 2)))])
def test_stencil_bounds(name, params):
    assert stencil_bound_check(make_scheme(name, **params))


@pytest.mark.parametrize("name, params", [("d1q2", dict(s2=F(3, 2))), ("d1q3-lw", dict(s2=F(1, 2), s3=F(3, 2))),
                                          ("d1q3-o4", {})])
def test_degree_bounds(name, params):
    spec = make_scheme(name, **params)
    cs = characteristic_coeffs(spec)
    for ell, c in cs.d.items():
        assert len(_trimmed(c)) - 1 <= (spec.q if ell == 0 else spec.q - 1)
    assert any(x != 0 for x in cs.d[-cs.r_bar]) and any(x != 0 for x in cs.d[cs.p_bar])


@pytest.mark.parametrize("name, params", [("d1q2", dict(s2=F(3, 2))), ("d1q3-lw", dict(s2=F(1, 2), s3=F(3, 2))),
                                          ("d1q3-o4", dict(courant=F(1, 8)))])
def test_determinant_and_trace(name, params):
    spec = make_scheme(name, **params)
    rng = np.random.default_rng(3)
    for kappa in rng.normal(size=16) + 1j * rng.normal(size=16):
        assert abs(det_symbol(spec, kappa) - float(relaxation_product(spec))) < 1e-12 * (1 + abs(kappa)) ** 2
        assert abs(trace_from_pencil(spec, kappa) - np.trace(amplification_matrix(spec, kappa))) < 1e-12 * (
            1 + abs(kappa) + 1 / abs(kappa))


@pytest.mark.parametrize("coeffs, ok", [
    ([-1, 1], True),
    ([1, -2, 1], False),
    ([F(1, 4), 0, 1], True),
    ([1, 0, 1], True),
    ([2, 1], False),
    ([-1, 0, 0, 1], True),
])
def test_simple_von_neumann(coeffs, ok):
    assert simple_von_neumann_test(coeffs) is ok


@given(st.lists(st.fractions(min_value=-2, max_value=2, max_denominator=8), min_size=2, max_size=6))
def test_simple_von_neumann_brute_force(coeffs):
    if coeffs[-1] == 0:
        coeffs[-1] = F(1)
    roots = np.roots([float(c) for c in reversed(coeffs)])
    mods = np.abs(roots)
    marginal = np.any(np.abs(mods - 1) < 1e-6)
    if marginal:
        return  # near-circle roots are left to the exact path
    expected = bool(np.all(mods < 1))
    assert simple_von_neumann_test(coeffs) is expected
    assert is_schur_exact(coeffs) is expected


def test_simple_von_neumann_rejects_constant():
    with pytest.raises(ValueError):
        simple_von_neumann_test([3])


@pytest.mark.parametrize("name, params, stable", [
    ("d1q2", dict(s2=F(3, 2), courant=F(1, 2)), True),
    ("d1q2", dict(s2=F(3, 2), courant=F(6, 5)), False),
    ("d1q2", dict(s2=F(5, 2), courant=F(1, 2)), False),
    ("d1q3-o4", dict(courant=F(3, 5)), False),
    ("d1q3-o4", dict(courant=F(1, 2)), True),
    ("d1q3-lw", dict(s2=F(1), s3=F(1), courant=F(-1, 2)), True),
])
def test_von_neumann_scan(name, params, stable):
    res = von_neumann_scan(make_scheme(name, **params))
    assert res.stable is stable
    assert bool(res.witnesses) is not stable


def test_scan_rejects_coarse_grid():
    with pytest.raises(ValueError):
        von_neumann_scan(make_scheme("d1q2"), 16)


@pytest.mark.parametrize("C, theta, alg, geo", [
    (F(-1, 4), 0.0, 2, 2),
    (F(1, 2), 2 * math.pi / 3, 2, 1),
])
def test_semisimple_o4(C, theta, alg, geo):
    reps = semisimple_circle_check(make_scheme("d1q3-o4", courant=C), theta)
    double = [r for r in reps if r.algebraic == 2 and r.on_circle]
    assert double and double[0].geometric == geo
    assert double[0].algebraic == alg


@pytest.mark.parametrize("C", [F(1), F(-1)])
def test_semisimple_d1q2_critical(C):
    reps = semisimple_circle_check(make_scheme("d1q2", s2=2, courant=C), math.pi / 2)
    assert any(r.algebraic == 2 and r.geometric == 1 for r in reps)


@pytest.mark.parametrize("name, params, fd", [
    ("d1q2", dict(s2=F(3, 2), courant=F(1, 2)), True),
    ("d1q2", dict(s2=F(1, 3), courant=F(-1)), True),
    ("d1q3-o4", dict(courant=F(-1, 4)), False),
    ("d1q3-o4", dict(courant=F(3, 8)), False),
    ("d1q3-lw", dict(s2=F(1), s3=F(3, 2)), False),
])
def test_fd_verdict(name, params, fd):
    assert fd_stability_verdict(make_scheme(name, **params))[0] is fd


@pytest.mark.parametrize("name, params", [
    ("d1q2", dict(s2=F(3, 2), courant=F(1, 2))),
    ("d1q2", dict(s2=F(2), courant=F(-1, 2))),
    ("d1q3-lw", dict(s2=F(1, 2), s3=F(1, 2))),
    ("d1q3-o4", dict(courant=F(1, 4))),
    ("d1q3-o4", dict(courant=F(3, 5))),
])
def test_verdict_implications(name, params):
    v = stability_verdict(make_scheme(name, **params), 512)
    assert not v.fd_l2 or v.lbm_l2
    assert not v.lbm_l2 or v.von_neumann


def test_fd_implies_von_neumann_sweep():
    for s2 in (F(1, 4), F(1), F(7, 4)):
        for s3 in (F(1, 4), F(1), F(7, 4)):
            spec = make_scheme("d1q3-lw", s2=s2, s3=s3, courant=F(-1, 2))
            if fd_stability_verdict(spec, 256)[0]:
                assert von_neumann_scan(spec, 256).stable


def test_o4_lbm_but_not_fd():
    v = stability_verdict(make_scheme("d1q3-o4", courant=F(-1, 4)))
    assert v.lbm_l2 and not v.fd_l2


def test_lbm_necessary_conditions_fail_at_edge():
    ok, witnesses = lbm_necessary_conditions(make_scheme("d1q3-o4", courant=F(1, 2)), 512)
    assert not ok and witnesses


@pytest.mark.parametrize("s2, expected", [(4 - 2 * math.sqrt(2), 1.0), (1.0, math.sqrt(5) - 1), (0.5, None)])
def test_lw_boundary_formula(s2, expected):
    if expected is None:
        den = s2 * s2 - 8 * s2 + 8
        expected = 1 + (math.sqrt(den**2 + 4 * s2**2 * (2 - s2) ** 2) - 2 * s2 * (2 - s2)) / den
    assert lw_stability_boundary(s2) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("eps", [1e-3, 1e-7, -1e-7, -1e-3])
def test_lw_boundary_continuous_at_removable_point(eps):
    s = 4 - 2 * math.sqrt(2)
    assert lw_stability_boundary(s + eps) == pytest.approx(1.0, abs=5 * abs(eps))


def test_lw_boundary_regular_at_three_minus_two_sqrt_two():
    s = 3 - 2 * math.sqrt(2)
    value = lw_stability_boundary(s)
    assert value == pytest.approx(lw_stability_boundary(s + 1e-9), abs=1e-8)
    assert value == pytest.approx(lw_scan_boundary(F(s).limit_denominator(10**8), tol=1e-5), abs=1e-3)


@pytest.mark.parametrize("s2", [0, 2, -1])
def test_lw_boundary_domain(s2):
    with pytest.raises(ValueError):
        lw_stability_boundary(s2)


@pytest.mark.parametrize("s2", [F(1, 4), F(1), F(17, 10)])
def test_lw_scan_matches_formula(s2):
    assert lw_scan_boundary(s2, tol=1e-4) == pytest.approx(lw_stability_boundary(s2), abs=1e-3)


def test_bisect_boundary_requires_bracket():
    with pytest.raises(ValueError):
        bisect_boundary(lambda x: x < 0.5, 0.6, 1.0)
    assert bisect_boundary(lambda x: x < 0.3, 0.0, 1.0, 1e-9) == pytest.approx(0.3, abs=1e-8)
