import cmath
import math
from fractions import Fraction as F

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from lbmgks.gks import (
    AnalysisError,
    CoupleKind,
    KLKind,
    VerdictValue,
    Z,
    adjugate_singular_values,
    canonical_kernel_vector,
    classify_mode,
    eigenvector_pole_orders,
    group_velocity,
    jordan_chain_degenerate,
    kernel_zero_basis,
    kl_factorization_residual,
    kl_scalar,
    roots_at,
    shared_eigenvalues,
    sigma_bulk,
    stable_eigenvector,
    stable_root_continuation,
    strong_stability_verdict,
)
from lbmgks.cauchy import characteristic_coeffs
from lbmgks.scheme import boundary_condition, build_relaxation_matrix, bulk_pencil, make_scheme

from .oracles import delta_kl_over_sigma, pi_factor

STABLE_SCHEMES = [
    ("d1q2", dict(s2=F(3, 2), courant=F(-1, 2))),
    ("d1q2", dict(s2=F(1, 2), courant=F(3, 4))),
    ("d1q3-lw", dict(s2=F(1, 2), s3=F(3, 2), courant=F(-1, 4))),
    ("d1q3-lw", dict(s2=F(3, 2), s3=F(1, 2), courant=F(1, 2))),
    ("d1q3-o4", dict(courant=F(-1, 4))),
    ("d1q3-o4", dict(courant=F(3, 8))),
]


def _random_outside(rng, n):
    r = rng.uniform(1.01, 4, n)
    t = rng.uniform(0, 2 * math.pi, n)
    return r * np.exp(1j * t)


@pytest.mark.parametrize("name, params", STABLE_SCHEMES)
def test_hersh_counts(name, params):
    spec = make_scheme(name, **params)
    cs = characteristic_coeffs(spec)
    for z in _random_outside(np.random.default_rng(11), 64):
        pair = roots_at(spec, z)
        assert pair.count_inside == cs.r_bar
        assert sum(1 for k in pair.roots if abs(k) > 1) == cs.p_bar
        assert abs(pair.kappa_s) < 1 < abs(pair.kappa_u)


@pytest.mark.parametrize("s2, C", [(F(3, 2), F(-1, 2)), (F(1, 2), F(-3, 4)), (F(1), F(-1, 4))])
@pytest.mark.parametrize("z0", [1, -1])
def test_d1q2_outflow_stable_root_on_circle(s2, C, z0):
    cont = stable_root_continuation(make_scheme("d1q2", s2=s2, courant=C), z0)
    assert cont.kappa == pytest.approx(z0 * float(pi_factor(s2, C)), abs=1e-10)


def test_pi_value():
    assert pi_factor(F(3, 2), F(-1, 2)) == F(-1, 5)


@pytest.mark.parametrize("z0", [1, -1])
def test_d1q2_inflow_stable_root_on_circle(z0):
    cont = stable_root_continuation(make_scheme("d1q2", s2=F(3, 2), courant=F(1, 2)), z0)
    assert cont.kappa == pytest.approx(z0, abs=1e-10)


def test_o4_circle_roots(o4):
    assert stable_root_continuation(o4, -1).kappa == pytest.approx(1, abs=1e-9)
    assert roots_at(o4, -1).kappa_u == pytest.approx(1, abs=1e-6)
    assert stable_root_continuation(o4, 1).kappa == pytest.approx(-1, abs=1e-10)


@pytest.mark.parametrize("C", [F(-1, 4), F(-3, 8), F(1, 8)])
def test_o4_derivative_at_minus_one(C):
    spec = make_scheme("d1q3-o4", courant=C)
    c = float(C)
    expected = (3 * c + math.sqrt(3) * math.sqrt(8 - 5 * c * c)) / (4 * (1 - c * c))
    assert stable_root_continuation(spec, -1).dkappa_dz.real == pytest.approx(expected, rel=1e-8)


def test_continuation_rejects_off_circle(o4):
    with pytest.raises(ValueError):
        stable_root_continuation(o4, 1.5)


def test_degenerate_has_no_stable_root():
    with pytest.raises(AnalysisError):
        stable_root_continuation(make_scheme("d1q2", s2=F(4, 3), courant=F(-1, 2)), 1)


@pytest.mark.parametrize("C", [F(1, 2), F(3, 4)])
@pytest.mark.parametrize("z0", [1, -1])
def test_eigenvector_inflow_expansion(C, z0):
    s2 = F(3, 2)
    spec = make_scheme("d1q2", s2=s2, courant=C)
    c, s = float(C), float(s2)
    for dz in (1e-3, 1e-4):
        z = z0 * (1 + dz)
        approx = c + z0 * (1 - c * c) / (c * s) * (z - z0)
        assert abs(stable_eigenvector(spec, z)[1] - approx) < 5 * dz * dz / (c * s) + 1e-12


@pytest.mark.parametrize("s2, C", [(F(3, 2), F(-1, 2)), (F(1, 2), F(-1, 4))])
def test_eigenvector_outflow_limit(s2, C):
    spec = make_scheme("d1q2", s2=s2, courant=C)
    phi = stable_eigenvector(spec, 1 + 1e-10)
    assert phi[0] == pytest.approx(1, abs=1e-15)
    assert phi[1] == pytest.approx(float(C * s2 / (s2 - 2)), abs=1e-8)


def test_o4_third_component_at_one(o4):
    # O(z - 1) correction, and double precision near the pole of phi_2, bound the offset
    assert stable_eigenvector(o4, 1 + 1e-6)[2] == pytest.approx((1 + 2 / 16) / 3, abs=1e-5)


@pytest.mark.parametrize("spec_args, z, orders", [
    (("d1q2", dict(s2=F(2), courant=F(-1, 2))), 1, (0, 1)),
    (("d1q2", dict(s2=F(3, 2), courant=F(-1, 2))), 1, (0, 0)),
    (("d1q3-o4", dict(courant=F(-1, 4))), -1, (0, 1, 1)),
])
def test_pole_orders(spec_args, z, orders):
    assert eigenvector_pole_orders(make_scheme(spec_args[0], **spec_args[1]), z) == orders


@pytest.mark.parametrize("C", [F(-1, 4), F(1, 4)])
def test_o4_eigenvector_residue(C):
    spec = make_scheme("d1q3-o4", courant=C)
    def residue(d):
        return stable_eigenvector(spec, -1 - d)[2] * (-d)

    d = 1e-4
    est = 2 * residue(d / 2) - residue(d)
    assert est.real == pytest.approx(4 / 3 * (float(C) ** 2 - 1), rel=1e-5)


def test_pole_orders_need_circle(o4):
    with pytest.raises(ValueError):
        eigenvector_pole_orders(o4, 2)


@given(s2=st.fractions(F(1, 10), F(19, 10), max_denominator=10),
       C=st.fractions(F(-9, 10), F(9, 10), max_denominator=10).filter(lambda c: c != 0))
def test_d1q2_kernel_vector(s2, C):
    spec = make_scheme("d1q2", s2=s2, courant=C)
    v = canonical_kernel_vector(spec)
    assert list(v) == [sp.Rational(s2 - 1), sp.Rational(1 + C * s2)] or (s2 == 1 and C * s2 == -1)
    assert bulk_pencil(spec)[-1] * v == sp.zeros(2, 1)


def test_kernel_basis_identity_relaxation():
    spec = make_scheme("d1q3-lw", s2=F(1), s3=F(1), courant=F(1, 2))
    basis = kernel_zero_basis(spec)
    assert len(basis) == 2
    E = bulk_pencil(spec)[-1]
    for v in basis:
        assert E * v == sp.zeros(3, 1)
    assert sp.Matrix.hstack(*basis).rank() == 2


@pytest.mark.parametrize("name, params", STABLE_SCHEMES)
def test_kernel_dimension(name, params):
    spec = make_scheme(name, **params)
    assert len(kernel_zero_basis(spec)) == spec.q - 1


def test_sigma_bulk_d1q2(d1q2_outflow):
    s2, C = F(3, 2), F(-1, 2)
    for z in (F(2), F(3, 7), F(-5)):
        assert sigma_bulk(d1q2_outflow, z, [canonical_kernel_vector(d1q2_outflow)]) == sp.Rational((2 + (C - 1) * s2) * z)


@pytest.mark.parametrize("name, params", STABLE_SCHEMES)
def test_sigma_bulk_proportional_to_leftmost(name, params):
    spec = make_scheme(name, **params)
    cs = characteristic_coeffs(spec)
    rng = np.random.default_rng(5)
    ratios = []
    for z in rng.normal(size=8) + 1j * rng.normal(size=8):
        d = sum(float(c) * z**k for k, c in enumerate(cs.d[-1]))
        ratios.append(sigma_bulk(spec, complex(z)) / d)
    assert np.var(np.abs(np.array(ratios) - ratios[0])) < 1e-20
    assert max(abs(r - ratios[0]) for r in ratios) < 1e-10 * abs(ratios[0])


def test_sigma_bulk_degenerate():
    spec = make_scheme("d1q2", s2=F(4, 3), courant=F(-1, 2))
    assert sp.simplify(sigma_bulk(spec, Z)) == 0


@given(st.lists(st.integers(-5, 5), min_size=4, max_size=4))
def test_sigma_bulk_basis_change(entries):
    T = sp.Matrix(2, 2, entries)
    if T.det() == 0:
        return
    spec = make_scheme("d1q3-lw", s2=F(1, 2), s3=F(3, 2), courant=F(-1, 4))
    basis = kernel_zero_basis(spec)
    new = [sum((T[i, k] * basis[i] for i in range(2)), sp.zeros(3, 1)) for k in range(2)]
    for z in (F(2), F(-3, 2)):
        assert sigma_bulk(spec, z, new) == T.det() * sigma_bulk(spec, z, basis)


@pytest.mark.parametrize("name, params, bc", [(n, p, b) for n, p in STABLE_SCHEMES
                                              for b in ("bb", "extrapolation:2", "kd")])
def test_kl_factorization(name, params, bc):
    spec = make_scheme(name, **params)
    bcs = boundary_condition(bc, spec)
    for z in _random_outside(np.random.default_rng(17), 6):
        assert kl_factorization_residual(spec, bcs, z) < 1e-10


@pytest.mark.parametrize("name, params", STABLE_SCHEMES)
def test_adjugate_rank_one(name, params):
    spec = make_scheme(name, **params)
    for z in _random_outside(np.random.default_rng(23), 8):
        sv = adjugate_singular_values(spec, z)
        assert sv[1] < 1e-9 * sv[0]


@pytest.mark.parametrize("s2, C", [(F(3, 2), F(-1, 2)), (F(1, 2), F(-3, 4)), (F(1), F(-1, 4))])
def test_kl_bounce_back_expansion(s2, C):
    spec = make_scheme("d1q2", s2=s2, courant=C)
    m = classify_mode(spec, boundary_condition("bb", spec), 1.0)
    assert m.kl.kind == KLKind.ZERO and m.kl.order == 1
    assert m.kl.coefficient == pytest.approx(float(((C + 1) * s2 - 2) / (2 * C * s2)), abs=1e-6)


@pytest.mark.parametrize("sigma", [1, 2, 3, 4])
@pytest.mark.parametrize("C", [F(1, 4), F(3, 4)])
def test_kl_inflow_extrapolation(sigma, C):
    spec = make_scheme("d1q2", s2=F(3, 2), courant=C)
    m = classify_mode(spec, boundary_condition(f"extrapolation:{sigma}", spec), 1.0)
    assert m.kl.order == sigma
    assert m.kl.coefficient == pytest.approx(float((C + 1) / (2 * C**sigma)), rel=1e-5)


@pytest.mark.parametrize("C", [F(-1, 2), F(-1, 4)])
def test_kl_two_step_abb(C):
    spec = make_scheme("d1q2", s2=2, courant=C)
    assert kl_scalar(spec, boundary_condition("two-step-abb", spec), -1) == pytest.approx(-1, abs=1e-8)


@given(st.lists(st.integers(-4, 4), min_size=4, max_size=4), st.sampled_from(["bb", "abb", "extrapolation:3", "kd"]))
def test_kl_invariant_under_kernel_basis_change(entries, bc_name):
    T = sp.Matrix(2, 2, entries)
    if T.det() == 0:
        return
    spec = make_scheme("d1q3-o4", courant=F(-3, 8))
    bc = boundary_condition(bc_name, spec)
    basis = kernel_zero_basis(spec)
    new = [sum((T[i, k] * basis[i] for i in range(2)), sp.zeros(3, 1)) for k in range(2)]
    for z in (1.7, -1.2 + 0.9j):
        ref = kl_scalar(spec, bc, z)
        assert delta_kl_over_sigma(spec, bc, z, new) == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_kl_inside_disk_rejected(d1q2_outflow):
    with pytest.raises(ValueError):
        kl_scalar(d1q2_outflow, boundary_condition("bb", d1q2_outflow), 0.5)


def test_shared_bounce_back(d1q2_outflow):
    s2, C = F(3, 2), F(-1, 2)
    res = shared_eigenvalues(d1q2_outflow, boundary_condition("bb", d1q2_outflow))
    got = {(c.z_exact, c.kappa_exact) for c in res.couples}
    want = {("1", str(pi_factor(s2, C))), (str(s2 - 1), "-1"), (str((1 - C) * s2 / 2), "0")}
    assert got == want
    kinds = {c.z_exact: c.kind for c in res.couples}
    assert kinds[str((1 - C) * s2 / 2)] == CoupleKind.FICTITIOUS
    for c in res.couples:
        assert c.residual_bulk < 1e-10 and c.residual_boundary < 1e-10


def test_shared_extrapolated_equilibrium(d1q2_outflow):
    res = shared_eigenvalues(d1q2_outflow, boundary_condition("ee:1", d1q2_outflow))
    z = (3 + math.sqrt(73)) / 32
    hit = [c for c in res.couples if abs(c.z - z) < 1e-10]
    assert hit and hit[0].kappa == pytest.approx((9 - math.sqrt(73)) / 4, abs=1e-10)


def test_shared_invented(d1q2_outflow):
    res = shared_eigenvalues(d1q2_outflow, boundary_condition("invented", d1q2_outflow))
    z = (23 + 3 * math.sqrt(105)) / 26
    hit = [c for c in res.couples if abs(c.z - z) < 1e-10]
    assert hit and abs(hit[0].kappa) < 1 and hit[0].kind == CoupleKind.STABLE
    assert abs(hit[0].kappa) == pytest.approx(0.067, abs=5e-4)


@pytest.mark.parametrize("spec_args, bc, z, boxes", [
    (("d1q2", dict(s2=F(3, 2), courant=F(-1, 2))), "bb", 1, "□⊙0"),
    (("d1q2", dict(s2=F(2), courant=F(-1, 2))), "two-step-abb", -1, "⊠⊙⋆"),
    (("d1q3-o4", dict(courant=F(-1, 4))), "kd", -1, "⊠⊙∞"),
    (("d1q2", dict(s2=F(2), courant=F(-1, 2))), "bb", 1, "⊠⊙0"),
])
def test_classify_mode(spec_args, bc, z, boxes):
    spec = make_scheme(spec_args[0], **spec_args[1])
    assert classify_mode(spec, boundary_condition(bc, spec), z).boxes == boxes


@pytest.mark.parametrize("z", [1, 1.0])
def test_classify_routes_agree(z):
    spec = make_scheme("d1q2", s2=F(3, 2), courant=F(1, 2))
    m = classify_mode(spec, boundary_condition("extrapolation:3", spec), z)
    assert m.kl.order == 3 and m.kl.coefficient == pytest.approx(6, rel=1e-8)


def test_jordan_chain():
    spec = make_scheme("d1q2", s2=F(4, 3), courant=F(-1, 2))
    chain = jordan_chain_degenerate(spec, boundary_condition("bb", spec))
    assert chain.phi0_tilde == sp.Matrix([1, 1 - 2 * Z])
    assert list(chain.phi0) == [sp.Rational(1, 3), sp.Rational(1, 3)]
    pencil = bulk_pencil(spec)
    L0 = Z * sp.eye(2) - pencil.get(0, sp.zeros(2))
    assert sp.expand(pencil[-1] * chain.phi0_tilde - L0 * chain.phi0) == sp.zeros(2, 1)
    C = sp.Rational(-1, 2)
    factor = Z**2 + (C + 1) / (C - 1)
    # numerator is 2 (z^2 + (C+1)/(C-1)) up to the column-order sign
    assert sp.expand(chain.numerator + 2 * factor) == 0 or sp.expand(chain.numerator - 2 * factor) == 0
    assert sp.rem(chain.delta_kl, factor, Z) == 0
    assert sp.cancel(chain.numerator / chain.delta_kl).as_numer_denom()[1].as_poly(Z).degree() == 1
    assert chain.delta_kl.subs(Z, 1) == 0


@pytest.mark.parametrize("C", [F(-1, 2), F(-1, 3), F(-3, 4)])
def test_jordan_chain_family(C):
    spec = make_scheme("d1q2", s2=2 / (1 - C), courant=C)
    chain = jordan_chain_degenerate(spec)
    assert chain.phi0_tilde == sp.Matrix([1, 1 - 2 * Z])


def test_jordan_chain_rejects_regular(d1q2_outflow):
    with pytest.raises(AnalysisError):
        jordan_chain_degenerate(d1q2_outflow)


@pytest.mark.parametrize("C", [F(-1, 2), F(-1, 4), F(-3, 4)])
def test_group_velocity_d1q2(C):
    spec = make_scheme("d1q2", s2=2, courant=C)
    assert group_velocity(spec, 1) == pytest.approx(-float(C), abs=1e-10)


@pytest.mark.parametrize("C", [F(-1, 4), F(-3, 8), F(-1, 8)])
def test_group_velocity_o4_at_one(C):
    c = float(C)
    assert group_velocity(make_scheme("d1q3-o4", courant=C), 1) == pytest.approx(-3 * c / (2 * c * c + 1), abs=1e-10)


def test_group_velocity_o4_at_minus_one(o4):
    c = -0.25
    want = math.sqrt(3) / 6 * (-math.sqrt(3) * c + math.sqrt(8 - 5 * c * c))
    assert group_velocity(o4, -1) == pytest.approx(want, abs=1e-10)


def test_group_velocity_complex_pair(o4):
    v = strong_stability_verdict(o4, boundary_condition("abb", o4))
    for mode in v.driving_modes:
        assert group_velocity(o4, mode.z_star) == pytest.approx(19 / 41, abs=1e-8)


def test_group_velocity_needs_circle_kappa(d1q2_outflow):
    with pytest.raises(AnalysisError):
        group_velocity(d1q2_outflow, 1)


@pytest.mark.parametrize("spec_args, bc, verdict", [
    (("d1q2", dict(s2=F(3, 2), courant=F(1, 2))), "kd", "SS"),
    (("d1q2", dict(s2=F(2), courant=F(-1, 2))), "kd", "SS"),
    (("d1q2", dict(s2=F(2), courant=F(-1, 2))), "extrapolation:1", "SSOO"),
    (("d1q2", dict(s2=F(2), courant=F(-1, 2))), "bb", "MU-E"),
    (("d1q2", dict(s2=F(3, 2), courant=F(-1, 2))), "bb", "MU-L"),
    (("d1q2", dict(s2=F(3, 2), courant=F(-1, 2))), "invented", "GR-L"),
    (("d1q3-o4", dict(courant=F(-1, 4))), "abb", "MU-E"),
    (("d1q2", dict(s2=F(4, 3), courant=F(-1, 2))), "bb", "MU-L"),
])
def test_verdicts(spec_args, bc, verdict):
    spec = make_scheme(spec_args[0], **spec_args[1])
    assert strong_stability_verdict(spec, boundary_condition(bc, spec)).value.value == verdict


@pytest.mark.parametrize("spec_args, bc", [
    (("d1q2", dict(s2=F(3, 2), courant=F(1, 2))), "kd"),
    (("d1q2", dict(s2=F(2), courant=F(-1, 2))), "extrapolation:1"),
    (("d1q3-o4", dict(courant=F(1, 4))), "two-step-abb"),
    (("d1q2", dict(s2=F(3, 2), courant=F(-1, 2))), "invented"),
])
def test_verdict_invariants(spec_args, bc):
    spec = make_scheme(spec_args[0], **spec_args[1])
    v = strong_stability_verdict(spec, boundary_condition(bc, spec))
    if v.value == VerdictValue.SS:
        assert all(v.per_component_stable)
    if v.value == VerdictValue.SSOO:
        assert v.per_component_stable[0] and not all(v.per_component_stable)
    if v.value == VerdictValue.GR_L:
        assert any(abs(m.z_star) > 1 for m in v.driving_modes)


def test_verdict_modes_sorted(o4):
    v = strong_stability_verdict(o4, boundary_condition("abb", o4))
    keys = [(cmath.phase(m.z_star), abs(m.z_star)) for m in v.modes]
    assert keys == sorted(keys)


def test_verdict_deterministic(d1q2_critical):
    bc = boundary_condition("extrapolation:2", d1q2_critical)
    a = strong_stability_verdict(d1q2_critical, bc)
    b = strong_stability_verdict(d1q2_critical, bc)
    assert a.value == b.value and [m.z_star for m in a.modes] == [m.z_star for m in b.modes]


GRID = [F(2 * k + 1, 20) for k in range(20)]  # 20 interior points of (0, 2)


@pytest.mark.parametrize("C", [F(-3, 4), F(-1, 4), F(1, 2)])
def test_lw_abb_complex_pair_inside_disk(C):
    from lbmgks.cauchy import is_schur_exact

    for s3 in GRID:
        coeffs = [s3 - 1, (2 * C * C - 1) * s3, F(1)]
        assert is_schur_exact(coeffs)
        assert np.all(np.abs(np.roots([float(c) for c in reversed(coeffs)])) < 1)


def _lw_last_couple(s2, s3, C):
    z = (s2 - (C * s2 - C + 1) * s3) / (s2 + (C - 1) * s3)
    ratio = abs(s2 + C * s3) / abs(s2 + C * s3 - (C + 1) * s2 * s3)
    return z, ratio


@pytest.mark.parametrize("C", [F(-9, 10), F(-1, 2), F(-1, 10)])
def test_lw_extrapolation_last_couple_unstable(C):
    for s2 in GRID:
        for s3 in GRID:
            if s2 + (C - 1) * s3 == 0 or s2 + C * s3 - (C + 1) * s2 * s3 == 0:
                continue
            z, ratio = _lw_last_couple(s2, s3, C)
            if abs(z) > 1:
                assert ratio > 1


@pytest.mark.parametrize("s2, s3, C", [(F(1, 2), F(3, 2), F(-1, 2)), (F(3, 2), F(1, 4), F(-3, 4))])
def test_lw_last_couple_found_by_solver(s2, s3, C):
    spec = make_scheme("d1q3-lw", s2=s2, s3=s3, courant=C)
    res = shared_eigenvalues(spec, boundary_condition("extrapolation:1", spec))
    z, ratio = _lw_last_couple(s2, s3, C)
    hits = [c for c in res.couples if abs(c.z - float(z)) < 1e-9]
    assert hits
    if abs(z) > 1:
        assert abs(hits[0].kappa) / abs(hits[0].z) == pytest.approx(float(ratio), rel=1e-9)
        assert hits[0].kind != CoupleKind.STABLE
