"""Strong stability of the scheme on the half-line with one kinetic boundary.

The pipeline is:

* characteristic roots and their stable/unstable split (:func:`roots_at`),
* radial continuation of the stable root to the unit circle,
* the stable eigenvector, the kernel of the leftmost scheme matrix and the
  boundary scalar ``<KL>(z)``,
* exact search for eigenvalues shared by bulk and boundary scheme,
* classification of every critical circle point by the behaviour of
  ``<KL>`` and of the stable eigenvector, and the final verdict.

Radial order fits run in MPFR arithmetic so that the fitted slopes are free of
rounding noise; rational critical points are also expanded exactly with
:mod:`lbmgks.series` and both routes have to agree.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import gmpy2
import mpmath
import numpy as np
import sympy as sp

from . import series as ser
from .cauchy import KAPPA, Z, CharSystem, characteristic_coeffs
from .numeric import DOUBLE, Field, adjugate, det, poly_roots, polyval
from .scheme import (
    BoundarySpec,
    SchemeSpec,
    build_boundary_matrices,
    build_relaxation_matrix,
    bulk_pencil,
    fractions_matrix,
    to_fraction,
)

log = logging.getLogger(__name__)

MP_BITS = 256
ORDER_DELTAS = (1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5, 3e-6, 1e-6)
CONT_DELTAS = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
ORDER_WINDOW = 0.2
KAPPA_ZERO_TOL = 1e-12
CIRCLE_TOL = 1e-20
SERIES_TERMS = 8
RESOLVENT_POINTS = 32


class AnalysisError(RuntimeError):
    """Raised when a configuration cannot be analysed (not for unstable verdicts)."""


# ------------------------------------------------------------------ model


@dataclass(frozen=True, eq=False)
class _Model:
    spec: SchemeSpec
    bc: BoundarySpec | None
    cs: CharSystem
    E: dict
    B: dict | None
    minvk: tuple
    me_pi: tuple
    beta: tuple  # (zero-based l, power h, value) of the weights filling population pi


@lru_cache(maxsize=1024)
def _model(spec: SchemeSpec, bc: BoundarySpec | None) -> _Model:
    if spec.r != 1:
        raise AnalysisError(f"only schemes with maximal velocity 1 are handled (r = {spec.r})")
    cs = characteristic_coeffs(spec)
    if cs.r_bar > 1:
        raise AnalysisError(f"left stencil breadth {cs.r_bar} > 1 is not handled")
    E = {ell: fractions_matrix(mat) for ell, mat in bulk_pencil(spec).items()}
    minvk = fractions_matrix(spec.Minv * build_relaxation_matrix(spec))
    pi = spec.pi
    me_pi = tuple(to_fraction(spec.M[i, pi]) for i in range(spec.q))
    B = None
    beta: list = []
    if bc is not None:
        B = {ell: fractions_matrix(mat) for ell, mat in build_boundary_matrices(spec, bc, 0).items()}
        beta = [(w.l - 1, w.h, to_fraction(w.value)) for w in bc.weights
                if w.i - 1 == pi and w.j == 1 and w.value != 0]
    return _Model(spec, bc, cs, E, B, tuple(map(tuple, minvk)), me_pi, tuple(beta))


@lru_cache(maxsize=1024)
def _field_data(model: _Model, bits: int) -> dict:
    F = Field(bits)
    with F.active():
        return {
            "E": {ell: F.matrix(m) for ell, m in model.E.items()},
            "B": None if model.B is None else {ell: F.matrix(m) for ell, m in model.B.items()},
            "minvk": F.matrix(model.minvk),
            "me_pi": F.vector(model.me_pi),
            "beta": [(l, h, F.num(v)) for l, h, v in model.beta],
            "eye": F.eye(model.spec.q),
        }


def _field(bits: int | Field) -> Field:
    return bits if isinstance(bits, Field) else Field(bits)


def _symbol(model: _Model, F: Field, kappa):
    data = _field_data(model, F.bits)
    acc = None
    for ell, E in data["E"].items():
        term = E * (kappa**ell)
        acc = term if acc is None else acc + term
    return acc


def _boundary_matrix(model: _Model, F: Field, kappa):
    data = _field_data(model, F.bits)
    acc = None
    for ell, B in data["B"].items():
        term = B * (kappa**ell)
        acc = term if acc is None else acc + term
    return acc


def _kappa_coeffs(model: _Model, F: Field, z) -> list:
    return model.cs.kappa_coeffs(z, num=F.num)


def _kappa_roots(model: _Model, F: Field, z) -> list:
    coeffs = _kappa_coeffs(model, F, z)
    roots = poly_roots(coeffs, F)
    low = 0
    while low < len(coeffs) and coeffs[low] == 0:
        low += 1
    return roots


def _stable_root_outside(model: _Model, F: Field, z):
    """kappa_s(z) for |z| > 1 as the unique characteristic root in the unit disc."""
    roots = sorted(_kappa_roots(model, F, z), key=abs)
    if model.cs.r_bar == 0 or not roots:
        return None
    return roots[0]


def _adj(model: _Model, F: Field, z, kappa):
    data = _field_data(model, F.bits)
    return adjugate(z * data["eye"] - _symbol(model, F, kappa))


def _phi_from_adj(adj, tol: float = 0.0):
    q = adj.shape[0]
    norms = [float(sum(abs(adj[i, k]) ** 2 for i in range(q))) for k in range(q)]
    k = int(np.argmax(norms))
    col = adj[:, k]
    if float(abs(col[0])) <= tol * math.sqrt(norms[k]) or col[0] == 0:
        raise AnalysisError("first component of the stable eigenvector vanishes")
    return col / col[0]


def _kl_row(model: _Model, F: Field, kappa):
    """Row vector (e_pi^T kappa^-1 - beta(kappa)) M^-1 K."""
    data = _field_data(model, F.bits)
    q = model.spec.q
    row = np.array([F.zero() for _ in range(q)], dtype=object if F.mp else complex)
    row[model.spec.pi] = row[model.spec.pi] + 1 / kappa
    for l, h, v in data["beta"]:
        row[l] = row[l] - v * kappa**h
    return row.dot(data["minvk"])


def _kl(model: _Model, F: Field, z, kappa, phi):
    return _kl_row(model, F, kappa).dot(phi)


def _bdet(model: _Model, F: Field, z, kappa):
    data = _field_data(model, F.bits)
    return det(z * data["eye"] - _boundary_matrix(model, F, kappa))


# ------------------------------------------------------------------ roots


class Parametrization(str, Enum):
    PLUS = "plusBranch"
    MINUS = "minusBranch"
    CONTINUED = "continued"


@dataclass(frozen=True)
class RootPair:
    z: complex
    kappa_s: complex | None
    kappa_u: complex
    parametrization: Parametrization
    roots: tuple[complex, ...]

    @property
    def count_inside(self) -> int:
        return sum(1 for k in self.roots if abs(k) < 1)


def _quadratic_branches(coeffs: Sequence[complex]) -> tuple[complex, complex] | None:
    if len(coeffs) != 3 or coeffs[2] == 0:
        return None
    c, b, a = coeffs
    root = cmath.sqrt(b * b - 4 * a * c)
    return (-b + root) / (2 * a), (-b - root) / (2 * a)


def roots_at(spec: SchemeSpec, z: complex) -> RootPair:
    """Characteristic roots at ``z`` with the stable one singled out.

    On the unit circle the stable root is the radial limit from outside, so
    the selection goes through :func:`stable_root_continuation`.
    """
    z = complex(z)
    if z == 0:
        raise ValueError("z must be nonzero")
    model = _model(spec, None)
    coeffs = _kappa_coeffs(model, DOUBLE, z)
    if all(c == 0 for c in coeffs):
        raise AnalysisError(f"all characteristic coefficients vanish at z={z}")
    trimmed = list(coeffs)
    while trimmed and trimmed[-1] == 0:
        trimmed.pop()
    roots = [complex(r) for r in poly_roots(trimmed, DOUBLE)]
    infinite = len(trimmed) < len(coeffs)
    ordered = sorted(roots, key=abs)
    if model.cs.r_bar == 0:
        ks = None
    elif abs(abs(z) - 1) < 1e-12:
        ks = stable_root_continuation(spec, z).kappa
    else:
        ks = ordered[0]
    ku = complex("inf") if infinite else (ordered[-1] if len(ordered) > 1 or ks is None else complex("inf"))
    if ks is not None and len(ordered) > 1 and not infinite:
        others = [k for k in ordered if abs(k - ks) > 0]
        ku = others[0] if others else ordered[-1]
    branches = _quadratic_branches(coeffs)
    tag = Parametrization.CONTINUED
    if branches is not None and ks is not None and abs(abs(z) - 1) >= 1e-12:
        tag = Parametrization.PLUS if abs(branches[0] - ks) <= abs(branches[1] - ks) else Parametrization.MINUS
    return RootPair(z, ks, ku, tag, tuple(ordered))


@dataclass(frozen=True)
class Continuation:
    z: complex
    kappa: complex
    dkappa_dz: complex | None
    samples: tuple[complex, ...]
    degenerate: bool = False
    double_root: bool = False


def _pdz_derivs(cs: CharSystem, z, kappa):
    """Partial derivatives of P(z, kappa) = kappa^rBar det(zI - E(kappa)) up to order two."""
    rows = []
    for ell in range(-cs.r_bar, cs.p_bar + 1):
        rows.append(list(cs.d.get(ell, ())))
    out = {k: 0j for k in ("p", "z", "k", "zz", "zk", "kk")}
    for power, dz in enumerate(rows):
        f = complex(polyval([complex(c) for c in dz], z)) if dz else 0j
        fz = complex(polyval([k * complex(c) for k, c in enumerate(dz)][1:], z)) if len(dz) > 1 else 0j
        fzz = complex(polyval([k * (k - 1) * complex(c) for k, c in enumerate(dz)][2:], z)) if len(dz) > 2 else 0j
        kp = kappa**power
        kp1 = power * kappa ** (power - 1) if power >= 1 else 0
        kp2 = power * (power - 1) * kappa ** (power - 2) if power >= 2 else 0
        out["p"] += f * kp
        out["z"] += fz * kp
        out["zz"] += fzz * kp
        out["k"] += f * kp1
        out["zk"] += fz * kp1
        out["kk"] += f * kp2
    return out


def _richardson(samples: Sequence[complex], ratio: float = 10.0) -> complex:
    """Repeated Richardson elimination of O(delta) and O(delta^2) terms."""
    vals = list(samples)
    for order in (1, 2):
        f = ratio**order
        vals = [(f * b - a) / (f - 1) for a, b in zip(vals, vals[1:])]
        if len(vals) < 2:
            break
    return vals[-1]


def stable_root_continuation(spec: SchemeSpec, z_circle: complex) -> Continuation:
    """kappa_s on the unit circle as the radial limit from outside, plus dkappa_s/dz."""
    z0 = complex(z_circle)
    if abs(abs(z0) - 1) > 1e-9:
        raise ValueError(f"|z| = {abs(z0)} is not on the unit circle")
    model = _model(spec, None)
    if model.cs.r_bar == 0:
        raise AnalysisError("no stable root: the leftmost characteristic coefficient vanishes identically")
    samples = []
    prev = None
    ambiguous = True
    for delta in CONT_DELTAS:
        z = z0 * (1 + delta)
        roots = [complex(r) for r in _kappa_roots(model, DOUBLE, z)]
        if prev is None:
            pick = min(roots, key=abs)
        else:
            pick = min(roots, key=lambda k: abs(k - prev))
        others = sorted(abs(k - pick) for k in roots)
        if len(others) < 2 or others[1] > 1e-9:
            ambiguous = False
        samples.append(pick)
        prev = pick
    estimate = _richardson(samples)
    limit_roots = [complex(r) for r in _kappa_roots(model, DOUBLE, z0)]
    kappa = min(limit_roots, key=lambda k: abs(k - estimate)) if limit_roots else estimate
    if abs(kappa - estimate) > 1e-3:
        kappa = estimate
    d = _pdz_derivs(model.cs, z0, kappa)
    scale = max(1.0, abs(d["z"]), abs(d["zz"]), abs(d["kk"]))
    double = abs(d["k"]) <= 1e-7 * scale
    if double and len(limit_roots) > 1:
        # a double root is only known to sqrt(eps) individually; its pair mean is accurate
        pair = sorted(limit_roots, key=lambda k: abs(k - kappa))[:2]
        kappa = (pair[0] + pair[1]) / 2
        d = _pdz_derivs(model.cs, z0, kappa)
    if not double:
        deriv = -d["z"] / d["k"]
    elif abs(d["z"]) > 1e-7 * scale:
        deriv = None  # square-root branch point, no derivative
    else:
        deriv = _double_root_slope(d, z0, kappa)
    return Continuation(z0, kappa, deriv, tuple(samples), degenerate=ambiguous, double_root=double)


def _double_root_slope(d: dict, z0: complex, kappa: complex) -> complex | None:
    """Slope u of kappa = kappa* + u t when P_k = P_z = 0: P_kk u^2 + 2 P_zk u + P_zz = 0.

    The stable branch is the slope that moves kappa into the disc for t = z0 delta.
    """
    a, b, c = d["kk"], 2 * d["zk"], d["zz"]
    if abs(a) < 1e-14:
        return -c / b if abs(b) > 1e-14 else None
    root = cmath.sqrt(b * b - 4 * a * c)
    slopes = ((-b + root) / (2 * a), (-b - root) / (2 * a))
    inward = [u for u in slopes if (kappa.conjugate() * u * z0).real < 0]
    return inward[0] if len(inward) == 1 else None


# -------------------------------------------------------------- eigenvectors


def stable_eigenvector(spec: SchemeSpec, z: complex, kappa: complex | None = None) -> np.ndarray:
    """phi_s(z) from the smallest right singular vector, scaled to phi_1 = 1."""
    if abs(abs(complex(z)) - 1) < 1e-12 and kappa is None:
        return _circle_eigenvector(spec, complex(z))
    if kappa is None:
        kappa = roots_at(spec, z).kappa_s
    if kappa is None or kappa == 0:
        raise AnalysisError("stable root unavailable or zero")
    mat = complex(z) * np.eye(spec.q) - _symbol(_model(spec, None), DOUBLE, complex(kappa))
    _, _, vh = np.linalg.svd(mat)
    phi = vh[-1].conj()
    if abs(phi[0]) < 1e-12 * np.linalg.norm(phi):
        raise AnalysisError("first component of the stable eigenvector vanishes")
    return phi / phi[0]


def _circle_eigenvector(spec: SchemeSpec, z: complex, bits: int = MP_BITS) -> np.ndarray:
    """Radial limit of phi_s at a circle point, where zI - E(kappa_s) may lose rank.

    Components with a pole are returned as ``inf``.
    """
    model = _model(spec, None)
    F = Field(bits)
    with F.active():
        zz = F.num(z) * (1 + F.num(Fraction(1, 10**40)))
        kappa = _stable_root_outside(model, F, zz)
        phi = _phi_from_adj(_adj(model, F, zz, kappa))
    out = np.array([complex(x) for x in phi])
    out[~np.isfinite(out) | (np.abs(out) > 1e20)] = complex(math.inf, 0)
    return out


@dataclass(frozen=True)
class OrderFit:
    slope: float
    order: int | None  # None when the slope is not close to an integer

    @property
    def resolved(self) -> bool:
        return self.order is not None


def _fit(deltas: Sequence[float], values: Sequence[float]) -> OrderFit:
    x = np.log(np.asarray(deltas, dtype=float))
    y = np.asarray(values, dtype=float)
    slope = float(np.polyfit(x, y, 1)[0])
    r = round(slope)
    return OrderFit(slope, int(r) if abs(slope - r) <= ORDER_WINDOW else None)


@dataclass
class _Radial:
    deltas: tuple
    kappas: list
    phis: list
    kls: list
    bdets: list


def _radial(model: _Model, z_star, kappa_star, F: Field, deltas=ORDER_DELTAS, want_kl=True) -> _Radial:
    """Stable root, eigenvector and <KL> along z = z*(1 + delta)."""
    out = _Radial(tuple(deltas), [], [], [], [])
    with F.active():
        zs = F.num(z_star)
        for delta in sorted(deltas):
            z = zs * (1 + F.num(Fraction(delta)))
            kappa = _stable_root_outside(model, F, z)
            out.kappas.append(kappa)
            phi = _phi_from_adj(_adj(model, F, z, kappa))
            out.phis.append(phi)
            if want_kl and model.B is not None:
                out.kls.append(_kl(model, F, z, kappa, phi))
                out.bdets.append(_bdet(model, F, z, kappa))
    out.deltas = tuple(sorted(deltas))
    return out


def _log_abs(x) -> float:
    a = abs(x)
    if a == 0:
        return -1e300
    return float(gmpy2.log(a)) if isinstance(a, type(gmpy2.mpfr(0))) else math.log(float(a))


def _component_orders(rad: _Radial) -> list[OrderFit]:
    q = len(rad.phis[0])
    fits = []
    for i in range(q):
        fits.append(_pole_fit(rad.deltas, [_log_abs(p[i]) for p in rad.phis]))
    return fits


def _pole_fit(deltas, logs) -> OrderFit:
    if all(v <= -1e299 for v in logs):
        return OrderFit(0.0, 0)
    fit = _fit(deltas, logs)
    if fit.slope > -0.5:
        return OrderFit(fit.slope, 0)
    return OrderFit(fit.slope, None if fit.order is None else -fit.order)


def eigenvector_pole_orders(spec: SchemeSpec, z_star: complex, bits: int = MP_BITS) -> tuple[int | None, ...]:
    """Pole order of each component of phi_s at a circle point (0 when bounded)."""
    if abs(abs(complex(z_star)) - 1) > 1e-9:
        raise ValueError("pole orders are only meaningful on the unit circle")
    model = _model(spec, None)
    rad = _radial(model, z_star, None, Field(bits), want_kl=False)
    return tuple(f.order for f in _component_orders(rad))


# ------------------------------------------------------------ kernel of E_-1


def kernel_zero_basis(spec: SchemeSpec) -> list[sp.Matrix]:
    """Exact basis of ker(M e_pi e_pi^T M^-1 K), scaled to primitive integer vectors."""
    E = bulk_pencil(spec).get(-1)
    if E is None:
        raise AnalysisError("no velocity +1 in the stencil")
    basis = E.nullspace()
    if len(basis) != spec.q - 1:
        raise AnalysisError(f"kernel dimension {len(basis)} != q - 1 = {spec.q - 1}")
    out = []
    for v in basis:
        den = sp.ilcm(*[sp.fraction(sp.nsimplify(x))[1] for x in v])
        w = v * den
        g = math.gcd(*[int(x) for x in w if x != 0])
        out.append(w / g)
    return out


def canonical_kernel_vector(spec: SchemeSpec) -> sp.Matrix:
    """For two velocities, -det(M) times the vector orthogonal to e_pi^T M^-1 K.

    With the usual D1Q2 moments this is (s2 - 1, 1 + C s2).
    """
    if spec.q != 2:
        raise AnalysisError("canonical kernel vector is defined for two velocities")
    w = (spec.Minv * build_relaxation_matrix(spec))[spec.pi, :]
    return -spec.M.det() * sp.Matrix([-w[1], w[0]])


def sigma_bulk(spec: SchemeSpec, z, basis: Sequence | None = None):
    """det[M e_pi | (zI - E_0) phi_0^1 | ...]; exact when ``z`` is rational or symbolic."""
    if basis is None:
        basis = kernel_zero_basis(spec)
    pencil = bulk_pencil(spec)
    E0 = pencil.get(0, sp.zeros(spec.q))
    zz = sp.nsimplify(z) if not isinstance(z, (complex, float)) else z
    cols = [spec.M[:, spec.pi]]
    for v in basis:
        cols.append((zz * sp.eye(spec.q) - E0) * sp.Matrix(v))
    val = sp.Matrix.hstack(*cols).det()
    val = sp.expand(val)
    return complex(val) if isinstance(z, (complex, float)) else val


# ---------------------------------------------------------------- <KL>


def kl_scalar(spec: SchemeSpec, bc: BoundarySpec, z: complex, bits: int = 53) -> complex:
    """<KL>(z) with phi_s normalised to phi_1 = 1; circle points use the radial limit."""
    model = _model(spec, bc)
    if model.cs.r_bar == 0:
        raise AnalysisError("<KL> is undefined when the leftmost characteristic coefficient vanishes")
    F = Field(bits)
    z = complex(z)
    with F.active():
        if abs(abs(z) - 1) < 1e-12:
            kappa = F.num(stable_root_continuation(spec, z).kappa)
        elif abs(z) > 1:
            kappa = _stable_root_outside(model, F, F.num(z))
        else:
            raise ValueError("<KL> is defined for |z| >= 1")
        zf = F.num(z)
        phi = _phi_from_adj(_adj(model, F, zf, kappa))
        return complex(_kl(model, F, zf, kappa, phi))


def kl_factorization_residual(spec: SchemeSpec, bc: BoundarySpec, z: complex) -> float:
    """|det(zI - B(kappa_s)) - (phi~^T M e_pi) <KL>| relative to the terms' scale."""
    model = _model(spec, bc)
    z = complex(z)
    kappa = _stable_root_outside(model, DOUBLE, z)
    adj = _adj(model, DOUBLE, z, kappa)
    phi = _phi_from_adj(adj)
    left = adj[0, :]  # phi~^T, since adj = phi phi~^T with phi_1 = 1
    kl = _kl(model, DOUBLE, z, kappa, phi)
    lhs = _bdet(model, DOUBLE, z, kappa)
    rhs = left.dot(np.array(model.me_pi, dtype=complex)) * kl
    scale = max(1.0, abs(lhs), abs(rhs))
    return abs(lhs - rhs) / scale


def adjugate_singular_values(spec: SchemeSpec, z: complex) -> np.ndarray:
    model = _model(spec, None)
    kappa = _stable_root_outside(model, DOUBLE, complex(z))
    return np.linalg.svd(_adj(model, DOUBLE, complex(z), kappa), compute_uv=False)


# ---------------------------------------------------- shared eigenvalues


@lru_cache(maxsize=1024)
def boundary_det_poly(spec: SchemeSpec, bc: BoundarySpec) -> sp.Poly:
    """det(zI - sum_l B_{0,l} kappa^l) as a polynomial in (kappa, z)."""
    pencil = build_boundary_matrices(spec, bc, 0)
    if any(ell < 0 for ell in pencil):
        raise AnalysisError("boundary pencil with negative powers")
    rows = []
    for i in range(spec.q):
        row = []
        for j in range(spec.q):
            expr = Z if i == j else sp.Integer(0)
            for ell, B in pencil.items():
                if B[i, j] != 0:
                    expr -= B[i, j] * KAPPA**ell
            row.append(sp.Poly(expr, KAPPA, Z, domain="QQ"))
        rows.append(row)
    return ser.det(rows)


@lru_cache(maxsize=1024)
def adjugate_row_poly(spec: SchemeSpec, k: int = 0) -> sp.Poly:
    """Numerator of the (0, k) adjugate entry of zI - E(kappa), as a polynomial in (kappa, z)."""
    q = spec.q
    sym = sp.zeros(q)
    for ell, E in bulk_pencil(spec).items():
        sym += E * KAPPA**ell
    A = Z * sp.eye(q) - sym
    minor = A.copy()
    minor.row_del(k)
    minor.col_del(0)
    entry = minor.det(method="berkowitz") if q > 1 else sp.Integer(1)
    entry = (-1) ** k * entry
    num, _ = sp.fraction(sp.together(sp.expand(entry)))
    return sp.Poly(sp.expand(num), KAPPA, Z, domain="QQ")


def _strip_monomials(poly: sp.Poly) -> sp.Poly:
    """Remove pure kappa^a z^b factors."""
    if poly.is_zero:
        return poly
    monoms = poly.monoms()
    a = min(m[0] for m in monoms)
    b = min(m[1] for m in monoms)
    if a or b:
        poly = sp.Poly(sp.expand(poly.as_expr() / (KAPPA**a * Z**b)), KAPPA, Z, domain="QQ")
    return poly


class CoupleKind(str, Enum):
    STABLE = "stable"  # kappa is the stable root (or its circle limit)
    UNSTABLE = "unstable"
    FICTITIOUS = "fictitious"  # kappa = 0 artefact
    INSIDE = "inside"  # |z| < 1, irrelevant for stability


@dataclass(frozen=True)
class Couple:
    z: complex
    kappa: complex
    kind: CoupleKind
    z_exact: str | None
    kappa_exact: str | None
    residual_bulk: float
    residual_boundary: float
    on_circle: bool
    z_mp: object = field(default=None, compare=False, repr=False)

    @property
    def is_shared_eigenvalue(self) -> bool:
        return self.kind == CoupleKind.STABLE and abs(self.z) >= 1 - 1e-12


@dataclass
class SharedEigenvalues:
    couples: list[Couple]
    resultant: sp.Poly
    common_factor: sp.Poly | None = None

    def relevant(self) -> list[Couple]:
        return [c for c in self.couples if c.is_shared_eigenvalue]


def _mp_num(x, F: Field):
    if isinstance(x, (mpmath.mpc, mpmath.mpf)):
        c = x if isinstance(x, mpmath.mpc) else mpmath.mpc(x, 0)
        return gmpy2.mpc(gmpy2.mpfr(mpmath.nstr(c.real, 90)), gmpy2.mpfr(mpmath.nstr(c.imag, 90)))
    return F.num(x)


def _z_candidates(res: sp.Poly, F: Field) -> list[tuple[object, str | None, sp.Expr | None]]:
    """Nonzero roots of a univariate resultant: (value, exact string, exact factor)."""
    out = []
    if res.is_zero or res.degree() < 1:
        return out
    _, factors = sp.factor_list(res.as_expr(), Z)
    for fac, _mult in factors:
        p = sp.Poly(fac, Z)
        deg = p.degree()
        if deg < 1:
            continue
        if deg == 1:
            a, b = p.all_coeffs()
            root = sp.Rational(-b, a)
            if root == 0:
                continue
            out.append((F.num(Fraction(int(root.p), int(root.q))), str(root), fac))
            continue
        coeffs = [sp.Rational(c) for c in p.all_coeffs()]
        with mpmath.workdps(100):
            roots = mpmath.polyroots([mpmath.mpf(c.p) / c.q for c in coeffs], maxsteps=500, extraprec=400)
            roots = [_mp_num(r, F) for r in roots]
        exact = [(complex(sp.N(e, 30)), str(sp.nsimplify(e))) for e in sp.roots(p, multiple=True)] if deg == 2 else []
        for r in roots:
            if abs(r) == 0:
                continue
            label = next((lab for val, lab in exact if abs(val - complex(r)) < 1e-20), None)
            out.append((r, label, fac))
    return out


def _eval_bivariate(poly: sp.Poly, kappa, z):
    acc = kappa * 0
    for (a, b), c in poly.terms():
        acc = acc + gmpy2.mpq(int(c.p), int(c.q)) * kappa**a * z**b if not isinstance(kappa, complex) else \
            acc + complex(c) * kappa**a * z**b
    return acc


def _poly_scale(poly: sp.Poly, kappa, z) -> float:
    return float(sum(abs(complex(c)) * abs(complex(kappa)) ** a * abs(complex(z)) ** b
                     for (a, b), c in poly.terms())) or 1.0


def _kappa_limit(model: _Model, F: Field, z):
    """Stable root at z itself (|z| > 1) or its radial limit (|z| = 1), in the given field."""
    if abs(abs(z) - 1) <= CIRCLE_TOL:
        tiny = F.num(Fraction(1, 10**60))
        k_near = _stable_root_outside(model, F, z * (1 + tiny))
        roots = _kappa_roots(model, F, z)
        return min(roots, key=lambda k: abs(k - k_near)) if roots else k_near
    return _stable_root_outside(model, F, z)


@lru_cache(maxsize=1024)
def shared_eigenvalues(spec: SchemeSpec, bc: BoundarySpec, bits: int = MP_BITS) -> SharedEigenvalues:
    """Solve det(zI - E(kappa)) = 0 = det(zI - B(kappa)) by exact elimination of kappa."""
    model = _model(spec, bc)
    F = Field(bits)
    P = _strip_monomials(model.cs.poly())
    Q = _strip_monomials(boundary_det_poly(spec, bc))
    G = sp.gcd(P, Q)
    common = None
    if G.total_degree() > 0:
        if G.degree(KAPPA) > 0:
            raise AnalysisError(f"bulk and boundary determinants share the factor {G.as_expr()}")
        # a z-only factor is a kappa-independent eigenvalue of both schemes
        if any(abs(complex(r)) >= 1 - 1e-12 for r in sp.Poly(G.as_expr(), Z).nroots()):
            raise AnalysisError(f"common factor {G.as_expr()} has roots with |z| >= 1")
        common = G
        P = sp.Poly(sp.quo(P, G), KAPPA, Z, domain="QQ")
        Q = sp.Poly(sp.quo(Q, G), KAPPA, Z, domain="QQ")
    if Q.degree(KAPPA) == 0:
        res = sp.Poly(0, Z)  # boundary determinant independent of kappa
        zc = [(F.num(complex(r)), str(r), None) for r in sp.Poly(Q.as_expr(), Z).nroots()] if Q.degree(Z) > 0 else []
    else:
        res = sp.Poly(sp.resultant(P.as_expr(), Q.as_expr(), KAPPA), Z)
        if res.is_zero:
            raise AnalysisError("resultant vanishes identically")
        with F.active():
            zc = _z_candidates(res, F)
    couples = []
    with F.active():
        for zval, zstr, _fac in zc:
            if abs(zval) == 0:
                continue
            kroots = _kappa_roots(model, F, zval)
            on_circle = abs(abs(zval) - 1) <= CIRCLE_TOL
            kappa_s = None
            if model.cs.r_bar == 1 and abs(zval) >= 1 - CIRCLE_TOL:
                kappa_s = _kappa_limit(model, F, zval)
            for kval in kroots:
                rq = abs(_eval_bivariate(Q, kval, zval)) / _poly_scale(Q, kval, zval)
                rp = abs(_eval_bivariate(P, kval, zval)) / _poly_scale(P, kval, zval)
                if rq > 1e-30 or rp > 1e-30:
                    continue
                if float(abs(kval)) < KAPPA_ZERO_TOL:
                    kind = CoupleKind.FICTITIOUS
                elif float(abs(zval)) < 1 - CIRCLE_TOL and not on_circle:
                    kind = CoupleKind.INSIDE
                elif kappa_s is not None and abs(kval - kappa_s) < 1e-30 * (1 + abs(kval)):
                    kind = CoupleKind.STABLE
                else:
                    kind = CoupleKind.UNSTABLE
                couples.append(Couple(complex(zval), complex(kval), kind, zstr, _exact_kappa(P, zstr, kval),
                                      float(rp), float(rq), bool(on_circle), zval))
        # det(L_z(kappa)) = kappa^q det(zI - E(kappa)) vanishes at kappa = 0 for every z,
        # so every root of the boundary determinant at kappa = 0 gives an artefact couple
        q0 = sp.Poly(Q.as_expr().subs(KAPPA, 0), Z)
        if not q0.is_zero and q0.degree() >= 1:
            for r in sp.roots(q0, multiple=True):
                if r == 0:
                    continue
                couples.append(Couple(complex(r), 0j, CoupleKind.FICTITIOUS, str(r), "0", 0.0, 0.0,
                                      abs(abs(complex(r)) - 1) < 1e-12))
    uniq: list[Couple] = []
    for c in couples:
        if not any(abs(c.z - u.z) < 1e-12 and abs(c.kappa - u.kappa) < 1e-12 for u in uniq):
            uniq.append(c)
    uniq.sort(key=lambda c: (cmath.phase(c.z), abs(c.z), abs(c.kappa)))
    return SharedEigenvalues(uniq, res, common)


def _exact_kappa(P: sp.Poly, zstr: str | None, kval) -> str | None:
    """Rational kappa matching ``kval`` when z is rational, else None."""
    if zstr is None or not _is_rational_str(zstr):
        return None
    zr = sp.Rational(zstr)
    coeffs: dict[int, sp.Rational] = {}
    for (a, b), c in P.terms():
        coeffs[a] = coeffs.get(a, 0) + c * zr**b
    poly = sp.Poly.from_dict({(a,): c for a, c in coeffs.items()}, KAPPA, domain="QQ")
    for r in poly.ground_roots():
        if abs(complex(r) - complex(kval)) < 1e-12:
            return str(r)
    return None


# ---------------------------------------------------------- classification


class KLKind(str, Enum):
    ZERO = "zero"
    FINITE = "finite"
    POLE = "pole"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class KLBehavior:
    kind: KLKind
    order: int = 0
    coefficient: complex | None = None  # leading coefficient in powers of (z - z*)

    def __str__(self):
        if self.kind == KLKind.ZERO:
            return f"zero of order {self.order}"
        if self.kind == KLKind.POLE:
            return f"pole of order {self.order}"
        return self.kind.value


@dataclass(frozen=True)
class ModeReport:
    z_star: complex
    kappa_star: complex
    is_shared_eigenvalue: bool
    eigvec_continuous: bool
    kl: KLBehavior
    pole_orders: tuple[int | None, ...]
    localized: bool
    on_circle: bool
    exact_route: bool = False
    notes: tuple[str, ...] = ()

    @property
    def spatial(self) -> str:
        return "LOCALIZED" if self.localized else "EXTENDED"

    @property
    def temporal(self) -> str:
        return "CIRCLE" if self.on_circle else "OUTSIDE"

    @property
    def resolved(self) -> bool:
        return self.kl.kind != KLKind.UNKNOWN and all(o is not None for o in self.pole_orders)

    @property
    def boxes(self) -> str:
        first = "□" if self.eigvec_continuous else "⊠"
        second = "⊙" if self.is_shared_eigenvalue else "○"
        third = {KLKind.ZERO: "0", KLKind.FINITE: "⋆", KLKind.POLE: "∞", KLKind.UNKNOWN: "?"}[self.kl.kind]
        return first + second + third

    def effective_orders(self) -> tuple[int, ...] | None:
        """Per-component order of the singularity of the resolvent solution at z*."""
        if not self.resolved:
            return None
        shift = {KLKind.ZERO: self.kl.order, KLKind.POLE: -self.kl.order}.get(self.kl.kind, 0)
        return tuple(int(o) + shift for o in self.pole_orders)

    def unstable_components(self) -> tuple[bool, ...]:
        eff = self.effective_orders()
        if eff is None:
            return tuple(True for _ in self.pole_orders)
        return tuple(e >= 1 for e in eff)


def _kl_fit(rad: _Radial, denom_order: int = 0) -> KLBehavior:
    logs = [_log_abs(v) for v in rad.kls]
    if all(v <= -1e299 for v in logs):
        return KLBehavior(KLKind.UNKNOWN)
    fit = _fit(rad.deltas, logs)
    if fit.order is None:
        return KLBehavior(KLKind.UNKNOWN)
    if fit.order >= 1:
        return KLBehavior(KLKind.ZERO, fit.order)
    if fit.order <= -1:
        return KLBehavior(KLKind.POLE, -fit.order)
    return KLBehavior(KLKind.FINITE, 0)


def _leading_coefficient(model: _Model, z_star, behavior: KLBehavior, F: Field) -> complex | None:
    """<KL>(z) / (z - z*)^k at a tiny radial offset, Richardson-corrected."""
    k = {KLKind.ZERO: behavior.order, KLKind.POLE: -behavior.order}.get(behavior.kind, 0)
    vals = []
    # cancellation costs about |k| + 1 powers of delta, truncation one power
    e0 = max(3, int(F.bits * math.log10(2) / (abs(k) + 3)))
    with F.active():
        zs = F.num(z_star)
        for e in (e0, e0 + 1):
            delta = F.num(Fraction(1, 10**e))
            z = zs * (1 + delta)
            kappa = _stable_root_outside(model, F, z)
            phi = _phi_from_adj(_adj(model, F, z, kappa))
            vals.append(_kl(model, F, z, kappa, phi) / (z - zs) ** k)
        est = (10 * vals[1] - vals[0]) / 9
    return complex(est)


def _rational(x) -> Fraction | None:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int) and not isinstance(x, bool):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x)
        except ValueError:
            return None
    return None


def _series_orders(model: _Model, z_star: Fraction, kappa_star: Fraction, n: int = SERIES_TERMS):
    """Exact valuations of phi_s components and <KL> in t = z - z*; None if not applicable."""
    cs = model.cs
    # P(z* + t, kappa) as series coefficients in kappa
    zt = ser.Series.var(z_star, n)
    coeffs = []
    for ell in range(-cs.r_bar, cs.p_bar + 1):
        acc = ser.Series.const(0, n)
        for c in reversed(cs.d.get(ell, ())):
            acc = acc * zt + c
        coeffs.append(acc)
    dcoeffs = [coeffs[k] * k for k in range(1, len(coeffs))]
    pk0 = sum((dcoeffs[k - 1].c[0] * kappa_star ** (k - 1) for k in range(1, len(coeffs))), Fraction(0))
    if pk0 == 0:
        return None  # multiple root: Puiseux expansion, not handled exactly
    kap = ser.Series.const(kappa_star, n)
    for _ in range(6):
        pval = ser.Series.const(0, n)
        pder = ser.Series.const(0, n)
        kp = ser.Series.const(1, n)
        for k, c in enumerate(coeffs):
            pval = pval + c * kp
            if k + 1 < len(coeffs):
                pder = pder + dcoeffs[k] * kp
            kp = kp * kap
        kap = kap - pval / pder
    q = model.spec.q
    sym = [[ser.Series.const(0, n) for _ in range(q)] for _ in range(q)]
    for ell, E in model.E.items():
        kp = kap**ell
        for i in range(q):
            for j in range(q):
                if E[i][j] != 0:
                    sym[i][j] = sym[i][j] + kp * E[i][j]
    A = [[(zt if i == j else ser.Series.const(0, n)) - sym[i][j] for j in range(q)] for i in range(q)]
    adj = ser.adjugate(A)
    vals = [adj[0][k].valuation() for k in range(q)]
    cands = [k for k in range(q) if vals[k] is not None]
    if not cands:
        return None
    k = min(cands, key=lambda c: vals[c])
    v0 = vals[k]
    poles = []
    for i in range(q):
        vi = adj[i][k].valuation()
        poles.append(0 if vi is None else max(0, v0 - vi))
    kl = None
    if model.B is not None:
        row = [ser.Series.const(0, n) for _ in range(q)]
        row[model.spec.pi] = row[model.spec.pi] + kap.inverse()
        for l, h, v in model.beta:
            row[l] = row[l] - (kap**h) * v
        w = [sum((row[a] * model.minvk[a][b] for a in range(q)), ser.Series.const(0, n)) for b in range(q)]
        num = sum((w[b] * adj[b][k] for b in range(q)), ser.Series.const(0, n))
        vn = num.valuation()
        if vn is not None:
            order = vn - v0
            coeff = num.leading() / adj[0][k].leading()
            kl = (order, coeff)
    return tuple(poles), kl


def classify_mode(spec: SchemeSpec, bc: BoundarySpec, z_star, kappa_star=None,
                  bits: int = MP_BITS) -> ModeReport:
    """Three-box classification of a critical point z* with |z*| >= 1."""
    model = _model(spec, bc)
    if model.cs.r_bar != 1:
        raise AnalysisError("classification needs exactly one stable root")
    F = Field(bits)
    notes: list[str] = []
    z_exact = _rational(z_star)
    with F.active():
        zs = F.num(z_exact if z_exact is not None else complex(z_star) if not isinstance(z_star, gmpy2.mpc) else z_star)
        on_circle = abs(abs(zs) - 1) <= 1e-15
        kap = _kappa_limit(model, F, zs)
        if kappa_star is not None and abs(complex(kap) - complex(kappa_star)) > 1e-8:
            notes.append("requested kappa differs from the stable root; using the stable root")
        if not on_circle:
            adjm = _adj(model, F, zs, kap)
            phi = _phi_from_adj(adjm)
            kl_val = _kl(model, F, zs, kap, phi)
            scale = float(sum(abs(x) for x in _kl_row(model, F, kap))) * float(sum(abs(x) for x in phi))
            zero = float(abs(kl_val)) <= 1e-25 * max(scale, 1.0)
            beh = KLBehavior(KLKind.ZERO, 1, None) if zero else KLBehavior(KLKind.FINITE, 0, complex(kl_val))
            shared = float(abs(_bdet(model, F, zs, kap))) <= 1e-25 * max(scale, 1.0)
            return ModeReport(complex(zs), complex(kap), shared or zero, True, beh,
                              tuple(0 for _ in range(spec.q)), abs(kap) < 1, False, False, tuple(notes))
        rad = _radial(model, zs, kap, F)
        fits = _component_orders(rad)
        poles = tuple(f.order for f in fits)
        beh = _kl_fit(rad)
        bd = _fit(rad.deltas, [_log_abs(v) for v in rad.bdets])
        shared = bd.order is not None and bd.order >= 1
    if beh.kind in (KLKind.ZERO, KLKind.POLE, KLKind.FINITE):
        coeff = _leading_coefficient(model, zs, beh, F)
        beh = KLBehavior(beh.kind, beh.order, coeff)
    exact = False
    k_exact = _rational(_exact_kappa(model.cs.poly(), str(z_exact), kap)) if z_exact is not None else None
    if z_exact is not None and k_exact is not None:
        res = _series_orders(model, z_exact, k_exact)
        if res is not None:
            exact = True
            s_poles, s_kl = res
            if tuple(s_poles) != poles:
                notes.append(f"pole orders disagree: fit {poles}, series {tuple(s_poles)}")
                poles = tuple(None for _ in poles)
            if s_kl is not None:
                order, coeff = s_kl
                kind = KLKind.ZERO if order > 0 else KLKind.POLE if order < 0 else KLKind.FINITE
                if kind != beh.kind or (kind != KLKind.FINITE and abs(order) != beh.order):
                    notes.append(f"<KL> order disagrees: fit {beh}, series order {order}")
                    beh = KLBehavior(KLKind.UNKNOWN)
                else:
                    beh = KLBehavior(kind, abs(order), complex(coeff.numerator / coeff.denominator))
    if beh.kind == KLKind.ZERO:
        shared = True
    continuous = all(o == 0 for o in poles)
    if beh.kind == KLKind.POLE and all(o is not None for o in poles) and beh.order > max(poles):
        notes.append("pole order of <KL> exceeds the eigenvector pole order")
    if continuous and shared and beh.kind == KLKind.FINITE:
        log.warning("mode at z=%s is of the kind that has no known example (continuous, shared, finite)",
                    complex(zs))
        notes.append("continuous eigenvector at a shared eigenvalue with finite nonzero <KL>")
    return ModeReport(complex(zs), complex(kap), bool(shared), continuous, beh, poles,
                      abs(abs(complex(kap)) - 1) > 1e-9, True, exact, tuple(notes))


# --------------------------------------------------------- Jordan chain


@dataclass(frozen=True)
class JordanChain:
    phi0: sp.Matrix
    phi0_tilde: sp.Matrix  # entries polynomial in Z
    delta_kl: sp.Expr | None
    numerator: sp.Expr | None


def jordan_chain_degenerate(spec: SchemeSpec, bc: BoundarySpec | None = None) -> JordanChain:
    """Generalized eigenvector for kappa = 0 when the leftmost characteristic coefficient vanishes.

    Solves (zI - E_0) phi0 = E_-1 phi0~ with the first component of phi0~ set to 1,
    and, given a boundary, the 2x2 system fixing C_0 and C~_0.
    """
    cs = characteristic_coeffs(spec)
    if cs.r_bar != 0:
        raise AnalysisError("the leftmost characteristic coefficient does not vanish identically")
    if spec.q != 2:
        raise AnalysisError("Jordan-chain branch implemented for two velocities")
    pencil = bulk_pencil(spec)
    Em1 = pencil[-1]
    E0 = pencil.get(0, sp.zeros(2))
    phi0 = canonical_kernel_vector(spec)
    rhs = (Z * sp.eye(2) - E0) * phi0
    y = sp.Symbol("y")
    cand = sp.Matrix([1, y])
    sol = sp.solve(list(Em1 * cand - rhs), y, dict=True)
    if not sol:
        raise AnalysisError("inconsistent generalized eigenvector system")
    tilde = sp.Matrix([1, sp.expand(sol[0][y])])
    residual = sp.simplify(Em1 * tilde - rhs)
    if residual != sp.zeros(2, 1):
        raise AnalysisError("inconsistent generalized eigenvector system")
    delta = numer = None
    if bc is not None:
        Bp = build_boundary_matrices(spec, bc, 0)
        B0 = Bp.get(0, sp.zeros(2))
        B1 = Bp.get(1, sp.zeros(2))
        col1 = (Z * sp.eye(2) - B0) * phi0
        col2 = (Z * sp.eye(2) - B0) * tilde - B1 * phi0
        delta = sp.expand(sp.Matrix.hstack(col1, col2).det())
        numer = sp.expand(sp.Matrix.hstack(spec.M[:, spec.pi], col2).det())
    return JordanChain(phi0, tilde, delta, numer)


# ------------------------------------------------------- group velocity


def group_velocity(spec: SchemeSpec, z_star: complex) -> float:
    """V_g = -lambda (kappa_s / z) (dkappa_s/dz)^-1 at a circle point with |kappa_s| = 1."""
    cont = stable_root_continuation(spec, complex(z_star))
    if abs(abs(cont.kappa) - 1) > 1e-8:
        raise AnalysisError(f"|kappa_s| = {abs(cont.kappa):.6g} != 1: no propagating packet")
    if cont.dkappa_dz is None or cont.dkappa_dz == 0:
        raise AnalysisError("stable root is not differentiable at this point")
    vg = -spec.lattice_velocity * (cont.kappa / complex(z_star)) / cont.dkappa_dz
    if abs(vg.imag) > 1e-8 * max(1.0, abs(vg)):
        raise AnalysisError(f"group velocity has imaginary part {vg.imag:.3g}")
    return float(vg.real)


# ---------------------------------------------------------------- verdict


class VerdictValue(str, Enum):
    SS = "SS"
    SSOO = "SSOO"
    MU_L = "MU-L"
    MU_E = "MU-E"
    GR_L = "GR-L"
    INDETERMINATE = "INDETERMINATE"


@dataclass
class ResolventCheck:
    ok: bool
    bound: float
    worst_z: complex | None
    certified: bool = False  # numerical check only


@dataclass
class Verdict:
    value: VerdictValue
    driving_modes: list[ModeReport]
    per_component_stable: tuple[bool, ...]
    modes: list[ModeReport] = field(default_factory=list)
    shared: SharedEigenvalues | None = None
    resolvent: ResolventCheck | None = None
    notes: list[str] = field(default_factory=list)

    def __str__(self):
        return self.value.value


def _pole_candidates(spec: SchemeSpec, F: Field) -> list:
    """Circle points where the first row of adj(zI - E(kappa)) may vanish on the stable branch."""
    model = _model(spec, None)
    P = _strip_monomials(model.cs.poly())
    for k in range(spec.q):
        A = _strip_monomials(adjugate_row_poly(spec, k))
        if A.degree(KAPPA) <= 0 and A.degree(Z) <= 0:
            return []
        if A.degree(KAPPA) == 0:
            res = sp.Poly(A.as_expr(), Z)
        else:
            res = sp.Poly(sp.resultant(P.as_expr(), A.as_expr(), KAPPA), Z)
        if not res.is_zero:
            break
    else:
        return []
    out = []
    for zval, zstr, _ in _z_candidates(res, F):
        if abs(abs(zval) - 1) <= CIRCLE_TOL:
            out.append((zval, zstr))
    return out


def uniform_resolvent_check(spec: SchemeSpec, extra: Sequence[complex] = ()) -> ResolventCheck:
    """(|z| - 1) / (1 - |kappa_s(z)|) stays bounded along radial rays."""
    model = _model(spec, None)
    pts = [cmath.exp(2j * math.pi * k / RESOLVENT_POINTS) for k in range(RESOLVENT_POINTS)]
    pts += [complex(z) for z in extra]
    worst, worst_z, ok = 0.0, None, True
    for z0 in pts:
        ratios = []
        for delta in CONT_DELTAS:
            k = _stable_root_outside(model, DOUBLE, z0 * (1 + delta))
            gap = 1 - abs(k)
            ratios.append(delta / gap if gap > 0 else math.inf)
        if not all(math.isfinite(r) for r in ratios):
            ok = False
            worst_z = z0
            worst = math.inf
            continue
        growth = np.polyfit(np.log(CONT_DELTAS[-3:]), np.log(ratios[-3:]), 1)[0]
        if growth < -0.5:
            ok = False
        if max(ratios) > worst:
            worst, worst_z = max(ratios), z0
    return ResolventCheck(ok, worst, worst_z)


def _degenerate_verdict(spec: SchemeSpec, bc: BoundarySpec) -> Verdict:
    chain = jordan_chain_degenerate(spec, bc)
    delta = sp.Poly(chain.delta_kl, Z)
    numer = sp.Poly(chain.numerator, Z)
    notes = ["leftmost characteristic coefficient vanishes: Jordan chain at kappa = 0"]
    if delta.is_zero:
        return Verdict(VerdictValue.INDETERMINATE, [], (False,) * spec.q, notes=notes + ["Delta_KL vanishes"])
    g = sp.gcd(delta, numer)
    reduced = sp.quo(delta, g)
    drivers = []
    value = VerdictValue.SS
    for r in sp.Poly(reduced, Z).nroots(n=30):
        zr = complex(r)
        if abs(zr) > 1 + 1e-12:
            value = VerdictValue.GR_L
        elif abs(abs(zr) - 1) <= 1e-12 and value != VerdictValue.GR_L:
            value = VerdictValue.MU_L
        else:
            continue
        drivers.append(ModeReport(zr, 0j, True, True, KLBehavior(KLKind.ZERO, 1), (0,) * spec.q, True,
                                  abs(abs(zr) - 1) <= 1e-12, notes=("Delta_KL root",)))
    stable = value == VerdictValue.SS
    return Verdict(value, drivers, (stable,) * spec.q, modes=drivers, notes=notes)


def strong_stability_verdict(spec: SchemeSpec, bc: BoundarySpec, bits: int = MP_BITS,
                             resolvent_check: bool = True) -> Verdict:
    """SS / SSOO / MU-L / MU-E / GR-L, or INDETERMINATE when some order cannot be resolved."""
    model = _model(spec, bc)
    if model.cs.r_bar == 0:
        return _degenerate_verdict(spec, bc)
    F = Field(bits)
    shared = shared_eigenvalues(spec, bc, bits)
    notes: list[str] = []
    drivers: list[ModeReport] = []
    modes: list[ModeReport] = []
    q = spec.q
    for c in shared.couples:
        if c.kind == CoupleKind.STABLE and not c.on_circle and abs(c.z) > 1:
            rep = classify_mode(spec, bc, _best_z(c), bits=bits)
            modes.append(rep)
            if rep.kl.kind == KLKind.ZERO:
                drivers.append(rep)
    if drivers:
        return Verdict(VerdictValue.GR_L, drivers, (False,) * q, modes, shared, notes=notes)
    candidates: list[tuple[object, str | None]] = []
    with F.active():
        for c in shared.couples:
            if c.on_circle and c.kind == CoupleKind.STABLE:
                candidates.append((_best_z(c), c.z_exact))
        for zval, zstr in _pole_candidates(spec, F):
            candidates.append((zval, zstr))
    seen: list[complex] = []
    per = [True] * q
    indeterminate = False
    for zc, zstr in candidates:
        zcomplex = complex(sp.N(sp.Rational(zstr))) if zstr is not None and _is_rational_str(zstr) else complex(zc)
        if any(abs(zcomplex - s) < 1e-10 for s in seen):
            continue
        seen.append(zcomplex)
        ztarget = Fraction(zstr) if zstr is not None and _is_rational_str(zstr) else zc
        rep = classify_mode(spec, bc, ztarget, bits=bits)
        modes.append(rep)
        if not rep.resolved:
            indeterminate = True
            notes.append(f"unresolved orders at z={zcomplex:.6g}")
            continue
        unstable = rep.unstable_components()
        for i, u in enumerate(unstable):
            if u:
                per[i] = False
        if any(unstable):
            drivers.append(rep)
    modes.sort(key=lambda m: (cmath.phase(m.z_star), abs(m.z_star)))
    drivers.sort(key=lambda m: (cmath.phase(m.z_star), abs(m.z_star)))
    if indeterminate:
        return Verdict(VerdictValue.INDETERMINATE, drivers, tuple(per), modes, shared, notes=notes)
    if not per[0]:
        extended = any(not m.localized for m in drivers if m.unstable_components()[0])
        value = VerdictValue.MU_E if extended else VerdictValue.MU_L
        return Verdict(value, drivers, tuple(per), modes, shared, notes=notes)
    check = None
    if resolvent_check:
        check = uniform_resolvent_check(spec, [m.z_star for m in modes])
        if not check.ok:
            notes.append("uniform resolvent bound not confirmed numerically")
            return Verdict(VerdictValue.INDETERMINATE, drivers, tuple(per), modes, shared, check, notes)
    value = VerdictValue.SS if all(per) else VerdictValue.SSOO
    return Verdict(value, drivers, tuple(per), modes, shared, check, notes)


def _best_z(c: Couple):
    """Exact rational z if available, else the extended-precision value."""
    if c.z_exact is not None and _is_rational_str(c.z_exact):
        return Fraction(c.z_exact)
    return c.z_mp if c.z_mp is not None else c.z


def _is_rational_str(s: str) -> bool:
    try:
        Fraction(s)
        return True
    except (ValueError, TypeError):
        return False
