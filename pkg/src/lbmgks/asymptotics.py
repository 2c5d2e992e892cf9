"""Frequency-domain reconstruction of half-line solutions.

The resolvent solution at a point ``z`` outside the unit disc is assembled from
the stable root, its eigenvector and the boundary scalar <KL>(z). The inverse
z-transform is a trapezoidal contour integral on ``|z| = R``, carried out in
extended precision because the factor ``R**n`` would otherwise swamp the
decaying Fourier coefficients. The residue catalog holds closed-form long-time
predictors for the two-velocity scheme under a Dirac boundary source.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
import sympy as sp

from .gks import (
    AnalysisError,
    Z,
    _adj,
    _field_data,
    _kl,
    _model,
    _phi_from_adj,
    _stable_root_outside,
    jordan_chain_degenerate,
    shared_eigenvalues,
)
from .numeric import Field
from .scheme import BoundarySource, BoundarySpec, SchemeSpec, to_fraction
from .simulate import SimConfig, Trajectory, run


class ResonanceError(ArithmeticError):
    """The boundary scalar vanishes at the requested point."""


@dataclass
class ResolventSolution:
    """Transformed moments m^_j(z) = C_s phi_s kappa_s^j + (Dirac terms at j = 0, 1).

    In the regular case the Dirac coefficients vanish. In the Jordan-chain
    case (no stable root) ``c_zero = (C_0, C~_0)`` multiply ``phi0`` at j = 0
    and ``phi0~ delta_0j + phi0 delta_1j``.
    """

    z: object
    g_hat: object
    kappa: object | None
    phi: np.ndarray | None
    kl: object | None
    c_s: object
    c_zero: tuple
    phi0: np.ndarray | None = None
    phi0_tilde: np.ndarray | None = None
    field: Field = field(default_factory=Field)

    @property
    def degenerate(self) -> bool:
        return self.kappa is None

    def moments(self, j: int) -> np.ndarray:
        if j < 0:
            raise ValueError("grid index must be nonnegative")
        if not self.degenerate:
            return self.c_s * self.phi * self.kappa**j
        c0, ct = self.c_zero
        if j == 0:
            return c0 * self.phi0 + ct * self.phi0_tilde
        if j == 1:
            return ct * self.phi0
        return self.phi0 * 0

    def window(self, js: Iterable[int]) -> np.ndarray:
        return np.array([self.moments(j) for j in js])


def _poly_at(coeffs: Sequence[Fraction], F: Field, z):
    acc = z * 0
    for c in reversed(coeffs):
        acc = acc * z + F.num(c)
    return acc


@dataclass(frozen=True)
class _Degenerate:
    phi0: tuple
    tilde: tuple  # per component, increasing coefficients in z
    b0: tuple
    b1: tuple


@lru_cache(maxsize=256)
def _degenerate_data(spec: SchemeSpec, bc: BoundarySpec) -> _Degenerate:
    chain = jordan_chain_degenerate(spec)
    model = _model(spec, bc)
    q = spec.q
    zero = [[Fraction(0)] * q for _ in range(q)]
    tilde = tuple(tuple(to_fraction(c) for c in sp.Poly(e, Z).all_coeffs()[::-1]) for e in chain.phi0_tilde)
    return _Degenerate(tuple(to_fraction(x) for x in chain.phi0), tilde,
                       tuple(map(tuple, model.B.get(0, zero))), tuple(map(tuple, model.B.get(1, zero))))


def resolvent_solve(spec: SchemeSpec, bc: BoundarySpec, z, g_hat=None, bits: int = 53) -> ResolventSolution:
    """Solve the transformed half-line problem at ``|z| > 1``.

    ``g_hat`` defaults to the transform of ``bc.source`` at ``z``.
    """
    F = Field(bits)
    model = _model(spec, bc)
    with F.active():
        zf = F.num(z)
        if abs(zf) <= 1:
            raise ValueError("the resolvent is assembled for |z| > 1 only")
        g = F.num(bc.source.z_transform(zf) if g_hat is None else g_hat)
        tol = 2.0 ** (-F.bits + 12)
        if model.cs.r_bar == 0:
            return _solve_degenerate(spec, bc, F, zf, g, tol)
        kappa = _stable_root_outside(model, F, zf)
        phi = _phi_from_adj(_adj(model, F, zf, kappa))
        kl = _kl(model, F, zf, kappa, phi)
        scale = max(1.0, float(abs(phi).max()) if not F.mp else max(float(abs(x)) for x in phi))
        if abs(kl) <= tol * scale * (1 + float(abs(1 / kappa))):
            raise ResonanceError(f"<KL> vanishes at z = {complex(zf)}")
        zero = F.zero()
        return ResolventSolution(zf, g, kappa, phi, kl, g / kl, tuple(zero for _ in range(spec.q - 1)), field=F)


def _solve_degenerate(spec, bc, F: Field, zf, g, tol) -> ResolventSolution:
    data = _degenerate_data(spec, bc)
    phi0 = F.vector(data.phi0)
    tilde = np.array([_poly_at(e, F, zf) for e in data.tilde], dtype=object if F.mp else complex)
    B0, B1 = F.matrix(data.b0), F.matrix(data.b1)
    eye = F.eye(2)
    col1 = (zf * eye - B0).dot(phi0)
    col2 = (zf * eye - B0).dot(tilde) - B1.dot(phi0)
    rhs = F.vector([to_fraction(spec.M[i, spec.pi]) for i in range(2)]) * g
    delta = col1[0] * col2[1] - col1[1] * col2[0]
    if abs(delta) <= tol * (1 + abs(zf)) ** 2:
        raise ResonanceError(f"Jordan-chain determinant vanishes at z = {complex(zf)}")
    c0 = (rhs[0] * col2[1] - rhs[1] * col2[0]) / delta
    ct = (col1[0] * rhs[1] - col1[1] * rhs[0]) / delta
    return ResolventSolution(zf, g, None, None, None, F.zero(), (c0, ct), phi0, tilde, field=F)


def resolvent_residual(spec: SchemeSpec, bc: BoundarySpec, sol: ResolventSolution, depth: int = 6) -> float:
    """Largest residual of the transformed bulk and boundary equations on j < depth."""
    F = sol.field
    model = _model(spec, bc)
    data = _field_data(model, F.bits)
    with F.active():
        z = sol.z
        m = {j: sol.moments(j) for j in range(depth + 2)}
        worst = 0.0
        scale = max(1.0, max(float(abs(x)) for v in m.values() for x in v))
        for j in range(1, depth):
            acc = z * m[j]
            for ell, E in data["E"].items():
                acc = acc - E.dot(m[j + ell])
            worst = max(worst, max(float(abs(x)) for x in acc))
        acc = z * m[0] - data["me_pi"] * sol.g_hat
        for ell, B in data["B"].items():
            acc = acc - B.dot(m[ell])
        worst = max(worst, max(float(abs(x)) for x in acc))
    return worst / scale


# ------------------------------------------------------------ contour


def contour_bits(radius: float, n_max: int, extra: int = 64) -> int:
    return int(extra + math.ceil(max(n_max, 0) * math.log2(max(radius, 1.0))))


def _unit_roots(F: Field, points: int) -> list:
    if not F.mp:
        return list(np.exp(2j * math.pi * np.arange(points) / points))
    two_pi = 2 * F.pi()
    return [F.exp(F.num(1j) * (two_pi * k / points)) for k in range(points)]


def _fft(V: np.ndarray, roots: np.ndarray) -> np.ndarray:
    """X[n] = sum_k V[k] roots[k]**n along axis 0; radix 2, works on object arrays."""
    n = V.shape[0]
    if n == 1:
        return V.copy()
    even = _fft(V[0::2], roots[0::2])
    odd = _fft(V[1::2], roots[0::2])
    tw = roots[: n // 2, None] * odd
    return np.concatenate([even + tw, even - tw])


def inverse_z_transform(evaluator: Callable, radius: float, steps: int | Sequence[int],
                        points: int = 2048, bits: int | None = None, real: bool = True,
                        imag_tol: float = 1e-8) -> np.ndarray:
    """u^n = (1/2pi) int u^(R e^{it}) R^n e^{int} dt by the trapezoidal rule.

    ``evaluator(z)`` returns an array of transformed values (any shape). The
    result has shape ``(len(steps),) + shape``; it is real when ``real`` and
    the imaginary residue then has to stay below ``imag_tol``.
    """
    if points < 256 or points & (points - 1):
        raise ValueError("quadrature points must be a power of two >= 256")
    if radius <= 1:
        raise ValueError("contour radius must exceed 1")
    ns = list(range(steps + 1)) if isinstance(steps, int) else [int(n) for n in steps]
    n_max = max(ns)
    if n_max >= points:
        raise ValueError("time index must stay below the number of quadrature points")
    bits = bits or contour_bits(radius, n_max)
    F = Field(bits)
    with F.active():
        R = F.num(Fraction(radius).limit_denominator(10**12))
        roots = _unit_roots(F, points)
        vals = [np.asarray(evaluator(R * w), dtype=object if F.mp else complex) for w in roots]
        shape = vals[0].shape
        V = np.array([v.ravel() for v in vals], dtype=object if F.mp else complex)
        X = _fft(V, np.array(roots, dtype=V.dtype))
        res = np.empty((len(ns), V.shape[1]), dtype=complex)
        for i, n in enumerate(ns):
            scale = R**n / points
            res[i] = [complex(x * scale) for x in X[n]]
        res = res.reshape((len(ns),) + shape)
    if real:
        scale = max(1.0, float(np.max(np.abs(res.real), initial=0.0)))
        worst = float(np.max(np.abs(res.imag), initial=0.0))
        if worst > imag_tol * scale:
            raise AnalysisError(f"imaginary residue {worst:.2e} exceeds tolerance: contour too tight?")
        return res.real
    return res


def contour_radius(spec: SchemeSpec, bc: BoundarySpec) -> float:
    """max(1.5, 1.1 * largest |z| among the shared eigenvalue couples)."""
    try:
        couples = shared_eigenvalues(spec, bc).couples
    except AnalysisError:
        couples = ()
    top = max((abs(complex(c.z)) for c in couples), default=0.0)
    return max(1.5, 1.1 * top)


def resolvent_evaluator(spec: SchemeSpec, bc: BoundarySpec, js: Sequence[int], bits: int) -> Callable:
    """z -> array (len(js), q) of transformed moments, in the given precision."""
    js = list(js)

    def evaluate(z):
        sol = resolvent_solve(spec, bc, z, bits=bits)
        return sol.window(js)

    return evaluate


def reconstruct(spec: SchemeSpec, bc: BoundarySpec, steps: int, js: Sequence[int],
                radius: float | None = None, points: int = 2048) -> np.ndarray:
    """Moments m_j^n for n = 0..steps and j in ``js`` by contour integration.

    Returns an array of shape ``(steps + 1, len(js), q)``. Zero initial data.
    """
    radius = radius or contour_radius(spec, bc)
    bits = contour_bits(radius, steps)
    return inverse_z_transform(resolvent_evaluator(spec, bc, js, bits), radius, steps, points, bits)


@dataclass(frozen=True)
class OracleComparison:
    max_rel_l2: float
    per_component: tuple[float, ...]
    radius: float
    points: int


def compare_reconstruction(spec: SchemeSpec, bc: BoundarySpec, steps: int = 100, depth: int = 30,
                           points: int = 2048, radius: float | None = None) -> OracleComparison:
    """Relative l2 gap between contour reconstruction and simulation over n <= steps, j <= depth."""
    js = list(range(depth + 1))
    radius = radius or contour_radius(spec, bc)
    rec = reconstruct(spec, bc, steps, js, radius, points)
    n_pts = depth + 2 * steps + 8
    traj = run(spec, bc, SimConfig(points=n_pts, steps=steps))
    sim = traj.moments[:, : depth + 1, :]
    rels = []
    for k in range(spec.q):
        num = np.linalg.norm(rec[:, :, k] - sim[:, :, k])
        den = np.linalg.norm(sim[:, :, k])
        rels.append(float(num / den) if den > 0 else float(num))
    return OracleComparison(max(rels), tuple(rels), radius, points)


def parseval_gap(sequence: Sequence[complex], radius: float, points: int = 1024) -> float:
    """|sum R^-2n |u^n|^2 - mean over the contour of |u^|^2| for a finite sequence."""
    u = np.asarray(sequence, dtype=complex)
    n = np.arange(len(u))
    lhs = float(np.sum(radius ** (-2.0 * n) * np.abs(u) ** 2))
    theta = 2 * np.pi * np.arange(points) / points
    zs = radius * np.exp(1j * theta)
    uhat = np.array([np.sum(u * z ** (-n)) for z in zs])
    rhs = float(np.mean(np.abs(uhat) ** 2))
    return abs(lhs - rhs)


# ------------------------------------------------------------ residue catalog


class CatalogMiss(LookupError):
    pass


Predictor = Callable[[int, int], tuple]


@dataclass(frozen=True)
class ResidueEntry:
    scheme: str
    bc: str
    label: str
    applies: Callable[[Fraction, Fraction], bool]
    build: Callable[[Fraction, Fraction], Predictor]
    source: str = "dirac"


def _pi_factor(s2: Fraction, C: Fraction) -> Fraction:
    return (2 + (C - 1) * s2) / (2 - (C + 1) * s2)


def _bb_dissipative(s2, C):
    P = _pi_factor(s2, C)
    a = 2 * C * s2 / ((C + 1) * s2 - 2)
    b = 2 * C**2 * s2**2 / ((C + 1) * s2**2 - 2 * (C + 2) * s2 + 4)
    return lambda n, j: (float(a * P**j), float(b * P**j))


def _abb_dissipative(s2, C):
    P = _pi_factor(s2, C)
    a = -2 * C * s2 / ((C + 1) * s2 - 2)
    b = -2 * C**2 * s2**2 / ((C + 1) * s2**2 - 2 * (C + 2) * s2 + 4)
    return lambda n, j: (float(a * (-1) ** n * (-P) ** j), float(b * (-1) ** n * (-P) ** j))


def _bb_critical(s2, C):
    c = float(C)
    return lambda n, j: (2.0 * (-1) ** j, -2.0 * (2 * c * n - 2 * c + 2 * j + 1) * (-1) ** j)


def _abb_critical(s2, C):
    c = float(C)
    return lambda n, j: (-2.0 * (-1) ** n, 2.0 * (2 * c * n - 2 * c + 2 * j + 1) * (-1) ** n)


def _two_abb_critical(s2, C):
    c = float(C)
    return lambda n, j: (0.0, 2 * c * ((-1) ** n - (-1) ** j))


def _extrap1_outflow(s2, C):
    c = float(C)
    return lambda n, j: (0.0, 2 * c * (-1) ** n)


def _extrap2_outflow(s2, C):
    c = float(C)
    return lambda n, j: (c * (-1) ** n, -c * (2 * c * n - 2 * c + 2 * j - 1) * (-1) ** n)


def _extrap3_outflow(s2, C):
    c = float(C)

    def f(n, j):
        m1 = -0.5 * (2 * c * n - c + 2 * j - 2) * (-1) ** n * c
        m2 = 0.5 * (2 * c**2 * n**2 - 4 * c**2 * n + 4 * c * j * n - 4 * c * j + 2 * j**2
                    - 4 * c * n + 5 * c - 4 * j + 4) * (-1) ** n * c
        return (m1, m2)

    return f


def _extrap1_inflow(s2, C):
    val = float(2 * C / (C + 1))
    return lambda n, j: (val, None)


def _extrap2_inflow(s2, C):
    c, s = float(C), float(s2)
    den = (c + 1) * s
    return lambda n, j: (2 * (c * c * n * s - c * j * s - c * c + c * s - c - s + 2) / den, None)


def _extrap3_inflow(s2, C):
    c, s = float(C), float(s2)

    def f(n, j):
        poly = (c**3 * n**2 * s**2 + c**3 * n * s**2 - 2 * c**2 * j * n * s**2
                - 4 * c**3 * n * s + c * j**2 * s**2 + 3 * c**2 * n * s**2 - 4 * c**3 * s + 2 * c**2 * j * s
                - 2 * c**2 * n * s - 3 * c * j * s**2 - 3 * c * n * s**2 + 6 * c**3 - 5 * c**2 * s
                + 2 * c * j * s + 6 * c * n * s + 3 * c * s**2 + 2 * j * s**2
                + 4 * c**2 + c * s - 4 * j * s - 3 * s**2 - 6 * c + 8 * s - 4)
        return (poly / ((c + 1) * s**2), None)

    return f


def _zero(s2, C):
    return lambda n, j: (0.0, 0.0)


def _dissipative_outflow(s2, C):
    return 0 < s2 < 2 and C < 0


def _critical_outflow(s2, C):
    return s2 == 2 and C < 0


RESIDUE_CATALOG: tuple[ResidueEntry, ...] = (
    ResidueEntry("d1q2", "bounce-back", "boundary layer Pi^j", _dissipative_outflow, _bb_dissipative),
    ResidueEntry("d1q2", "bounce-back", "travelling linear growth", _critical_outflow, _bb_critical),
    ResidueEntry("d1q2", "anti-bounce-back", "alternating boundary layer", _dissipative_outflow, _abb_dissipative),
    ResidueEntry("d1q2", "anti-bounce-back", "alternating linear growth", _critical_outflow, _abb_critical),
    ResidueEntry("d1q2", "two-step-anti-bounce-back", "bounded m2 oscillation", _critical_outflow,
                 _two_abb_critical),
    ResidueEntry("d1q2", "extrapolation:1", "bounded m2 oscillation", _critical_outflow, _extrap1_outflow),
    ResidueEntry("d1q2", "extrapolation:2", "linear growth", _critical_outflow, _extrap2_outflow),
    ResidueEntry("d1q2", "extrapolation:3", "quadratic growth, drifting vertex", _critical_outflow, _extrap3_outflow),
    ResidueEntry("d1q2", "extrapolation:1", "constant plateau", lambda s2, C: C > 0, _extrap1_inflow),
    ResidueEntry("d1q2", "extrapolation:2", "linear ramp", lambda s2, C: C > 0, _extrap2_inflow),
    ResidueEntry("d1q2", "extrapolation:3", "quadratic ramp", lambda s2, C: C > 0, _extrap3_inflow),
    ResidueEntry("d1q2", "kinetic-dirichlet", "decay", lambda s2, C: 0 < s2 <= 2, _zero),
)


def _bc_key(bc_id: str) -> str:
    from .scheme import parse_bc_name

    name, sigma = parse_bc_name(bc_id)
    return f"{name}:{sigma}" if sigma is not None else name


def residue_catalog(scheme_id: str, bc_id: str, params: dict) -> tuple[Predictor, ResidueEntry]:
    """Closed-form long-time predictor m(n, j) -> tuple of components.

    Components the closed form does not give are ``None``.
    """
    key = _bc_key(bc_id)
    s2 = to_fraction(params.get("s2", 0))
    C = to_fraction(params.get("courant", params.get("C", 0)))
    for entry in RESIDUE_CATALOG:
        if entry.scheme == scheme_id and entry.bc == key and entry.applies(s2, C):
            return entry.build(s2, C), entry
    raise CatalogMiss(f"no closed form available for {scheme_id}/{bc_id} at s2={s2}, C={C}")


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[tuple[int, int, int, float, float, float], ...]  # (n, j, component, sim, pred, rel)
    max_rel: float
    median_rel: float
    max_abs: float
    flagged: bool


def compare_sim_vs_residue(traj: Trajectory, predictor: Predictor, times: Sequence[int],
                           js: Sequence[int], floor: float = 1e-12, flag_at: float = 0.1) -> ComparisonTable:
    """Per-(n, j, component) relative errors; absolute errors where the prediction is ~0."""
    rows = []
    rels, abss = [], []
    for n in times:
        snap = traj.snapshot(int(n))
        for j in js:
            pred = predictor(int(n), int(j))
            for k, p in enumerate(pred):
                if p is None:
                    continue
                s = float(snap[j, k])
                err = abs(s - p)
                rel = err / abs(p) if abs(p) > floor else err
                rows.append((int(n), int(j), k, s, float(p), rel))
                rels.append(rel)
                abss.append(err)
    if not rows:
        raise ValueError("empty comparison window")
    med = float(np.median(rels))
    return ComparisonTable(tuple(rows), float(np.max(rels)), med, float(np.max(abss)), med > flag_at)
