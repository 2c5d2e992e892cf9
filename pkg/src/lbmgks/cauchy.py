"""Stability of the bulk scheme on the whole line.

Three notions are checked: von Neumann (spectral radius of the symbol at most
one), the necessary conditions for L2 stability of the lattice Boltzmann
iteration (circle eigenvalues semi-simple), and L2 stability of the scalar
multi-step finite difference scheme carried by det(zI - E(kappa)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np
import sympy as sp
from scipy.optimize import minimize_scalar

from . import series
from .scheme import SchemeSpec, bulk_pencil, to_fraction

Z, KAPPA = sp.symbols("z kappa")
_W = sp.Symbol("w")  # stands for 1/kappa

VN_TOL = 1e-10
MAX_REFINE = 16


@dataclass(frozen=True)
class CharSystem:
    """det(zI - E(kappa)) = sum_{l=-rBar}^{pBar} d_l(z) kappa^l.

    ``d[l]`` holds exact coefficients of d_l in increasing powers of z.
    """

    d: dict[int, tuple[Fraction, ...]]
    r_bar: int
    p_bar: int

    def d_expr(self, ell: int) -> sp.Expr:
        return sum(sp.Rational(c.numerator, c.denominator) * Z**k for k, c in enumerate(self.d.get(ell, ())))

    @property
    def degree(self) -> int:
        return self.r_bar + self.p_bar

    def kappa_coeffs(self, z, num=complex) -> list:
        """Coefficients in kappa of kappa^rBar * det(zI - E(kappa)), increasing."""
        out = []
        for ell in range(-self.r_bar, self.p_bar + 1):
            acc = z * 0
            for c in reversed(self.d.get(ell, ())):
                acc = acc * z + num(c)
            out.append(acc)
        return out

    def z_coeffs(self, kappa, num=complex) -> list:
        """Coefficients in z of det(zI - E(kappa)) for fixed kappa, increasing."""
        deg = max(len(c) for c in self.d.values())
        out = [kappa * 0 for _ in range(deg)]
        for ell, cs in self.d.items():
            kp = kappa**ell
            for k, c in enumerate(cs):
                out[k] = out[k] + num(c) * kp
        return out

    @cached_property
    def _poly(self) -> sp.Poly:
        expr = sum(self.d_expr(ell) * KAPPA ** (ell + self.r_bar) for ell in self.d)
        return sp.Poly(expr, KAPPA, Z, domain="QQ")

    def poly(self) -> sp.Poly:
        """kappa^rBar * det as a polynomial in (kappa, z) over QQ."""
        return self._poly


@lru_cache(maxsize=512)
def _laurent_det(spec: SchemeSpec) -> dict[int, tuple[Fraction, ...]]:
    pencil = bulk_pencil(spec)
    q = spec.q
    gens = (Z, KAPPA, _W)
    rows = []
    for i in range(q):
        row = []
        for j in range(q):
            expr = Z if i == j else sp.Integer(0)
            for ell, E in pencil.items():
                if E[i, j] != 0:
                    expr -= E[i, j] * (KAPPA**ell if ell >= 0 else _W ** (-ell))
            row.append(sp.Poly(expr, *gens, domain="QQ"))
        rows.append(row)
    poly = series.det(rows)
    acc: dict[int, dict[int, Fraction]] = {}
    for (ez, ek, ew), coeff in poly.terms():
        ell = ek - ew
        c = Fraction(int(coeff.p), int(coeff.q))
        bucket = acc.setdefault(ell, {})
        bucket[ez] = bucket.get(ez, Fraction(0)) + c
    out = {}
    for ell, bucket in acc.items():
        deg = max((k for k, v in bucket.items() if v != 0), default=-1)
        if deg >= 0:
            out[ell] = tuple(bucket.get(k, Fraction(0)) for k in range(deg + 1))
    return dict(sorted(out.items()))


@lru_cache(maxsize=512)
def characteristic_coeffs(spec: SchemeSpec) -> CharSystem:
    """Exact Laurent coefficients d_l(z); identically zero extremes are trimmed."""
    d = _laurent_det(spec)
    if not d:
        raise ValueError("characteristic polynomial vanishes identically")
    lo, hi = min(d), max(d)
    return CharSystem(d=d, r_bar=-lo, p_bar=hi)


def stencil_bound_check(spec: SchemeSpec) -> bool:
    cs = characteristic_coeffs(spec)
    pos = sum(c for c in spec.velocities if c > 0)
    neg = -sum(c for c in spec.velocities if c < 0)
    return cs.r_bar <= pos and cs.p_bar <= neg


# ------------------------------------------------------- polynomial tests


def _trim(c: list) -> list:
    c = list(c)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return c


def _conj(x):
    return x.conjugate() if hasattr(x, "conjugate") else x


def _reduce(c: list) -> tuple[list, object, object]:
    """One Schur-Cohn step: phi_1 = (phi*(0) phi - phi(0) phi*) / z."""
    n = len(c) - 1
    star = [_conj(x) for x in reversed(c)]
    a, b = star[0], c[0]
    new = [a * c[k] - b * star[k] for k in range(n + 1)]
    return _trim(new[1:]) if n >= 1 else [0], a, b


def is_schur_exact(c: Sequence) -> bool:
    """All roots strictly inside the unit disk (exact coefficients)."""
    c = _trim(list(c))
    while len(c) > 1:
        nxt, a, b = _reduce(c)
        if not abs(a) > abs(b):
            return False
        c = nxt
    return c[0] != 0


def is_simple_von_neumann_exact(c: Sequence) -> bool:
    """Roots in the closed disk, those on the circle simple (exact path)."""
    c = _trim(list(c))
    if len(c) == 1:
        if c[0] == 0:
            raise ValueError("zero polynomial")
        return True
    nxt, a, b = _reduce(c)
    if abs(a) > abs(b):
        return is_simple_von_neumann_exact(nxt)
    if all(x == 0 for x in nxt):
        der = [k * c[k] for k in range(1, len(c))]
        return is_schur_exact(der)
    return False


def simple_von_neumann_test(coeffs: Sequence, exact: bool | None = None) -> bool:
    """Root test for a simple von Neumann polynomial (coefficients increasing).

    Rational inputs also run the exact Schur-Cohn recursion; the two verdicts
    must agree, otherwise a ``RuntimeError`` is raised.
    """
    c = _trim(list(coeffs))
    if len(c) <= 1:
        raise ValueError("degenerate constant polynomial")
    roots = np.roots([complex(x) for x in reversed(c)])
    numeric = _roots_simple_vn(roots)
    if exact is None:
        exact = all(isinstance(x, (int, Fraction)) for x in c)
    if exact:
        symbolic = is_simple_von_neumann_exact([Fraction(x) for x in c])
        if symbolic != numeric:
            raise RuntimeError(f"root test and Schur-Cohn recursion disagree on {c}")
        return symbolic
    return numeric


def _roots_simple_vn(roots: np.ndarray) -> bool:
    mods = np.abs(roots)
    if np.any(mods > 1 + VN_TOL):
        return False
    circ = roots[mods >= 1 - 1e-8]
    for i in range(len(circ)):
        for j in range(i):
            if abs(circ[i] - circ[j]) <= 1e-7:
                return False
    return True


# -------------------------------------------------------- theta scans


def _companion_roots(coeff_rows: np.ndarray) -> np.ndarray:
    """Roots of many monic-normalizable polynomials (rows, increasing degree)."""
    lead = coeff_rows[:, -1:]
    mon = coeff_rows[:, :-1] / lead
    n = mon.shape[1]
    comp = np.zeros((coeff_rows.shape[0], n, n), dtype=complex)
    comp[:, 1:, :-1] = np.eye(n - 1)
    comp[:, :, -1] = -mon
    return np.linalg.eigvals(comp)


def _z_coeff_rows(spec: SchemeSpec, thetas: np.ndarray) -> np.ndarray:
    cs = characteristic_coeffs(spec)
    deg = max(len(c) for c in cs.d.values())
    rows = np.zeros((len(thetas), deg), dtype=complex)
    for ell, c in cs.d.items():
        ph = np.exp(1j * ell * thetas)
        for k, v in enumerate(c):
            rows[:, k] += float(v) * ph
    return rows


def spectral_radius(spec: SchemeSpec, thetas) -> np.ndarray:
    thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
    roots = _companion_roots(_z_coeff_rows(spec, thetas))
    return np.max(np.abs(roots), axis=1)


def theta_grid(n_theta: int) -> np.ndarray:
    return 2 * np.pi * np.arange(n_theta) / n_theta


def _refine_maxima(fun, thetas: np.ndarray, values: np.ndarray, floor: float) -> list[tuple[float, float]]:
    """Golden-section refinement of local maxima above ``floor`` (periodic grid)."""
    n = len(thetas)
    h = 2 * np.pi / n
    peaks = [k for k in range(n) if values[k] >= floor
             and values[k] >= values[k - 1] and values[k] >= values[(k + 1) % n]
             and max(values[k] - values[k - 1], values[k] - values[(k + 1) % n]) > 1e-13]
    peaks = sorted(peaks, key=lambda k: -values[k])[:MAX_REFINE]
    out = []
    for k in peaks:
        res = minimize_scalar(lambda t: -fun(t), bounds=(thetas[k] - h, thetas[k] + h),
                              method="bounded", options={"xatol": 1e-12})
        out.append((float(res.x), float(-res.fun)))
    return out


@dataclass
class ScanResult:
    stable: bool
    max_radius: float
    argmax: float
    thetas: np.ndarray
    radii: np.ndarray
    witnesses: list = field(default_factory=list)


def von_neumann_scan(spec: SchemeSpec, n_theta: int = 1024, refine: bool = True) -> ScanResult:
    if n_theta < 64:
        raise ValueError("n_theta must be at least 64")
    thetas = theta_grid(n_theta)
    rad = spectral_radius(spec, thetas)
    best = (float(rad.max()), float(thetas[int(rad.argmax())]))
    if refine:
        fun = lambda t: float(spectral_radius(spec, [t])[0])
        for t, v in _refine_maxima(fun, thetas, rad, 1 - 1e-3):
            if v > best[0]:
                best = (v, t)
    witnesses = [(float(t), float(r)) for t, r in zip(thetas, rad) if r > 1 + VN_TOL]
    if best[0] > 1 + VN_TOL and not witnesses:
        witnesses.append((best[1], best[0]))
    return ScanResult(best[0] <= 1 + VN_TOL, best[0], best[1], thetas, rad, witnesses)


@dataclass
class EigenReport:
    z: complex
    algebraic: int
    geometric: int
    semisimple: bool
    on_circle: bool
    ill_conditioned: bool


def semisimple_circle_check(spec: SchemeSpec, theta: float, cluster: float = 1e-6) -> list[EigenReport]:
    """Algebraic / geometric multiplicities of the eigenvalues of E(e^{i theta})."""
    from .scheme import amplification_matrix

    A = amplification_matrix(spec, np.exp(1j * theta))
    roots = np.linalg.eigvals(A)
    groups: list[list[complex]] = []
    for r in roots:
        for g in groups:
            if abs(g[0] - r) <= cluster:
                g.append(r)
                break
        else:
            groups.append([r])
    out = []
    q = spec.q
    norm = np.linalg.norm(A, 2) + 1
    for g in groups:
        zc = complex(np.mean(g))
        sv = np.linalg.svd(zc * np.eye(q) - A, compute_uv=False)
        small = sv < 1e-9 * norm
        geo = int(small.sum())
        geo = max(geo, 1)
        ill = False
        if 0 < geo < q:
            gap = sv[q - geo - 1] / max(sv[q - geo], 1e-300)
            ill = gap < 10
        out.append(EigenReport(zc, len(g), min(geo, len(g)), min(geo, len(g)) == len(g),
                               abs(abs(zc) - 1) < 1e-8, ill))
    return out


def _pair_gap(spec: SchemeSpec, t: float) -> float:
    roots = _companion_roots(_z_coeff_rows(spec, np.array([t])))[0]
    circ = roots[np.abs(roots) > 1 - 1e-4]
    if len(circ) < 2:
        return 1.0
    return float(min(abs(a - b) for i, a in enumerate(circ) for b in circ[:i]))


def _candidate_thetas(spec: SchemeSpec, thetas: np.ndarray) -> list[float]:
    """Grid points plus refined minimizers of the gap between circle roots."""
    roots = _companion_roots(_z_coeff_rows(spec, thetas))
    gaps = np.ones(len(thetas))
    for k, rr in enumerate(roots):
        circ = rr[np.abs(rr) > 1 - 1e-4]
        if len(circ) >= 2:
            gaps[k] = min(abs(a - b) for i, a in enumerate(circ) for b in circ[:i])
    out = []
    h = thetas[1] - thetas[0]
    n = len(thetas)
    dips = [k for k in range(n) if gaps[k] < 0.05 and gaps[k] <= gaps[k - 1] and gaps[k] <= gaps[(k + 1) % n]]
    for k in sorted(dips, key=lambda k: gaps[k])[:MAX_REFINE]:
        res = minimize_scalar(lambda t: _pair_gap(spec, t), bounds=(thetas[k] - h, thetas[k] + h),
                              method="bounded", options={"xatol": 1e-13})
        out.append(float(res.x))
    return out


def fd_stability_verdict(spec: SchemeSpec, n_theta: int = 1024) -> tuple[bool, list]:
    """Simple von Neumann test of det(zI - E(e^{i theta})) on a refined grid."""
    thetas = theta_grid(n_theta)
    extra = _candidate_thetas(spec, thetas)
    scan = von_neumann_scan(spec, n_theta)
    if not scan.stable:
        return False, scan.witnesses
    allt = np.concatenate([thetas, np.array(extra + [scan.argmax])])
    rows = _z_coeff_rows(spec, allt)
    roots = _companion_roots(rows)
    witnesses = []
    for t, rr in zip(allt, roots):
        if not _roots_simple_vn(rr):
            witnesses.append((float(t), rr.tolist()))
    # exact second opinion at kappa = +-1 where the symbol is rational
    cs = characteristic_coeffs(spec)
    for kap in (1, -1):
        coeffs = cs.z_coeffs(Fraction(kap), num=lambda c: c)
        if not simple_von_neumann_test(coeffs):
            if not any(abs(t - (0 if kap == 1 else math.pi)) < 1e-12 for t, _ in witnesses):
                witnesses.append((0.0 if kap == 1 else math.pi, "exact"))
    return not witnesses, witnesses


def lbm_necessary_conditions(spec: SchemeSpec, n_theta: int = 1024) -> tuple[bool, list]:
    """Von Neumann plus semi-simplicity of circle eigenvalues."""
    scan = von_neumann_scan(spec, n_theta)
    if not scan.stable:
        return False, scan.witnesses
    thetas = theta_grid(n_theta)
    cands = _candidate_thetas(spec, thetas) + [0.0, math.pi]
    witnesses = []
    for t in cands:
        for rep in semisimple_circle_check(spec, t):
            if rep.on_circle and not rep.semisimple:
                witnesses.append((t, rep.z))
    return not witnesses, witnesses


def lw_stability_boundary(s2) -> float:
    """Largest stable s3 for the Lax-Wendroff-like D1Q3 at a given s2.

    The denominator s^2 - 8s + 8 vanishes at s = 4 - 2 sqrt(2), where the
    quotient is 0/0 and the threshold tends to 1.
    """
    s = float(s2)
    if not 0 < s < 2:
        raise ValueError("s2 must lie in (0, 2)")
    den = s * s - 8 * s + 8
    a = 2 * s * (2 - s)
    if abs(den) < 1e-12:
        return 1.0
    # sqrt(den^2 + a^2) - a rewritten to avoid cancellation near the singular point
    return 1 + den / (math.sqrt(den * den + a * a) + a)


def bisect_boundary(stable, lo: float, hi: float, tol: float = 1e-4) -> float:
    """Locate the flip of a monotone predicate with ``stable(lo)`` true and ``stable(hi)`` false."""
    if not stable(lo) or stable(hi):
        raise ValueError("predicate must hold at lo and fail at hi")
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if stable(mid):
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def lw_scan_boundary(s2, courant=Fraction(-1, 2), tol: float = 1e-4, n_theta: int = 512) -> float:
    """s3 threshold of the Lax-Wendroff-like D1Q3 found numerically from ``fd_stability_verdict``."""
    from .scheme import make_scheme

    s2 = to_fraction(s2)

    def ok(s3: float) -> bool:
        spec = make_scheme("d1q3-lw", s2=s2, s3=Fraction(s3).limit_denominator(10**9), courant=courant)
        return fd_stability_verdict(spec, n_theta)[0]

    return bisect_boundary(ok, 1e-3, 2 - 1e-3, tol)


@dataclass
class StabilityVerdict:
    von_neumann: bool
    lbm_l2: bool
    fd_l2: bool
    witnesses: list = field(default_factory=list)
    lbm_basis: str = "necessary conditions"
    max_radius: float = float("nan")


def _catalog_lbm_override(spec: SchemeSpec) -> bool | None:
    """Known sufficient-and-necessary statements for the catalog schemes."""
    C = spec.courant
    if spec.name == "d1q2":
        s2 = spec.relaxation[1]
        return (0 < s2 < 2 and abs(C) <= 1) or (s2 == 2 and abs(C) < 1)
    if spec.name == "d1q3-lw":
        s2, s3 = spec.relaxation[1], spec.relaxation[2]
        if 0 < abs(C) < 1 and 0 < s2 < 2 and 0 < s3 < 2:
            return s3 <= lw_stability_boundary(s2) + 1e-12
        return None
    if spec.name == "d1q3-o4":
        return abs(C) < Fraction(1, 2)
    return None


def stability_verdict(spec: SchemeSpec, n_theta: int = 1024) -> StabilityVerdict:
    scan = von_neumann_scan(spec, n_theta)
    nec, w1 = lbm_necessary_conditions(spec, n_theta) if scan.stable else (False, scan.witnesses)
    fd, w2 = fd_stability_verdict(spec, n_theta) if scan.stable else (False, [])
    lbm, basis = nec, "necessary conditions"
    override = _catalog_lbm_override(spec)
    if override is not None:
        lbm, basis = bool(override) and nec, "catalog proposition"
    return StabilityVerdict(scan.stable, lbm, fd, list(scan.witnesses) + w1 + w2, basis, scan.max_radius)


def det_symbol(spec: SchemeSpec, kappa: complex) -> complex:
    from .scheme import amplification_matrix

    return complex(np.linalg.det(amplification_matrix(spec, kappa)))


def trace_from_pencil(spec: SchemeSpec, kappa: complex) -> complex:
    return sum(complex(E.trace()) * kappa**ell for ell, E in bulk_pencil(spec).items())


def relaxation_product(spec: SchemeSpec) -> Fraction:
    out = Fraction(1)
    for s in spec.relaxation[1:]:
        out *= 1 - to_fraction(s)
    return out
