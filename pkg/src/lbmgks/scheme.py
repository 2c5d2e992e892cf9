"""Scheme and boundary-condition data model.

A scheme is a one-dimensional linear MRT lattice Boltzmann method: ``q``
integer velocities, an invertible moment matrix ``M``, an equilibrium vector
``eps`` (first entry 1), relaxation rates ``s`` and a Courant number ``C``.
All scheme data is kept as exact rationals; numerical code converts at the
point of evaluation.

Matrices follow the moment formulation: one time step maps the moments of
the bulk as ``m_j <- sum_l E_l m_{j+l}`` with ``E_l`` the bulk pencil and the
first ``r`` boundary rows through the boundary pencils ``B_{j,l}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from math import comb
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import sympy as sp

Rat = Fraction


class ConfigError(ValueError):
    """Raised for malformed scheme or boundary descriptions."""


def to_fraction(value) -> Fraction:
    """Parse ints, Fractions, ``"p/q"`` strings and decimal strings exactly."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ConfigError(f"not a rational number: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, sp.Rational):
        return Fraction(int(value.p), int(value.q))
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"not a rational number: {value!r}") from exc
    raise ConfigError(f"not a rational number: {value!r}")


def fraction_str(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _sym(x: Fraction) -> sp.Rational:
    return sp.Rational(x.numerator, x.denominator)


@dataclass(frozen=True)
class SchemeSpec:
    """Full description of a 1D linear MRT lattice Boltzmann scheme."""

    velocities: tuple[int, ...]
    moment_matrix: tuple[tuple[Fraction, ...], ...]
    equilibrium: tuple[Fraction, ...]
    relaxation: tuple[Fraction, ...]
    courant: Fraction
    lattice_velocity: float = 1.0
    name: str = "custom"

    def __post_init__(self):
        q = len(self.velocities)
        if q < 2:
            raise ConfigError("at least two velocities are required")
        if len(set(self.velocities)) != q:
            raise ConfigError("velocities must be pairwise distinct")
        if len(self.moment_matrix) != q or any(len(row) != q for row in self.moment_matrix):
            raise ConfigError("moment matrix must be q x q")
        if len(self.equilibrium) != q or len(self.relaxation) != q:
            raise ConfigError("equilibrium and relaxation must have length q")
        if self.equilibrium[0] != 1:
            raise ConfigError("first equilibrium coefficient must equal 1")
        if self.courant == 0:
            raise ConfigError("Courant number must be nonzero")
        if not self.lattice_velocity > 0:
            raise ConfigError("lattice velocity must be positive")
        if self.M.det() == 0:
            raise ConfigError("moment matrix is singular")

    @property
    def q(self) -> int:
        return len(self.velocities)

    @property
    def r(self) -> int:
        """Stencil breadth to the left: the largest velocity."""
        return max(self.velocities)

    @property
    def p(self) -> int:
        return -min(self.velocities)

    @cached_property
    def M(self) -> sp.Matrix:
        return sp.Matrix([[_sym(x) for x in row] for row in self.moment_matrix])

    @cached_property
    def Minv(self) -> sp.Matrix:
        return self.M.inv()

    def inflow_indices(self) -> list[int]:
        """Zero-based indices of populations entering through the left edge."""
        return [i for i, c in enumerate(self.velocities) if c > 0]

    @property
    def pi(self) -> int:
        """Zero-based index of the population with velocity 1."""
        try:
            return self.velocities.index(1)
        except ValueError as exc:
            raise ConfigError("no population with velocity 1") from exc

    def with_params(self, **overrides) -> "SchemeSpec":
        """Copy with ``s2=..``, ``s3=..``, ``courant=..``, ``lam=..`` overrides.

        Catalog schemes are rebuilt so that Courant-dependent equilibria follow.
        """
        return with_params(self, **overrides)

    def relaxation_in_range(self) -> bool:
        return all(0 < s <= 2 for s in self.relaxation[1:])


@dataclass(frozen=True)
class Weight:
    """Ghost fill weight: population ``i`` at ghost ``-j`` from ``l`` at ``h``.

    Population indices are one-based, matching the usual lattice notation.
    """

    i: int
    l: int
    j: int
    h: int
    value: Fraction


SOURCE_KINDS = ("dirac", "constant", "alternating", "sampled", "zero")


@dataclass(frozen=True)
class BoundarySource:
    kind: str = "dirac"
    samples: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in SOURCE_KINDS:
            raise ConfigError(f"unknown source kind {self.kind!r}")

    def value(self, n: int) -> float:
        if self.kind == "dirac":
            return 1.0 if n == 0 else 0.0
        if self.kind == "constant":
            return 1.0
        if self.kind == "alternating":
            return -1.0 if n % 2 else 1.0
        if self.kind == "sampled":
            return float(self.samples[n]) if n < len(self.samples) else 0.0
        return 0.0

    def z_transform(self, z):
        """Transform sum_n g^n z^{-n}; generic in the scalar type of ``z``."""
        if self.kind == "dirac":
            return z * 0 + 1
        if self.kind == "constant":
            return z / (z - 1)
        if self.kind == "alternating":
            return z / (z + 1)
        if self.kind == "sampled":
            acc = z * 0
            for g in reversed(self.samples):
                acc = acc / z + g
            return acc
        return z * 0


@dataclass(frozen=True)
class BoundarySpec:
    weights: tuple[Weight, ...]
    name: str = "custom"
    source: BoundarySource = field(default_factory=BoundarySource)

    @property
    def stencil_width(self) -> int:
        return max((w.h for w in self.weights if w.value != 0), default=0)

    def validate(self, spec: SchemeSpec) -> None:
        for w in self.weights:
            if not 1 <= w.i <= spec.q or not 1 <= w.l <= spec.q:
                raise ConfigError(f"population index out of range in {w}")
            ci = spec.velocities[w.i - 1]
            if ci <= 0:
                raise ConfigError(f"weights may only fill inflow populations: {w}")
            if not 1 <= w.j <= ci:
                raise ConfigError(f"ghost index j must lie in [1, c_i]: {w}")
            if w.h < 0:
                raise ConfigError(f"inner point h must be nonnegative: {w}")

    def with_source(self, source: BoundarySource) -> "BoundarySpec":
        return BoundarySpec(self.weights, self.name, source)


# ---------------------------------------------------------------- matrices


@lru_cache(maxsize=512)
def build_relaxation_matrix(spec: SchemeSpec) -> sp.Matrix:
    """K = I + diag(s) (eps e1^T - I)."""
    q = spec.q
    eps = sp.Matrix([_sym(x) for x in spec.equilibrium])
    e1 = sp.zeros(1, q)
    e1[0, 0] = 1
    s = sp.diag(*[_sym(x) for x in spec.relaxation])
    return sp.eye(q) + s * (eps * e1 - sp.eye(q))


@lru_cache(maxsize=512)
def bulk_pencil(spec: SchemeSpec) -> dict[int, sp.Matrix]:
    """Exact E_l, keyed by the power l = -c_i of the shift."""
    K = build_relaxation_matrix(spec)
    out: dict[int, sp.Matrix] = {}
    for i, c in enumerate(spec.velocities):
        proj = spec.M[:, i] * spec.Minv[i, :] * K
        out[-c] = out.get(-c, sp.zeros(spec.q)) + proj
    return dict(sorted(out.items()))


def _as_complex(mat: sp.Matrix) -> np.ndarray:
    return np.array([[complex(x) for x in mat.row(i)] for i in range(mat.rows)], dtype=complex)


@lru_cache(maxsize=512)
def bulk_pencil_numeric(spec: SchemeSpec) -> dict[int, np.ndarray]:
    return {ell: _as_complex(E) for ell, E in bulk_pencil(spec).items()}


def amplification_matrix(spec: SchemeSpec, kappa: complex) -> np.ndarray:
    """Fourier symbol E(kappa) = M diag(kappa^{-c_i}) M^{-1} K."""
    if kappa == 0:
        raise ValueError("amplification matrix is singular at kappa = 0")
    out = np.zeros((spec.q, spec.q), dtype=complex)
    for ell, E in bulk_pencil_numeric(spec).items():
        out += E * complex(kappa) ** ell
    return out


@lru_cache(maxsize=2048)
def build_boundary_matrices(spec: SchemeSpec, bc: BoundarySpec, j: int = 0) -> dict[int, sp.Matrix]:
    """Exact boundary pencil {B_{j,l}} for the boundary row ``j``.

    Populations with c_i <= j are transported from the interior exactly as in
    the bulk; the others read the ghost fill weights.
    """
    if not 0 <= j < spec.r:
        raise ValueError(f"boundary row j={j} outside [0, {spec.r - 1}]")
    bc.validate(spec)
    K = build_relaxation_matrix(spec)
    MinvK = spec.Minv * K
    q = spec.q
    out: dict[int, sp.Matrix] = {}

    def add(power: int, mat: sp.Matrix):
        out[power] = out.get(power, sp.zeros(q)) + mat

    for i, c in enumerate(spec.velocities):
        if c <= j:
            add(-c, spec.M[:, i] * MinvK[i, :])
    for w in bc.weights:
        ci = spec.velocities[w.i - 1]
        if ci > j and w.j == ci - j and w.value != 0:
            add(w.h - j, _sym(w.value) * spec.M[:, w.i - 1] * MinvK[w.l - 1, :])
    for power in range(-j, max(bc.stencil_width - j, 0) + 1):
        out.setdefault(power, sp.zeros(q))
    return dict(sorted(out.items()))


@lru_cache(maxsize=2048)
def boundary_pencil_numeric(spec: SchemeSpec, bc: BoundarySpec, j: int = 0) -> dict[int, np.ndarray]:
    return {ell: _as_complex(B) for ell, B in build_boundary_matrices(spec, bc, j).items()}


def check_consistency(spec: SchemeSpec) -> tuple[bool, Fraction]:
    """Exact test of e1^T M diag(c) M^{-1} eps = C; returns (ok, residual)."""
    eps = sp.Matrix([_sym(x) for x in spec.equilibrium])
    val = (spec.M[0, :] * sp.diag(*spec.velocities) * spec.Minv * eps)[0, 0]
    residual = to_fraction(val) - spec.courant
    return residual == 0, residual


def moment_source(spec: SchemeSpec, bc: BoundarySpec, n: int, j: int = 0) -> np.ndarray:
    """Moment-space boundary source g_j^n = M sum_{c_i > j} e_i g_{i, j-c_i}^n."""
    if n < 0:
        raise ValueError("time index must be nonnegative")
    g = bc.source.value(n)
    out = np.zeros(spec.q)
    for i, c in enumerate(spec.velocities):
        if c > j:
            out += g * np.array([float(x) for x in spec.M[:, i]])
    return out


def source_direction(spec: SchemeSpec) -> sp.Matrix:
    """M e_pi, the moment direction hit by the boundary source."""
    return spec.M[:, spec.pi]


# ----------------------------------------------------------------- catalog

LW_M = ((1, 1, 1), (0, 1, -1), (0, 1, 1))


def _mk(rows) -> tuple[tuple[Fraction, ...], ...]:
    return tuple(tuple(Fraction(x) for x in row) for row in rows)


def d1q2(s2=Fraction(3, 2), courant=Fraction(-1, 2), lam: float = 1.0) -> SchemeSpec:
    C = to_fraction(courant)
    return SchemeSpec(
        velocities=(1, -1),
        moment_matrix=_mk(((1, 1), (1, -1))),
        equilibrium=(Fraction(1), C),
        relaxation=(Fraction(0), to_fraction(s2)),
        courant=C,
        lattice_velocity=lam,
        name="d1q2",
    )


def d1q3_lw(s2=Fraction(1), s3=Fraction(1), courant=Fraction(-1, 2), lam: float = 1.0) -> SchemeSpec:
    C = to_fraction(courant)
    return SchemeSpec(
        velocities=(0, 1, -1),
        moment_matrix=_mk(LW_M),
        equilibrium=(Fraction(1), C, C * C),
        relaxation=(Fraction(0), to_fraction(s2), to_fraction(s3)),
        courant=C,
        lattice_velocity=lam,
        name="d1q3-lw",
    )


def d1q3_o4(courant=Fraction(-1, 4), lam: float = 1.0) -> SchemeSpec:
    C = to_fraction(courant)
    return SchemeSpec(
        velocities=(0, 1, -1),
        moment_matrix=_mk(LW_M),
        equilibrium=(Fraction(1), C, (1 + 2 * C * C) / 3),
        relaxation=(Fraction(0), Fraction(2), Fraction(2)),
        courant=C,
        lattice_velocity=lam,
        name="d1q3-o4",
    )


SCHEMES = {
    "d1q2": (d1q2, "two velocities (1, -1), eps = (1, C); parameters s2, courant"),
    "d1q3-lw": (d1q3_lw, "Lax-Wendroff-like D1Q3, eps = (1, C, C^2); parameters s2, s3, courant"),
    "d1q3-o4": (d1q3_o4, "fourth-order D1Q3, eps3 = (1+2C^2)/3, s2 = s3 = 2; parameter courant"),
}


def make_scheme(name: str, **params) -> SchemeSpec:
    if name not in SCHEMES:
        raise ConfigError(f"unknown scheme {name!r}; available: {', '.join(SCHEMES)}")
    builder = SCHEMES[name][0]
    kwargs = {}
    for key, val in params.items():
        key = {"C": "courant", "lambda": "lam"}.get(key, key)
        kwargs[key] = val if key == "lam" else to_fraction(val)
    try:
        return builder(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {name}: {exc}") from exc


def with_params(spec: SchemeSpec, **overrides) -> SchemeSpec:
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if not overrides:
        return spec
    if spec.name in SCHEMES:
        current = {"courant": spec.courant, "lam": spec.lattice_velocity}
        if spec.name in ("d1q2", "d1q3-lw"):
            current["s2"] = spec.relaxation[1]
        if spec.name == "d1q3-lw":
            current["s3"] = spec.relaxation[2]
        for key, val in overrides.items():
            key = {"C": "courant", "lambda": "lam"}.get(key, key)
            if key not in current:
                raise ConfigError(f"parameter {key!r} not adjustable for {spec.name}")
            current[key] = val if key == "lam" else to_fraction(val)
        return make_scheme(spec.name, **current)
    relax = list(spec.relaxation)
    courant = spec.courant
    lam = spec.lattice_velocity
    for key, val in overrides.items():
        if key in ("courant", "C"):
            courant = to_fraction(val)
        elif key in ("lam", "lambda"):
            lam = float(val)
        elif key.startswith("s") and key[1:].isdigit() and 1 <= int(key[1:]) <= spec.q:
            relax[int(key[1:]) - 1] = to_fraction(val)
        else:
            raise ConfigError(f"unknown parameter {key!r}")
    return SchemeSpec(spec.velocities, spec.moment_matrix, spec.equilibrium, tuple(relax),
                      courant, lam, spec.name)


def _roles(spec: SchemeSpec) -> tuple[int, int, int | None]:
    """One-based indices of the velocity +1, -1 and 0 populations."""
    try:
        plus = spec.velocities.index(1) + 1
        minus = spec.velocities.index(-1) + 1
    except ValueError as exc:
        raise ConfigError("catalog boundary conditions need velocities +1 and -1") from exc
    rest = spec.velocities.index(0) + 1 if 0 in spec.velocities else None
    if spec.r != 1:
        raise ConfigError("catalog boundary conditions assume max velocity 1")
    return plus, minus, rest


def _extrap(sigma: int) -> list[tuple[int, Fraction]]:
    if not 1 <= sigma <= 4:
        raise ConfigError("extrapolation order must lie in [1, 4]")
    return [(h, Fraction((-1) ** h * comb(sigma, h + 1))) for h in range(sigma)]


D1Q2_BCS = ("bounce-back", "anti-bounce-back", "two-step-anti-bounce-back", "extrapolation",
            "kinetic-dirichlet", "extrapolated-equilibrium", "future", "invented")
D1Q3_BCS = ("bounce-back", "anti-bounce-back", "two-step-anti-bounce-back", "extrapolation",
            "kinetic-dirichlet")
SIGMA_BCS = ("extrapolation", "extrapolated-equilibrium")

BC_DESCRIPTIONS = {
    "bounce-back": "f_in(-1) = f_out(0)",
    "anti-bounce-back": "f_in(-1) = -f_out(0)",
    "two-step-anti-bounce-back": "f_in(-1) = -f_out(1) (D1Q3: -f_rest(0) - f_out(1))",
    "extrapolation": "f_in(-1) = sum_h (-1)^h binom(sigma, h+1) f_in(h), sigma in 1..4",
    "kinetic-dirichlet": "f_in(-1) = g",
    "extrapolated-equilibrium": "f_1(-1) = (1+C)/2 sum_h (-1)^h binom(sigma, h+1) m_1(h)",
    "future": "f_1(-1) = (1+C)/2 (f_1(0) + f_2(2))",
    "invented": "f_1(-1) = f_1(0) + 2 f_2(0)",
}


def parse_bc_name(name: str, sigma: int | None = None) -> tuple[str, int | None]:
    """Split ``extrapolation:3`` style identifiers."""
    base, _, tail = name.partition(":")
    base = base.strip().lower()
    aliases = {"bb": "bounce-back", "abb": "anti-bounce-back", "two-step-abb": "two-step-anti-bounce-back",
               "kd": "kinetic-dirichlet", "ee": "extrapolated-equilibrium"}
    base = aliases.get(base, base)
    if tail:
        try:
            sigma = int(tail)
        except ValueError as exc:
            raise ConfigError(f"bad order in {name!r}") from exc
    if base in SIGMA_BCS and sigma is None:
        sigma = 1
    if base not in SIGMA_BCS:
        sigma = None
    return base, sigma


def boundary_condition(name: str, spec: SchemeSpec, sigma: int | None = None,
                       source: BoundarySource | None = None) -> BoundarySpec:
    """Expand a named kinetic boundary condition into its weight table."""
    base, sigma = parse_bc_name(name, sigma)
    plus, minus, rest = _roles(spec)
    C = spec.courant
    half = (1 + C) / 2
    w: list[Weight] = []
    if base == "bounce-back":
        w.append(Weight(plus, minus, 1, 0, Fraction(1)))
    elif base == "anti-bounce-back":
        w.append(Weight(plus, minus, 1, 0, Fraction(-1)))
    elif base == "two-step-anti-bounce-back":
        if rest is not None:
            w.append(Weight(plus, rest, 1, 0, Fraction(-1)))
        w.append(Weight(plus, minus, 1, 1, Fraction(-1)))
    elif base == "extrapolation":
        w.extend(Weight(plus, plus, 1, h, v) for h, v in _extrap(sigma))
    elif base == "kinetic-dirichlet":
        pass
    elif base in ("extrapolated-equilibrium", "future", "invented"):
        if spec.q != 2:
            raise ConfigError(f"{base} is only defined for two-velocity schemes")
        if base == "extrapolated-equilibrium":
            for h, v in _extrap(sigma):
                w.append(Weight(plus, plus, 1, h, half * v))
                w.append(Weight(plus, minus, 1, h, half * v))
        elif base == "future":
            w.append(Weight(plus, plus, 1, 0, half))
            w.append(Weight(plus, minus, 1, 2, half))
        else:
            w.append(Weight(plus, plus, 1, 0, Fraction(1)))
            w.append(Weight(plus, minus, 1, 0, Fraction(2)))
    else:
        raise ConfigError(f"unknown boundary condition {name!r}; available: {', '.join(D1Q2_BCS)}")
    label = base if sigma is None else f"{base}:{sigma}"
    bc = BoundarySpec(tuple(w), label, source or BoundarySource())
    bc.validate(spec)
    return bc


def catalog_entries() -> dict[str, tuple[str, ...]]:
    return {"d1q2": D1Q2_BCS, "d1q3-lw": D1Q3_BCS, "d1q3-o4": D1Q3_BCS}


# ------------------------------------------------------------ config files


def scheme_to_dict(spec: SchemeSpec, bc: BoundarySpec | None = None) -> dict:
    out = {
        "name": spec.name,
        "q": spec.q,
        "velocities": list(spec.velocities),
        "moment_matrix": [[fraction_str(x) for x in row] for row in spec.moment_matrix],
        "equilibrium": [fraction_str(x) for x in spec.equilibrium],
        "relaxation": [fraction_str(x) for x in spec.relaxation],
        "lambda": spec.lattice_velocity,
        "courant": fraction_str(spec.courant),
    }
    if bc is not None:
        out["boundary"] = {
            "name": bc.name,
            "weights": [{"i": w.i, "l": w.l, "j": w.j, "h": w.h, "value": fraction_str(w.value)}
                        for w in bc.weights],
            "source": bc.source.kind,
        }
    return out


def scheme_from_dict(data: Mapping) -> tuple[SchemeSpec, BoundarySpec | None]:
    try:
        q = int(data["q"])
        vel = tuple(int(c) for c in data["velocities"])
        M = tuple(tuple(to_fraction(x) for x in row) for row in data["moment_matrix"])
        eps = tuple(to_fraction(x) for x in data["equilibrium"])
        s = tuple(to_fraction(x) for x in data["relaxation"])
        C = to_fraction(data["courant"])
        lam = float(data.get("lambda", 1.0))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"missing or malformed field: {exc}") from exc
    if len(vel) != q:
        raise ConfigError("len(velocities) != q")
    spec = SchemeSpec(vel, M, eps, s, C, lam, str(data.get("name", "custom")))
    bc = None
    if "boundary" in data and data["boundary"] is not None:
        b = data["boundary"]
        try:
            weights = tuple(Weight(int(w["i"]), int(w["l"]), int(w["j"]), int(w["h"]), to_fraction(w["value"]))
                            for w in b.get("weights", []))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed boundary weight: {exc}") from exc
        bc = BoundarySpec(weights, str(b.get("name", "custom")), BoundarySource(b.get("source", "dirac")))
        bc.validate(spec)
    return spec, bc


def load_config(path: str | Path) -> tuple[SchemeSpec, BoundarySpec | None]:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return scheme_from_dict(data)


def fractions_matrix(mat: sp.Matrix) -> list[list[Fraction]]:
    return [[to_fraction(x) for x in mat.row(i)] for i in range(mat.rows)]


def rational_vector(values: Iterable) -> tuple[Fraction, ...]:
    return tuple(to_fraction(v) for v in values)


def pencil_sum(pencil: Mapping[int, sp.Matrix]) -> sp.Matrix:
    it = iter(pencil.values())
    acc = next(it)
    for mat in it:
        acc = acc + mat
    return acc


def numeric_matrix(mat: sp.Matrix | Sequence[Sequence]) -> np.ndarray:
    if isinstance(mat, sp.MatrixBase):
        return _as_complex(mat)
    return np.array(mat, dtype=complex)
