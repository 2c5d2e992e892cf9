"""Scalar backends and small dense linear algebra.

Analysis code is written once against a :class:`Field`, which is either plain
binary64 complex arithmetic or MPFR-backed complex arithmetic through gmpy2.
Extended precision is what makes radial order fits and contour integrals with
large ``R**n`` factors trustworthy.
"""

from __future__ import annotations

import cmath
import contextlib
import math
from fractions import Fraction
from typing import Sequence

import gmpy2
import numpy as np


class Field:
    """Complex scalar arithmetic at a fixed binary precision."""

    def __init__(self, bits: int = 53):
        self.bits = int(bits)
        self.mp = self.bits > 53

    def __repr__(self):
        return f"Field(bits={self.bits})"

    @contextlib.contextmanager
    def active(self):
        if self.mp:
            with gmpy2.context(gmpy2.get_context(), precision=self.bits):
                yield self
        else:
            yield self

    @property
    def eps(self) -> float:
        return 2.0 ** (-self.bits)

    def num(self, x):
        if not self.mp:
            if isinstance(x, Fraction):
                return complex(x.numerator / x.denominator)
            return complex(x)
        if isinstance(x, Fraction):
            return gmpy2.mpc(gmpy2.mpq(x.numerator, x.denominator))
        if isinstance(x, (complex, np.complexfloating)):
            return gmpy2.mpc(complex(x))
        if type(x).__name__ in ("Rational", "Integer", "One", "Zero", "NegativeOne", "Half"):
            return gmpy2.mpc(gmpy2.mpq(int(x.p), int(x.q)))
        return gmpy2.mpc(x)

    def zero(self):
        return self.num(0)

    def one(self):
        return self.num(1)

    def sqrt(self, x):
        return gmpy2.sqrt(x) if self.mp else cmath.sqrt(x)

    def exp(self, x):
        return gmpy2.exp(x) if self.mp else cmath.exp(x)

    def log(self, x):
        return gmpy2.log(x) if self.mp else cmath.log(x)

    def abs(self, x) -> float:
        return float(abs(x))

    def pi(self):
        return gmpy2.const_pi() if self.mp else math.pi

    def matrix(self, rows) -> np.ndarray:
        """Object array of field scalars from any nested sequence / sympy Matrix."""
        if hasattr(rows, "tolist"):
            rows = rows.tolist()
        dtype = object if self.mp else complex
        return np.array([[self.num(x) for x in row] for row in rows], dtype=dtype)

    def vector(self, values) -> np.ndarray:
        dtype = object if self.mp else complex
        return np.array([self.num(x) for x in values], dtype=dtype)

    def eye(self, n: int) -> np.ndarray:
        out = np.empty((n, n), dtype=object if self.mp else complex)
        for i in range(n):
            for j in range(n):
                out[i, j] = self.num(1 if i == j else 0)
        return out


DOUBLE = Field(53)


def to_complex(x) -> complex:
    return complex(x)


def to_complex_array(a) -> np.ndarray:
    return np.array([complex(v) for v in np.ravel(a)], dtype=complex).reshape(np.shape(a))


def det(a: np.ndarray):
    """Determinant by Gaussian elimination with partial pivoting (any field)."""
    a = np.array(a, dtype=a.dtype, copy=True)
    n = a.shape[0]
    if n == 0:
        return 1
    sign = 1
    acc = None
    for col in range(n):
        piv = max(range(col, n), key=lambda i: abs(a[i, col]))
        if abs(a[piv, col]) == 0:
            return a[0, 0] * 0
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            sign = -sign
        acc = a[col, col] if acc is None else acc * a[col, col]
        for i in range(col + 1, n):
            f = a[i, col] / a[col, col]
            if f != 0:
                a[i, col:] = a[i, col:] - f * a[col, col:]
    return acc if sign > 0 else -acc


def adjugate(a: np.ndarray) -> np.ndarray:
    """Classical adjoint via cofactors; exact rank-one structure is preserved."""
    n = a.shape[0]
    out = np.empty_like(a)
    if n == 1:
        out[0, 0] = a[0, 0] * 0 + 1
        return out
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(a, j, axis=0), i, axis=1)
            c = det(minor)
            out[i, j] = c if (i + j) % 2 == 0 else -c
    return out


def polyval(coeffs: Sequence, x):
    """Horner evaluation with coefficients in increasing degree."""
    acc = x * 0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def polyder(coeffs: Sequence) -> list:
    return [k * c for k, c in enumerate(coeffs)][1:]


def poly_roots(coeffs: Sequence, field: Field = DOUBLE, polish: int = 60) -> list:
    """All roots of sum_k coeffs[k] x^k.

    Double-precision roots come from the companion matrix; in extended precision
    each one is refined by Newton steps, and a fallback to mpmath's
    Durand-Kerner handles clusters where Newton stalls.
    """
    coeffs = list(coeffs)
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    deg = len(coeffs) - 1
    if deg < 1:
        return []
    approx = np.roots([complex(c) for c in reversed(coeffs)])
    if not field.mp:
        return [complex(r) for r in approx]
    dcoeffs = polyder(coeffs)
    scale = max(abs(c) for c in coeffs)
    tol = gmpy2.mpfr(2) ** (-(field.bits - 8))
    out = []
    ok = True
    for r0 in approx:
        r = field.num(complex(r0))
        for _ in range(polish):
            d = polyval(dcoeffs, r)
            if d == 0:
                ok = False
                break
            step = polyval(coeffs, r) / d
            r = r - step
            if abs(step) <= tol * (1 + abs(r)):
                break
        res = abs(polyval(coeffs, r))
        if res > scale * (1 + abs(r)) ** deg * tol * 2**16:
            ok = False
        out.append(r)
    if ok and _distinct(out, tol):
        return out
    return _mp_polyroots(coeffs, field)


def _distinct(roots, tol) -> bool:
    for i in range(len(roots)):
        for j in range(i):
            if abs(roots[i] - roots[j]) <= tol * 2**20 * (1 + abs(roots[i])):
                return False
    return True


def _mp_polyroots(coeffs, field: Field) -> list:
    import mpmath

    dps = int(field.bits * 0.30103) + 5
    with mpmath.workdps(dps):
        cs = [mpmath.mpc(complex(c)) if not isinstance(c, gmpy2.mpc) else
              mpmath.mpc(mpmath.mpf(str(c.real)), mpmath.mpf(str(c.imag))) for c in reversed(coeffs)]
        roots = mpmath.polyroots(cs, maxsteps=400, extraprec=4 * field.bits, error=False)
    return [gmpy2.mpc(gmpy2.mpfr(mpmath.nstr(r.real, dps)), gmpy2.mpfr(mpmath.nstr(r.imag, dps)))
            for r in roots]


def null_vector(a: np.ndarray, field: Field = DOUBLE) -> np.ndarray:
    """Null vector of a corank-one matrix, read from its adjugate."""
    adj = adjugate(a)
    norms = [sum(abs(adj[i, k]) ** 2 for i in range(a.shape[0])) for k in range(a.shape[1])]
    k = int(np.argmax([float(x) for x in norms]))
    return adj[:, k]


def svd_null_vector(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Smallest right singular vector and the singular values (binary64)."""
    u, s, vh = np.linalg.svd(to_complex_array(a))
    return vh[-1].conj(), s
