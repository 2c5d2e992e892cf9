"""Truncated power series with exact rational coefficients.

Used as a tolerance-free second route for zero/pole orders at rational
critical points: the stable root, the adjugate columns and the boundary
scalar are all expanded in ``t = z - z*``.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import permutations
from typing import Sequence


class Series:
    __slots__ = ("c", "n")

    def __init__(self, coeffs: Sequence, n: int):
        c = [Fraction(x) for x in coeffs[:n]]
        c += [Fraction(0)] * (n - len(c))
        self.c = c
        self.n = n

    @classmethod
    def const(cls, x, n: int) -> "Series":
        return cls([x], n)

    @classmethod
    def var(cls, x0, n: int) -> "Series":
        return cls([x0, 1], n)

    def _coerce(self, other) -> "Series":
        return other if isinstance(other, Series) else Series.const(other, self.n)

    def __add__(self, other):
        o = self._coerce(other)
        return Series([a + b for a, b in zip(self.c, o.c)], self.n)

    __radd__ = __add__

    def __neg__(self):
        return Series([-a for a in self.c], self.n)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Series):
            o = Fraction(other)
            return Series([a * o for a in self.c], self.n)
        out = [Fraction(0)] * self.n
        for i, a in enumerate(self.c):
            if a == 0:
                continue
            for j in range(self.n - i):
                out[i + j] += a * other.c[j]
        return Series(out, self.n)

    __rmul__ = __mul__

    def inverse(self) -> "Series":
        if self.c[0] == 0:
            raise ZeroDivisionError("series with zero constant term")
        out = [Fraction(0)] * self.n
        out[0] = 1 / self.c[0]
        for k in range(1, self.n):
            acc = sum((self.c[i] * out[k - i] for i in range(1, k + 1)), Fraction(0))
            out[k] = -acc * out[0]
        return Series(out, self.n)

    def __truediv__(self, other):
        if not isinstance(other, Series):
            return self * (1 / Fraction(other))
        return self * other.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = Series.const(1, self.n)
        for _ in range(k):
            out = out * self
        return out

    def valuation(self) -> int | None:
        """Index of the first nonzero coefficient, None if zero to this order."""
        for k, a in enumerate(self.c):
            if a != 0:
                return k
        return None

    def leading(self) -> Fraction:
        v = self.valuation()
        return Fraction(0) if v is None else self.c[v]

    def __repr__(self):
        return f"Series({[str(a) for a in self.c]})"


def det(mat: list[list]) -> Series | Fraction:
    """Leibniz expansion; fine for the q <= 4 matrices handled here."""
    n = len(mat)
    total = None
    for perm in permutations(range(n)):
        sign = 1
        p = list(perm)
        for i in range(n):
            while p[i] != i:
                j = p[i]
                p[i], p[j] = p[j], p[i]
                sign = -sign
        term = mat[0][perm[0]]
        for i in range(1, n):
            term = term * mat[i][perm[i]]
        term = term if sign > 0 else -term
        total = term if total is None else total + term
    return total


def adjugate(mat: list[list]) -> list[list]:
    n = len(mat)
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:i] + row[i + 1:] for k, row in enumerate(mat) if k != j]
            c = det(minor) if minor else 1
            out[i][j] = c if (i + j) % 2 == 0 else -c
    return out
