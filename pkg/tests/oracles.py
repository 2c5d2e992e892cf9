"""Closed forms used as independent oracles by the tests."""

from fractions import Fraction

import sympy as sp

z, s2, s3, C = sp.symbols("z s2 s3 C")

D1Q2_COEFFS = {
    -1: -sp.Rational(1, 2) * (2 + (C - 1) * s2) * z,
    0: z**2 + 1 - s2,
    1: -sp.Rational(1, 2) * (2 - (C + 1) * s2) * z,
}

LW_COEFFS = {
    -1: -sp.Rational(1, 2) * ((C - 1) * s2 + (C**2 - 1) * s3 + 2) * z**2
    + sp.Rational(1, 2) * ((C - 1) * s2 - (C**2 - (C**2 - C) * s2 + 1) * s3 + 2) * z,
    0: (C**2 * s3 - 1) * z**2 + z**3 - (s2 - 1) * s3
    + ((C**2 - (C**2 - 1) * s2 - 1) * s3 - s2 + 1) * z + s2 - 1,
    1: sp.Rational(1, 2) * ((C + 1) * s2 - (C**2 - 1) * s3 - 2) * z**2
    - sp.Rational(1, 2) * ((C + 1) * s2 + (C**2 - (C**2 + C) * s2 + 1) * s3 - 2) * z,
}

O4_COEFFS = {
    -1: -sp.Rational(1, 3) * (2 * C**2 + 3 * C - 2) * z**2 + sp.Rational(1, 3) * (2 * C**2 - 3 * C - 2) * z,
    0: sp.Rational(1, 3) * (4 * C**2 - 1) * z**2 + z**3 - sp.Rational(1, 3) * (4 * C**2 - 1) * z - 1,
    1: -sp.Rational(1, 3) * (2 * C**2 - 3 * C - 2) * z**2 + sp.Rational(1, 3) * (2 * C**2 + 3 * C - 2) * z,
}


def coeff_tuple(expr, **values) -> tuple[Fraction, ...]:
    """Increasing z-coefficients of ``expr`` after substituting rational parameters."""
    subs = {sp.Symbol(k): sp.Rational(v.numerator, v.denominator) for k, v in values.items()}
    poly = sp.Poly(sp.expand(expr.subs(subs)), z)
    out = [Fraction(int(sp.fraction(c)[0]), int(sp.fraction(c)[1])) for c in reversed(poly.all_coeffs())]
    while len(out) > 1 and out[-1] == 0:
        out.pop()
    return tuple(out)


def pi_factor(s2, C):
    return (2 + (C - 1) * s2) / (2 - (C + 1) * s2)


def delta_kl_over_sigma(spec, bc, z, basis) -> complex:
    """Delta_KL / Sigma_bulk from the full q x q determinant with an arbitrary kernel basis."""
    import numpy as np

    from lbmgks.gks import roots_at, sigma_bulk, stable_eigenvector
    from lbmgks.scheme import boundary_pencil_numeric

    q = spec.q
    B = boundary_pencil_numeric(spec, bc)
    kappa = roots_at(spec, z).kappa_s
    phi = stable_eigenvector(spec, z, kappa)
    first = (z * np.eye(q) - sum(Bl * kappa**ell for ell, Bl in B.items())) @ phi
    L0 = z * np.eye(q) - B.get(0, np.zeros((q, q)))
    cols = [first] + [L0 @ np.array([complex(x) for x in v]) for v in basis]
    return complex(np.linalg.det(np.column_stack(cols)) / complex(sigma_bulk(spec, z, basis)))
