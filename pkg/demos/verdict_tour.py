"""Walk through the boundary conditions of the two-velocity scheme.

For each condition we print the verdict and the couples (z, kappa) that the
bulk and the boundary share outside the unit disc. Run with ``python3``.
"""

from fractions import Fraction as F

from lbmgks.gks import strong_stability_verdict
from lbmgks.scheme import boundary_condition, make_scheme

CONDITIONS = ["bb", "abb", "two-step-abb", "extrapolation:1", "extrapolation:2", "kd",
              "ee:1", "ee:3", "future", "invented"]


def tour(s2, courant):
    spec = make_scheme("d1q2", s2=s2, courant=courant)
    print(f"\ns2 = {s2}, C = {courant}")
    for name in CONDITIONS:
        verdict = strong_stability_verdict(spec, boundary_condition(name, spec))
        couples = ", ".join(f"({c.z:.3f}, {c.kappa:.3f})" for c in verdict.shared.relevant()) if verdict.shared else ""
        print(f"  {name:16s} {verdict.value.value:5s} {couples}")


if __name__ == "__main__":
    # outflow away from the critical rate: only bounce-back type conditions see z = +-1
    tour(F(3, 2), F(-1, 2))
    # at s2 = 2 the bulk itself carries the oscillating mode (z, kappa) = (-1, 1)
    tour(F(2), F(-1, 2))
    # inflow: extrapolation keeps the constant mode and is only mildly unstable
    tour(F(3, 2), F(1, 2))
