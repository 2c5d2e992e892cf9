"""Packets of the fourth-order three-velocity scheme at C = -1/4.

Anti-bounce-back shares the complex pair z*, whose packet travels at 19/41.
Exciting exactly that frequency from the boundary and tracking the front
recovers the speed.
"""

import math
from fractions import Fraction as F

from lbmgks.gks import group_velocity, strong_stability_verdict
from lbmgks.scheme import BoundarySource, boundary_condition, make_scheme
from lbmgks.simulate import SimConfig, resonant_source, run, wavefront_speed

c = -0.25
spec = make_scheme("d1q3-o4", courant=F(-1, 4))
z_star = complex((1 - 4 * c * c) / 3, 2 / 3 * math.sqrt(2 * (2 * c * c + 1) * (1 - c * c)))

for name in ("bb", "abb", "two-step-abb", "kd"):
    print(f"{name:14s}", strong_stability_verdict(spec, boundary_condition(name, spec)))

print(f"V_g(1) = {group_velocity(spec, 1):.6f}, closed form {-3 * c / (2 * c * c + 1):.6f}")
print(f"V_g(z*) = {group_velocity(spec, z_star):.6f}, 19/41 = {19 / 41:.6f}")

cfg = SimConfig(points=800, final_time=4.0)
for name, source, want in (("bb", BoundarySource("constant"), 2 / 3),
                           ("abb", resonant_source(z_star, cfg.n_steps), 19 / 41)):
    traj = run(spec, boundary_condition(name, spec, source=source), cfg)
    print(f"{name:4s} front {wavefront_speed(traj).speed:.4f} against {want:.4f}")
