"""Bounce-back at the critical relaxation rate s2 = 2.

The verdict is MU-E: the instability is not confined to the boundary but
travels into the domain at the group velocity of the kappa = -1 mode. We
check the simulated profile against the closed-form long-time solution and
measure the front speed.
"""

from fractions import Fraction as F

import numpy as np

from lbmgks.asymptotics import compare_sim_vs_residue, residue_catalog
from lbmgks.gks import group_velocity, strong_stability_verdict
from lbmgks.scheme import BoundarySource, boundary_condition, make_scheme
from lbmgks.simulate import SimConfig, run, wavefront_speed

C = F(-1, 2)
spec = make_scheme("d1q2", s2=F(2), courant=C)
bc = boundary_condition("bb", spec)
print("verdict:", strong_stability_verdict(spec, bc))

steps = 400
traj = run(spec, bc, SimConfig(points=3 * steps, steps=steps))
pred, entry = residue_catalog("d1q2", "bb", dict(s2=F(2), courant=C))
table = compare_sim_vs_residue(traj, pred, [steps], range(21), floor=1e-3)
print(f"closed form '{entry.label}': median relative gap {table.median_rel:.2e} on j <= 20")

m = traj.snapshot(steps)
print("first cells at n = 400, m_1:", np.round(m[:6, 0], 6))
print("                        m_2:", np.round(m[:6, 1], 3))

# a constant boundary datum feeds the z = 1 mode, whose packet moves at V_g(1)
src = boundary_condition("bb", spec, source=BoundarySource("constant"))
front = wavefront_speed(run(spec, src, SimConfig(points=800, final_time=4.0)))
print(f"front speed {front.speed:.4f}, group velocity {group_velocity(spec, 1):.4f}")
