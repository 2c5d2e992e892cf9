"""A boundary condition with a shared eigenvalue outside the unit circle.

The 'invented' condition has the couple z = (23 + 3 sqrt 105)/26 with a
decaying kappa, so the solution grows like z^n and stays pinned to the
boundary. The inverse z-transform of the resolvent reproduces the simulation
even through the growth.
"""

import math
from fractions import Fraction as F

import numpy as np

from lbmgks.asymptotics import compare_reconstruction
from lbmgks.gks import strong_stability_verdict
from lbmgks.scheme import boundary_condition, make_scheme
from lbmgks.simulate import SimConfig, run

spec = make_scheme("d1q2", s2=F(3, 2), courant=F(-1, 2))
bc = boundary_condition("invented", spec)
verdict = strong_stability_verdict(spec, bc)
print("verdict:", verdict)

z_star = (23 + 3 * math.sqrt(105)) / 26
traj = run(spec, bc, SimConfig(points=200, steps=60))
norms = traj.linf[:, 0]
print(f"growth rate over steps 40..60: {(norms[60] / norms[40]) ** (1 / 20):.5f} (z* = {z_star:.5f})")
profile = np.abs(traj.snapshot(60)[:8, 0])
print("|m_1| near the boundary at n = 60:", np.array2string(profile / profile[0], precision=2))

cmp = compare_reconstruction(spec, bc, steps=40, depth=10)
print(f"contour radius {cmp.radius:.3f}, worst relative l2 gap {cmp.max_rel_l2:.1e}")
