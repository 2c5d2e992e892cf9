"""Time-domain simulation of a scheme on the discrete half-line.

Points ``j = 0, ..., N-1`` carry q distribution functions. Each step relaxes
the interior points, fills the left ghosts from the kinetic boundary weights
plus the boundary source, zeroes the right ghosts (homogeneous kinetic
Dirichlet on the populations entering from the right), then shifts every
population by its velocity.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .cauchy import characteristic_coeffs
from .scheme import BoundarySource, BoundarySpec, SchemeSpec, build_relaxation_matrix

log = logging.getLogger(__name__)

GROWTH_GUARD = 1e100


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SimConfig:
    """Run parameters; ``steps`` overrides ``final_time`` when given.

    With the acoustic scaling dt = dx / lambda and dx = 1/N, the number of
    steps is ``round(T * lambda / dx) = round(T * N)`` for unit lattice speed.
    """

    points: int = 100
    final_time: float = 1.0
    steps: int | None = None
    source: BoundarySource | None = None
    initial_moments: np.ndarray | None = None
    record_every: int = 1
    dx: float | None = None

    def __post_init__(self):
        if self.points < 4:
            raise ValueError("at least 4 grid points are required")
        if self.record_every < 1:
            raise ValueError("record_every must be positive")
        if self.n_steps < 1:
            raise ValueError("the run must contain at least one step")

    @property
    def space_step(self) -> float:
        return self.dx if self.dx is not None else 1.0 / self.points

    @property
    def n_steps(self) -> int:
        if self.steps is not None:
            return int(self.steps)
        return int(round(self.final_time / self.space_step))

    def time_step(self, lam: float) -> float:
        return self.space_step / lam


@dataclass
class Trajectory:
    """Recorded moment snapshots with per-step norms.

    ``moments[k]`` is the ``(N, q)`` field at time ``times[k]``. Norm arrays are
    indexed by time step ``0..steps`` and by moment component.
    """

    spec: SchemeSpec
    times: np.ndarray
    moments: np.ndarray
    linf: np.ndarray
    l2: np.ndarray
    dx: float
    dt: float
    overflow: bool = False
    steps_done: int = 0
    warnings: list[str] = field(default_factory=list)

    @property
    def distributions(self) -> np.ndarray:
        minv = np.array(spec_minv(self.spec))
        return np.einsum("ab,knb->kna", minv, self.moments)

    def snapshot(self, n: int) -> np.ndarray:
        idx = np.searchsorted(self.times, n)
        if idx >= len(self.times) or self.times[idx] != n:
            raise KeyError(f"time step {n} was not recorded")
        return self.moments[idx]

    def component(self, k: int) -> np.ndarray:
        """Moment ``k`` (zero-based) over recorded times, shape ``(times, N)``."""
        return self.moments[:, :, k]


def spec_minv(spec: SchemeSpec) -> np.ndarray:
    return np.array([[float(x) for x in spec.Minv.row(i)] for i in range(spec.q)])


def _spec_m(spec: SchemeSpec) -> np.ndarray:
    return np.array([[float(x) for x in spec.M.row(i)] for i in range(spec.q)])


@dataclass(frozen=True)
class _Kernel:
    """Precomputed floating-point data for the stepping loop."""

    vel: tuple[int, ...]
    relax: np.ndarray  # acts on distributions: M^{-1} K M
    fills: tuple[tuple[int, int, int, int, float], ...]  # (i, ghost j, l, h, weight), zero-based
    inflow: tuple[tuple[int, int], ...]  # (i, ghost j) receiving the source
    r: int
    p: int


def _kernel(spec: SchemeSpec, bc: BoundarySpec) -> _Kernel:
    bc.validate(spec)
    K = build_relaxation_matrix(spec)
    relax = spec.Minv * K * spec.M
    relax = np.array([[float(x) for x in relax.row(i)] for i in range(spec.q)])
    fills = tuple((w.i - 1, w.j, w.l - 1, w.h, float(w.value)) for w in bc.weights if w.value != 0)
    inflow = tuple((i, c) for i, c in enumerate(spec.velocities) if c > 0)
    return _Kernel(spec.velocities, relax, fills, inflow, max(spec.r, 0), max(spec.p, 0))


def step(f: np.ndarray, kernel: _Kernel, g: float) -> np.ndarray:
    """Advance distributions ``f`` of shape ``(q, N)`` by one time step."""
    q, n_pts = f.shape
    r, p = kernel.r, kernel.p
    post = np.zeros((q, r + n_pts + p))
    post[:, r:r + n_pts] = kernel.relax @ f
    for i, gj, l, h, w in kernel.fills:
        post[i, r - gj] += w * post[l, r + h]
    for i, c in kernel.inflow:
        post[i, r - c] += g
    out = np.empty_like(f)
    for i, c in enumerate(kernel.vel):
        out[i] = post[i, r - c:r - c + n_pts]
    return out


def run(spec: SchemeSpec, bc: BoundarySpec, cfg: SimConfig) -> Trajectory:
    """Simulate from the configured initial data; the source defaults to ``bc.source``."""
    kernel = _kernel(spec, bc)
    source = cfg.source or bc.source
    q, n_pts = spec.q, cfg.points
    M = _spec_m(spec)
    if cfg.initial_moments is None:
        f = np.zeros((q, n_pts))
    else:
        m0 = np.asarray(cfg.initial_moments, dtype=float)
        if m0.shape != (n_pts, q):
            raise ValueError(f"initial moments must have shape ({n_pts}, {q})")
        f = spec_minv(spec) @ m0.T
    steps = cfg.n_steps
    dx = cfg.space_step
    dt = cfg.time_step(spec.lattice_velocity)
    notes = []
    speed = max(abs(c) for c in spec.velocities)
    if 2 * speed * steps > n_pts:
        notes.append("signals from the left edge can reach the right edge and return within the run")

    linf = np.full((steps + 1, q), np.nan)
    l2 = np.full((steps + 1, q), np.nan)
    times, snaps = [], []

    def record(n, mom):
        linf[n] = np.max(np.abs(mom), axis=1)
        l2[n] = np.sqrt(dx * np.sum(mom**2, axis=1))
        if n % cfg.record_every == 0 or n == steps:
            times.append(n)
            snaps.append(mom.T.copy())

    record(0, M @ f)
    overflow = False
    done = 0
    for n in range(steps):
        f = step(f, kernel, source.value(n))
        mom = M @ f
        record(n + 1, mom)
        done = n + 1
        if not np.all(np.isfinite(mom)) or np.max(np.abs(mom)) > GROWTH_GUARD:
            overflow = True
            notes.append(f"growth guard tripped at step {n + 1}")
            if times[-1] != n + 1:
                times.append(n + 1)
                snaps.append(mom.T.copy())
            break
    for msg in notes:
        log.warning(msg)
    return Trajectory(spec, np.array(times), np.array(snaps), linf[:done + 1], l2[:done + 1],
                      dx, dt, overflow, done, notes)


def characteristic_recursion_check(traj: Trajectory, burn_in: int = 0) -> float:
    """Largest residual of the scalar recursion det(zI - E(kappa)) on m_1.

    Interior points only: every bulk update entering the recursion must stay
    clear of both edges. Requires consecutive snapshots.
    """
    cs = characteristic_coeffs(traj.spec)
    spec = traj.spec
    times = traj.times
    if len(times) < spec.q + 1:
        raise ValueError("need at least q + 1 snapshots")
    if np.any(np.diff(times) != 1):
        raise ValueError("recursion check needs every time step recorded")
    m1 = traj.moments[:, :, 0]
    deg = max(len(c) for c in cs.d.values()) - 1
    reach = deg * max(spec.r, spec.p, 1)
    lo = reach + spec.r + burn_in
    hi = m1.shape[1] - reach - spec.p - 1
    if hi < lo:
        raise ValueError("domain too small for the recursion stencil")
    js = np.arange(lo, hi + 1)
    worst = 0.0
    for t in range(0, len(times) - deg):
        acc = np.zeros(len(js))
        scale = 0.0
        for ell, coeffs in cs.d.items():
            for k, c in enumerate(coeffs):
                if c:
                    term = float(c) * m1[t + k, js + ell]
                    acc += term
                    scale = max(scale, float(np.max(np.abs(term), initial=0.0)))
        worst = max(worst, float(np.max(np.abs(acc), initial=0.0)) / max(scale, 1.0))
    return worst


@dataclass(frozen=True)
class RatioRow:
    alpha_dt: float
    output: float
    input: float
    ratio: float
    truncation: float


def _weighted_sums(traj: Trajectory, source: BoundarySource, alpha_dt: float, observed_only: bool,
                   n_inputs: int) -> tuple[float, float, float]:
    dt, dx = traj.dt, traj.dx
    n = np.arange(traj.steps_done + 1)
    w = np.exp(-2.0 * alpha_dt * n)
    mom = traj.moments
    if len(traj.times) != traj.steps_done + 1:
        raise ValueError("ratio probe needs every time step recorded")
    if observed_only:
        field_sq = np.sum(mom[:, :, 0] ** 2, axis=1)
    else:
        field_sq = np.sum(mom**2, axis=(1, 2))
    alpha = alpha_dt / dt
    out = alpha / (1 + alpha_dt) * np.sum(dt * dx * w * field_sq)
    g = np.array([source.value(k) for k in n])
    inp = n_inputs * np.sum(dt * w * g**2)
    return out, inp, float(w[-1])


def ss_ratio_probe(spec: SchemeSpec, bc: BoundarySpec, source: BoundarySource | str,
                   alpha_grid: Sequence[float], observed_only: bool = True,
                   points: int | None = None, tol: float = 1e-6) -> list[RatioRow]:
    """Output/input ratios of the strong-stability inequalities.

    ``alpha_grid`` holds values of alpha*dt. The run is long enough for the
    smallest one to decay below ``tol`` and the domain wide enough that
    nothing reaches the right edge.
    """
    if isinstance(source, str):
        source = BoundarySource(source)
    smallest = min(alpha_grid)
    steps = int(math.ceil(math.log(1 / tol) / (2 * smallest)))
    speed = max(abs(c) for c in spec.velocities)
    n_pts = points or speed * steps + 8
    traj = run(spec, bc.with_source(source), SimConfig(points=n_pts, steps=steps, source=source))
    if traj.overflow:
        raise SimulationError("growth guard tripped during the ratio probe")
    n_inputs = sum(c for c in spec.velocities if c > 0)
    rows = []
    for a in alpha_grid:
        out, inp, trunc = _weighted_sums(traj, source, a, observed_only, n_inputs)
        if trunc > tol:
            warnings.warn(f"exponential weight not decayed for alpha*dt={a}: {trunc:.2e}")
        rows.append(RatioRow(a, out, inp, out / inp if inp else 0.0, trunc))
    return rows


@dataclass(frozen=True)
class Front:
    speed: float
    times: np.ndarray
    positions: np.ndarray


def wavefront_speed(traj: Trajectory, component: int = 0, threshold: float = 1e-2,
                    window: tuple[float, float] = (0.1, 0.8)) -> Front:
    """Least-squares speed (in units of lambda) of the leading front.

    At each recorded time the front is the furthest point where the
    component exceeds ``threshold`` times its current maximum. Only times
    where the front lies within ``window`` (fractions of the domain) enter
    the fit, which keeps start-up and right-edge effects out.
    """
    data = np.abs(traj.moments[:, :, component])
    n_pts = data.shape[1]
    ts, xs = [], []
    for t, row in zip(traj.times, data):
        peak = row.max()
        if not np.isfinite(peak) or peak == 0:
            continue
        idx = np.nonzero(row > threshold * peak)[0]
        pos = idx[-1]
        if window[0] * n_pts <= pos <= window[1] * n_pts:
            ts.append(t)
            xs.append(pos)
    if len(ts) < 3:
        raise SimulationError("no propagating front found")
    ts, xs = np.asarray(ts, float), np.asarray(xs, float)
    slope = np.polyfit(ts, xs, 1)[0]
    if slope <= 0:
        raise SimulationError("front does not advance")
    lam = traj.spec.lattice_velocity
    return Front(float(slope * (traj.dx / traj.dt) / lam), ts, xs)


def resonant_source(z_star: complex, steps: int, tol: float = 1e-12) -> BoundarySource:
    """Boundary data Re(z*^n) that excites the mode at ``z_star`` (|z*| = 1)."""
    z = complex(z_star)
    if abs(z - 1) < tol:
        return BoundarySource("constant")
    if abs(z + 1) < tol:
        return BoundarySource("alternating")
    theta = math.atan2(z.imag, z.real)
    return BoundarySource("sampled", tuple(math.cos(n * theta) for n in range(steps + 1)))
