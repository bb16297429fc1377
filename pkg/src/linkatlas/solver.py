"""Graphical dyad solver: plan compilation, replay, and batch simulation.

The plan is a topology-level artifact: the ordered list of joints solvable
from two already-known neighbors, seeded by the fixed joints and the crank
tip.  Link lengths and circle-intersection branch signs are taken from
whichever initial pose is being simulated, so one plan serves every position
variant of the same topology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from linkatlas.mechanism import ARM_PIVOT, JointType, Mechanism

LOCK_EPS = 1e-9


class PlanError(ValueError):
    """Topology is not dyadically solvable or the initial pose is degenerate."""


@dataclass(frozen=True)
class PlanStep:
    target: int
    a: int
    b: int


@dataclass(frozen=True)
class SolutionPlan:
    n: int
    fixed: tuple[int, ...]
    steps: tuple[PlanStep, ...]
    # Geometry of the pose the plan was compiled at (None for topology-only
    # mechanisms whose positions were unset at compile time).
    r_a: np.ndarray | None
    r_b: np.ndarray | None
    branch: np.ndarray | None

    @property
    def coverage(self) -> frozenset[int]:
        return frozenset(self.fixed) | {1} | {s.target for s in self.steps}


@dataclass(frozen=True)
class Trajectory:
    positions: np.ndarray  # (n, T, 2)

    @property
    def T(self) -> int:
        return self.positions.shape[1]

    @property
    def n(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class Locking:
    step: int   # actuator step index t at which some dyad first has no solution
    joint: int  # target joint of the failing dyad


SimOutcome = Trajectory | Locking


def compile_plan(mech: Mechanism) -> SolutionPlan:
    """Walk the two-known-neighbors scheme once and record the solve order.

    Known joints start as all fixed joints plus the crank tip.  Any unknown
    joint with at least two known neighbors is appended (its first two known
    neighbors in ascending index order form the dyad).  A stall with unknown
    joints left means the topology is not dyadically solvable.
    """
    n = mech.n
    fixed = tuple(mech.fixed_joints())
    known = set(fixed) | {1}
    unknown = [k for k in range(n) if k not in known]
    steps: list[PlanStep] = []
    while unknown:
        progress = False
        for k in list(unknown):
            nbrs = [v for v in mech.neighbors(k) if v in known]
            if len(nbrs) >= 2:
                steps.append(PlanStep(k, nbrs[0], nbrs[1]))
                known.add(k)
                unknown.remove(k)
                progress = True
        if not progress:
            raise PlanError(f"not dyadically solvable: joints {sorted(unknown)} unreachable")
    r_a = r_b = branch = None
    if not np.isnan(mech.positions0).any():
        r_a, r_b, branch = plan_geometry(
            SolutionPlan(n, fixed, tuple(steps), None, None, None), mech.positions0
        )
        if np.any((r_a < LOCK_EPS) | (r_b < LOCK_EPS)):
            raise PlanError("degenerate branch: zero-length bar at initial pose")
    return SolutionPlan(n, fixed, tuple(steps), r_a, r_b, branch)


def plan_geometry(plan: SolutionPlan, positions0: np.ndarray):
    """Per-step bar lengths and branch signs for one initial pose.

    branch is the sign of (p_b - p_a) x (p_target - p_a) at the pose; an
    exactly collinear dyad gets +1.
    """
    pos = np.asarray(positions0, dtype=np.float64)
    tgt = np.array([s.target for s in plan.steps], dtype=np.intp)
    aa = np.array([s.a for s in plan.steps], dtype=np.intp)
    bb = np.array([s.b for s in plan.steps], dtype=np.intp)
    pa, pb, pt = pos[aa], pos[bb], pos[tgt]
    r_a = np.hypot(pt[:, 0] - pa[:, 0], pt[:, 1] - pa[:, 1])
    r_b = np.hypot(pt[:, 0] - pb[:, 0], pt[:, 1] - pb[:, 1])
    cross = (pb[:, 0] - pa[:, 0]) * (pt[:, 1] - pa[:, 1]) - (pb[:, 1] - pa[:, 1]) * (pt[:, 0] - pa[:, 0])
    branch = np.where(cross >= 0.0, 1.0, -1.0)
    return r_a, r_b, branch


def dyad_solve(p_a, p_b, r_a: float, r_b: float, branch: float):
    """Intersect circles (p_a, r_a) and (p_b, r_b); branch picks the side.

    Returns an (x, y) tuple, or a Locking sentinel (step/joint filled in by
    the caller) when the circles do not meet.
    """
    dx = p_b[0] - p_a[0]
    dy = p_b[1] - p_a[1]
    # np.hypot rather than math.hypot: the two differ by an ulp on some
    # inputs, and the batch kernel uses the numpy implementation.
    d = float(np.hypot(dx, dy))
    if d < LOCK_EPS or d > r_a + r_b + LOCK_EPS or d < abs(r_a - r_b) - LOCK_EPS:
        return None
    x = (d * d + r_a * r_a - r_b * r_b) / (2.0 * d)
    h = math.sqrt(max(r_a * r_a - x * x, 0.0))
    ux, uy = dx / d, dy / d
    return (p_a[0] + x * ux - branch * h * uy, p_a[1] + x * uy + branch * h * ux)


def simulate(mech: Mechanism, plan: SolutionPlan, T: int = 200) -> SimOutcome:
    """Scalar reference solver: replay the plan at T equally spaced crank
    angles, stopping at the first dyad with no real intersection.

    Deliberately plain Python, but it draws cos/sin/hypot from the same
    numpy kernels as simulate_batch so the two agree bit for bit.
    """
    pos0 = mech.positions0
    n = mech.n
    p0x, p0y = float(pos0[0, 0]), float(pos0[0, 1])
    r1 = float(np.hypot(pos0[1, 0] - p0x, pos0[1, 1] - p0y))
    r_a, r_b, branch = plan_geometry(plan, pos0)
    out = np.empty((n, T, 2), dtype=np.float64)
    cur = [(float(x), float(y)) for x, y in pos0]
    thetas = 2.0 * np.pi * np.arange(T) / T
    cos_t = np.cos(thetas)
    sin_t = np.sin(thetas)
    for t in range(T):
        cur[1] = (p0x + r1 * cos_t[t], p0y + r1 * sin_t[t])
        for s, step in enumerate(plan.steps):
            p = dyad_solve(cur[step.a], cur[step.b], r_a[s], r_b[s], branch[s])
            if p is None:
                return Locking(step=t, joint=step.target)
            cur[step.target] = p
        for k in range(n):
            out[k, t, 0] = cur[k][0]
            out[k, t, 1] = cur[k][1]
    return Trajectory(out)


def simulate_batch(positions0_batch: np.ndarray, plan: SolutionPlan, T: int = 200) -> list[SimOutcome]:
    """Vectorized replay of one plan over a batch of initial poses.

    Every dyad step is applied across the whole (batch, T) grid as array
    operations.  Per-candidate outcomes match the scalar solver elementwise.
    """
    pos0 = np.asarray(positions0_batch, dtype=np.float64)
    B, n, _ = pos0.shape
    thetas = 2.0 * np.pi * np.arange(T) / T
    P = np.full((B, n, T, 2), np.nan)
    # Fixed joints (and the pivot) hold their initial positions at every t.
    static = sorted(set(plan.fixed) | {0})
    P[:, static, :, :] = pos0[:, static, None, :]
    r1 = np.hypot(pos0[:, 1, 0] - pos0[:, 0, 0], pos0[:, 1, 1] - pos0[:, 0, 1])
    P[:, 1, :, 0] = pos0[:, 0, 0, None] + r1[:, None] * np.cos(thetas)[None, :]
    P[:, 1, :, 1] = pos0[:, 0, 1, None] + r1[:, None] * np.sin(thetas)[None, :]

    # Per-candidate geometry of each plan step.
    tgt = np.array([s.target for s in plan.steps], dtype=np.intp)
    aa = np.array([s.a for s in plan.steps], dtype=np.intp)
    bb = np.array([s.b for s in plan.steps], dtype=np.intp)
    if len(tgt):
        pa0 = pos0[:, aa, :]
        pb0 = pos0[:, bb, :]
        pt0 = pos0[:, tgt, :]
        R_a = np.hypot(pt0[..., 0] - pa0[..., 0], pt0[..., 1] - pa0[..., 1])  # (B, S)
        R_b = np.hypot(pt0[..., 0] - pb0[..., 0], pt0[..., 1] - pb0[..., 1])
        cross = (pb0[..., 0] - pa0[..., 0]) * (pt0[..., 1] - pa0[..., 1]) \
            - (pb0[..., 1] - pa0[..., 1]) * (pt0[..., 0] - pa0[..., 0])
        Br = np.where(cross >= 0.0, 1.0, -1.0)

    first_t = np.full(B, T, dtype=np.int64)
    first_joint = np.full(B, -1, dtype=np.int64)
    for s, step in enumerate(plan.steps):
        pa = P[:, step.a, :, :]
        pb = P[:, step.b, :, :]
        dx = pb[..., 0] - pa[..., 0]
        dy = pb[..., 1] - pa[..., 1]
        d = np.hypot(dx, dy)
        ra = R_a[:, s:s + 1]
        rb = R_b[:, s:s + 1]
        lock = (d < LOCK_EPS) | (d > ra + rb + LOCK_EPS) | (d < np.abs(ra - rb) - LOCK_EPS)
        with np.errstate(invalid="ignore", divide="ignore"):
            x = (d * d + ra * ra - rb * rb) / (2.0 * d)
            h = np.sqrt(np.maximum(ra * ra - x * x, 0.0))
            ux = dx / d
            uy = dy / d
            br = Br[:, s:s + 1]
            px = pa[..., 0] + x * ux - br * h * uy
            py = pa[..., 1] + x * uy + br * h * ux
        px = np.where(lock, np.nan, px)
        py = np.where(lock, np.nan, py)
        P[:, step.target, :, 0] = px
        P[:, step.target, :, 1] = py
        if lock.any():
            any_lock = lock.any(axis=1)
            t_lock = np.where(any_lock, lock.argmax(axis=1), T)
            better = t_lock < first_t
            first_t = np.where(better, t_lock, first_t)
            first_joint = np.where(better, step.target, first_joint)

    outcomes: list[SimOutcome] = []
    for b in range(B):
        if first_t[b] < T:
            outcomes.append(Locking(step=int(first_t[b]), joint=int(first_joint[b])))
        else:
            outcomes.append(Trajectory(P[b]))
    return outcomes


def check_feasible(mech: Mechanism, plan: SolutionPlan, T_low: int = 50, T_high: int = 200) -> bool:
    """Two-fidelity gate: pass the cheap T_low sweep first, then confirm at
    T_high.  True only when both complete the full revolution."""
    out = simulate_batch(mech.positions0[None, :, :], plan, T_low)[0]
    if isinstance(out, Locking):
        return False
    out = simulate_batch(mech.positions0[None, :, :], plan, T_high)[0]
    return not isinstance(out, Locking)
