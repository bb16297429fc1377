"""Coupler-curve processing: unit-box normalization, arc/circle detection,
curation down-sampling, bi-directional chamfer distance and mechanism
reduction."""

from __future__ import annotations

import numpy as np
from scipy.spatial.distance import cdist

from linkatlas.mechanism import JointType, Mechanism
from linkatlas.solver import SolutionPlan

BOX_CENTER = np.array([0.5, 0.5])
CIRCLE_VARIANCE_THRESHOLD = 5e-4
NORM_TOL = 1e-9


class DegeneratePathError(ValueError):
    """All path points coincide; no diameter to normalize by."""


def _farthest_pair(pts: np.ndarray) -> tuple[int, int, float]:
    # Exact O(T^2) search; argmax on the flattened matrix gives the
    # lexicographically smallest index pair on ties.
    D = cdist(pts, pts)
    flat = int(np.argmax(D))
    i, j = divmod(flat, pts.shape[0])
    if i > j:
        i, j = j, i
    return i, j, float(D[i, j])


def _center_in_box(pts: np.ndarray) -> np.ndarray:
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    return pts - (lo + hi) / 2.0 + BOX_CENTER


def _first_point_angle(pts: np.ndarray) -> float:
    v = pts[0] - BOX_CENTER
    ang = float(np.arctan2(v[1], v[0]))
    return ang if ang >= 0.0 else ang + 2.0 * np.pi


def normalize(path: np.ndarray) -> np.ndarray:
    """Canonicalize a path: unit diameter, diameter horizontal, bounding box
    centered at (0.5, 0.5).

    Of the two 180-degree-apart orientations that make the diameter
    horizontal, keeps the one whose first point has the smaller angle from +x
    about the box center (ties broken by the larger total y-mass above 0.5).
    """
    pts = np.asarray(path, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ValueError("path must be a (T, 2) array with T >= 2")
    i, j, d = _farthest_pair(pts)
    if d <= 0.0:
        raise DegeneratePathError("all path points coincident")
    v = pts[j] - pts[i]
    c, s = v[0] / d, v[1] / d
    rot = np.array([[c, s], [-s, c]])  # rotate by -angle(v)
    base = (pts - pts[i]) @ rot.T / d
    cand_a = _center_in_box(base)
    cand_b = _center_in_box(-base)
    ang_a = _first_point_angle(cand_a)
    ang_b = _first_point_angle(cand_b)
    if abs(ang_a - ang_b) <= 1e-12:
        mass_a = float(np.maximum(cand_a[:, 1] - 0.5, 0.0).sum())
        mass_b = float(np.maximum(cand_b[:, 1] - 0.5, 0.0).sum())
        return cand_a if mass_a >= mass_b else cand_b
    return cand_a if ang_a < ang_b else cand_b


def is_normalized(path: np.ndarray, tol: float = NORM_TOL) -> bool:
    pts = np.asarray(path, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        return False
    i, j, d = _farthest_pair(pts)
    if abs(d - 1.0) > tol:
        return False
    if abs(pts[i, 1] - pts[j, 1]) > tol:
        return False
    center = (pts.min(axis=0) + pts.max(axis=0)) / 2.0
    return bool(np.all(np.abs(center - BOX_CENTER) <= tol))


def is_arc(mech: Mechanism, joint: int) -> bool:
    """A joint pinned to any fixed neighbor traces a circular arc."""
    if not (0 <= joint < mech.n):
        raise IndexError(f"joint {joint} out of range")
    nbrs = mech.neighbors(joint)
    return bool(np.any(mech.types[nbrs] == JointType.FIXED))


def is_circle(npath: np.ndarray) -> bool:
    """Variance of point distances from the box center, strictly below the
    threshold: a normalized circle of any original radius has radius 0.5
    about (0.5, 0.5) and near-zero variance."""
    pts = np.asarray(npath, dtype=np.float64)
    r = np.hypot(pts[:, 0] - 0.5, pts[:, 1] - 0.5)
    return bool(np.var(r) < CIRCLE_VARIANCE_THRESHOLD)


def curation_keep(mech_id: int, joint_id: int, flagged: bool, keep_rate: float, seed: int) -> bool:
    """Record-keyed keep decision: non-flagged records always pass; flagged
    ones pass with probability keep_rate, deterministically per record."""
    if not flagged:
        return True
    rng = np.random.default_rng([seed, mech_id, joint_id])
    return bool(rng.random() < keep_rate)


def curate(records, keep_rate: float = 0.005, seed: int = 0):
    """Filter a stream of curve records, dropping 1 - keep_rate of the
    arc-or-circle ones.  Records need mech_id / joint_id / is_arc / is_circle
    attributes."""
    for rec in records:
        flagged = bool(rec.is_arc or rec.is_circle)
        if curation_keep(rec.mech_id, rec.joint_id, flagged, keep_rate, seed):
            yield rec


def chamfer(A: np.ndarray, B: np.ndarray) -> float:
    """Bi-directional chamfer: mean nearest-neighbor distance A->B plus
    B->A (Euclidean, means so the value is resolution-independent)."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    D = cdist(A, B)
    return float(D.min(axis=1).mean() + D.min(axis=0).mean())


def plan_ancestry(plan: SolutionPlan, joint: int) -> set[int]:
    """Transitive closure of the joints the plan needs to place `joint`,
    including the actuator pivot."""
    parents: dict[int, tuple[int, int]] = {s.target: (s.a, s.b) for s in plan.steps}
    if joint not in plan.coverage:
        raise ValueError(f"joint {joint} not covered by plan")
    seen: set[int] = set()
    stack = [joint]
    while stack:
        k = stack.pop()
        if k in seen:
            continue
        seen.add(k)
        if k in parents:
            stack.extend(parents[k])
        elif k == 1:
            stack.append(0)  # crank tip rides on the pivot
    seen.update({0, 1})
    return seen


def reduce_mechanism(mech: Mechanism, plan: SolutionPlan, joint: int) -> Mechanism:
    """Sub-mechanism induced by the plan ancestry of `joint`, re-indexed.

    The reduced mechanism traces the same path for `joint` as the full one.
    """
    keep = sorted(plan_ancestry(plan, joint))
    idx = np.array(keep, dtype=np.intp)
    adjacency = mech.adjacency[np.ix_(idx, idx)]
    return Mechanism(adjacency, mech.types[idx], mech.positions0[idx])


def resample(path: np.ndarray, count: int) -> np.ndarray:
    """Index-subsample a path down to `count` of its own points."""
    pts = np.asarray(path, dtype=np.float64)
    if pts.shape[0] <= count:
        return pts
    idx = np.linspace(0, pts.shape[0] - 1, count).round().astype(np.intp)
    return pts[idx]
