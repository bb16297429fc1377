"""Mechanism graph types, the mobility count and the joint-addition operators.

A mechanism is an undirected joint graph: nodes are revolute joints, edges are
rigid bars.  Joint 0 is the grounded actuator pivot at (0.5, 0.5), joint 1 the
actuated crank tip, and the crank is the edge (0, 1) with length 0.05.  New
joints are only ever created by connecting them to two existing joints, which
keeps mobility at one and every kinematic loop dyadic.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

ARM_PIVOT = (0.5, 0.5)
ARM_LENGTH = 0.05
ARM_TIP = (ARM_PIVOT[0] + ARM_LENGTH, ARM_PIVOT[1])

LENGTH_TOL = 1e-9


class StructuralError(ValueError):
    """Malformed mechanism structure (asymmetric adjacency, bad index, ...)."""


class JointType(IntEnum):
    # Integer codes are the on-disk encoding: 0 fixed, 1 simple, 2 actuated.
    FIXED = 0
    SIMPLE = 1
    ACTUATED = 2


@dataclass(frozen=True, eq=False)
class Mechanism:
    """Immutable mechanism: adjacency, per-joint types and initial positions.

    ``positions0`` rows may be NaN for joints whose position has not been
    sampled yet (topology-only mechanisms).
    """

    adjacency: np.ndarray  # (n, n) uint8, symmetric, zero diagonal
    types: np.ndarray      # (n,) int8 of JointType codes
    positions0: np.ndarray  # (n, 2) float64, NaN rows = unset

    def __post_init__(self):
        adj = np.ascontiguousarray(self.adjacency, dtype=np.uint8)
        typ = np.ascontiguousarray(self.types, dtype=np.int8)
        pos = np.ascontiguousarray(self.positions0, dtype=np.float64)
        for name, arr in (("adjacency", adj), ("types", typ), ("positions0", pos)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise StructuralError("adjacency must be square")
        n = adj.shape[0]
        if typ.shape != (n,) or pos.shape != (n, 2):
            raise StructuralError("types/positions0 shape mismatch with adjacency")

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def edges(self) -> list[tuple[int, int]]:
        ii, jj = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(ii.tolist(), jj.tolist()))

    def neighbors(self, i: int) -> list[int]:
        return np.nonzero(self.adjacency[i])[0].tolist()

    def fixed_joints(self) -> list[int]:
        return np.nonzero(self.types == JointType.FIXED)[0].tolist()

    def with_positions(self, positions0: np.ndarray) -> "Mechanism":
        return Mechanism(self.adjacency, self.types, np.asarray(positions0, dtype=np.float64))


@dataclass(frozen=True)
class MobilityCount:
    n_links: int
    j1: int
    m: int


def _check_adjacency(adj: np.ndarray) -> None:
    if not np.array_equal(adj, adj.T):
        raise StructuralError("adjacency is not symmetric")
    if np.any(np.diag(adj) != 0):
        raise StructuralError("adjacency has a self-loop")


def compute_mobility(mech: Mechanism) -> MobilityCount:
    """Gruebler count m = 3(n_links - 1) - 2 j1 evaluated on the joint graph.

    Each edge is one bar plus the single ground link.  A joint with k incident
    members (bars, plus the ground frame when the joint is fixed) contributes
    k - 1 lower pairs; isolated fixed joints contribute nothing.
    """
    adj = mech.adjacency
    _check_adjacency(adj)
    n_links = int(adj.sum()) // 2 + 1
    members = adj.sum(axis=1).astype(np.int64) + (mech.types == JointType.FIXED)
    j1 = int(np.maximum(members - 1, 0).sum())
    return MobilityCount(n_links=n_links, j1=j1, m=3 * (n_links - 1) - 2 * j1)


def initial_mechanism() -> Mechanism:
    """The simplest 1-DOF seed: grounded crank (joints 0, 1) plus a floating
    fixed joint 2 whose position stays unset until sampling."""
    adjacency = np.zeros((3, 3), dtype=np.uint8)
    adjacency[0, 1] = adjacency[1, 0] = 1
    types = np.array([JointType.FIXED, JointType.ACTUATED, JointType.FIXED], dtype=np.int8)
    positions0 = np.array([ARM_PIVOT, ARM_TIP, (np.nan, np.nan)], dtype=np.float64)
    return Mechanism(adjacency, types, positions0)


def apply_J(mech: Mechanism, i: int, j: int, pos=None) -> Mechanism:
    """Add joint n connected to joints i and j (the J operator).

    The new joint is Fixed iff both operands are Fixed, otherwise Simple;
    mobility is preserved (+2 links, +3 lower pairs).
    """
    n = mech.n
    if i == j:
        raise StructuralError("degenerate operation: i == j")
    if not (0 <= i < n and 0 <= j < n):
        raise StructuralError(f"joint index out of range: ({i}, {j}) with n={n}")
    adjacency = np.zeros((n + 1, n + 1), dtype=np.uint8)
    adjacency[:n, :n] = mech.adjacency
    adjacency[n, i] = adjacency[i, n] = 1
    adjacency[n, j] = adjacency[j, n] = 1
    both_fixed = (mech.types[i] == JointType.FIXED) and (mech.types[j] == JointType.FIXED)
    new_type = JointType.FIXED if both_fixed else JointType.SIMPLE
    types = np.append(mech.types, np.int8(new_type))
    new_pos = (np.nan, np.nan) if pos is None else (float(pos[0]), float(pos[1]))
    positions0 = np.vstack([mech.positions0, np.array(new_pos)])
    return Mechanism(adjacency, types, positions0)


def apply_Ns(mech: Mechanism, i: int, j: int, pos=None) -> Mechanism:
    """J restricted to pairs that are not both Fixed."""
    both_fixed = (mech.types[i] == JointType.FIXED) and (mech.types[j] == JointType.FIXED)
    if both_fixed:
        raise StructuralError("Ns cannot operate on two fixed joints")
    return apply_J(mech, i, j, pos)


def apply_Ng(mech: Mechanism, pos=None) -> Mechanism:
    """Add an isolated fixed joint (stand-in for J on two ground joints,
    without the redundant bars)."""
    n = mech.n
    adjacency = np.zeros((n + 1, n + 1), dtype=np.uint8)
    adjacency[:n, :n] = mech.adjacency
    types = np.append(mech.types, np.int8(JointType.FIXED))
    new_pos = (np.nan, np.nan) if pos is None else (float(pos[0]), float(pos[1]))
    positions0 = np.vstack([mech.positions0, np.array(new_pos)])
    return Mechanism(adjacency, types, positions0)


def validate(mech: Mechanism) -> list[str]:
    """All violated mechanism invariants; empty list means valid."""
    out: list[str] = []
    adj = mech.adjacency
    if not np.array_equal(adj, adj.T):
        out.append("adjacency not symmetric")
    if np.any(np.diag(adj) != 0):
        out.append("adjacency has self-loop")
    if np.any((adj != 0) & (adj != 1)):
        out.append("adjacency not binary")
    n = mech.n
    if n < 3:
        out.append("fewer than 3 joints")
        return out
    if not np.all(np.isin(mech.types, [0, 1, 2])):
        out.append("unknown joint type code")
        return out
    actuated = np.nonzero(mech.types == JointType.ACTUATED)[0]
    if len(actuated) != 1 or actuated[0] != 1:
        out.append("joint 1 must be the single actuated joint")
    if mech.types[0] != JointType.FIXED:
        out.append("joint 0 must be fixed")
    if adj[0, 1] != 1:
        out.append("actuator arm edge (0,1) missing")
    pos = mech.positions0
    unset = np.isnan(pos).any(axis=1)
    for k in np.nonzero(unset)[0]:
        out.append(f"position unset for joint {k}")
    if not unset.any():
        if np.any(pos < -LENGTH_TOL) or np.any(pos > 1 + LENGTH_TOL):
            out.append("positions outside unit box")
        if not np.allclose(pos[0], ARM_PIVOT, atol=LENGTH_TOL):
            out.append("joint 0 not at (0.5, 0.5)")
        arm = float(np.hypot(*(pos[1] - pos[0])))
        if abs(arm - ARM_LENGTH) > LENGTH_TOL:
            out.append("actuator arm length != 0.05")
    try:
        mob = compute_mobility(mech)
        if mob.m != 1:
            out.append("mobility != 1")
    except StructuralError:
        pass  # already reported above
    return out
