import numpy as np
import pytest

from linkatlas.mechanism import JointType, Mechanism


def make_four_bar(ground=(0.7, 0.5), coupler=(0.6, 0.62)) -> Mechanism:
    """Crank (0,1) plus a dyad joint 3 hung between the crank tip and a
    second ground joint 2."""
    adjacency = np.zeros((4, 4), dtype=np.uint8)
    for i, j in [(0, 1), (1, 3), (2, 3)]:
        adjacency[i, j] = adjacency[j, i] = 1
    types = np.array(
        [JointType.FIXED, JointType.ACTUATED, JointType.FIXED, JointType.SIMPLE],
        dtype=np.int8,
    )
    positions = np.array([(0.5, 0.5), (0.55, 0.5), ground, coupler])
    return Mechanism(adjacency, types, positions)


@pytest.fixture
def four_bar():
    return make_four_bar()


def edge_lengths(mech: Mechanism, positions: np.ndarray) -> np.ndarray:
    """Per-edge bar lengths over a (n, T, 2) trajectory: (E, T)."""
    out = []
    for i, j in mech.edges():
        d = positions[i] - positions[j]
        out.append(np.hypot(d[..., 0], d[..., 1]))
    return np.stack(out)
