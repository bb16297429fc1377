"""Timing harness comparing the scalar reference solver, the vectorized
batch solver and the multi-process batch solver on one workload."""

from __future__ import annotations

import multiprocessing as mp
import time
from dataclasses import dataclass

import numpy as np

from linkatlas.mechanism import Mechanism
from linkatlas.solver import Locking, SolutionPlan, compile_plan, simulate, simulate_batch


@dataclass
class BenchResult:
    name: str
    mean: float
    std: float
    times: list[float]


@dataclass
class _Group:
    """Position variants sharing one topology (and therefore one plan)."""

    plan: SolutionPlan
    positions: np.ndarray  # (B, n, 2)


def group_by_topology(mechanisms: list[Mechanism]) -> list[_Group]:
    groups: dict[bytes, list[Mechanism]] = {}
    for mech in mechanisms:
        key = mech.adjacency.tobytes() + mech.types.tobytes()
        groups.setdefault(key, []).append(mech)
    out = []
    for members in groups.values():
        plan = compile_plan(members[0])
        # Drop compiled geometry: it belongs to one member only.
        plan = SolutionPlan(plan.n, plan.fixed, plan.steps, None, None, None)
        out.append(_Group(plan, np.stack([m.positions0 for m in members])))
    return out


def _digest_outcomes(outcomes) -> tuple[int, float]:
    locked = 0
    acc = 0.0
    for out in outcomes:
        if isinstance(out, Locking):
            locked += 1
        else:
            acc += float(out.positions[-1, -1, 0])
    return locked, acc


def run_scalar(groups: list[_Group], T: int = 200) -> tuple[int, float]:
    locked = 0
    acc = 0.0
    for g in groups:
        adj = _adj_from_plan(g.plan)
        types = _types_from_plan(g.plan)
        for pos in g.positions:
            out = simulate(Mechanism(adj, types, pos), g.plan, T)
            if isinstance(out, Locking):
                locked += 1
            else:
                acc += float(out.positions[-1, -1, 0])
    return locked, acc


def run_vectorized(groups: list[_Group], T: int = 200) -> tuple[int, float]:
    locked = 0
    acc = 0.0
    for g in groups:
        locked_g, acc_g = _digest_outcomes(simulate_batch(g.positions, g.plan, T))
        locked += locked_g
        acc += acc_g
    return locked, acc


def _parallel_chunk(args) -> tuple[int, float]:
    groups, T = args
    return run_vectorized(groups, T)


def run_parallel(groups: list[_Group], pool, workers: int, T: int = 200) -> tuple[int, float]:
    chunks = [groups[w::workers] for w in range(workers)]
    locked = 0
    acc = 0.0
    for locked_c, acc_c in pool.map(_parallel_chunk, [(c, T) for c in chunks]):
        locked += locked_c
        acc += acc_c
    return locked, acc


# The scalar runner only needs fixed-joint indices and the plan; synthesize a
# minimal mechanism around each position set.
def _adj_from_plan(plan: SolutionPlan) -> np.ndarray:
    adj = np.zeros((plan.n, plan.n), dtype=np.uint8)
    adj[0, 1] = adj[1, 0] = 1
    for s in plan.steps:
        adj[s.target, s.a] = adj[s.a, s.target] = 1
        adj[s.target, s.b] = adj[s.b, s.target] = 1
    return adj


def _types_from_plan(plan: SolutionPlan) -> np.ndarray:
    types = np.ones(plan.n, dtype=np.int8)
    types[list(plan.fixed)] = 0
    types[1] = 2
    return types


def run_bench(
    mechanisms: list[Mechanism],
    reps: int = 10,
    workers: int = 1,
    T: int = 200,
) -> dict[str, BenchResult]:
    """Time the three solver configurations over `reps` repetitions of the
    same workload; the digest is checked across configurations so no run can
    skip the work."""
    groups = group_by_topology(mechanisms)
    results: dict[str, BenchResult] = {}
    digests = {}

    def _time(name, fn):
        times = []
        for _ in range(reps):
            t0 = time.perf_counter()
            digest = fn()
            times.append(time.perf_counter() - t0)
        digests[name] = digest
        results[name] = BenchResult(name, float(np.mean(times)), float(np.std(times)), times)

    _time("scalar", lambda: run_scalar(groups, T))
    _time("vectorized", lambda: run_vectorized(groups, T))
    ctx = mp.get_context("fork")
    with ctx.Pool(workers) as pool:
        pool.map(_parallel_chunk, [([], T)] * workers)  # warm the pool
        _time(f"parallel[{workers}]", lambda: run_parallel(groups, pool, workers, T))
    names = list(digests)
    if not (digests[names[0]][0] == digests[names[1]][0] == digests[names[2]][0]):
        raise RuntimeError(f"solver configurations disagree on outcomes: {digests}")
    return results
