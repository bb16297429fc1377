"""Random mechanism sampling: topologies from the joint-addition operators,
initial positions by rejection sampling with a two-fidelity feasibility gate,
and the bookkeeping (stats, negative samples) around both."""

from __future__ import annotations

import math
import multiprocessing as mp
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from linkatlas.curves import plan_ancestry
from linkatlas.mechanism import (
    ARM_PIVOT,
    ARM_TIP,
    JointType,
    Mechanism,
    apply_Ng,
    apply_Ns,
    initial_mechanism,
)
from linkatlas.solver import Locking, SolutionPlan, Trajectory, compile_plan, simulate_batch


class GenerationError(RuntimeError):
    pass


@dataclass
class GenerationConfig:
    count: int
    n_min: int = 8
    n_max: int = 20
    ng_probability: float = 0.25  # P(ground op) : P(simple op) = 1 : 3
    variants_per_topology: int = 5
    T_low: int = 50
    T_high: int = 200
    max_attempts: int = 5000
    seed: int = 0
    workers: int = 1
    negative_rate: float = 0.0
    topology_retries: int = 1000
    batch: int = 256

    def __post_init__(self):
        if self.n_min < 4:
            raise ValueError("n_min must be >= 4")
        if self.n_max < self.n_min:
            raise ValueError("n_max < n_min")
        if self.variants_per_topology < 1:
            raise ValueError("variants_per_topology must be >= 1")
        if not self.T_low < self.T_high:
            raise ValueError("T_low must be < T_high")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


@dataclass
class GenerationStats:
    """Mergeable rejection-sampling tallies, keyed by joint count."""

    simulated_by_n: dict[int, int] = field(default_factory=dict)
    accepted_by_n: dict[int, int] = field(default_factory=dict)
    attempts_samples: dict[int, list[int]] = field(default_factory=dict)
    topologies_discarded: int = 0

    @property
    def simulated(self) -> int:
        return sum(self.simulated_by_n.values())

    @property
    def accepted(self) -> int:
        return sum(self.accepted_by_n.values())

    @property
    def locking(self) -> int:
        return self.simulated - self.accepted

    def record_success(self, n: int, attempts: int) -> None:
        self.simulated_by_n[n] = self.simulated_by_n.get(n, 0) + attempts
        self.accepted_by_n[n] = self.accepted_by_n.get(n, 0) + 1
        self.attempts_samples.setdefault(n, []).append(attempts)

    def record_failure(self, n: int, attempts: int) -> None:
        self.simulated_by_n[n] = self.simulated_by_n.get(n, 0) + attempts

    def mean_attempts(self, n: int) -> float:
        acc = self.accepted_by_n.get(n, 0)
        if acc == 0:
            return math.nan
        return self.simulated_by_n.get(n, 0) / acc

    def median_attempts(self, n: int) -> float:
        samples = self.attempts_samples.get(n, [])
        return float(np.median(samples)) if samples else math.nan

    def rejection_rate(self, n: int) -> float:
        sim = self.simulated_by_n.get(n, 0)
        if sim == 0:
            return math.nan
        return 1.0 - self.accepted_by_n.get(n, 0) / sim

    def merge(self, other: "GenerationStats") -> None:
        for n, v in other.simulated_by_n.items():
            self.simulated_by_n[n] = self.simulated_by_n.get(n, 0) + v
        for n, v in other.accepted_by_n.items():
            self.accepted_by_n[n] = self.accepted_by_n.get(n, 0) + v
        for n, v in other.attempts_samples.items():
            self.attempts_samples.setdefault(n, []).extend(v)
        self.topologies_discarded += other.topologies_discarded

    def to_dict(self) -> dict:
        sizes = sorted(self.simulated_by_n)
        return {
            "simulated": self.simulated,
            "accepted": self.accepted,
            "locking": self.locking,
            "topologies_discarded": self.topologies_discarded,
            "by_size": {
                str(n): {
                    "simulated": self.simulated_by_n.get(n, 0),
                    "accepted": self.accepted_by_n.get(n, 0),
                    "mean_attempts": self.mean_attempts(n),
                    "median_attempts": self.median_attempts(n),
                    "rejection_rate": self.rejection_rate(n),
                }
                for n in sizes
            },
        }


@dataclass
class NegativeSample:
    mechanism: Mechanism
    locking_step: int


@dataclass
class VariantResult:
    mechanism: Mechanism
    trajectory: Trajectory
    attempts: int


@dataclass
class GeneratedRecord:
    slot: int
    variant: int
    mechanism: Mechanism
    trajectory: Trajectory
    attempts: int


def _grow_topology(rng: np.random.Generator, n: int, ng_probability: float) -> Mechanism | None:
    """One constrained growth attempt.

    Uniform pair choice almost never yields a non-reducible topology beyond
    ~10 joints, so the proposal tracks "terminal" joints (not yet used as a
    dyad parent) and constrains each operation so the remaining operations
    can still merge all terminals into a single final joint.  slack is the
    number of operations to spare; the last operation must consume every
    remaining terminal through non-fixed parents.  Dead ends return None.
    """
    mech = initial_mechanism()
    terminals = {1, 2}
    while mech.n < n:
        ops_left = n - mech.n
        slack = ops_left - len(terminals) + 1
        if slack < 0:
            return None
        if slack >= 2 and rng.random() < ng_probability:
            mech = apply_Ng(mech)
            terminals.add(mech.n - 1)
            continue
        t_min = max(0, 2 - slack)
        final = ops_left == 1
        fixed = mech.types == JointType.FIXED
        pairs = []
        for i in range(mech.n):
            for j in range(i + 1, mech.n):
                if fixed[i] and fixed[j]:
                    continue
                if final and (fixed[i] or fixed[j]):
                    continue
                t = (i in terminals) + (j in terminals)
                if t < t_min:
                    continue
                pairs.append((i, j))
        if not pairs:
            return None
        i, j = pairs[int(rng.integers(len(pairs)))]
        mech = apply_Ns(mech, i, j)
        terminals.difference_update((i, j))
        terminals.add(mech.n - 1)
    return mech


def sample_topology(
    rng: np.random.Generator,
    n: int,
    ng_probability: float = 0.25,
    retries: int = 1000,
) -> tuple[Mechanism, SolutionPlan]:
    """Grow a topology to n joints with the ground/simple operator mix, then
    reject it unless the solver plan ends in a joint that (a) transitively
    depends on every other joint and (b) has no fixed neighbor."""
    for _ in range(retries):
        mech = _grow_topology(rng, n, ng_probability)
        if mech is None:
            continue
        plan = compile_plan(mech)
        if not plan.steps:
            continue
        last = plan.steps[-1].target
        if np.any(mech.types[mech.neighbors(last)] == JointType.FIXED):
            continue
        if len(plan_ancestry(plan, last)) != n:
            continue  # reducible: some joint is not needed for the last one
        return mech, plan
    raise GenerationError(f"no valid topology with n={n} after {retries} tries")


def sample_positions(topology: Mechanism, rng: np.random.Generator) -> np.ndarray:
    """One candidate initial pose: pivot and crank tip pinned, everything
    else i.i.d. uniform on the unit box."""
    pos = rng.uniform(size=(topology.n, 2))
    pos[0] = ARM_PIVOT
    pos[1] = ARM_TIP
    return pos


def _sample_positions_batch(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    pos = rng.uniform(size=(k, n, 2))
    pos[:, 0] = ARM_PIVOT
    pos[:, 1] = ARM_TIP
    return pos


def find_valid_variant(
    topology: Mechanism,
    plan: SolutionPlan,
    rng: np.random.Generator,
    max_attempts: int = 5000,
    T_low: int = 50,
    T_high: int = 200,
    batch: int = 256,
    negative_rate: float = 0.0,
    neg_rng: np.random.Generator | None = None,
    negatives: list[NegativeSample] | None = None,
) -> VariantResult | None:
    """Rejection-sample initial poses until one survives the two-fidelity
    gate; returns the accepted mechanism with its high-fidelity trajectory
    and the number of candidates consumed, or None at the attempt cap.

    Candidates are evaluated in stream order but simulated in vectorized
    batches at T_low; only T_low survivors pay for the T_high confirmation.
    """
    n = topology.n
    consumed = 0
    while consumed < max_attempts:
        k = min(batch, max_attempts - consumed)
        cand = _sample_positions_batch(n, k, rng)
        low = simulate_batch(cand, plan, T_low)
        for idx, out in enumerate(low):
            if isinstance(out, Locking):
                if negatives is not None and negative_rate > 0.0 and neg_rng is not None:
                    if neg_rng.random() < negative_rate:
                        negatives.append(
                            NegativeSample(topology.with_positions(cand[idx]), out.step)
                        )
                continue
            high = simulate_batch(cand[idx : idx + 1], plan, T_high)[0]
            if isinstance(high, Locking):
                continue
            return VariantResult(
                mechanism=topology.with_positions(cand[idx]),
                trajectory=high,
                attempts=consumed + idx + 1,
            )
        consumed += k
    return None


def _generate_slot(config: GenerationConfig, slot: int):
    """One topology slot: draw n, then produce variants_per_topology accepted
    variants of a single topology (resampling a fresh topology of the same n
    whenever the position search exhausts its cap)."""
    rng_topo = np.random.default_rng([config.seed, slot, 0])
    rng_pos = np.random.default_rng([config.seed, slot, 1])
    rng_neg = np.random.default_rng([config.seed, slot, 2])
    stats = GenerationStats()
    negatives: list[NegativeSample] = []
    n = int(rng_topo.integers(config.n_min, config.n_max + 1))
    for _ in range(config.topology_retries):
        topology, plan = sample_topology(
            rng_topo, n, config.ng_probability, config.topology_retries
        )
        variants: list[VariantResult] = []
        for _v in range(config.variants_per_topology):
            res = find_valid_variant(
                topology,
                plan,
                rng_pos,
                max_attempts=config.max_attempts,
                T_low=config.T_low,
                T_high=config.T_high,
                batch=config.batch,
                negative_rate=config.negative_rate,
                neg_rng=rng_neg,
                negatives=negatives,
            )
            if res is None:
                break
            variants.append(res)
        if len(variants) == config.variants_per_topology:
            for res in variants:
                stats.record_success(n, res.attempts)
            records = [
                GeneratedRecord(slot, v, res.mechanism, res.trajectory, res.attempts)
                for v, res in enumerate(variants)
            ]
            return records, stats, negatives
        stats.topologies_discarded += 1
        wasted = sum(res.attempts for res in variants) + config.max_attempts
        stats.record_failure(n, wasted)
    raise GenerationError(f"slot {slot}: no topology with feasible variants (n={n})")


def _slot_worker(args):
    config, slot = args
    return slot, _generate_slot(config, slot)


class GenerationRun:
    """Drives dataset generation; iterate records() and read stats/negatives
    afterwards.  Deterministic record set for a given seed; record order is
    deterministic only with workers=1."""

    def __init__(self, config: GenerationConfig):
        self.config = config
        self.stats = GenerationStats()
        self.negatives: list[NegativeSample] = []

    def records(self) -> Iterator[GeneratedRecord]:
        config = self.config
        per_slot = config.variants_per_topology
        slots = (config.count + per_slot - 1) // per_slot
        emitted = 0
        if config.workers <= 1:
            for slot in range(slots):
                records, stats, negatives = _generate_slot(config, slot)
                self.stats.merge(stats)
                self.negatives.extend(negatives)
                for rec in records:
                    if emitted >= config.count:
                        return
                    emitted += 1
                    yield rec
        else:
            ctx = mp.get_context("fork")
            with ctx.Pool(config.workers) as pool:
                args = [(config, slot) for slot in range(slots)]
                for _slot, (records, stats, negatives) in pool.imap_unordered(
                    _slot_worker, args
                ):
                    self.stats.merge(stats)
                    self.negatives.extend(negatives)
                    for rec in records:
                        if emitted >= config.count:
                            pool.terminate()
                            return
                        emitted += 1
                        yield rec


def generate_dataset(config: GenerationConfig) -> tuple[Iterator[GeneratedRecord], GenerationRun]:
    """Convenience wrapper: returns the record iterator plus the run object
    that accumulates stats and negative samples while iterating."""
    run = GenerationRun(config)
    return run.records(), run


def rejection_curve(
    config: GenerationConfig,
    sizes: list[int],
    trials: int = 100,
) -> GenerationStats:
    """Attempts-per-success study: for each joint count, sample fresh
    topologies and measure how many random poses each needs."""
    stats = GenerationStats()
    for n in sizes:
        rng_topo = np.random.default_rng([config.seed, 7_000_000 + n, 0])
        rng_pos = np.random.default_rng([config.seed, 7_000_000 + n, 1])
        for _ in range(trials):
            topology, plan = sample_topology(
                rng_topo, n, config.ng_probability, config.topology_retries
            )
            res = find_valid_variant(
                topology,
                plan,
                rng_pos,
                max_attempts=config.max_attempts,
                T_low=config.T_low,
                T_high=config.T_high,
                batch=config.batch,
            )
            if res is None:
                stats.record_failure(n, config.max_attempts)
            else:
                stats.record_success(n, res.attempts)
    return stats
