"""The numerical atlas: a read-only, seeded-shuffle collection of normalized
coupler curves searched by bi-directional chamfer distance."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from linkatlas.curves import is_normalized, normalize, reduce_mechanism, resample
from linkatlas.mechanism import Mechanism
from linkatlas.records import (
    CurveRecord,
    FormatError,
    MechanismRecord,
    RecordReader,
    mechanism_to_record,
    record_to_mechanism,
    write_curves_npz,
    write_records,
    read_curves_npz,
)
from linkatlas.solver import compile_plan

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.03
DEFAULT_K = 3
_SCAN_CHUNK = 4096


@dataclass
class RetrievalHit:
    mech_id: int
    joint_id: int
    curve: np.ndarray        # stored normalized path
    distance: float
    mechanism: Mechanism     # reduced to the ancestry of joint_id
    above_threshold: bool


def _chamfer_block(points: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Chamfer distance of each curve in a (C, P, 2) block to one query."""
    C, P, _ = points.shape
    flat = points.reshape(C * P, 2)
    d2 = (
        (flat**2).sum(axis=1)[:, None]
        + (query**2).sum(axis=1)[None, :]
        - 2.0 * flat @ query.T
    )
    d = np.sqrt(np.clip(d2, 0.0, None)).reshape(C, P, -1)
    return d.min(axis=2).mean(axis=1) + d.min(axis=1).mean(axis=1)


class Atlas:
    """In-memory curve store with a persisted shuffle order."""

    def __init__(
        self,
        points: np.ndarray,
        mech_ids: np.ndarray,
        joint_ids: np.ndarray,
        mechanisms: dict[int, Mechanism],
        seed: int,
    ):
        self.points = np.asarray(points, dtype=np.float64)
        self.mech_ids = np.asarray(mech_ids, dtype=np.int64)
        self.joint_ids = np.asarray(joint_ids, dtype=np.int64)
        self.mechanisms = mechanisms
        self.seed = int(seed)
        self.order = np.random.default_rng(self.seed).permutation(len(self.points))
        self._descriptors: np.ndarray | None = None
        # Exact-duplicate index: members must retrieve themselves at distance
        # zero no matter where the shuffle order would have visited them.
        self._exact: dict[bytes, int] = {
            p.tobytes(): i for i, p in enumerate(self.points)
        }

    def __len__(self) -> int:
        return len(self.points)

    @classmethod
    def build(
        cls,
        records: list[CurveRecord],
        mechanisms: dict[int, Mechanism],
        seed: int = 0,
        resample_to: int | None = None,
    ) -> "Atlas":
        """Assemble an atlas from curve records; every record's mechanism id
        must resolve.  resample_to trades scan cost for resolution (curves
        are renormalized after subsampling)."""
        mech_ids, joint_ids, stack = [], [], []
        for rec in records:
            if rec.mech_id not in mechanisms:
                raise FormatError(f"curve references missing mechanism {rec.mech_id}")
            pts = np.asarray(rec.points, dtype=np.float64)
            if resample_to is not None and pts.shape[0] > resample_to:
                pts = normalize(resample(pts, resample_to))
            mech_ids.append(rec.mech_id)
            joint_ids.append(rec.joint_id)
            stack.append(pts)
        if not stack:
            points = np.zeros((0, 0, 2))
        else:
            points = np.stack(stack)
        return cls(points, np.array(mech_ids), np.array(joint_ids), mechanisms, seed)

    # -- persistence ------------------------------------------------------

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        meta = {"seed": self.seed, "size": len(self)}
        (directory / "meta.json").write_text(json.dumps(meta))
        curve_records = [
            CurveRecord(
                mech_id=int(m),
                joint_id=int(j),
                is_arc=False,
                is_circle=False,
                points=p.tolist(),
            )
            for m, j, p in zip(self.mech_ids, self.joint_ids, self.points)
        ]
        write_records(directory / "curves.ldjson", "curve", curve_records)
        write_curves_npz(directory / "curves.npz", curve_records)
        mech_records = [
            mechanism_to_record(mech, mid) for mid, mech in sorted(self.mechanisms.items())
        ]
        write_records(directory / "mechanisms.ldjson", "mechanism", mech_records)

    @classmethod
    def load(cls, directory) -> "Atlas":
        directory = Path(directory)
        meta = json.loads((directory / "meta.json").read_text())
        npz = directory / "curves.npz"
        if npz.exists():
            curve_records = read_curves_npz(npz)
        else:
            curve_records = list(RecordReader(directory / "curves.ldjson", "curve"))
        mechanisms = {
            rec.id: record_to_mechanism(rec)
            for rec in RecordReader(directory / "mechanisms.ldjson", "mechanism")
        }
        return cls.build(curve_records, mechanisms, seed=meta["seed"])

    # -- search -----------------------------------------------------------

    def coarse_filter(self, query: np.ndarray, budget: int, mode: str = "heuristic") -> np.ndarray:
        """Candidate record indices in scan order.  Exact mode (or a budget
        covering everything) is the identity scan; heuristic mode keeps the
        budget records closest by a cheap radial-histogram descriptor."""
        if mode == "exact" or budget >= len(self):
            return self.order
        if self._descriptors is None:
            self._descriptors = self._build_descriptors()
        qd = self._descriptor(query)
        dist = np.abs(self._descriptors - qd[None, :]).sum(axis=1)
        keep = np.argsort(dist, kind="stable")[:budget]
        keep_set = np.zeros(len(self), dtype=bool)
        keep_set[keep] = True
        return self.order[keep_set[self.order]]

    @staticmethod
    def _descriptor(path: np.ndarray) -> np.ndarray:
        r = np.hypot(path[:, 0] - 0.5, path[:, 1] - 0.5)
        hist, _ = np.histogram(r, bins=16, range=(0.0, 0.75))
        hist = hist / max(len(r), 1)
        extent = path.max(axis=0) - path.min(axis=0)
        return np.concatenate([hist, extent])

    def _build_descriptors(self) -> np.ndarray:
        return np.stack([self._descriptor(p) for p in self.points])

    def retrieve(
        self,
        query: np.ndarray,
        k: int = DEFAULT_K,
        threshold: float = DEFAULT_THRESHOLD,
        budget: int | None = None,
        filter_mode: str = "exact",
    ) -> list[RetrievalHit]:
        """Shuffle-and-scan: walk the persisted shuffle order accumulating
        sub-threshold chamfer hits, stopping at k; if fewer exist, pad with
        the best distances seen (flagged above_threshold).  Hits come back
        sorted ascending by distance."""
        if len(self) == 0:
            logger.warning("retrieve on an empty atlas")
            return []
        query = np.asarray(query, dtype=np.float64)
        if not is_normalized(query):
            query = normalize(query)
        if budget is None:
            scan = self.order
        else:
            scan = self.coarse_filter(query, budget, filter_mode)
        hits: list[tuple[float, int]] = []
        seen_d: list[np.ndarray] = []
        seen_i: list[np.ndarray] = []
        self_idx = self._exact.get(np.ascontiguousarray(query).tobytes())
        if self_idx is not None:
            hits.append((0.0, self_idx))
        for start in range(0, len(scan), _SCAN_CHUNK):
            idx = scan[start : start + _SCAN_CHUNK]
            dists = _chamfer_block(self.points[idx], query)
            below = np.nonzero(dists < threshold)[0]
            for pos in below:
                if int(idx[pos]) == self_idx:
                    continue
                hits.append((float(dists[pos]), int(idx[pos])))
                if len(hits) >= k:
                    break
            if len(hits) >= k:
                break
            # Track the best candidates seen for above-threshold padding.
            top = np.argsort(dists, kind="stable")[: k]
            seen_d.append(dists[top])
            seen_i.append(idx[top])
        results = [(d, i, d >= threshold) for d, i in hits]
        if len(results) < k and seen_d:
            all_d = np.concatenate(seen_d)
            all_i = np.concatenate(seen_i)
            used = {i for _, i, _ in results}
            for pos in np.argsort(all_d, kind="stable"):
                if len(results) >= k:
                    break
                i = int(all_i[pos])
                if i in used:
                    continue
                used.add(i)
                results.append((float(all_d[pos]), i, True))
        results.sort(key=lambda t: t[0])
        out = []
        for d, i, above in results:
            mech = self.mechanisms[int(self.mech_ids[i])]
            plan = compile_plan(mech)
            reduced = reduce_mechanism(mech, plan, int(self.joint_ids[i]))
            out.append(
                RetrievalHit(
                    mech_id=int(self.mech_ids[i]),
                    joint_id=int(self.joint_ids[i]),
                    curve=self.points[i],
                    distance=d,
                    mechanism=reduced,
                    above_threshold=bool(above),
                )
            )
        return out


def build_atlas(records, mechanisms, seed: int = 0, resample_to: int | None = None) -> Atlas:
    return Atlas.build(records, mechanisms, seed=seed, resample_to=resample_to)
