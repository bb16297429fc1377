"""Durable record files: one JSON record per line behind a schema-version
header line.

The text form is canonical and round-trips float bit patterns exactly
(Python's shortest-repr float serialization).  An .npz sidecar is offered for
curve shards purely as a read-speed optimization.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from linkatlas.mechanism import Mechanism

FORMAT_NAME = "linkatlas.records"
FORMAT_VERSION = 1
RECORD_SUFFIX = ".ldjson"


class FormatError(ValueError):
    pass


@dataclass
class MechanismRecord:
    kind = "mechanism"
    id: int
    n: int
    adjacency: list[int]  # upper-triangle bits, row-major (i < j)
    types: list[int]      # 0 fixed, 1 simple, 2 actuated
    positions: list[list[float]]


@dataclass
class TrajectoryRecord:
    kind = "trajectory"
    mech_id: int
    n: int
    T: int
    positions: list[list[list[float]]]  # n x T x 2


@dataclass
class CurveRecord:
    kind = "curve"
    mech_id: int
    joint_id: int
    is_arc: bool
    is_circle: bool
    points: list[list[float]]


@dataclass
class NegativeRecord:
    kind = "negative"
    mechanism: MechanismRecord
    locking_step: int


KINDS = {
    "mechanism": MechanismRecord,
    "trajectory": TrajectoryRecord,
    "curve": CurveRecord,
    "negative": NegativeRecord,
}


def mechanism_to_record(mech: Mechanism, mech_id: int) -> MechanismRecord:
    n = mech.n
    bits = [int(mech.adjacency[i, j]) for i in range(n) for j in range(i + 1, n)]
    return MechanismRecord(
        id=int(mech_id),
        n=n,
        adjacency=bits,
        types=[int(t) for t in mech.types],
        positions=[[float(x), float(y)] for x, y in mech.positions0],
    )


def record_to_mechanism(rec: MechanismRecord) -> Mechanism:
    n = rec.n
    adjacency = np.zeros((n, n), dtype=np.uint8)
    it = iter(rec.adjacency)
    for i in range(n):
        for j in range(i + 1, n):
            bit = next(it)
            adjacency[i, j] = adjacency[j, i] = bit
    types = np.array(rec.types, dtype=np.int8)
    positions = np.array(rec.positions, dtype=np.float64)
    return Mechanism(adjacency, types, positions)


def curve_points(rec: CurveRecord) -> np.ndarray:
    return np.array(rec.points, dtype=np.float64)


def _record_to_obj(kind: str, payload: dict):
    cls = KINDS[kind]
    if cls is NegativeRecord:
        payload = dict(payload)
        payload["mechanism"] = MechanismRecord(**payload["mechanism"])
    return cls(**payload)


def write_records(path, kind: str, records: Iterable) -> int:
    """Write a record stream; returns the record count.  Appends nothing on
    header failure; each record is a complete line, so readers survive a
    truncated tail."""
    if kind not in KINDS:
        raise FormatError(f"unknown record kind: {kind}")
    count = 0
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        header = {"format": FORMAT_NAME, "version": FORMAT_VERSION, "kind": kind}
        fh.write(json.dumps(header, separators=(",", ":")) + "\n")
        for rec in records:
            payload = asdict(rec) if not isinstance(rec, dict) else rec
            fh.write(json.dumps(payload, separators=(",", ":")) + "\n")
            count += 1
    return count


class RecordReader:
    """Streaming reader.  Iterates typed records; `truncated` flips to True
    when the file ends mid-line (crash-safe append), in which case all
    complete records before the tear were already yielded."""

    def __init__(self, path, expect_kind: str | None = None):
        self.path = Path(path)
        self.truncated = False
        with open(self.path, "r", encoding="utf-8") as fh:
            first = fh.readline()
        if not first.endswith("\n"):
            raise FormatError(f"{self.path}: missing or incomplete header line")
        try:
            header = json.loads(first)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{self.path}: bad header: {exc}") from exc
        if header.get("format") != FORMAT_NAME:
            raise FormatError(f"{self.path}: not a {FORMAT_NAME} file")
        if header.get("version") != FORMAT_VERSION:
            raise FormatError(
                f"{self.path}: unsupported version {header.get('version')!r} "
                f"(expected {FORMAT_VERSION})"
            )
        self.kind = header.get("kind")
        if self.kind not in KINDS:
            raise FormatError(f"{self.path}: unknown record kind {self.kind!r}")
        if expect_kind is not None and self.kind != expect_kind:
            raise FormatError(f"{self.path}: kind {self.kind!r}, expected {expect_kind!r}")

    def __iter__(self) -> Iterator:
        with open(self.path, "r", encoding="utf-8") as fh:
            fh.readline()  # header
            lineno = 1
            for line in fh:
                lineno += 1
                if not line.endswith("\n"):
                    self.truncated = True
                    return
                try:
                    payload = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise FormatError(f"{self.path}:{lineno}: malformed record: {exc}") from exc
                yield _record_to_obj(self.kind, payload)


def read_records(path, expect_kind: str | None = None) -> Iterator:
    return iter(RecordReader(path, expect_kind))


def write_curves_npz(path, records: Iterable[CurveRecord]) -> int:
    """Binary sidecar for uniform-length curve shards (optimization; the
    .ldjson file stays canonical)."""
    mech_ids, joint_ids, arcs, circles, points = [], [], [], [], []
    for rec in records:
        mech_ids.append(rec.mech_id)
        joint_ids.append(rec.joint_id)
        arcs.append(rec.is_arc)
        circles.append(rec.is_circle)
        points.append(rec.points)
    np.savez_compressed(
        path,
        mech_ids=np.array(mech_ids, dtype=np.uint64),
        joint_ids=np.array(joint_ids, dtype=np.int64),
        is_arc=np.array(arcs, dtype=bool),
        is_circle=np.array(circles, dtype=bool),
        points=np.array(points, dtype=np.float64),
    )
    return len(mech_ids)


def read_curves_npz(path) -> list[CurveRecord]:
    data = np.load(path)
    return [
        CurveRecord(
            mech_id=int(m),
            joint_id=int(j),
            is_arc=bool(a),
            is_circle=bool(c),
            points=p.tolist(),
        )
        for m, j, a, c, p in zip(
            data["mech_ids"], data["joint_ids"], data["is_arc"], data["is_circle"], data["points"]
        )
    ]
