import json

import numpy as np
import pytest

from linkatlas.records import (
    FORMAT_NAME,
    CurveRecord,
    FormatError,
    MechanismRecord,
    NegativeRecord,
    RecordReader,
    TrajectoryRecord,
    curve_points,
    mechanism_to_record,
    read_curves_npz,
    read_records,
    record_to_mechanism,
    write_curves_npz,
    write_records,
)

from conftest import make_four_bar


def test_mechanism_record_round_trip():
    mech = make_four_bar()
    rec = mechanism_to_record(mech, 42)
    back = record_to_mechanism(rec)
    assert np.array_equal(back.adjacency, mech.adjacency)
    assert np.array_equal(back.types, mech.types)
    # bit-exact, not merely close
    assert back.positions0.tobytes() == mech.positions0.tobytes()


def test_file_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    path = tmp_path / "curves.ldjson"
    records = [
        CurveRecord(mech_id=i, joint_id=1, is_arc=False, is_circle=bool(i % 2),
                    points=rng.uniform(size=(17, 2)).tolist())
        for i in range(20)
    ]
    write_records(path, "curve", records)
    back = list(read_records(path, "curve"))
    assert len(back) == 20
    for a, b in zip(records, back):
        assert curve_points(a).tobytes() == curve_points(b).tobytes()
        assert (a.mech_id, a.joint_id, a.is_arc, a.is_circle) == (
            b.mech_id, b.joint_id, b.is_arc, b.is_circle)


def test_header_written_first(tmp_path):
    path = tmp_path / "m.ldjson"
    write_records(path, "mechanism", [mechanism_to_record(make_four_bar(), 0)])
    first = path.read_text().splitlines()[0]
    assert json.loads(first) == {"format": FORMAT_NAME, "version": 1, "kind": "mechanism"}


def test_reader_rejects_wrong_version(tmp_path):
    path = tmp_path / "m.ldjson"
    path.write_text('{"format":"linkatlas.records","version":99,"kind":"mechanism"}\n')
    with pytest.raises(FormatError, match="version"):
        RecordReader(path)


def test_reader_rejects_foreign_file(tmp_path):
    path = tmp_path / "m.ldjson"
    path.write_text('{"hello":"world"}\n')
    with pytest.raises(FormatError):
        RecordReader(path)


def test_reader_rejects_kind_mismatch(tmp_path):
    path = tmp_path / "m.ldjson"
    write_records(path, "curve", [])
    with pytest.raises(FormatError, match="kind"):
        RecordReader(path, "mechanism")


def test_reader_survives_truncated_tail(tmp_path):
    path = tmp_path / "m.ldjson"
    write_records(path, "mechanism", [mechanism_to_record(make_four_bar(), i) for i in range(3)])
    data = path.read_bytes()
    path.write_bytes(data[:-25])  # tear the last record mid-line
    reader = RecordReader(path, "mechanism")
    got = list(reader)
    assert [r.id for r in got] == [0, 1]
    assert reader.truncated


def test_reader_raises_on_malformed_interior_line(tmp_path):
    path = tmp_path / "m.ldjson"
    write_records(path, "mechanism", [mechanism_to_record(make_four_bar(), 0)])
    with open(path, "a") as fh:
        fh.write("not json\n")
    with pytest.raises(FormatError, match=":3"):
        list(RecordReader(path))


def test_negative_record_nested_round_trip(tmp_path):
    path = tmp_path / "neg.ldjson"
    rec = NegativeRecord(mechanism=mechanism_to_record(make_four_bar(), 7), locking_step=31)
    write_records(path, "negative", [rec])
    back = next(iter(read_records(path, "negative")))
    assert isinstance(back.mechanism, MechanismRecord)
    assert back.mechanism.id == 7
    assert back.locking_step == 31


def test_trajectory_record_round_trip(tmp_path):
    path = tmp_path / "t.ldjson"
    pos = np.random.default_rng(1).uniform(size=(4, 9, 2))
    write_records(path, "trajectory",
                  [TrajectoryRecord(mech_id=0, n=4, T=9, positions=pos.tolist())])
    back = next(iter(read_records(path, "trajectory")))
    assert np.asarray(back.positions).tobytes() == pos.tobytes()


def test_npz_sidecar_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    records = [
        CurveRecord(mech_id=i, joint_id=i % 3, is_arc=bool(i % 2), is_circle=False,
                    points=rng.uniform(size=(8, 2)).tolist())
        for i in range(5)
    ]
    path = tmp_path / "c.npz"
    write_curves_npz(path, records)
    back = read_curves_npz(path)
    for a, b in zip(records, back):
        assert curve_points(a).tobytes() == curve_points(b).tobytes()
        assert a.is_arc == b.is_arc
