import numpy as np
import pytest
from fastapi.testclient import TestClient

from linkatlas.atlas import Atlas
from linkatlas.curves import is_arc, is_circle, normalize, resample
from linkatlas.generator import GenerationConfig, GenerationRun
from linkatlas.mechanism import JointType, validate
from linkatlas.records import CurveRecord, record_to_mechanism
from linkatlas.service import create_app

FOUR_BAR = {
    "n": 4,
    # upper-triangle bits for pairs (0,1),(0,2),(0,3),(1,2),(1,3),(2,3)
    "adjacency": [1, 0, 0, 0, 1, 1],
    "types": [0, 2, 0, 1],
    "positions": [[0.5, 0.5], [0.55, 0.5], [0.7, 0.5], [0.6, 0.62]],
}

LOCKING_FOUR_BAR = dict(
    FOUR_BAR, positions=[[0.5, 0.5], [0.55, 0.5], [0.9, 0.5], [0.72, 0.51]])


@pytest.fixture(scope="module")
def atlas_dir(tmp_path_factory):
    run = GenerationRun(GenerationConfig(count=10, seed=33))
    mechanisms, records = {}, []
    curve = None
    for i, rec in enumerate(run.records()):
        mechanisms[i] = rec.mechanism
        for j in range(rec.mechanism.n):
            if rec.mechanism.types[j] == JointType.FIXED:
                continue
            pts = normalize(rec.trajectory.positions[j])
            records.append(CurveRecord(
                mech_id=i, joint_id=j,
                is_arc=is_arc(rec.mechanism, j), is_circle=is_circle(pts),
                points=pts.tolist()))
            curve = pts
    path = tmp_path_factory.mktemp("atlas") / "atlas"
    Atlas.build(records, mechanisms, seed=0).save(path)
    return path, curve


@pytest.fixture(scope="module")
def client(atlas_dir):
    app = create_app(atlas_path=atlas_dir[0])
    return TestClient(app, raise_server_exceptions=False)


def test_health(client):
    res = client.get("/health")
    assert res.status_code == 200
    body = res.json()
    assert body["status"] == "ok"
    assert body["atlas_size"] > 0


def test_simulate_four_bar(client):
    res = client.post("/simulate", json={"mechanism": FOUR_BAR})
    assert res.status_code == 200
    body = res.json()
    assert body["T"] == 200
    traj = np.asarray(body["trajectory"])
    assert traj.shape == (4, 200, 2)
    assert np.isfinite(traj).all()


def test_simulate_locking_is_domain_outcome(client):
    res = client.post("/simulate", json={"mechanism": LOCKING_FOUR_BAR})
    assert res.status_code == 200
    body = res.json()
    assert "trajectory" not in body
    assert body["locking"]["joint"] == 3
    assert body["locking"]["step"] > 0


def test_simulate_T_bounds(client):
    res = client.post("/simulate", json={"mechanism": FOUR_BAR, "T": 16})
    assert res.status_code == 200
    assert np.asarray(res.json()["trajectory"]).shape[1] == 16
    assert client.post("/simulate", json={"mechanism": FOUR_BAR, "T": 4}).status_code == 422
    assert client.post("/simulate", json={"mechanism": FOUR_BAR, "T": 5000}).status_code == 422


def test_simulate_rejects_invalid_mechanism(client):
    bad = dict(FOUR_BAR, types=[0, 1, 0, 1])  # nothing actuated
    res = client.post("/simulate", json={"mechanism": bad})
    assert res.status_code == 400
    body = res.json()
    assert body["error"]["code"] == "invalid_mechanism"
    assert "actuated" in body["error"]["message"]


def test_malformed_body_is_enveloped(client):
    res = client.post("/simulate", content=b"{oops",
                      headers={"content-type": "application/json"})
    assert res.status_code == 422
    assert set(res.json()["error"]) == {"code", "message"}


def test_operator_ns(client):
    res = client.post("/operator/apply",
                      json={"mechanism": FOUR_BAR, "op": "ns", "i": 2, "j": 3})
    assert res.status_code == 200
    mech = res.json()["mechanism"]
    assert mech["n"] == 5
    # default placement: midpoint of the parents
    assert mech["positions"][4] == pytest.approx([0.65, 0.56])
    back = record_to_mechanism(type("R", (), mech)())
    assert validate(back) == []


def test_operator_ns_rejects_fixed_pair(client):
    res = client.post("/operator/apply",
                      json={"mechanism": FOUR_BAR, "op": "ns", "i": 0, "j": 2})
    assert res.status_code == 400
    assert res.json()["error"]["code"] == "invalid_operator"


def test_operator_ng(client):
    res = client.post("/operator/apply", json={"mechanism": FOUR_BAR, "op": "ng"})
    assert res.status_code == 200
    mech = res.json()["mechanism"]
    assert mech["n"] == 5
    assert mech["types"][4] == 0


def test_operator_bad_request(client):
    res = client.post("/operator/apply",
                      json={"mechanism": FOUR_BAR, "op": "ns", "i": 1})
    assert res.status_code == 400
    res = client.post("/operator/apply",
                      json={"mechanism": FOUR_BAR, "op": "warp"})
    assert res.status_code == 400


def test_mechanism_random(client):
    res = client.post("/mechanism/random", json={"n": 8, "seed": 2})
    assert res.status_code == 200
    mech = res.json()["mechanism"]
    assert mech["n"] == 8
    back = record_to_mechanism(type("R", (), mech)())
    assert validate(back) == []


def test_retrieve(client, atlas_dir):
    _, curve = atlas_dir
    pts = resample(curve, 64)
    res = client.post("/retrieve", json={"points": pts.tolist(), "k": 3})
    assert res.status_code == 200
    hits = res.json()["hits"]
    assert 1 <= len(hits) <= 3
    assert hits[0]["distance"] < 0.03
    d = [h["distance"] for h in hits]
    assert d == sorted(d)
    for h in hits:
        assert set(h["mechanism"]) >= {"n", "adjacency", "types", "positions"}


def test_retrieve_rejects_bad_points(client):
    res = client.post("/retrieve", json={"points": [[0, 0]]})
    assert res.status_code == 400
    res = client.post("/retrieve", json={"points": [[0, 0], [1], [2, 2]]})
    assert res.status_code in (400, 422)


def test_retrieve_without_atlas():
    app = create_app()
    c = TestClient(app, raise_server_exceptions=False)
    res = c.post("/retrieve", json={"points": [[0, 0], [1, 0], [0, 1]]})
    assert res.status_code == 503
    assert res.json()["error"]["code"] == "no_atlas"
