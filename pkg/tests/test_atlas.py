import numpy as np
import pytest

from linkatlas.atlas import Atlas
from linkatlas.curves import chamfer, is_arc, is_circle, normalize
from linkatlas.generator import GenerationConfig, GenerationRun
from linkatlas.mechanism import JointType
from linkatlas.records import CurveRecord, FormatError


@pytest.fixture(scope="module")
def small_corpus():
    """A few dozen mechanisms' worth of normalized curves plus their sources."""
    run = GenerationRun(GenerationConfig(count=30, seed=21))
    mechanisms, records = {}, []
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
    return records, mechanisms


@pytest.fixture(scope="module")
def atlas(small_corpus):
    records, mechanisms = small_corpus
    return Atlas.build(records, mechanisms, seed=3)


def test_build_rejects_dangling_reference():
    rec = CurveRecord(mech_id=99, joint_id=0, is_arc=False, is_circle=False,
                      points=[[0.0, 0.5], [1.0, 0.5]])
    with pytest.raises(FormatError):
        Atlas.build([rec], {})


def test_shuffle_order_is_seeded(small_corpus):
    records, mechanisms = small_corpus
    a = Atlas.build(records, mechanisms, seed=3)
    b = Atlas.build(records, mechanisms, seed=3)
    c = Atlas.build(records, mechanisms, seed=4)
    assert np.array_equal(a.order, b.order)
    assert not np.array_equal(a.order, c.order)


def test_self_retrieval_distance_zero(atlas):
    for i in [0, len(atlas) // 2, len(atlas) - 1]:
        hits = atlas.retrieve(atlas.points[i], k=1)
        assert hits[0].distance == 0.0
        assert not hits[0].above_threshold


def test_retrieve_sorted_and_bounded(atlas):
    rng = np.random.default_rng(0)
    t = np.linspace(0, 2 * np.pi, 80, endpoint=False)
    query = np.stack([np.cos(t) + 0.2 * np.cos(3 * t), np.sin(t)], axis=1)
    hits = atlas.retrieve(query, k=3)
    assert 1 <= len(hits) <= 3
    d = [h.distance for h in hits]
    assert d == sorted(d)
    for h in hits:
        # reported distance is a real chamfer distance to the stored curve
        assert chamfer(normalize(query), h.curve) == pytest.approx(h.distance, abs=1e-12)


def test_padding_flags_above_threshold(atlas):
    # a far-away shape has no sub-threshold matches; hits come padded
    query = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]], dtype=float)
    hits = atlas.retrieve(query, k=3, threshold=1e-6)
    assert len(hits) == 3
    assert all(h.above_threshold for h in hits)


def test_hit_mechanisms_are_reduced(atlas):
    hits = atlas.retrieve(atlas.points[0], k=1)
    hit = hits[0]
    full = atlas.mechanisms[hit.mech_id]
    assert hit.mechanism.n <= full.n


def test_save_load_round_trip(atlas, tmp_path):
    atlas.save(tmp_path / "atlas")
    back = Atlas.load(tmp_path / "atlas")
    assert len(back) == len(atlas)
    assert np.array_equal(back.order, atlas.order)
    assert back.points.tobytes() == atlas.points.tobytes()
    hits_a = atlas.retrieve(atlas.points[5], k=2)
    hits_b = back.retrieve(back.points[5], k=2)
    assert [(h.mech_id, h.joint_id, h.distance) for h in hits_a] == \
           [(h.mech_id, h.joint_id, h.distance) for h in hits_b]


def test_resampled_atlas_still_matches(small_corpus):
    records, mechanisms = small_corpus
    small = Atlas.build(records, mechanisms, seed=3, resample_to=64)
    assert small.points.shape[1] == 64
    hits = small.retrieve(np.asarray(records[0].points), k=1)
    assert hits[0].distance < 0.03


def test_brute_force_equivalence(atlas):
    """Shuffle-and-scan with threshold=inf and k = atlas size must order
    exactly like a direct chamfer sweep."""
    t = np.linspace(0, 2 * np.pi, 60, endpoint=False)
    query = normalize(np.stack([np.cos(t), 0.5 * np.sin(2 * t)], axis=1))
    brute = sorted(
        (chamfer(query, atlas.points[i]), i) for i in range(len(atlas))
    )
    hits = atlas.retrieve(query, k=len(atlas), threshold=np.inf)
    assert len(hits) == len(atlas)
    got = [h.distance for h in hits]
    want = [d for d, _ in brute]
    assert np.allclose(got, want, atol=1e-12)


def test_coarse_filter_budget(atlas):
    query = atlas.points[3]
    subset = atlas.coarse_filter(query, budget=10)
    assert len(subset) == 10
    full = atlas.coarse_filter(query, budget=10 ** 9)
    assert np.array_equal(full, atlas.order)


def test_empty_atlas():
    a = Atlas(np.zeros((0, 0, 2)), np.zeros(0), np.zeros(0), {}, seed=0)
    assert a.retrieve(np.array([[0.0, 0.0], [1.0, 0.0]])) == []
