import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otseg.errors import DataError
from otseg.metrics import (NULL_CLASS, Segment, apply_mapping, evaluate, frame_f1, frames_to_segments,
                           hungarian_match, mean_report, overlap_matrix, segmental_f1, segments_to_frames)
from otseg.synth import brute_force_hungarian

GT = [Segment(0, 0, 10), Segment(1, 10, 20)]
PRED = [Segment(0, 0, 10), Segment(1, 10, 15), Segment(0, 15, 20)]

labels_st = st.lists(st.integers(0, 4), min_size=1, max_size=60)


def test_frames_to_segments_examples():
    assert frames_to_segments([0, 0, 1, 1, 1]) == [Segment(0, 0, 2), Segment(1, 2, 5)]
    assert frames_to_segments([3] * 7) == [Segment(3, 0, 7)]
    assert frames_to_segments([0, 1, 0]) == [Segment(0, 0, 1), Segment(1, 1, 2), Segment(0, 2, 3)]
    assert frames_to_segments([]) == []


def test_segmental_f1_worked_examples():
    assert segmental_f1(PRED, GT, 0.5) == pytest.approx(0.8)
    assert segmental_f1(PRED, GT, 0.75) == pytest.approx(0.4)
    for tau in (0.1, 0.25, 0.5):
        assert segmental_f1(GT, GT, tau) == 1.0
    assert segmental_f1([], [], 0.5) == 1.0


def test_segmental_f1_rejects_bad_tilings():
    with pytest.raises(DataError):
        segmental_f1([Segment(0, 0, 5), Segment(1, 6, 10)], [Segment(0, 0, 10)], 0.5)
    with pytest.raises(DataError):
        segmental_f1([Segment(0, 0, 5)], [Segment(0, 0, 10)], 0.5)
    with pytest.raises(DataError):
        segments_to_frames([Segment(0, 0, 0)])


def test_frame_f1_examples():
    gt = np.array([0] * 5 + [1] * 5)
    assert frame_f1(gt, gt) == 1.0
    assert frame_f1(np.zeros(10, dtype=int), gt) == pytest.approx(1 / 3)
    assert frame_f1(1 - gt, gt) == 0.0


def test_hungarian_examples():
    gt = np.array([0, 0, 1, 1, 2, 2])
    assert hungarian_match(gt, gt, 3, 3) == {0: 0, 1: 1, 2: 2}
    perm = np.array([2, 0, 1])
    assert hungarian_match(perm[gt], gt, 3, 3) == {2: 0, 0: 1, 1: 2}
    assert int(overlap_matrix(gt, gt, 3, 3).trace()) == gt.size


def test_extra_clusters_map_to_null():
    gt = np.array([0, 0, 1, 1])
    pred = np.array([0, 1, 2, 2])
    mapping = hungarian_match(pred, gt, 3, 2)
    assert sorted(mapping.values()).count(NULL_CLASS) == 1
    assert NULL_CLASS in apply_mapping(pred, mapping)


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 2**31))
def test_hungarian_matches_brute_force(n_clusters, n_classes, seed):
    rng = np.random.default_rng(seed)
    gt = rng.integers(0, n_classes, size=40)
    pred = rng.integers(0, n_clusters, size=40)
    mapping = hungarian_match(pred, gt, n_clusters, n_classes)
    n = max(n_clusters, n_classes)
    square = np.zeros((n, n))
    square[:n_clusters, :n_classes] = overlap_matrix(pred, gt, n_clusters, n_classes)
    best = brute_force_hungarian(square)
    oracle = sum(square[i, best[i]] for i in range(n))
    got = sum(square[c, g] for c, g in mapping.items() if g != NULL_CLASS)
    assert got == oracle
    assert len(set(mapping)) == n_clusters


@settings(max_examples=100, deadline=None)
@given(labels_st, st.integers(0, 2**31))
def test_evaluate_is_permutation_invariant(gt, seed):
    gt = np.array(gt)
    rng = np.random.default_rng(seed)
    pred = rng.integers(0, 5, size=gt.size)
    perm = rng.permutation(5)
    a = evaluate(pred, gt, n_clusters=5, n_classes=5)
    b = evaluate(perm[pred], gt, n_clusters=5, n_classes=5)
    assert a.mof == b.mof and a.frame_f1 == b.frame_f1 and a.seg_f1 == b.seg_f1
    c = evaluate(perm[gt], gt)
    assert c.mof == 1.0 and c.frame_f1 == 1.0 and all(v == 1.0 for v in c.seg_f1.values())


@settings(max_examples=100, deadline=None)
@given(labels_st, labels_st)
def test_segmental_f1_monotone_in_tau(a, b):
    n = min(len(a), len(b))
    pa, pb = frames_to_segments(a[:n]), frames_to_segments(b[:n])
    scores = [segmental_f1(pa, pb, t) for t in np.linspace(0.01, 1.0, 12)]
    assert all(x >= y for x, y in zip(scores, scores[1:]))
    assert all(0.0 <= s <= 1.0 for s in scores)


@given(labels_st)
def test_flatten_round_trip(labels):
    labels = np.array(labels)
    segs = frames_to_segments(labels)
    assert np.array_equal(segments_to_frames(segs), labels)
    assert frames_to_segments(segments_to_frames(segs)) == segs


def test_random_prediction_mof_near_chance():
    gt = np.repeat(np.arange(7), 1000 // 7 + 1)[:1000]
    mofs = [evaluate(np.random.default_rng(s).integers(0, 7, 1000), gt).mof for s in range(100)]
    assert abs(np.mean(mofs) - 1 / 7) < 0.05


def test_evaluate_report_and_mean():
    gt = np.array([0] * 10 + [1] * 10)
    pred = np.array([1] * 10 + [0] * 5 + [1] * 5)
    r = evaluate(pred, gt, video_id="v")
    assert r.mof == pytest.approx(0.75)
    assert r.seg_f1[0.5] == pytest.approx(0.8)
    d = r.to_dict()
    assert set(d["seg_f1"]) == {"t10", "t25", "t50"}
    m = mean_report([r, evaluate(gt, gt)])
    assert m["mof"] == pytest.approx(0.875) and m["n_videos"] == 2
    with pytest.raises(DataError):
        evaluate(pred[:-1], gt)
