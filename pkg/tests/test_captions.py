import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from otseg.captions import (CaptionSegment, CaptionTrack, WindowSpec, assign_frame_text, build_track,
                            make_windows, merge_windows, read_captions, to_global)
from otseg.errors import DataError, DomainError
from otseg.featio import FrameTrack


@pytest.mark.parametrize("duration,W,expected", [
    (700, 300, [(0, 300), (300, 600), (600, 700)]),
    (300, 300, [(0, 300)]),
    (10, 300, [(0, 10)]),
])
def test_make_windows(duration, W, expected):
    assert [(w.start, w.end) for w in make_windows(duration, W)] == expected


@pytest.mark.parametrize("duration,W", [(0, 300), (100, 0), (-5, 10)])
def test_make_windows_domain(duration, W):
    with pytest.raises(DomainError):
        make_windows(duration, W)


@settings(max_examples=200, deadline=None)
@given(st.floats(0.5, 1e5), st.floats(0.5, 2e3))
def test_windows_partition(duration, W):
    ws = make_windows(duration, W)
    assert ws[0].start == 0
    assert ws[-1].end == duration
    for a, b in zip(ws, ws[1:]):
        assert a.end == b.start
    assert all(w.start < w.end for w in ws)


def test_to_global():
    assert to_global(WindowSpec(1, 300, 600), 12, 47) == (312, 347)
    assert to_global(WindowSpec(0, 0, 300), 0, 300) == (0, 300)
    with pytest.raises(DomainError):
        to_global(WindowSpec(2, 600, 700), 0, 120)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 20), st.floats(0, 299), st.floats(0.01, 1))
def test_to_global_preserves_length(m, a, frac):
    w = WindowSpec(m, 300.0 * m, 300.0 * (m + 1))
    b = a + frac * (300 - a)
    if b <= a:
        return
    g0, g1 = to_global(w, a, b)
    assert g1 - g0 == pytest.approx(b - a, abs=1e-9)


def _seg(s, e, v=None):
    return CaptionSegment(s, e, "t", None if v is None else np.array(v, float))


def test_merge_two_full_windows():
    w0, w1 = make_windows(600, 300)
    track = merge_windows([(w0, [_seg(0, 100, [1, 0]), _seg(100, 300, [0, 1])]),
                           (w1, [_seg(0, 300, [1, 1])])])
    assert [(s.start, s.end) for s in track.segments] == [(0, 100), (100, 300), (300, 600)]
    assert track.n_sentinel() == 0


def test_merge_fills_empty_window():
    ws = make_windows(900, 300)
    track = merge_windows([(ws[0], [_seg(0, 300, [1])]), (ws[1], []), (ws[2], [_seg(0, 300, [2])])])
    spans = [(s.start, s.end, s.sentinel) for s in track.segments]
    assert spans == [(0, 300, False), (300, 600, True), (600, 900, False)]


def test_merge_overlap_rejected():
    (w,) = make_windows(300, 300)
    with pytest.raises(DataError):
        merge_windows([(w, [_seg(0, 50), _seg(40, 90)])])


def test_assign_frame_text():
    track = CaptionTrack((_seg(0, 10, [1, 0]), _seg(10, 20, [0, 1])))
    frames = FrameTrack(np.zeros((20, 3)))
    text = assign_frame_text(track, frames)
    assert text.shape == (20, 2)
    assert np.all(text[:10] == [1, 0])
    assert np.all(text[10:] == [0, 1])  # frame exactly at 10 s goes to the later segment
    assert np.array_equal(assign_frame_text(track, frames), text)


def test_assign_beyond_coverage():
    track = CaptionTrack((_seg(0, 10, [1]), _seg(10, 20, [2])))
    with pytest.raises(DataError):
        assign_frame_text(track, FrameTrack(np.zeros((26, 1))))


def test_sentinel_rows_are_zero():
    track = CaptionTrack((_seg(0, 2, [1, 1]), CaptionSegment(2, 4, sentinel=True)))
    text, mask = assign_frame_text(track, FrameTrack(np.zeros((4, 1))), return_mask=True)
    assert mask.tolist() == [False, False, True, True]
    assert np.all(text[2:] == 0)


def test_caption_file_window_local(tmp_path):
    doc = [{"start": 0, "end": 100, "text": "a", "window_index": 0, "embedding": [1, 0]},
           {"start": 0, "end": 50, "text": "b", "window_index": 1, "embedding": [0, 1]}]
    p = tmp_path / "c.json"
    p.write_text(json.dumps(doc))
    track = build_track(read_captions(p), duration=400, window_len=300)
    spans = [(s.start, s.end, s.sentinel) for s in track.segments]
    assert spans == [(0, 100, False), (100, 300, True), (300, 350, False), (350, 400, True)]


def test_caption_file_parallel_embeddings(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps([{"start": 0, "end": 5, "text": "a"}, {"start": 5, "end": 10, "text": "b"}]))
    entries = read_captions(p, np.array([[1.0, 2.0], [3.0, 4.0]]))
    track = build_track(entries, duration=10)
    text = assign_frame_text(track, FrameTrack(np.zeros((10, 1))))
    assert text[7].tolist() == [3.0, 4.0]
    with pytest.raises(DataError):
        read_captions(p, np.ones((3, 2)))
