"""
Captions, windows and sentinel frames
=====================================

Captions arrive per fixed-length window with window-local times. They are
shifted to global time, stitched, and any uncovered span becomes a sentinel
segment with a zero embedding. Each frame then looks up the caption that
covers its timestamp.
"""

# %%
import numpy as np

from otseg.captions import assign_frame_text, build_track, make_windows
from otseg.featio import FrameTrack

print("windows for a 70 s video, 30 s each:", [(w.start, w.end) for w in make_windows(70.0, 30.0)])

# %%
# Two captioned spans in window 0 and one in window 2; 10-60 s is uncaptioned.
rng = np.random.default_rng(0)
entries = [
    {"window_index": 0, "start": 0.0, "end": 4.0, "text": "trocar placement", "embedding": rng.random(4).tolist()},
    {"window_index": 0, "start": 4.0, "end": 10.0, "text": "dissection", "embedding": rng.random(4).tolist()},
    {"window_index": 2, "start": 0.0, "end": 10.0, "text": "clipping", "embedding": rng.random(4).tolist()},
]
track = build_track(entries, duration=70.0, window_len=30.0)
for seg in track.segments:
    print(f"[{seg.start:5.1f}, {seg.end:5.1f})  {'(sentinel)' if seg.sentinel else seg.text}")

# %%
# One frame per second; frames 10 to 59 have no caption.
frames = FrameTrack(np.zeros((70, 8)), fps=1.0)
text, sentinel = assign_frame_text(track, frames, return_mask=True)
print("sentinel frames:", int(sentinel.sum()), "of", len(sentinel))
print("frame 4 takes the second caption:", np.allclose(text[4], entries[1]["embedding"]))
