"""Window/time algebra for windowed captions and per-frame text lookup.

All intervals are half-open ``[start, end)``; a frame sitting exactly on a
boundary belongs to the later segment.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError, DomainError, FormatError, IoError
from .featio import FrameTrack, load_matrix

DEFAULT_WINDOW = 300.0


@dataclass(frozen=True)
class WindowSpec:
    index: int
    start: float
    end: float

    @property
    def length(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class CaptionSegment:
    start: float
    end: float
    text: str = ""
    embedding: np.ndarray | None = None
    sentinel: bool = False

    def __post_init__(self):
        if not self.start < self.end:
            raise DataError(f"caption segment has start {self.start} >= end {self.end}")
        if self.embedding is not None:
            emb = np.asarray(self.embedding, dtype=np.float64)
            if emb.ndim != 1 or not np.isfinite(emb).all():
                raise DataError("caption embedding must be a finite vector")
            object.__setattr__(self, "embedding", emb)


@dataclass(frozen=True)
class CaptionTrack:
    segments: tuple[CaptionSegment, ...]

    def __post_init__(self):
        segs = tuple(self.segments)
        for a, b in zip(segs, segs[1:]):
            if b.start < a.end:
                raise DataError(
                    f"caption segments overlap or are unordered: [{a.start},{a.end}) then [{b.start},{b.end})"
                )
        object.__setattr__(self, "segments", segs)

    def __len__(self):
        return len(self.segments)

    @property
    def end(self) -> float:
        return self.segments[-1].end if self.segments else 0.0

    def n_sentinel(self) -> int:
        return sum(s.sentinel for s in self.segments)


def make_windows(video_duration: float, window_len: float = DEFAULT_WINDOW) -> list[WindowSpec]:
    """Partition ``[0, video_duration)`` into consecutive windows of ``window_len``.

    >>> [(w.start, w.end) for w in make_windows(700, 300)]
    [(0, 300), (300, 600), (600, 700)]
    """
    if not video_duration > 0 or not window_len > 0:
        raise DomainError(f"duration and window length must be positive, got {video_duration}, {window_len}")
    n = max(1, math.ceil(video_duration / window_len))
    windows = []
    for m in range(n):
        start = m * window_len
        if start >= video_duration:
            break
        windows.append(WindowSpec(m, start, min((m + 1) * window_len, video_duration)))
    return windows


def to_global(window: WindowSpec, tau_start: float, tau_end: float) -> tuple[float, float]:
    if not (0 <= tau_start < tau_end <= window.length):
        raise DomainError(
            f"local interval ({tau_start}, {tau_end}) outside window of length {window.length}"
        )
    return window.start + tau_start, window.start + tau_end


def _sentinel(start: float, end: float) -> CaptionSegment:
    return CaptionSegment(start, end, "", None, sentinel=True)


def fill_gaps(segments, start: float, end: float) -> list[CaptionSegment]:
    """Sort ``segments`` and pad every uncovered span of ``[start, end)`` with sentinels."""
    segs = sorted(segments, key=lambda s: s.start)
    out: list[CaptionSegment] = []
    cursor = start
    for seg in segs:
        if seg.start < cursor:
            raise DataError(f"caption segment at {seg.start} overlaps previous ending {cursor}")
        if seg.start > cursor:
            out.append(_sentinel(cursor, seg.start))
        out.append(seg)
        cursor = seg.end
    if cursor < end:
        out.append(_sentinel(cursor, end))
    return out


def merge_windows(per_window) -> CaptionTrack:
    """Convert window-local caption segments to one global, gap-free track.

    ``per_window`` is a sequence of ``(WindowSpec, [CaptionSegment, ...])``
    whose segment times are relative to the window start.
    """
    merged: list[CaptionSegment] = []
    for window, local in sorted(per_window, key=lambda p: p[0].start):
        local = sorted(local, key=lambda s: s.start)
        for a, b in zip(local, local[1:]):
            if b.start < a.end:
                raise DataError(
                    f"window {window.index}: local captions [{a.start},{a.end}) and [{b.start},{b.end}) overlap"
                )
        placed = []
        for seg in local:
            g0, g1 = to_global(window, seg.start, seg.end)
            placed.append(CaptionSegment(g0, g1, seg.text, seg.embedding, seg.sentinel))
        merged.extend(fill_gaps(placed, window.start, window.end))
    return CaptionTrack(tuple(merged))


def track_dim(track: CaptionTrack) -> int | None:
    for seg in track.segments:
        if seg.embedding is not None:
            return seg.embedding.shape[0]
    return None


def assign_frame_text(track: CaptionTrack, frames: FrameTrack, dim: int | None = None,
                      return_mask: bool = False):
    """Give every frame the embedding of the caption interval containing it.

    Sentinel segments map to the zero vector. With ``return_mask`` the boolean
    sentinel mask is returned alongside the T x D matrix.
    """
    if dim is None:
        dim = track_dim(track)
    if dim is None:
        raise DataError("caption track carries no embeddings and no text dimension was given")
    ts = frames.timestamps
    if not track.segments:
        raise DataError("caption track is empty")
    starts = np.array([s.start for s in track.segments])
    ends = np.array([s.end for s in track.segments])
    idx = np.searchsorted(starts, ts, side="right") - 1
    bad = (idx < 0) | (ts >= ends[np.clip(idx, 0, None)])
    if bad.any():
        t = int(np.flatnonzero(bad)[0])
        raise DataError(f"frame {t} at {ts[t]}s is not covered by the caption track")
    table = np.zeros((len(track.segments), dim))
    mask = np.zeros(len(track.segments), dtype=bool)
    for j, seg in enumerate(track.segments):
        if seg.sentinel:
            mask[j] = True
        elif seg.embedding is None:
            raise DataError(f"caption segment [{seg.start},{seg.end}) has no embedding")
        elif seg.embedding.shape[0] != dim:
            raise DataError(f"caption embedding dimension {seg.embedding.shape[0]} != {dim}")
        else:
            table[j] = seg.embedding
    out = table[idx]
    if return_mask:
        return out, mask[idx]
    return out


def read_captions(path, embeddings=None) -> list[dict]:
    """Parse a caption JSON array, attaching embeddings row by row if given.

    ``embeddings`` may be a path to a tensor file or an array whose row ``j``
    pairs with entry ``j``.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read captions {path}: {exc}") from exc
    except ValueError as exc:
        raise FormatError(f"caption file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise FormatError("caption file must hold a JSON array")
    if embeddings is not None and not isinstance(embeddings, np.ndarray):
        embeddings = load_matrix(embeddings)
    if embeddings is not None and embeddings.shape[0] != len(doc):
        raise DataError(f"{embeddings.shape[0]} embedding rows for {len(doc)} captions")
    entries = []
    for j, item in enumerate(doc):
        try:
            entry = {
                "start": float(item["start"]),
                "end": float(item["end"]),
                "text": str(item.get("text", "")),
                "window_index": item.get("window_index"),
                "embedding": item.get("embedding"),
            }
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"caption entry {j} malformed: {exc}") from exc
        if embeddings is not None:
            entry["embedding"] = embeddings[j]
        entries.append(entry)
    return entries


def build_track(entries: list[dict], duration: float, window_len: float = DEFAULT_WINDOW) -> CaptionTrack:
    """Assemble a track covering ``[0, duration)`` from parsed caption entries."""
    segs = [
        (e.get("window_index"), CaptionSegment(e["start"], e["end"], e["text"], e.get("embedding")))
        for e in entries
    ]
    windowed = [w for w, _ in segs if w is not None]
    if windowed and len(windowed) != len(segs):
        raise FormatError("caption file mixes window-local and global entries")
    if windowed:
        windows = make_windows(duration, window_len)
        groups: dict[int, list[CaptionSegment]] = {w.index: [] for w in windows}
        for m, seg in segs:
            if int(m) not in groups:
                raise DataError(f"window_index {m} beyond video of {duration}s")
            groups[int(m)].append(seg)
        return merge_windows([(w, groups[w.index]) for w in windows])
    plain = [s for _, s in segs if s.start < duration]
    plain = [s if s.end <= duration else CaptionSegment(s.start, duration, s.text, s.embedding) for s in plain]
    return CaptionTrack(tuple(fill_gaps(plain, 0.0, duration)))


def write_captions(track: CaptionTrack, path) -> None:
    """Write the non-sentinel segments as a global-time caption array."""
    from .featio import atomic_write_text

    doc = [{"start": s.start, "end": s.end, "text": s.text} for s in track.segments if not s.sentinel]
    atomic_write_text(path, json.dumps(doc, indent=1))
