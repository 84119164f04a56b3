"""Loading videos from fixture directories.

A video directory contains ``visual.tsr`` (or ``visual.csv``), optionally
``captions.json`` with ``captions.tsr``, ``labels.txt`` and ``spec.json``.
A fixture directory holds several of these and a ``manifest.json`` listing
them as ``{"videos": [...]}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .captions import DEFAULT_WINDOW, assign_frame_text, build_track, read_captions
from .errors import ConfigError, DataError
from .featio import FeatureBundle, FrameTrack, GroundTruth, load_matrix, parse_labels, read_labels


@dataclass
class Video:
    bundle: FeatureBundle
    gt: GroundTruth | None
    path: Path | None = None

    @property
    def video_id(self) -> str:
        return self.bundle.video_id


def _first(vdir: Path, *names) -> Path | None:
    for n in names:
        if (vdir / n).exists():
            return vdir / n
    return None


def load_bundle(features, captions=None, caption_embeddings=None, *, video_id: str | None = None,
                fps: float = 1.0, window_len: float = DEFAULT_WINDOW, text_dim: int | None = None,
                require_text: bool = False) -> FeatureBundle:
    """Assemble a bundle from a visual feature file and an optional caption file."""
    visual = load_matrix(features)
    frames = FrameTrack(visual, fps=fps)
    vid = video_id or Path(features).parent.name or Path(features).stem
    if captions is None:
        if require_text:
            raise ConfigError("this fusion mode needs a captions file")
        dim = text_dim or 1
        return FeatureBundle(vid, visual, np.zeros((frames.n_frames, dim)),
                             np.ones(frames.n_frames, dtype=bool), frames.timestamps)
    entries = read_captions(captions, caption_embeddings)
    duration = frames.n_frames / fps
    track = build_track(entries, duration, window_len)
    text, sentinel = assign_frame_text(track, frames, dim=text_dim, return_mask=True)
    return FeatureBundle(vid, visual, text, sentinel, frames.timestamps)


def load_video(vdir, *, fps: float = 1.0, window_len: float = DEFAULT_WINDOW,
               require_text: bool = False) -> Video:
    vdir = Path(vdir)
    features = _first(vdir, "visual.tsr", "visual.csv")
    if features is None:
        raise DataError(f"{vdir} has no visual.tsr or visual.csv")
    captions = _first(vdir, "captions.json")
    embeddings = _first(vdir, "captions.tsr", "captions.csv")
    text_dim = None
    spec_file = vdir / "spec.json"
    if spec_file.exists():
        spec = json.loads(spec_file.read_text())
        text_dim = spec.get("d_text")
        fps = spec.get("fps", fps)
    if captions is not None and embeddings is None:
        # inline embeddings or no captioned segment at all
        entries = json.loads(captions.read_text())
        if not entries and text_dim is None:
            raise DataError(f"{vdir}: empty captions and no text dimension in spec.json")
    bundle = load_bundle(features, captions, embeddings, video_id=vdir.name, fps=fps,
                         window_len=window_len, text_dim=text_dim, require_text=require_text)
    labels_file = vdir / "labels.txt"
    gt = read_labels(labels_file) if labels_file.exists() else None
    if gt is not None and gt.labels.shape[0] != bundle.n_frames:
        raise DataError(f"{vdir}: {gt.labels.shape[0]} labels for {bundle.n_frames} frames")
    return Video(bundle, gt, vdir)


def video_dirs(path) -> list[Path]:
    """Video directories under ``path`` (a fixture root or a single video)."""
    path = Path(path)
    if path.is_file() and path.suffix == ".json":
        root, manifest = path.parent, json.loads(path.read_text())
    elif (path / "manifest.json").exists():
        root, manifest = path, json.loads((path / "manifest.json").read_text())
    elif _first(path, "visual.tsr", "visual.csv"):
        return [path]
    else:
        raise DataError(f"{path} is neither a video directory nor a fixture with manifest.json")
    try:
        return [root / v for v in manifest["videos"]]
    except (KeyError, TypeError) as exc:
        raise DataError(f"manifest in {root} lacks a 'videos' list") from exc


def load_videos(path, **kw) -> list[Video]:
    return [load_video(d, **kw) for d in video_dirs(path)]


def read_cluster_labels(path) -> np.ndarray:
    """Integer cluster ids, one per line (falls back to string labels)."""
    lines = Path(path).read_text(encoding="utf-8").replace("\r\n", "\n").split("\n")
    gt = parse_labels(lines)
    try:
        return np.array([int(s) for s in lines if s.strip()], dtype=np.int64)
    except ValueError:
        return gt.labels
