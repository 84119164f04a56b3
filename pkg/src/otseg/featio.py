"""Readers and writers for embedding tensors, frame tracks and label files.

Tensor file layout (all little-endian)::

    b"TSR1" | uint32 header length | JSON header | float32 payload (row-major)

The JSON header is ``{"rows": R, "cols": C, "dtype": "f32", "name": ...}``.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, FormatError, IoError

MAGIC = b"TSR1"
_LEN = struct.Struct("<I")


@dataclass(frozen=True)
class TensorFile:
    """A named 2-D float32 matrix."""

    data: np.ndarray
    name: str = ""

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype="<f4")
        if arr.ndim != 2:
            raise DataError(f"tensor must be 2-D, got shape {arr.shape}")
        object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def validate(self) -> None:
        rows, cols = self.shape
        if rows < 1 or cols < 1:
            raise DataError(f"tensor {self.name!r} has empty shape {self.shape}")
        if not np.isfinite(self.data).all():
            raise DataError(f"tensor {self.name!r} contains NaN or Inf")


def _atomic_write(path: Path, payload: bytes) -> None:
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def atomic_write_text(path, text: str) -> None:
    _atomic_write(Path(path), text.encode("utf-8"))


def encode_tensor(t: TensorFile) -> bytes:
    t.validate()
    rows, cols = t.shape
    header = json.dumps(
        {"rows": rows, "cols": cols, "dtype": "f32", "name": t.name},
        separators=(",", ":"),
    ).encode("utf-8")
    return MAGIC + _LEN.pack(len(header)) + header + t.data.tobytes(order="C")


def write_tensor(t: TensorFile, path) -> None:
    """Write ``t`` atomically; the file round-trips bit-exactly."""
    _atomic_write(Path(path), encode_tensor(t))


def decode_tensor(raw: bytes) -> TensorFile:
    if len(raw) < 8 or raw[:4] != MAGIC:
        raise FormatError("bad magic bytes, not a TSR1 tensor file")
    (hlen,) = _LEN.unpack_from(raw, 4)
    if 8 + hlen > len(raw):
        raise FormatError("header length runs past end of file")
    try:
        header = json.loads(raw[8 : 8 + hlen].decode("utf-8"))
        rows, cols = int(header["rows"]), int(header["cols"])
        dtype = header["dtype"]
        name = str(header.get("name", ""))
    except (ValueError, KeyError, TypeError, UnicodeDecodeError) as exc:
        raise FormatError(f"malformed tensor header: {exc}") from exc
    if dtype != "f32":
        raise FormatError(f"unsupported dtype {dtype!r}")
    if rows < 1 or cols < 1:
        raise DataError(f"declared shape ({rows}, {cols}) is empty")
    payload = raw[8 + hlen :]
    if len(payload) != rows * cols * 4:
        raise DataError(
            f"payload holds {len(payload)} bytes, header declares {rows}x{cols} float32"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(rows, cols).copy()
    t = TensorFile(data, name)
    t.validate()
    return t


def read_tensor(path) -> TensorFile:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return decode_tensor(raw)


def read_tensor_csv(path, name: str | None = None) -> TensorFile:
    """Fallback reader for small hand-written fixtures (comma separated)."""
    try:
        data = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise FormatError(f"unparseable CSV tensor {path}: {exc}") from exc
    t = TensorFile(data, Path(path).stem if name is None else name)
    t.validate()
    return t


def load_matrix(path) -> np.ndarray:
    """Read a ``.tsr`` or ``.csv`` file into a float64 array."""
    reader = read_tensor_csv if str(path).endswith(".csv") else read_tensor
    return reader(path).data.astype(np.float64)


@dataclass(frozen=True)
class GroundTruth:
    labels: np.ndarray
    class_names: list[str]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


def parse_labels(lines: list[str]) -> GroundTruth:
    if lines and lines[-1] == "":
        lines = lines[:-1]
    if not lines:
        raise DataError("label file is empty")
    for t, line in enumerate(lines):
        if not line.strip():
            raise DataError(f"blank label on line {t + 1}")
    lines = [line.strip() for line in lines]
    class_names = sorted(set(lines))
    index = {name: i for i, name in enumerate(class_names)}
    return GroundTruth(np.array([index[s] for s in lines], dtype=np.int64), class_names)


def read_labels(path) -> GroundTruth:
    """One label per line; classes are the sorted distinct strings."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return parse_labels(text.replace("\r\n", "\n").split("\n"))


def write_labels(labels, path, names: list[str] | None = None) -> None:
    if names is None:
        lines = [str(int(x)) for x in labels]
    else:
        lines = [names[int(x)] for x in labels]
    atomic_write_text(path, "\n".join(lines) + "\n")


@dataclass(frozen=True)
class FrameTrack:
    features: np.ndarray
    fps: float = 1.0
    timestamps: np.ndarray | None = None

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        if feats.ndim != 2 or feats.shape[0] < 1:
            raise DataError(f"frame features must be T x D with T >= 1, got {feats.shape}")
        if not np.isfinite(feats).all():
            raise DataError("frame features contain NaN or Inf")
        if self.fps <= 0:
            raise DataError(f"fps must be positive, got {self.fps}")
        ts = self.timestamps
        if ts is None:
            ts = np.arange(feats.shape[0], dtype=np.float64) / self.fps
        else:
            ts = np.asarray(ts, dtype=np.float64)
            if ts.shape != (feats.shape[0],):
                raise DataError("timestamps length differs from frame count")
            if np.any(np.diff(ts) <= 0):
                raise DataError("timestamps must be strictly increasing")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "timestamps", ts)

    @property
    def n_frames(self) -> int:
        return self.features.shape[0]


@dataclass
class FeatureBundle:
    """Per-video visual and per-frame text features.

    ``sentinel`` flags frames whose text row came from an uncaptioned gap.
    """

    video_id: str
    visual: np.ndarray
    text: np.ndarray
    sentinel: np.ndarray = field(default=None)
    timestamps: np.ndarray = field(default=None)

    def __post_init__(self):
        self.visual = np.asarray(self.visual, dtype=np.float64)
        self.text = np.asarray(self.text, dtype=np.float64)
        n = self.visual.shape[0]
        if self.text.shape[0] != n:
            raise DataError(
                f"{self.video_id}: {n} visual rows but {self.text.shape[0]} text rows"
            )
        if self.sentinel is None:
            self.sentinel = ~np.any(self.text != 0, axis=1)
        self.sentinel = np.asarray(self.sentinel, dtype=bool)
        if self.timestamps is None:
            self.timestamps = np.arange(n, dtype=np.float64)
        for name in ("visual", "text"):
            if not np.isfinite(getattr(self, name)).all():
                raise DataError(f"{self.video_id}: {name} features contain NaN or Inf")

    @property
    def n_frames(self) -> int:
        return self.visual.shape[0]
