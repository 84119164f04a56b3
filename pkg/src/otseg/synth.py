"""Synthetic multimodal videos with known segmentations, and brute-force oracles.

The oracles here deliberately share no numerical code with the solver or the
evaluation module.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .captions import CaptionSegment, CaptionTrack, assign_frame_text, fill_gaps, write_captions
from .errors import GenError, SizeError
from .featio import (FeatureBundle, FrameTrack, GroundTruth, TensorFile, atomic_write_text,
                     write_labels, write_tensor)

MAX_CENTER_TRIES = 10_000


@dataclass
class SynthSpec:
    t_frames: int = 500
    k_true: int = 5
    d_img: int = 32
    d_text: int = 32
    sigma_img: float = 0.15
    sigma_text: float = 0.05
    min_seg_len: int = 20
    order: str = "monotone"
    caption_coverage: float = 1.0
    seed: int = 0
    # exact pairwise angle (degrees) between visual centers; None -> random >= 60 deg
    img_angle: float | None = None
    # Dirichlet concentration for segment lengths; larger -> more even
    length_concentration: float = 8.0
    fps: float = 1.0

    def validate(self) -> "SynthSpec":
        if self.k_true < 1 or self.t_frames < 1 or self.min_seg_len < 1:
            raise GenError("t_frames, k_true and min_seg_len must be positive")
        if self.t_frames < self.k_true * self.min_seg_len:
            raise GenError(
                f"t_frames={self.t_frames} cannot hold {self.k_true} segments of >= {self.min_seg_len} frames"
            )
        if not 0.0 <= self.caption_coverage <= 1.0:
            raise GenError(f"caption_coverage must lie in [0, 1], got {self.caption_coverage}")
        if self.order not in ("monotone", "shuffled"):
            raise GenError(f"order must be 'monotone' or 'shuffled', got {self.order!r}")
        if self.sigma_img < 0 or self.sigma_text < 0:
            raise GenError("noise levels must be >= 0")
        return self


def separated_centers(k: int, dim: int, rng, max_cos: float = 0.5) -> np.ndarray:
    """Unit vectors with pairwise cosine <= ``max_cos``, by rejection sampling."""
    centers: list[np.ndarray] = []
    for _ in range(MAX_CENTER_TRIES):
        if len(centers) == k:
            break
        v = rng.standard_normal(dim)
        v /= np.linalg.norm(v)
        if all(float(v @ c) <= max_cos for c in centers):
            centers.append(v)
    if len(centers) < k:
        raise GenError(f"could not place {k} centers {math.degrees(math.acos(max_cos)):.0f} deg apart in {dim}-D")
    return np.stack(centers)


def equiangular_centers(k: int, dim: int, angle_deg: float, rng) -> np.ndarray:
    """``k`` unit vectors whose every pairwise angle equals ``angle_deg``.

    Built as ``cos(t) u + sin(t) v_k`` with orthonormal ``u, v_1..v_k`` and
    ``cos(t)^2`` equal to the target cosine.
    """
    if dim < k + 1:
        raise GenError(f"need dim >= k + 1 for equiangular centers, got dim={dim}, k={k}")
    target = math.cos(math.radians(angle_deg))
    if target < 0:
        raise GenError("equiangular construction requires an angle <= 90 degrees")
    q, _ = np.linalg.qr(rng.standard_normal((dim, k + 1)))
    u, v = q[:, 0], q[:, 1:].T
    c = math.sqrt(target)
    return c * u[None, :] + math.sqrt(1.0 - target) * v


def _noisy(center: np.ndarray, sigma: float, n: int, rng) -> np.ndarray:
    x = center[None, :] + sigma * rng.standard_normal((n, center.shape[0]))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def sample_segmentation(spec: SynthSpec, rng) -> np.ndarray:
    """Per-frame class labels: one contiguous segment per class."""
    k = spec.k_true
    extra = spec.t_frames - k * spec.min_seg_len
    weights = rng.dirichlet(np.full(k, spec.length_concentration))
    lengths = spec.min_seg_len + rng.multinomial(extra, weights)
    order = np.arange(k) if spec.order == "monotone" else rng.permutation(k)
    return np.repeat(order, lengths)


def generate(spec: SynthSpec):
    """Returns ``(FeatureBundle, CaptionTrack, GroundTruth)``; deterministic per seed."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    k = spec.k_true
    if spec.img_angle is None:
        img_centers = separated_centers(k, spec.d_img, rng)
    else:
        img_centers = equiangular_centers(k, spec.d_img, spec.img_angle, rng)
    text_centers = separated_centers(k, spec.d_text, rng)
    labels = sample_segmentation(spec, rng)
    T = spec.t_frames

    visual = np.empty((T, spec.d_img))
    for c in range(k):
        idx = labels == c
        visual[idx] = _noisy(img_centers[c], spec.sigma_img, int(idx.sum()), rng)

    bounds = np.flatnonzero(np.diff(labels)) + 1
    starts = np.concatenate([[0], bounds])
    ends = np.concatenate([bounds, [T]])
    n_seg = len(starts)
    n_cap = int(round(spec.caption_coverage * n_seg))
    captioned = set(rng.choice(n_seg, size=n_cap, replace=False).tolist()) if n_cap else set()
    segments = []
    for j, (s, e) in enumerate(zip(starts, ends)):
        if j not in captioned:
            continue
        c = int(labels[s])
        emb = _noisy(text_centers[c], spec.sigma_text, 1, rng)[0]
        segments.append(CaptionSegment(s / spec.fps, e / spec.fps, f"step {c}", emb))
    track = CaptionTrack(tuple(fill_gaps(segments, 0.0, T / spec.fps)))

    frames = FrameTrack(visual, fps=spec.fps)
    text, sentinel = assign_frame_text(track, frames, dim=spec.d_text, return_mask=True)
    bundle = FeatureBundle(f"synth{spec.seed:03d}", visual, text, sentinel, frames.timestamps)
    names = [f"phase{c:02d}" for c in range(k)]
    return bundle, track, GroundTruth(labels.astype(np.int64), names)


def write_fixture(directory, specs) -> list[str]:
    """Write one sub-directory per spec plus a top-level ``manifest.json``.

    Each video directory holds ``visual.tsr``, ``captions.json`` (global
    times), ``captions.tsr`` (row j embeds caption j, omitted when there are
    no captions), ``labels.txt`` and ``spec.json``.
    """
    root = Path(directory)
    root.mkdir(parents=True, exist_ok=True)
    ids = []
    for spec in specs:
        bundle, track, gt = generate(spec)
        vdir = root / bundle.video_id
        vdir.mkdir(exist_ok=True)
        write_tensor(TensorFile(bundle.visual, "visual"), vdir / "visual.tsr")
        write_captions(track, vdir / "captions.json")
        embs = [s.embedding for s in track.segments if not s.sentinel]
        if embs:
            write_tensor(TensorFile(np.stack(embs), "captions"), vdir / "captions.tsr")
        write_labels(gt.labels, vdir / "labels.txt", gt.class_names)
        atomic_write_text(vdir / "spec.json", json.dumps(asdict(spec), indent=1))
        ids.append(bundle.video_id)
    atomic_write_text(root / "manifest.json", json.dumps({"videos": ids}, indent=1))
    return ids


def brute_force_ot(cost, alpha: float, lambda_ub: float):
    """Best deterministic labeling by exhaustive enumeration.

    Each labeling is scored as a plan with mass 1/T on its chosen cells:
    unary cost + alpha * transition mass + lambda_ub * KL(column mass || 1/K).
    Returns ``(labels, objective)``.
    """
    cost = np.asarray(cost, dtype=np.float64)
    T, K = cost.shape
    if K ** T > 10 ** 6:
        raise SizeError(f"{K}^{T} labelings exceed the enumeration budget")
    best_val = math.inf
    best = None
    for lab in itertools.product(range(K), repeat=T):
        val = 0.0
        for t in range(T):
            val += cost[t, lab[t]] / T
        for t in range(T - 1):
            if lab[t] != lab[t + 1]:
                val += alpha / (T * T)
        if lambda_ub:
            kl = 0.0
            for k in range(K):
                q = lab.count(k) / T
                if q > 0:
                    kl += q * math.log(q * K)
                kl += 1.0 / K - q
            val += lambda_ub * kl
        if val < best_val - 1e-15:
            best_val, best = val, lab
    return np.array(best), best_val


def brute_force_hungarian(overlap) -> np.ndarray:
    """Row-to-column permutation maximizing total overlap (side <= 8)."""
    M = np.asarray(overlap, dtype=np.float64)
    n = M.shape[0]
    if M.shape != (n, n):
        raise SizeError("overlap matrix must be square")
    if n > 8:
        raise SizeError(f"side {n} exceeds the brute-force limit of 8")
    best_val, best = -math.inf, None
    for perm in itertools.permutations(range(n)):
        val = sum(M[i, perm[i]] for i in range(n))
        if val > best_val:
            best_val, best = val, perm
    return np.array(best, dtype=np.int64)
