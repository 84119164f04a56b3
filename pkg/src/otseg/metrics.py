"""Cluster-to-class matching and segmentation metrics (MoF, frame F1, segmental F1)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DataError

DEFAULT_THRESHOLDS = (0.10, 0.25, 0.50)
NULL_CLASS = -1


class Segment(NamedTuple):
    label: int
    start: int
    end: int


@dataclass
class EvalReport:
    mapping: dict[int, int]
    mof: float
    frame_f1: float
    seg_f1: dict[float, float]
    video_id: str = ""
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "video_id": self.video_id,
            "mapping": {str(k): int(v) for k, v in self.mapping.items()},
            "mof": self.mof,
            "frame_f1": self.frame_f1,
            "seg_f1": {f"t{round(t * 100):02d}": v for t, v in self.seg_f1.items()},
        }


def overlap_matrix(pred, gt, n_clusters: int, n_classes: int) -> np.ndarray:
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise DataError(f"prediction has {pred.shape[0]} frames, ground truth {gt.shape[0]}")
    if pred.size and (pred.min() < 0 or pred.max() >= n_clusters or gt.min() < 0 or gt.max() >= n_classes):
        raise DataError("label index out of range")
    O = np.zeros((n_clusters, n_classes), dtype=np.int64)
    np.add.at(O, (pred, gt), 1)
    return O


def hungarian_match(pred, gt, n_clusters: int, n_classes: int) -> dict[int, int]:
    """One-to-one cluster -> class map maximizing frame overlap.

    The overlap matrix is zero-padded to a square; a cluster matched to a
    padding column maps to ``NULL_CLASS``.
    """
    O = overlap_matrix(pred, gt, n_clusters, n_classes)
    # Rows are visited in order of first appearance so that ties between
    # equally good assignments resolve the same way under any relabeling of
    # the clusters; clusters that never occur go last.
    pred = np.asarray(pred)
    seen, first = np.unique(pred, return_index=True)
    present = set(seen.tolist())
    order = list(seen[np.argsort(first)]) + [c for c in range(n_clusters) if c not in present]
    n = max(n_clusters, n_classes)
    square = np.zeros((n, n), dtype=np.int64)
    square[:n_clusters, :n_classes] = O[order]
    rows, cols = linear_sum_assignment(square, maximize=True)
    return {int(order[r]): (int(c) if c < n_classes else NULL_CLASS)
            for r, c in zip(rows, cols) if r < n_clusters}


def apply_mapping(pred, mapping: dict[int, int]) -> np.ndarray:
    pred = np.asarray(pred)
    lut = np.full(max(mapping) + 1 if mapping else 1, NULL_CLASS, dtype=np.int64)
    for c, g in mapping.items():
        lut[c] = g
    return lut[pred]


def frames_to_segments(labels) -> list[Segment]:
    labels = np.asarray(labels)
    if labels.size == 0:
        return []
    cuts = np.flatnonzero(labels[1:] != labels[:-1]) + 1
    starts = np.concatenate([[0], cuts])
    ends = np.concatenate([cuts, [labels.size]])
    return [Segment(int(labels[s]), int(s), int(e)) for s, e in zip(starts, ends)]


def segments_to_frames(segments) -> np.ndarray:
    _check_tiling(segments)
    if not segments:
        return np.zeros(0, dtype=np.int64)
    out = np.empty(segments[-1].end, dtype=np.int64)
    for seg in segments:
        out[seg.start:seg.end] = seg.label
    return out


def _check_tiling(segments) -> int:
    cursor = 0
    for seg in segments:
        if seg.start != cursor or seg.end <= seg.start:
            raise DataError(f"segments do not tile the timeline at frame {cursor}")
        cursor = seg.end
    return cursor


def _iou(a: Segment, b: Segment) -> float:
    inter = min(a.end, b.end) - max(a.start, b.start)
    if inter <= 0:
        return 0.0
    return inter / (max(a.end, b.end) - min(a.start, b.start))


def segmental_f1(pred_segments, gt_segments, tau: float) -> float:
    """F1 over segments with greedy one-to-one matching at IoU >= ``tau``.

    Predicted segments are visited left to right; each claims the unmatched
    same-class ground-truth segment of highest IoU if that IoU reaches ``tau``.
    """
    if _check_tiling(pred_segments) != _check_tiling(gt_segments):
        raise DataError("prediction and ground truth cover different lengths")
    if not pred_segments and not gt_segments:
        return 1.0
    used = [False] * len(gt_segments)
    tp = fp = 0
    for p in pred_segments:
        best, best_iou = -1, -1.0
        for j, g in enumerate(gt_segments):
            if used[j] or g.label != p.label:
                continue
            iou = _iou(p, g)
            if iou >= tau and iou > best_iou:
                best, best_iou = j, iou
        if best >= 0:
            used[best] = True
            tp += 1
        else:
            fp += 1
    fn = len(gt_segments) - tp
    return 2 * tp / (2 * tp + fp + fn)


def frame_f1(pred_mapped, gt, n_classes: int | None = None) -> float:
    """Macro F1 over the classes present in ``gt``."""
    pred_mapped = np.asarray(pred_mapped)
    gt = np.asarray(gt)
    if pred_mapped.shape != gt.shape:
        raise DataError("prediction and ground truth lengths differ")
    scores = []
    for c in np.unique(gt):
        tp = np.sum((pred_mapped == c) & (gt == c))
        fp = np.sum((pred_mapped == c) & (gt != c))
        fn = np.sum((pred_mapped != c) & (gt == c))
        scores.append(2 * tp / (2 * tp + fp + fn) if tp else 0.0)
    return float(np.mean(scores)) if scores else 1.0


def evaluate(pred_clusters, gt, thresholds=DEFAULT_THRESHOLDS, n_clusters: int | None = None,
             n_classes: int | None = None, video_id: str = "") -> EvalReport:
    pred_clusters = np.asarray(pred_clusters, dtype=np.int64)
    gt = np.asarray(gt, dtype=np.int64)
    if pred_clusters.shape != gt.shape:
        raise DataError(f"prediction has {pred_clusters.size} frames, ground truth {gt.size}")
    n_clusters = int(pred_clusters.max()) + 1 if n_clusters is None else n_clusters
    n_classes = int(gt.max()) + 1 if n_classes is None else n_classes
    mapping = hungarian_match(pred_clusters, gt, n_clusters, n_classes)
    mapped = apply_mapping(pred_clusters, mapping)
    pred_segs = frames_to_segments(mapped)
    gt_segs = frames_to_segments(gt)
    return EvalReport(
        mapping=mapping,
        mof=float(np.mean(mapped == gt)),
        frame_f1=frame_f1(mapped, gt, n_classes),
        seg_f1={float(t): segmental_f1(pred_segs, gt_segs, t) for t in thresholds},
        video_id=video_id,
    )


def mean_report(reports: list[EvalReport]) -> dict:
    """Dataset-level mean of the per-video metrics."""
    if not reports:
        return {}
    taus = list(reports[0].seg_f1)
    return {
        "n_videos": len(reports),
        "mof": float(np.mean([r.mof for r in reports])),
        "frame_f1": float(np.mean([r.frame_f1 for r in reports])),
        "seg_f1": {f"t{round(t * 100):02d}": float(np.mean([r.seg_f1[t] for r in reports])) for t in taus},
    }
