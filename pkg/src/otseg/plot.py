"""SVG timeline: ground-truth band above, prediction band below."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .errors import DataError
from .metrics import NULL_CLASS, apply_mapping, frames_to_segments, hungarian_match

PALETTE = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
    "#7f7f7f", "#bcbd22", "#17becf", "#aec7e8", "#ffbb78", "#98df8a", "#ff9896",
    "#c5b0d5", "#c49c94", "#f7b6d2", "#dbdb8d", "#9edae5", "#393b79",
]
NULL_COLOR = "#d9d9d9"

WIDTH = 1000.0
BAND_H = 28.0
LEFT = 60.0


def class_color(c: int) -> str:
    if c == NULL_CLASS:
        return NULL_COLOR
    return PALETTE[c % len(PALETTE)]


def _band(labels, y: float, band_id: str) -> list[str]:
    T = len(labels)
    scale = (WIDTH - LEFT - 10) / T
    out = [f'<g id="{band_id}">']
    for seg in frames_to_segments(labels):
        x0 = LEFT + seg.start * scale
        w = (seg.end - seg.start) * scale
        out.append(
            f'<rect x="{x0:.3f}" y="{y:.1f}" width="{w:.3f}" height="{BAND_H:.1f}" '
            f'fill="{class_color(seg.label)}" data-label="{seg.label}" '
            f'data-start="{seg.start}" data-end="{seg.end}"/>'
        )
    out.append("</g>")
    return out


def timeline_svg(pred, gt, class_names: list[str] | None = None, map_clusters: bool = True,
                 title: str = "") -> str:
    """Render both segmentations; predicted clusters are Hungarian-mapped to
    ground-truth classes first so the two bands share one color legend."""
    pred = np.asarray(pred, dtype=np.int64)
    gt = np.asarray(gt, dtype=np.int64)
    if pred.shape != gt.shape:
        raise DataError(f"prediction has {pred.size} frames, ground truth {gt.size}")
    if pred.size == 0:
        raise DataError("cannot plot an empty timeline")
    n_classes = int(gt.max()) + 1
    if map_clusters:
        mapping = hungarian_match(pred, gt, int(pred.max()) + 1, n_classes)
        pred = apply_mapping(pred, mapping)
    names = class_names or [str(c) for c in range(n_classes)]

    n_legend = len(names)
    height = 40 + 2 * BAND_H + 30 + 18 * ((n_legend + 5) // 6) + 10
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0f}" height="{height:.0f}" '
        f'viewBox="0 0 {WIDTH:.0f} {height:.0f}" font-family="sans-serif" font-size="12">',
    ]
    if title:
        parts.append(f'<text x="{LEFT}" y="14">{escape(title)}</text>')
    y_gt, y_pred = 22.0, 22.0 + BAND_H + 12
    parts.append(f'<text x="4" y="{y_gt + 18:.1f}">GT</text>')
    parts.append(f'<text x="4" y="{y_pred + 18:.1f}">Pred</text>')
    parts += _band(gt, y_gt, "gt-band")
    parts += _band(pred, y_pred, "pred-band")
    parts.append('<g id="legend">')
    y0 = y_pred + BAND_H + 24
    for c, name in enumerate(names):
        x = LEFT + (c % 6) * 150
        y = y0 + 18 * (c // 6)
        parts.append(f'<rect x="{x:.1f}" y="{y - 10:.1f}" width="12" height="12" fill="{class_color(c)}"/>')
        parts.append(f'<text x="{x + 16:.1f}" y="{y:.1f}">{escape(name)}</text>')
    parts.append("</g></svg>")
    return "\n".join(parts) + "\n"
