"""SVG visualization of recovered stroke order.

Ground truth is stroked red and predictions blue; per-segment opacity
rises with time so drawing order is readable, and a circle marks each
start point. No timestamps are emitted, so output is byte-reproducible.
"""

from __future__ import annotations

import numpy as np

from .trajectory import BOX_SIZE, PenTrajectory


def _path_segments(points, color, width=0.8):
    parts = []
    n = len(points) - 1
    for i in range(n):
        (x0, y0), (x1, y1) = points[i], points[i + 1]
        opacity = 0.25 + 0.75 * (i + 1) / n
        parts.append(
            f'<line x1="{x0:.2f}" y1="{y0:.2f}" x2="{x1:.2f}" y2="{y1:.2f}" '
            f'stroke="{color}" stroke-width="{width}" stroke-opacity="{opacity:.3f}" '
            f'stroke-linecap="round"/>'
        )
    return parts


def _start_marker(points, color):
    x, y = points[0]
    return f'<circle cx="{x:.2f}" cy="{y:.2f}" r="1.6" fill="none" stroke="{color}" stroke-width="0.5"/>'


def render_svg(gt: PenTrajectory = None, pred: PenTrajectory = None,
               img: np.ndarray = None) -> str:
    """GT red, prediction blue, optional grayscale image underlay."""
    if gt is None and pred is None:
        raise ValueError("render_svg needs at least one trajectory")
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {BOX_SIZE} {BOX_SIZE}" '
        f'width="{BOX_SIZE * 8}" height="{BOX_SIZE * 8}">',
        f'<rect width="{BOX_SIZE}" height="{BOX_SIZE}" fill="white"/>',
    ]
    if img is not None:
        ys, xs = np.nonzero(img)
        for y, x in zip(ys.tolist(), xs.tolist()):
            out.append(f'<rect x="{x}" y="{y}" width="1" height="1" fill="#cccccc"/>')
    if gt is not None:
        out.extend(_path_segments(gt.points, "red"))
        out.append(_start_marker(gt.points, "red"))
    if pred is not None:
        out.extend(_path_segments(pred.points, "blue"))
        out.append(_start_marker(pred.points, "blue"))
    out.append("</svg>")
    return "\n".join(out) + "\n"
