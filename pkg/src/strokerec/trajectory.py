"""Pen trajectories: representation, arc-length resampling, box normalization.

Coordinates are (x, y) with origin at the top-left: x is the column, y is
the row. A trajectory is an ordered (N, 2) float64 polyline; "normalized"
means every coordinate lies inside the 64x64 image box (with a 2 px margin
so later thickening never clips at the border).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

BOX_SIZE = 64
BOX_MARGIN = 2.0
_INNER = BOX_SIZE - 2 * BOX_MARGIN  # usable extent after the margin


class ZeroLengthTrajectory(ValueError):
    """All trajectory points coincide; arc length is zero."""


class DegenerateBBox(ValueError):
    """Bounding box has zero extent in both axes."""


@dataclass(frozen=True)
class PenTrajectory:
    """Ordered 2-D point sequence, both ground truth and predictions."""

    points: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValueError(f"trajectory must be (N>=2, 2), got {pts.shape}")
        if not np.isfinite(pts).all():
            raise ValueError("trajectory contains non-finite coordinates")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class ResampleSpec:
    n_points: int = 50

    def __post_init__(self):
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")


def arc_length(traj: PenTrajectory) -> float:
    """Total Euclidean length of the polyline."""
    seg = np.diff(traj.points, axis=0)
    return float(np.sqrt((seg ** 2).sum(axis=1)).sum())


def resample_uniform(traj: PenTrajectory, spec: ResampleSpec = ResampleSpec()) -> PenTrajectory:
    """Resample to exactly n points at uniform cumulative arc lengths.

    Output point k sits at arc length k*L/(n-1); the first and last points
    equal the input endpoints exactly.
    """
    pts = traj.points
    seg = np.sqrt((np.diff(pts, axis=0) ** 2).sum(axis=1))
    cum = np.concatenate(([0.0], np.cumsum(seg)))
    total = cum[-1]
    if total <= 0.0:
        raise ZeroLengthTrajectory("cannot resample a zero-length trajectory")
    n = spec.n_points
    targets = np.linspace(0.0, total, n)
    out = np.empty((n, 2))
    out[:, 0] = np.interp(targets, cum, pts[:, 0])
    out[:, 1] = np.interp(targets, cum, pts[:, 1])
    out[0] = pts[0]
    out[-1] = pts[-1]
    return PenTrajectory(out, normalized=traj.normalized)


def normalize_to_box(traj: PenTrajectory) -> PenTrajectory:
    """Isotropically map the bounding box into [2, 62]^2, centered on the
    shorter axis. Raises DegenerateBBox when both extents are zero."""
    pts = traj.points
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    ext = hi - lo
    if ext[0] == 0.0 and ext[1] == 0.0:
        raise DegenerateBBox("trajectory bounding box has zero extent")
    scale = _INNER / ext.max()
    scaled_ext = ext * scale
    offset = BOX_MARGIN + (_INNER - scaled_ext) / 2.0
    out = (pts - lo) * scale + offset
    # guard against rounding creep at the box edge
    np.clip(out, BOX_MARGIN, BOX_SIZE - BOX_MARGIN, out)
    return PenTrajectory(out, normalized=True)
