"""Synthetic glyph corpus, dataset files, and online-handwriting ingestion.

Dataset files are UTF-8 JSON lines: one object per record with fields
`id`, `label` and `points` ([[x, y], ...] in raw units). Multi-stroke
sources are concatenated into a single polyline (pen-up jumps become
ordinary segments) before the 50-point scheme is applied.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .raster import rasterize
from .trajectory import PenTrajectory, ResampleSpec, normalize_to_box, resample_uniform

CLASSES = ("line", "curve", "loop", "junctioned")


class ParseError(ValueError):
    pass


class DuplicateId(ValueError):
    pass


@dataclass(frozen=True)
class GlyphSpec:
    seed: int
    klass: str = "curve"
    size: float = 100.0  # raw-unit target extent

    def __post_init__(self):
        if self.klass not in CLASSES:
            raise ValueError(f"unknown glyph class {self.klass!r}")


@dataclass(frozen=True)
class DatasetRecord:
    id: str
    label: str
    points: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=np.float64))


def _quad_bezier(p0, p1, p2, n=24):
    t = np.linspace(0.0, 1.0, n)[:, None]
    return (1 - t) ** 2 * p0 + 2 * (1 - t) * t * p1 + t ** 2 * p2


def _chained_curve(rng, start, n_segs, step, drift):
    """Smooth chain of quadratic segments drifting in +x/+y with jitter.

    The heading is clamped to keep a net downward tendency, so after
    normalization the starting point stays toward the top of the box and
    the drawing direction remains inferable from the image alone.
    """
    pts = [start[None, :]]
    p0 = start
    heading = rng.uniform(-0.1, 0.7)
    for _ in range(n_segs):
        heading = np.clip(heading + rng.uniform(-1.1, 1.1), -0.5, 2.1)
        end = p0 + step * np.array([np.cos(heading) * 0.5 + drift, np.sin(heading)])
        ctrl = (p0 + end) / 2 + rng.uniform(-0.6, 0.6, 2) * step
        pts.append(_quad_bezier(p0, ctrl, end)[1:])
        p0 = end
    return np.concatenate(pts, axis=0)


def generate_glyph(spec: GlyphSpec) -> DatasetRecord:
    """Deterministic per-seed synthetic stroke of the requested class.

    Strokes start toward the top-left so a starting-point convention is
    learnable from the image alone.
    """
    rng = np.random.default_rng(spec.seed)
    s = spec.size
    if spec.klass == "line":
        start = rng.uniform(0.0, 0.25 * s, 2)
        # downward-right only: an upward line is visually identical to its
        # reverse, which would make the starting point unlearnable
        ang = rng.uniform(0.05 * np.pi, 0.45 * np.pi)
        end = start + s * np.array([np.cos(ang), np.sin(ang)])
        pts = np.stack([start, end])
    elif spec.klass == "curve":
        start = rng.uniform(0.0, 0.2 * s, 2)
        n_segs = int(rng.integers(2, 5))
        pts = _chained_curve(rng, start, n_segs, s / n_segs, drift=0.9)
    elif spec.klass == "loop":
        center = rng.uniform(0.35 * s, 0.65 * s, 2)
        rx = rng.uniform(0.2 * s, 0.4 * s)
        ry = rng.uniform(0.2 * s, 0.4 * s)
        phase = rng.uniform(0, 2 * np.pi)
        t = np.linspace(0.0, 2 * np.pi, 48)
        ring = center + np.stack([rx * np.cos(t + phase), ry * np.sin(t + phase)], axis=1)
        tail_dir = ring[-1] - center
        tail_dir = tail_dir / np.linalg.norm(tail_dir)
        tail = ring[-1] + np.outer(np.linspace(0.0, 0.35 * s, 8)[1:], tail_dir)
        pts = np.concatenate([ring, tail], axis=0)
    else:  # junctioned: two curves sharing an interior point
        start = rng.uniform(0.0, 0.2 * s, 2)
        a = _chained_curve(rng, start, 2, s / 2, drift=0.9)
        k = int(rng.integers(int(0.3 * len(a)), int(0.7 * len(a))))
        p = a[k]
        # second stroke crosses the first roughly perpendicular to it
        tangent = a[min(k + 3, len(a) - 1)] - a[max(k - 3, 0)]
        norm = np.array([-tangent[1], tangent[0]])
        norm = norm / max(np.linalg.norm(norm), 1e-9)
        r1 = rng.uniform(0.25 * s, 0.45 * s)
        r2 = rng.uniform(0.25 * s, 0.45 * s)
        b0 = p + r1 * norm + rng.uniform(-0.08 * s, 0.08 * s, 2)
        b2 = p - r2 * norm + rng.uniform(-0.08 * s, 0.08 * s, 2)
        b = np.concatenate([_quad_bezier(b0, (b0 + p) / 2, p, 12),
                            _quad_bezier(p, (p + b2) / 2, b2, 12)[1:]], axis=0)
        pts = np.concatenate([a, b], axis=0)
    return DatasetRecord(id=f"{spec.klass}-{spec.seed:08d}", label=spec.klass, points=pts)


def make_pair(record: DatasetRecord, thickness=1, n_points=50):
    """(64x64 image, 50 normalized target points) from one record.

    The image is rasterized from the full normalized polyline, the target
    from the same geometry resampled to n_points.
    """
    norm = normalize_to_box(PenTrajectory(record.points))
    target = resample_uniform(norm, ResampleSpec(n_points))
    img = rasterize(norm, thickness=thickness)
    return img, target


def generate_corpus(seed, per_class, classes=CLASSES):
    """per_class records of each class; record seeds derive from `seed`."""
    records = []
    for ci, klass in enumerate(classes):
        for k in range(per_class):
            records.append(generate_glyph(GlyphSpec(seed=seed + 7919 * ci + k, klass=klass)))
    return records


def corpus_digest(records) -> str:
    """Order-sensitive sha256 over all coordinates (reproducibility check)."""
    h = hashlib.sha256()
    for rec in records:
        h.update(rec.id.encode())
        h.update(np.ascontiguousarray(rec.points, dtype="<f8").tobytes())
    return h.hexdigest()


def save_dataset(path, records):
    seen = set()
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            if rec.id in seen:
                raise DuplicateId(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)
            obj = {"id": rec.id, "label": rec.label,
                   "points": [[float(x), float(y)] for x, y in rec.points]}
            f.write(json.dumps(obj, separators=(",", ":")) + "\n")


def load_dataset(path):
    records = []
    seen = set()
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                rec = DatasetRecord(id=str(obj["id"]),
                                    label=str(obj.get("label") or ""),
                                    points=np.array(obj["points"], dtype=np.float64))
                if rec.points.ndim != 2 or rec.points.shape[1] != 2 or len(rec.points) < 2:
                    raise ValueError("points must be a list of >= 2 [x, y] pairs")
                if not np.isfinite(rec.points).all():
                    raise ValueError("points contain non-finite values")
            except (KeyError, ValueError, TypeError) as exc:
                raise ParseError(f"line {lineno}: {exc}") from exc
            if rec.id in seen:
                raise DuplicateId(f"line {lineno}: duplicate record id {rec.id!r}")
            seen.add(rec.id)
            records.append(rec)
    return records


def ingest_xy_text(text, record_id, label=""):
    """Whitespace-separated "x y" lines; blank lines separate strokes.
    Strokes are concatenated into one polyline."""
    points = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ParseError(f"line {lineno}: expected 'x y'")
        try:
            points.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise ParseError(f"line {lineno}: {exc}") from exc
    if len(points) < 2:
        raise ParseError("need at least 2 points")
    return DatasetRecord(id=record_id, label=label, points=np.array(points))
