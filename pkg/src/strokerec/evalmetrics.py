"""Starting-point / junction-point / complete-trajectory metrics over
skeleton graphs, plus the classical graph-trace baseline used for the
comparison table."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .raster import SkeletonGraph, build_skeleton_graph, skeletonize, snap_to_skeleton
from .trajectory import PenTrajectory, ResampleSpec, arc_length, resample_uniform

SP_TOLERANCE_PX = 3.0


class GraphMismatch(ValueError):
    pass


class NoEndpoint(ValueError):
    pass


@dataclass(frozen=True)
class EdgeSequence:
    """Ordered (edge_id, forward) runs of a snapped trajectory;
    consecutive duplicates compressed. `forward` means the edge chain was
    visited from its a-end toward its b-end."""
    entries: tuple


def to_edge_sequence(traj: PenTrajectory, graph: SkeletonGraph, skel) -> EdgeSequence:
    """Snap each point to the skeleton and compress the visited edges.

    Points landing on node pixels are attributed to the next point's edge
    (trailing ones to the previous edge). Direction comes from the chain
    indices of the first and last pixels visited within a run.
    """
    snapped = snap_to_skeleton(traj, skel)
    raw = []  # per point: (edge_id, chain_index) or None for node pixels
    for x, y in snapped.points:
        key = (int(x), int(y))
        if key in graph.edge_of_pixel:
            raw.append(graph.edge_of_pixel[key])
        elif key in graph.node_of_pixel:
            raw.append(None)
        else:
            raise GraphMismatch(f"snapped pixel {key} not in graph")
    # fill node-pixel points from the following edge, trailing from previous
    filled = [None] * len(raw)
    nxt = None
    for i in range(len(raw) - 1, -1, -1):
        if raw[i] is not None:
            filled[i] = raw[i]
            nxt = raw[i][0]
        elif nxt is not None:
            filled[i] = (nxt, None)
    prev = None
    for i in range(len(raw)):
        if filled[i] is not None:
            prev = filled[i][0]
        elif prev is not None:
            filled[i] = (prev, None)
    filled = [f for f in filled if f is not None]
    if not filled:
        return EdgeSequence(entries=())

    entries = []
    run_edge = filled[0][0]
    run_idx = [filled[0][1]] if filled[0][1] is not None else []
    for eid, ci in filled[1:]:
        if eid == run_edge:
            if ci is not None:
                run_idx.append(ci)
            continue
        entries.append((run_edge, _run_direction(run_idx)))
        run_edge = eid
        run_idx = [ci] if ci is not None else []
    entries.append((run_edge, _run_direction(run_idx)))
    return EdgeSequence(entries=tuple(entries))


def _run_direction(indices):
    if len(indices) < 2:
        return True
    return indices[-1] >= indices[0]


def sp_correct(pred: PenTrajectory, gt: PenTrajectory, skel,
               tol=SP_TOLERANCE_PX) -> bool:
    """First predicted point within `tol` px of the first ground-truth
    point, both snapped to the skeleton."""
    p = snap_to_skeleton(PenTrajectory(pred.points[:2]), skel).points[0]
    g = snap_to_skeleton(PenTrajectory(gt.points[:2]), skel).points[0]
    return float(np.hypot(*(p - g))) <= tol


def _exit_node(graph, edge_id, forward):
    a, b = graph.edges[edge_id].nodes
    return b if forward else a


def _transitions_by_junction(seq: EdgeSequence, graph: SkeletonGraph):
    out = defaultdict(list)
    ent = seq.entries
    for (e1, d1), (e2, _) in zip(ent, ent[1:]):
        if e1 not in graph.edges or e2 not in graph.edges:
            raise GraphMismatch("edge sequence references unknown edges")
        node = _exit_node(graph, e1, d1)
        if graph.nodes[node].kind == "junction":
            out[node].append((e1, e2))
    return out


def jp_score(pred_seq: EdgeSequence, gt_seq: EdgeSequence, graph: SkeletonGraph):
    """(correct junctions, total junctions). A junction counts as correct
    iff the prediction makes exactly the ground-truth in->out edge
    transitions at that node, in the same order."""
    gt_tr = _transitions_by_junction(gt_seq, graph)
    pred_tr = _transitions_by_junction(pred_seq, graph)
    junctions = graph.junction_ids()
    correct = sum(1 for j in junctions if pred_tr.get(j, []) == gt_tr.get(j, []))
    return correct, len(junctions)


def ct_correct(pred_seq: EdgeSequence, gt_seq: EdgeSequence, sp_flag: bool) -> bool:
    return bool(sp_flag and pred_seq.entries == gt_seq.entries)


def baseline_trace(graph: SkeletonGraph, n_points=50) -> PenTrajectory:
    """Classical single-stroke tracer: start at the top-left endpoint,
    repeatedly take an unused edge, preferring the smoothest continuation
    at junctions; stop when the current node has no unused edge left."""
    endpoints = [n for n in graph.nodes.values() if n.kind == "endpoint"]
    if endpoints:
        start = min(endpoints, key=lambda n: (n.pixel[1], n.pixel[0]))
    else:
        loops = [n for n in graph.nodes.values() if n.kind == "loop"]
        candidates = loops or list(graph.nodes.values())
        if not candidates:
            raise NoEndpoint("graph has no nodes")
        start = min(candidates, key=lambda n: (n.pixel[1], n.pixel[0]))

    used = set()
    path = [np.array(start.pixel, dtype=np.float64)]
    cur = start.id
    while True:
        options = [(eid, end) for eid, end in graph.incidence.get(cur, ())
                   if eid not in used]
        if not options:
            break
        if len(options) == 1 or len(path) < 2:
            eid, end = options[0]
        else:
            tangent = _tail_direction(path)
            eid, end = min(
                options,
                key=lambda o: (_turning_angle(tangent, _edge_direction(graph, o[0], o[1])), o[0]),
            )
        used.add(eid)
        pixels, cur = _edge_pixels(graph, eid, from_end=end)
        for px in pixels:
            path.append(np.array(px, dtype=np.float64))
    pts = np.stack(path) if len(path) >= 2 else np.tile(path[0], (2, 1))
    traj = PenTrajectory(pts)
    if arc_length(traj) > 0:
        return resample_uniform(traj, ResampleSpec(n_points))
    return PenTrajectory(np.tile(path[0], (n_points, 1)))


def _edge_pixels(graph, edge_id, from_end):
    """Pixel sequence of an edge traversed from one end (0 = a, 1 = b),
    including the far node pixel; returns (pixels, far node id)."""
    e = graph.edges[edge_id]
    a, b = e.nodes
    chain = list(e.chain)
    if from_end == 0:
        far = b
    else:
        far = a
        chain = chain[::-1]
    far_px = graph.nodes[far].pixel
    return chain + [far_px], far


def _edge_direction(graph, edge_id, from_end):
    e = graph.edges[edge_id]
    here = graph.nodes[e.nodes[0] if from_end == 0 else e.nodes[1]].pixel
    chain = e.chain if from_end == 0 else e.chain[::-1]
    probe = chain[min(3, len(chain) - 1)] if chain else \
        graph.nodes[e.nodes[1] if from_end == 0 else e.nodes[0]].pixel
    v = np.array(probe, dtype=np.float64) - np.array(here, dtype=np.float64)
    n = np.linalg.norm(v)
    return v / n if n > 0 else v


def _tail_direction(path, k=4):
    tail = path[-min(len(path), k):]
    v = tail[-1] - tail[0]
    n = np.linalg.norm(v)
    return v / n if n > 0 else v


def _turning_angle(incoming, outgoing):
    if np.linalg.norm(incoming) == 0 or np.linalg.norm(outgoing) == 0:
        return np.pi
    c = float(np.clip(np.dot(incoming, outgoing), -1.0, 1.0))
    return float(np.arccos(c))


@dataclass
class SampleResult:
    id: str
    sp: bool
    jp_correct: int
    jp_total: int
    ct: bool
    error: str = ""


@dataclass
class EvalReport:
    sp_correct: int = 0
    sp_total: int = 0
    jp_correct: int = 0
    jp_total: int = 0
    ct_correct: int = 0
    ct_total: int = 0
    samples: list = field(default_factory=list)

    def add(self, result: SampleResult):
        if result.ct and not result.sp:
            raise ValueError("complete-trajectory success implies a correct start")
        self.sp_total += 1
        self.ct_total += 1
        self.sp_correct += int(result.sp)
        self.ct_correct += int(result.ct)
        self.jp_correct += result.jp_correct
        self.jp_total += result.jp_total
        self.samples.append(result)

    @property
    def sp_rate(self):
        return self.sp_correct / self.sp_total if self.sp_total else None

    @property
    def jp_rate(self):
        return self.jp_correct / self.jp_total if self.jp_total else None

    @property
    def ct_rate(self):
        return self.ct_correct / self.ct_total if self.ct_total else None

    def to_csv(self) -> str:
        lines = ["metric,correct,total,rate"]
        for name, c, t in (("SP", self.sp_correct, self.sp_total),
                           ("JP", self.jp_correct, self.jp_total),
                           ("CT", self.ct_correct, self.ct_total)):
            rate = f"{c / t:.4f}" if t else ""
            lines.append(f"{name},{c},{t},{rate}")
        return "\n".join(lines) + "\n"

    def to_table(self, label="model") -> str:
        rows = [
            ("Starting Point (SP) Accuracy", self.sp_correct, self.sp_total),
            ("Junction Points (JP) accuracy", self.jp_correct, self.jp_total),
            ("Complete Trajectory (CT) retrieval accuracy", self.ct_correct, self.ct_total),
        ]
        out = [f"Stroke recovery accuracy [{label}]"]
        for name, c, t in rows:
            pct = f"{100.0 * c / t:6.2f}%" if t else "   n/a"
            out.append(f"  {name:<46} {pct}  ({c}/{t})")
        return "\n".join(out) + "\n"


@dataclass(frozen=True)
class EvalSample:
    id: str
    image: np.ndarray
    gt: PenTrajectory


def evaluate(samples, recover_fn, sp_tol=SP_TOLERANCE_PX) -> EvalReport:
    """Score a recoverer over (image, ground truth) samples.

    recover_fn(sample) -> PenTrajectory. Per-sample failures are counted
    as incorrect, not raised.
    """
    report = EvalReport()
    for sample in samples:
        jp_total = 0
        try:
            skel = skeletonize(sample.image)
            graph = build_skeleton_graph(skel)
            jp_total = len(graph.junction_ids())
            gt_seq = to_edge_sequence(sample.gt, graph, skel)
            pred = recover_fn(sample)
            pred_seq = to_edge_sequence(pred, graph, skel)
            sp = sp_correct(pred, sample.gt, skel, tol=sp_tol)
            jp_c, jp_t = jp_score(pred_seq, gt_seq, graph)
            ct = ct_correct(pred_seq, gt_seq, sp)
            report.add(SampleResult(sample.id, sp, jp_c, jp_t, ct))
        except Exception as exc:  # per-sample failure, not a crash
            report.add(SampleResult(sample.id, False, 0, jp_total, False,
                                    error=f"{type(exc).__name__}: {exc}"))
    return report


def baseline_recoverer(sample: EvalSample) -> PenTrajectory:
    skel = skeletonize(sample.image)
    graph = build_skeleton_graph(skel)
    return baseline_trace(graph)


def model_recoverer(store, cfg, snap=True):
    """Recoverer closure around a trained model; optionally snaps the
    decoder output to the image skeleton (the stated post-processing)."""
    from .model import recover_trajectory

    def recover(sample: EvalSample) -> PenTrajectory:
        pred = recover_trajectory(sample.image, store, cfg)
        if snap:
            pred = snap_to_skeleton(pred, skeletonize(sample.image))
        return pred

    return recover
