"""Rasterization, thinning, skeleton graphs and skeleton snapping.

Images are (H, W) uint8 arrays with foreground = 1, indexed [y, x].
The skeleton graph has endpoint/junction nodes and 1-px pixel chains as
edges; it backs the junction/trajectory metrics and the classical tracer.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .trajectory import BOX_SIZE, PenTrajectory


class EmptyImage(ValueError):
    """Image has no foreground pixels."""


class NotThin(ValueError):
    """Skeleton-graph input is not 1-px thin."""


def rasterize(traj: PenTrajectory, thickness: int = 1, size: int = BOX_SIZE) -> np.ndarray:
    """Draw Bresenham lines between consecutive points, then `thickness`
    rounds of 3x3 dilation."""
    grid = np.zeros((size, size), dtype=np.uint8)
    pts = np.rint(traj.points).astype(np.int64)
    _kernels.draw_polyline(grid, pts)
    for _ in range(thickness):
        grid = _kernels.dilate_once(grid)
    return grid


def skeletonize(img: np.ndarray) -> np.ndarray:
    """Zhang-Suen thinning. Preserves the 8-connectivity of each component."""
    if not img.any():
        raise EmptyImage("cannot skeletonize an empty image")
    return _kernels.skeletonize_kernel(np.ascontiguousarray(img, dtype=np.uint8))


_OFFSETS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def _neighbor_count(img: np.ndarray) -> np.ndarray:
    p = np.pad(img.astype(np.int32), 1)
    h, w = img.shape
    c = np.zeros((h, w), dtype=np.int32)
    for dy, dx in _OFFSETS:
        c += p[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
    return c


# clockwise ring used by the crossing number: N, NE, E, SE, S, SW, W, NW
_RING = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)]


def _crossing_number(img: np.ndarray) -> np.ndarray:
    """Rutovitz crossing number: 0->1 transitions in the clockwise 8-ring.

    Distinguishes real branchings (>= 3) from staircase pixels whose raw
    neighbor count is inflated by diagonal contact within a single path.
    """
    p = np.pad(img.astype(np.int32), 1)
    h, w = img.shape
    ring = [p[1 + dy:1 + dy + h, 1 + dx:1 + dx + w] for dy, dx in _RING]
    c = np.zeros((h, w), dtype=np.int32)
    for k in range(8):
        c += (ring[k] == 0) & (ring[(k + 1) % 8] == 1)
    return c


def count_components(img: np.ndarray) -> int:
    """Number of 8-connected foreground components."""
    seen = np.zeros(img.shape, dtype=bool)
    h, w = img.shape
    n = 0
    ys, xs = np.nonzero(img)
    for y0, x0 in zip(ys.tolist(), xs.tolist()):
        if seen[y0, x0]:
            continue
        n += 1
        q = deque([(y0, x0)])
        seen[y0, x0] = True
        while q:
            y, x = q.popleft()
            for dy, dx in _OFFSETS:
                yy, xx = y + dy, x + dx
                if 0 <= yy < h and 0 <= xx < w and img[yy, xx] and not seen[yy, xx]:
                    seen[yy, xx] = True
                    q.append((yy, xx))
    return n


@dataclass(frozen=True)
class Node:
    id: int
    kind: str  # "endpoint" | "junction" | "loop"
    pixel: tuple  # (x, y)


@dataclass(frozen=True)
class Edge:
    id: int
    nodes: tuple  # (node_id_a, node_id_b); chain ordered a -> b
    chain: tuple  # interior pixels (x, y), excludes node pixels


@dataclass
class SkeletonGraph:
    nodes: dict = field(default_factory=dict)  # id -> Node
    edges: dict = field(default_factory=dict)  # id -> Edge
    node_of_pixel: dict = field(default_factory=dict)  # (x, y) -> node id
    edge_of_pixel: dict = field(default_factory=dict)  # (x, y) -> (edge id, chain index)
    incidence: dict = field(default_factory=dict)  # node id -> [(edge id, end)]

    def degree(self, node_id: int) -> int:
        return len(self.incidence.get(node_id, ()))

    def junction_ids(self):
        return [n.id for n in self.nodes.values() if n.kind == "junction"]


def _fg_neighbors(img, y, x):
    h, w = img.shape
    out = []
    for dy, dx in _OFFSETS:
        yy, xx = y + dy, x + dx
        if 0 <= yy < h and 0 <= xx < w and img[yy, xx]:
            out.append((yy, xx))
    return out


def build_skeleton_graph(skel: np.ndarray) -> SkeletonGraph:
    """Graph over a thin skeleton: endpoints (1 neighbor) and junctions
    (crossing number >= 3, adjacent junction pixels merged) as nodes,
    maximal path chains as edges. A node-free closed loop gets one
    artificial node at its top-left-most pixel and a self-loop edge."""
    counts = _neighbor_count(skel)
    full = (skel == 1) & (counts == 8)
    if full.any():
        raise NotThin("input has a pixel with a fully-foreground 3x3 neighborhood")

    g = SkeletonGraph()
    ys, xs = np.nonzero(skel)
    crossings = _crossing_number(skel)
    node_pixels = {}
    for y, x in zip(ys.tolist(), xs.tolist()):
        if counts[y, x] <= 1:
            node_pixels[(y, x)] = "endpoint"
        elif crossings[y, x] >= 3:
            node_pixels[(y, x)] = "junction"

    # merge 8-adjacent junction pixels into single nodes at their centroid
    next_id = 0
    assigned = set()
    for (y, x) in sorted(node_pixels):
        if (y, x) in assigned:
            continue
        kind = node_pixels[(y, x)]
        if kind != "junction":
            g.nodes[next_id] = Node(next_id, kind, (x, y))
            g.node_of_pixel[(x, y)] = next_id
            assigned.add((y, x))
            next_id += 1
            continue
        cluster = [(y, x)]
        assigned.add((y, x))
        q = deque(cluster)
        while q:
            cy, cx = q.popleft()
            for ny, nx in _fg_neighbors(skel, cy, cx):
                if node_pixels.get((ny, nx)) == "junction" and (ny, nx) not in assigned:
                    assigned.add((ny, nx))
                    cluster.append((ny, nx))
                    q.append((ny, nx))
        cy = np.mean([p[0] for p in cluster])
        cx = np.mean([p[1] for p in cluster])
        rep = min(cluster, key=lambda p: ((p[0] - cy) ** 2 + (p[1] - cx) ** 2, p))
        g.nodes[next_id] = Node(next_id, "junction", (rep[1], rep[0]))
        for (py, px) in cluster:
            g.node_of_pixel[(px, py)] = next_id
        next_id += 1

    visited = set()  # interior (chain) pixels already claimed
    pair_edges = set()  # dedup of empty-chain node-node adjacencies
    next_edge = 0

    def add_edge(a, b, chain):
        nonlocal next_edge
        e = Edge(next_edge, (a, b), tuple(chain))
        g.edges[next_edge] = e
        g.incidence.setdefault(a, []).append((next_edge, 0))
        g.incidence.setdefault(b, []).append((next_edge, 1))
        for i, (px, py) in enumerate(chain):
            g.edge_of_pixel[(px, py)] = (next_edge, i)
        next_edge += 1

    is_node = lambda y, x: (x, y) in g.node_of_pixel

    def pick_next(prev, cur):
        """Next pixel along a chain. A neighboring node pixel ends the
        chain; otherwise prefer 4-adjacent unvisited continuations, so
        staircase pixels with diagonal shortcuts are not skipped."""
        cands = [c for c in _fg_neighbors(skel, cur[0], cur[1]) if c != prev]
        pool = [c for c in cands if is_node(c[0], c[1])]
        at_node = bool(pool)
        if not at_node:
            pool = [c for c in cands if c not in visited]
        if not pool:
            return None, False
        pool.sort(key=lambda c: (abs(c[0] - cur[0]) + abs(c[1] - cur[1]) == 2, c))
        return pool[0], at_node

    for nid in sorted(g.nodes):
        pixels = [(py, px) for (px, py), i in g.node_of_pixel.items() if i == nid]
        for (y, x) in sorted(pixels):
            for (ny, nx) in _fg_neighbors(skel, y, x):
                if is_node(ny, nx):
                    other = g.node_of_pixel[(nx, ny)]
                    if other == nid:
                        continue  # same merged cluster
                    key = frozenset([(y, x), (ny, nx)])
                    if key not in pair_edges:
                        pair_edges.add(key)
                        add_edge(nid, other, [])
                    continue
                if (ny, nx) in visited:
                    continue
                # walk the chain until the next node pixel
                chain = []
                prev = (y, x)
                cur = (ny, nx)
                while True:
                    visited.add(cur)
                    chain.append((cur[1], cur[0]))
                    nxt, at_node = pick_next(prev, cur)
                    if nxt is None:
                        # dead end without a node pixel; close as a stub
                        add_edge(nid, nid, chain)
                        break
                    if at_node:
                        add_edge(nid, g.node_of_pixel[(nxt[1], nxt[0])], chain)
                        break
                    prev, cur = cur, nxt

    # leftover pixels are node-free closed loops (or, on degenerate
    # skeletons, stranded branches); anchor each at its top-left-most
    # pixel and walk with the same rules as ordinary chains
    remaining = [
        (y, x) for y, x in zip(ys.tolist(), xs.tolist())
        if (y, x) not in visited and not is_node(y, x)
    ]
    for (y0, x0) in sorted(remaining):
        if (y0, x0) in visited:
            continue
        nid = next_id
        g.nodes[nid] = Node(nid, "loop", (x0, y0))
        g.node_of_pixel[(x0, y0)] = nid
        next_id += 1
        visited.add((y0, x0))
        first = [c for c in _fg_neighbors(skel, y0, x0)
                 if c not in visited and not is_node(c[0], c[1])]
        if not first:
            add_edge(nid, nid, [])
            continue
        chain = []
        prev = (y0, x0)
        cur = first[0]
        while True:
            visited.add(cur)
            chain.append((cur[1], cur[0]))
            nxt, at_node = pick_next(prev, cur)
            if nxt is None:
                add_edge(nid, nid, chain)
                break
            if at_node:
                add_edge(nid, g.node_of_pixel[(nxt[1], nxt[0])], chain)
                break
            prev, cur = cur, nxt

    return g


def snap_to_skeleton(points: PenTrajectory, skel: np.ndarray) -> PenTrajectory:
    """Replace each point by the center of the Euclidean-nearest skeleton
    pixel; ties go to the smaller y, then smaller x."""
    ys, xs = np.nonzero(skel)
    if len(ys) == 0:
        raise EmptyImage("cannot snap to an empty skeleton")
    fg = np.stack([xs, ys], axis=1).astype(np.int64)  # already (y, x)-sorted
    idx = _kernels.snap_kernel(np.ascontiguousarray(points.points), fg)
    return PenTrajectory(fg[idx].astype(np.float64), normalized=points.normalized)


def write_pgm(path, img: np.ndarray) -> None:
    """P5 8-bit PGM, foreground written as 255."""
    h, w = img.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode())
        f.write((img.astype(np.uint8) * 255).tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a P5 8-bit PGM into a binary image (nonzero -> 1)."""
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(b"P5"):
        raise ValueError("not a P5 PGM file")
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(int(data[start:pos]))
    pos += 1  # single whitespace after maxval
    w, h, maxval = fields
    if maxval > 255:
        raise ValueError("only 8-bit PGM supported")
    raw = np.frombuffer(data[pos:pos + w * h], dtype=np.uint8).reshape(h, w)
    return (raw > 0).astype(np.uint8)
