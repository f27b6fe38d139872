import numpy as np
import pytest

from strokerec import (EmptyImage, NotThin, PenTrajectory, build_skeleton_graph,
                       rasterize, skeletonize, snap_to_skeleton)
from strokerec.raster import count_components, read_pgm, write_pgm

from conftest import line_traj


def test_rasterize_single_point_no_thickening():
    traj = PenTrajectory([[5, 5], [5, 5]])
    img = rasterize(traj, thickness=0)
    assert img[5, 5] == 1 and img.sum() == 1


def test_rasterize_single_point_one_dilation():
    img = rasterize(PenTrajectory([[5, 5], [5, 5]]), thickness=1)
    assert img.sum() == 9
    assert img[4:7, 4:7].all()


def test_rasterize_horizontal_segment():
    img = rasterize(PenTrajectory([[2, 10], [12, 10]]), thickness=0)
    assert img.sum() == 11
    assert img[10, 2:13].all()


def test_rasterize_diagonal_is_connected():
    img = rasterize(PenTrajectory([[3, 3], [40, 17], [9, 55]]), thickness=0)
    assert count_components(img) == 1


# --- independent Zhang-Suen reference, direct transcription of the rules ---

def _ref_thin(img):
    img = img.astype(np.uint8).copy()
    h, w = img.shape

    def nbrs(y, x):
        def at(yy, xx):
            return int(img[yy, xx]) if 0 <= yy < h and 0 <= xx < w else 0
        return [at(y - 1, x), at(y - 1, x + 1), at(y, x + 1), at(y + 1, x + 1),
                at(y + 1, x), at(y + 1, x - 1), at(y, x - 1), at(y - 1, x - 1)]

    while True:
        changed = False
        for step in (0, 1):
            kill = []
            for y in range(h):
                for x in range(w):
                    if not img[y, x]:
                        continue
                    p = nbrs(y, x)
                    b = sum(p)
                    a = sum(1 for i in range(8) if p[i] == 0 and p[(i + 1) % 8] == 1)
                    if not (2 <= b <= 6 and a == 1):
                        continue
                    if step == 0:
                        if p[0] * p[2] * p[4] or p[2] * p[4] * p[6]:
                            continue
                    else:
                        if p[0] * p[2] * p[6] or p[0] * p[4] * p[6]:
                            continue
                    kill.append((y, x))
            for y, x in kill:
                img[y, x] = 0
            changed = changed or bool(kill)
        if not changed:
            return img


def test_skeletonize_thin_line_unchanged():
    img = np.zeros((20, 20), dtype=np.uint8)
    img[10, 3:16] = 1
    np.testing.assert_array_equal(skeletonize(img), img)


def test_skeletonize_matches_reference_on_bar():
    img = np.zeros((9, 17), dtype=np.uint8)
    img[3:6, 3:14] = 1  # 3x11 filled bar
    out = skeletonize(img)
    np.testing.assert_array_equal(out, _ref_thin(img))
    ys, xs = np.nonzero(out)
    assert set(ys.tolist()) == {4}  # a 1-px horizontal line
    # contiguous run; thinning erodes up to 2 px from an end of the bar
    assert sorted(xs.tolist()) == list(range(xs.min(), xs.max() + 1))
    assert len(xs) >= 8


def test_skeletonize_matches_reference_random():
    rng = np.random.default_rng(0)
    for _ in range(20):
        pts = rng.uniform(5, 59, (4, 2))
        img = rasterize(PenTrajectory(pts), thickness=int(rng.integers(0, 3)))
        np.testing.assert_array_equal(skeletonize(img), _ref_thin(img))


def test_skeletonize_plus_sign_topology():
    img = np.zeros((15, 15), dtype=np.uint8)
    img[6:9, 3:12] = 1
    img[3:12, 6:9] = 1  # 9x9 plus, arm width 3
    g = build_skeleton_graph(skeletonize(img))
    kinds = sorted(n.kind for n in g.nodes.values())
    assert kinds == ["endpoint"] * 4 + ["junction"]


def test_skeletonize_empty_raises():
    with pytest.raises(EmptyImage):
        skeletonize(np.zeros((8, 8), dtype=np.uint8))


def test_skeletonize_thinness_and_components():
    rng = np.random.default_rng(42)
    for _ in range(50):
        pts = rng.uniform(3, 61, (int(rng.integers(2, 7)), 2))
        img = rasterize(PenTrajectory(pts), thickness=1)
        skel = skeletonize(img)
        assert np.logical_and(skel, ~img.astype(bool)).sum() == 0  # subset
        padded = np.pad(skel, 1)
        win = np.ones((3, 3), dtype=bool)
        for y, x in zip(*np.nonzero(skel)):
            assert not padded[y:y + 3, x:x + 3].all()
        assert count_components(skel) == count_components(img)


def test_graph_plus_sign(plus_sign_thin):
    g = build_skeleton_graph(plus_sign_thin)
    endpoints = [n for n in g.nodes.values() if n.kind == "endpoint"]
    junctions = [n for n in g.nodes.values() if n.kind == "junction"]
    assert len(endpoints) == 4 and len(junctions) == 1
    assert len(g.edges) == 4
    assert junctions[0].pixel == (5, 5)
    assert g.degree(junctions[0].id) == 4
    for e in endpoints:
        assert g.degree(e.id) == 1


def test_graph_straight_line():
    img = np.zeros((9, 9), dtype=np.uint8)
    img[4, 1:8] = 1
    g = build_skeleton_graph(img)
    assert sorted(n.kind for n in g.nodes.values()) == ["endpoint", "endpoint"]
    assert len(g.edges) == 1


def test_graph_ring_gets_artificial_node(ring_thin):
    g = build_skeleton_graph(ring_thin)
    assert len(g.nodes) == 1
    node = next(iter(g.nodes.values()))
    assert node.kind == "loop"
    assert node.pixel == (5, 2)  # top-left-most pixel of the ring
    assert len(g.edges) == 1
    e = next(iter(g.edges.values()))
    assert e.nodes == (node.id, node.id)


def test_graph_not_thin_raises():
    img = np.ones((5, 5), dtype=np.uint8)
    with pytest.raises(NotThin):
        build_skeleton_graph(img)


def test_graph_pixel_partition_and_incidence(plus_sign_thin):
    g = build_skeleton_graph(plus_sign_thin)
    chain_px = set(g.edge_of_pixel)
    node_px = set(g.node_of_pixel)
    assert not chain_px & node_px
    total = int(plus_sign_thin.sum())
    assert len(chain_px) + len(node_px) == total
    # sum of degrees equals number of edge-end incidences
    assert sum(g.degree(n) for n in g.nodes) == 2 * len(g.edges)
    # chain ends are 8-adjacent to a pixel of their node (junction
    # clusters can span several pixels)
    for e in g.edges.values():
        for end, px in ((0, e.chain[0]), (1, e.chain[-1])):
            nid = e.nodes[end]
            assert any(
                i == nid and max(abs(px[0] - qx), abs(px[1] - qy)) == 1
                for (qx, qy), i in g.node_of_pixel.items())


def test_snap_identity_on_skeleton(plus_sign_thin):
    traj = PenTrajectory([[5, 5], [5, 0]])
    out = snap_to_skeleton(traj, plus_sign_thin)
    np.testing.assert_array_equal(out.points, [[5, 5], [5, 0]])


def test_snap_nearest():
    skel = np.zeros((8, 8), dtype=np.uint8)
    skel[6, 5] = 1
    skel[0, 0] = 1
    out = snap_to_skeleton(PenTrajectory([[5.4, 5.6], [5.4, 5.6]]), skel)
    np.testing.assert_array_equal(out.points[0], [5, 6])


def test_snap_tie_breaks_smaller_y_then_x():
    skel = np.zeros((8, 8), dtype=np.uint8)
    skel[3, 3] = 1
    skel[4, 3] = 1
    out = snap_to_skeleton(PenTrajectory([[3.0, 3.5], [3.0, 3.5]]), skel)
    np.testing.assert_array_equal(out.points[0], [3, 3])
    skel2 = np.zeros((8, 8), dtype=np.uint8)
    skel2[3, 3] = 1
    skel2[3, 4] = 1
    out2 = snap_to_skeleton(PenTrajectory([[3.5, 3.0], [3.5, 3.0]]), skel2)
    np.testing.assert_array_equal(out2.points[0], [3, 3])


def test_snap_idempotent(plus_sign_thin):
    rng = np.random.default_rng(1)
    traj = PenTrajectory(rng.uniform(0, 11, (30, 2)))
    once = snap_to_skeleton(traj, plus_sign_thin)
    twice = snap_to_skeleton(once, plus_sign_thin)
    np.testing.assert_array_equal(once.points, twice.points)


def test_snap_empty_raises():
    with pytest.raises(EmptyImage):
        snap_to_skeleton(PenTrajectory([[0, 0], [1, 1]]), np.zeros((4, 4), np.uint8))


def test_raster_near_skeleton_bound():
    # thin rasterization lies within thickness*sqrt(2) of the thick image
    rng = np.random.default_rng(9)
    for _ in range(10):
        traj = line_traj(rng.uniform(5, 59, 2), rng.uniform(5, 59, 2))
        thin = rasterize(traj, thickness=0)
        thick = rasterize(traj, thickness=1)
        ys, xs = np.nonzero(thin)
        ty, tx = np.nonzero(thick)
        for y, x in zip(ys, xs):
            d = np.sqrt((ty - y) ** 2 + (tx - x) ** 2).min()
            assert d <= np.sqrt(2)


def test_pgm_round_trip(tmp_path, plus_sign_thin):
    path = tmp_path / "img.pgm"
    write_pgm(path, plus_sign_thin)
    back = read_pgm(path)
    np.testing.assert_array_equal(back, plus_sign_thin)
