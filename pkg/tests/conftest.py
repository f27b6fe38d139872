import numpy as np
import pytest

from strokerec import PenTrajectory


@pytest.fixture
def plus_sign_thin():
    """1-px plus sign: horizontal and vertical 11-px bars crossing at (5, 5)."""
    img = np.zeros((11, 11), dtype=np.uint8)
    img[5, :] = 1
    img[:, 5] = 1
    return img


@pytest.fixture
def ring_thin():
    """1-px closed diamond ring: every pixel has exactly 2 neighbors."""
    img = np.zeros((11, 11), dtype=np.uint8)
    for y in range(11):
        for x in range(11):
            if abs(x - 5) + abs(y - 5) == 3:
                img[y, x] = 1
    return img


def line_traj(p0, p1, n=20):
    t = np.linspace(0, 1, n)[:, None]
    return PenTrajectory((1 - t) * np.asarray(p0, float) + t * np.asarray(p1, float))


def _px_traj(points):
    return PenTrajectory(np.asarray(points, dtype=np.float64))


def metric_fixtures():
    """Five hand-scored (name, image, gt, pred, sp, jp_pair, ct) cases.

    Expected totals: SP 4/5, JP 1/3, CT 2/5.
    """
    cases = []

    # 1. straight line, prediction identical: SP ok, CT ok, no junctions
    line = np.zeros((11, 11), dtype=np.uint8)
    line[5, 1:10] = 1
    gt = _px_traj([(x, 5) for x in range(1, 10)])
    cases.append(("line", line, gt, gt, True, (0, 0), True))

    # 2. same line predicted in reverse: wrong start, wrong trajectory
    rev = _px_traj([(x, 5) for x in range(9, 0, -1)])
    cases.append(("line-reversed", line, gt, rev, False, (0, 0), False))

    # 3. plus sign, left-to-right stroke predicted exactly: junction correct
    plus = np.zeros((11, 11), dtype=np.uint8)
    plus[5, :] = 1
    plus[:, 5] = 1
    gt_we = _px_traj([(x, 5) for x in range(11)])
    cases.append(("plus-correct", plus, gt_we, gt_we, True, (1, 1), True))

    # 4. plus sign, prediction turns up the wrong arm at the junction
    wrong_arm = _px_traj([(x, 5) for x in range(6)] +
                         [(5, y) for y in range(4, -1, -1)])
    cases.append(("plus-wrong-arm", plus, gt_we, wrong_arm, True, (0, 1), False))

    # 5. lollipop: prediction stops at the junction and misses the loop
    lolli = np.zeros((13, 11), dtype=np.uint8)
    ring = [(5, 8), (4, 7), (3, 6), (2, 5), (3, 4), (4, 3), (5, 2),
            (6, 3), (7, 4), (8, 5), (7, 6), (6, 7)]
    for x, y in ring:
        lolli[y, x] = 1
    lolli[9:13, 5] = 1  # tail from the junction (5, 8) down to (5, 12)
    gt_loop = _px_traj([(5, 12), (5, 11), (5, 10), (5, 9)] + ring + [(5, 8)])
    pred_no_loop = _px_traj([(5, 12), (5, 11), (5, 10), (5, 9), (5, 8)])
    cases.append(("loop-missed", lolli, gt_loop, pred_no_loop, True, (0, 1), False))
    return cases
