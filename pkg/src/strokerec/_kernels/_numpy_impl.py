"""Pure-numpy implementations of the pixel-level kernels.

These are the reference implementations; `_numba_impl` mirrors the same
signatures with jitted loops. Selection happens in `_kernels.__init__`.
"""

import numpy as np


def draw_polyline(grid, pts):
    """Draw Bresenham lines between consecutive integer points, in place.

    grid: (H, W) uint8, written with 1s. pts: (K, 2) int64, columns (x, y).
    Out-of-bounds pixels are clipped silently.
    """
    h, w = grid.shape
    for k in range(len(pts) - 1):
        x0, y0 = int(pts[k, 0]), int(pts[k, 1])
        x1, y1 = int(pts[k + 1, 0]), int(pts[k + 1, 1])
        dx = abs(x1 - x0)
        dy = -abs(y1 - y0)
        sx = 1 if x0 < x1 else -1
        sy = 1 if y0 < y1 else -1
        err = dx + dy
        while True:
            if 0 <= y0 < h and 0 <= x0 < w:
                grid[y0, x0] = 1
            if x0 == x1 and y0 == y1:
                break
            e2 = 2 * err
            if e2 >= dy:
                err += dy
                x0 += sx
            if e2 <= dx:
                err += dx
                y0 += sy
    if len(pts) == 1:
        x0, y0 = int(pts[0, 0]), int(pts[0, 1])
        if 0 <= y0 < h and 0 <= x0 < w:
            grid[y0, x0] = 1


def dilate_once(grid):
    """One round of binary dilation with a 3x3 square structuring element."""
    p = np.pad(grid, 1)
    out = np.zeros_like(grid)
    for dy in (0, 1, 2):
        for dx in (0, 1, 2):
            np.maximum(out, p[dy:dy + grid.shape[0], dx:dx + grid.shape[1]], out)
    return out


def _neighbors(img):
    p = np.pad(img, 1)
    h, w = img.shape
    # P2..P9: N, NE, E, SE, S, SW, W, NW (clockwise from north)
    return (
        p[0:h, 1:w + 1], p[0:h, 2:w + 2], p[1:h + 1, 2:w + 2], p[2:h + 2, 2:w + 2],
        p[2:h + 2, 1:w + 1], p[2:h + 2, 0:w], p[1:h + 1, 0:w], p[0:h, 0:w],
    )


def skeletonize_kernel(grid):
    """Zhang-Suen thinning of a binary (H, W) uint8 image."""
    img = grid.astype(np.uint8).copy()
    changed = True
    while changed:
        changed = False
        for step in (0, 1):
            nb = _neighbors(img)
            b = np.zeros(img.shape, dtype=np.int32)
            for n in nb:
                b += n
            seq = list(nb) + [nb[0]]
            a = np.zeros(img.shape, dtype=np.int32)
            for i in range(8):
                a += (seq[i] == 0) & (seq[i + 1] == 1)
            p2, _, p4, _, p6, _, p8, _ = nb
            if step == 0:
                cond = (p2 * p4 * p6 == 0) & (p4 * p6 * p8 == 0)
            else:
                cond = (p2 * p4 * p8 == 0) & (p2 * p6 * p8 == 0)
            kill = (img == 1) & (b >= 2) & (b <= 6) & (a == 1) & cond
            if kill.any():
                img[kill] = 0
                changed = True
    return img


def snap_kernel(points, fg):
    """Index of the nearest foreground pixel for each query point.

    points: (M, 2) float64 (x, y). fg: (K, 2) int64 (x, y), pre-sorted by
    (y, x) so the first minimum realizes the tie-break rule.
    Returns (M,) int64 indices into fg.
    """
    dx = points[:, 0:1] - fg[None, :, 0]
    dy = points[:, 1:2] - fg[None, :, 1]
    return np.argmin(dx * dx + dy * dy, axis=1)
