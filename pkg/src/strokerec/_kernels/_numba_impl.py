"""Numba-jitted pixel kernels. Same contracts as `_numpy_impl`."""

import numpy as np
from numba import njit


@njit(cache=True)
def draw_polyline(grid, pts):
    h, w = grid.shape
    if len(pts) == 1:
        x0, y0 = pts[0, 0], pts[0, 1]
        if 0 <= y0 < h and 0 <= x0 < w:
            grid[y0, x0] = 1
        return
    for k in range(len(pts) - 1):
        x0, y0 = pts[k, 0], pts[k, 1]
        x1, y1 = pts[k + 1, 0], pts[k + 1, 1]
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


@njit(cache=True)
def dilate_once(grid):
    h, w = grid.shape
    out = np.zeros_like(grid)
    for y in range(h):
        for x in range(w):
            if grid[y, x]:
                for yy in range(max(0, y - 1), min(h, y + 2)):
                    for xx in range(max(0, x - 1), min(w, x + 2)):
                        out[yy, xx] = 1
    return out


@njit(cache=True)
def _thin_subiter(img, step, kill_y, kill_x):
    """Collect deletable pixels for one Zhang-Suen subiteration."""
    h, w = img.shape
    n = 0
    for y in range(h):
        for x in range(w):
            if img[y, x] == 0:
                continue
            # P2..P9 clockwise from north; zero outside the image
            p = np.zeros(9, dtype=np.uint8)
            if y > 0:
                p[0] = img[y - 1, x]
                if x < w - 1:
                    p[1] = img[y - 1, x + 1]
                if x > 0:
                    p[7] = img[y - 1, x - 1]
            if x < w - 1:
                p[2] = img[y, x + 1]
            if y < h - 1:
                p[4] = img[y + 1, x]
                if x < w - 1:
                    p[3] = img[y + 1, x + 1]
                if x > 0:
                    p[5] = img[y + 1, x - 1]
            if x > 0:
                p[6] = img[y, x - 1]
            p[8] = p[0]
            b = 0
            a = 0
            for i in range(8):
                b += p[i]
                if p[i] == 0 and p[i + 1] == 1:
                    a += 1
            if b < 2 or b > 6 or a != 1:
                continue
            if step == 0:
                if p[0] * p[2] * p[4] != 0 or p[2] * p[4] * p[6] != 0:
                    continue
            else:
                if p[0] * p[2] * p[6] != 0 or p[0] * p[4] * p[6] != 0:
                    continue
            kill_y[n] = y
            kill_x[n] = x
            n += 1
    return n


@njit(cache=True)
def skeletonize_kernel(grid):
    img = grid.astype(np.uint8).copy()
    h, w = img.shape
    kill_y = np.empty(h * w, dtype=np.int64)
    kill_x = np.empty(h * w, dtype=np.int64)
    changed = True
    while changed:
        changed = False
        for step in (0, 1):
            n = _thin_subiter(img, step, kill_y, kill_x)
            for i in range(n):
                img[kill_y[i], kill_x[i]] = 0
            if n > 0:
                changed = True
    return img


@njit(cache=True)
def snap_kernel(points, fg):
    m = points.shape[0]
    out = np.empty(m, dtype=np.int64)
    for i in range(m):
        best = -1
        best_d = np.inf
        for j in range(fg.shape[0]):
            dx = points[i, 0] - fg[j, 0]
            dy = points[i, 1] - fg[j, 1]
            d = dx * dx + dy * dy
            if d < best_d:
                best_d = d
                best = j
        out[i] = best
    return out
