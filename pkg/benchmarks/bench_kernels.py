"""Compare the numba and pure-numpy kernel paths.

Run: python3 benchmarks/bench_kernels.py
(Selection in the library itself is via STROKEREC_NUMBA=0/1.)
"""

import time

import numpy as np

from strokerec._kernels import _numba_impl, _numpy_impl
from strokerec import data as dat


def make_inputs(n_images=64, seed=0):
    images, polylines = [], []
    for i in range(n_images):
        rec = dat.generate_glyph(dat.GlyphSpec(seed=seed + i, klass="junctioned"))
        img, _ = dat.make_pair(rec)
        images.append(img)
        from strokerec.trajectory import PenTrajectory, normalize_to_box
        norm = normalize_to_box(PenTrajectory(rec.points))
        polylines.append(np.rint(norm.points).astype(np.int64))
    return images, polylines


def bench(label, fn, repeats=3):
    fn()  # warmup (also triggers jit compilation)
    best = min(timeit(fn) for _ in range(repeats))
    print(f"  {label:<12} {best * 1e3:9.2f} ms")
    return best


def timeit(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def main():
    images, polylines = make_inputs()
    rng = np.random.default_rng(0)
    points = rng.uniform(0, 64, (50 * len(images), 2))
    fg_img = images[0]
    ys, xs = np.nonzero(fg_img)
    fg = np.stack([xs, ys], axis=1).astype(np.int64)

    cases = [
        ("draw_polyline", lambda impl: [impl.draw_polyline(np.zeros((64, 64), np.uint8), p)
                                        for p in polylines]),
        ("dilate_once", lambda impl: [impl.dilate_once(im) for im in images]),
        ("skeletonize", lambda impl: [impl.skeletonize_kernel(im) for im in images]),
        ("snap", lambda impl: impl.snap_kernel(points, fg)),
    ]
    for name, runner in cases:
        print(f"{name} ({len(images)} images):")
        t_np = bench("numpy", lambda: runner(_numpy_impl))
        t_nb = bench("numba", lambda: runner(_numba_impl))
        print(f"  speedup      {t_np / t_nb:9.2f}x")


if __name__ == "__main__":
    main()
