"""Agreement checks between the jitted and pure-numpy kernel paths."""

import numpy as np
import pytest

from strokerec._kernels import _numpy_impl

try:
    from strokerec._kernels import _numba_impl
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


def _random_grid(rng, shape=(64, 64), density=0.3):
    return (rng.random(shape) < density).astype(np.uint8)


def _random_blob(rng, shape=(64, 64)):
    # thickened random polyline: a realistic input for thinning
    grid = np.zeros(shape, dtype=np.uint8)
    pts = rng.integers(4, 60, size=(6, 2))
    _numpy_impl.draw_polyline(grid, pts)
    return _numpy_impl.dilate_once(grid)


@needs_numba
def test_draw_polyline_agreement():
    rng = np.random.default_rng(0)
    for _ in range(30):
        pts = rng.integers(-5, 70, size=(rng.integers(1, 8), 2))
        a = np.zeros((64, 64), dtype=np.uint8)
        b = np.zeros((64, 64), dtype=np.uint8)
        _numpy_impl.draw_polyline(a, pts)
        _numba_impl.draw_polyline(b, pts)
        np.testing.assert_array_equal(a, b)


@needs_numba
def test_dilate_once_agreement():
    rng = np.random.default_rng(1)
    for _ in range(30):
        g = _random_grid(rng)
        np.testing.assert_array_equal(
            _numpy_impl.dilate_once(g), _numba_impl.dilate_once(g))


@needs_numba
def test_skeletonize_agreement():
    rng = np.random.default_rng(2)
    for _ in range(20):
        g = _random_blob(rng)
        np.testing.assert_array_equal(
            _numpy_impl.skeletonize_kernel(g), _numba_impl.skeletonize_kernel(g))


@needs_numba
def test_snap_agreement_including_ties():
    rng = np.random.default_rng(3)
    for _ in range(20):
        fg = np.unique(rng.integers(0, 16, size=(40, 2)), axis=0)
        fg = fg[np.lexsort((fg[:, 0], fg[:, 1]))]
        # half-integer query points force equidistant ties
        pts = rng.integers(0, 32, size=(25, 2)).astype(np.float64) / 2.0
        np.testing.assert_array_equal(
            _numpy_impl.snap_kernel(pts, fg), _numba_impl.snap_kernel(pts, fg))


def test_env_flag_forces_numpy_path():
    import subprocess
    import sys
    code = ("import strokerec._kernels as k; print(k.USE_NUMBA)")
    out = subprocess.run(
        [sys.executable, "-c", code],
        env={"PATH": "/usr/bin:/bin", "STROKEREC_NUMBA": "0"},
        capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"
