"""Compare the numba kernels with the pure-numpy fallback on a full-size scan.

    python3 benchmarks/bench_kernels.py [--repeat 50] [--steps 1800]

Both backends run in the same process; dispatch reads ``_accel.USE_NUMBA``
at call time. Outputs are checked for agreement before timing.
"""
import argparse
import time

import numpy as np

from lidar_roi import _accel, angles, peaks, projection, segment, sharpen, ssa
from lidar_roi.pipeline import run_pipeline
from lidar_roi.synthetic import room_scene, scan_scene
from lidar_roi.types import FilterParams, LidarConfig


def timeit(fn, repeat):
    fn()  # warm up (jit compile)
    ts = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    ts = np.asarray(ts) * 1e3
    return ts.mean(), ts.std()


def stages(points, cfg, params):
    depth, _ = projection.build_depth_image(points, cfg)
    bc = peaks.filter_barcode(peaks.persistence_maxima(depth, 8, wrap=True), params.persistence_threshold)
    filtered = sharpen.modified_bf(depth, bc.locations, wrap=True)
    processed = sharpen.merge_processed(depth, filtered)
    angle = angles.build_angle_image(processed, cfg)
    smoothed = ssa.smooth_angle_image(angle, params.window, params.pc)
    return {
        "projection": lambda: projection.build_depth_image(points, cfg),
        "persistence": lambda: peaks.persistence_maxima(depth, 8, wrap=True),
        "bilateral": lambda: sharpen.modified_bf(depth, bc.locations, wrap=True),
        "ssa": lambda: ssa.smooth_angle_image(angle, params.window, params.pc),
        "seeds": lambda: segment.select_seeds(processed),
        "labels": lambda: segment.label_components(processed, smoothed),
        "end to end": lambda: run_pipeline(points, cfg, params, validate=False),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=50)
    ap.add_argument("--steps", type=int, default=1800, help="azimuth steps per revolution")
    args = ap.parse_args()
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")

    cfg, params = LidarConfig(), FilterParams()
    points = scan_scene(room_scene(), cfg, azimuth_steps=args.steps).points
    print(f"{len(points)} points, {args.repeat} repeats, times in ms")

    results = {}
    labels = {}
    for flag in (True, False):
        _accel.USE_NUMBA = flag
        labels[flag] = run_pipeline(points, cfg, params).labels
        results[flag] = {k: timeit(fn, args.repeat) for k, fn in stages(points, cfg, params).items()}
    _accel.USE_NUMBA = _accel.HAVE_NUMBA and not _accel._DISABLED
    print(f"label images identical: {np.array_equal(labels[True], labels[False])}")

    print(f"{'kernel':<12} {'numba':>16} {'numpy':>16} {'speedup':>8}")
    for k in results[True]:
        (mn, sn), (mp, sp) = results[True][k], results[False][k]
        print(f"{k:<12} {mn:8.2f} +- {sn:5.2f} {mp:8.2f} +- {sp:5.2f} {mp / mn:7.1f}x")


if __name__ == "__main__":
    main()
