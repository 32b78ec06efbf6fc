"""Ray-cast scene generator with exact per-point provenance.

Scenes are a ground plane below the sensor plus axis-aligned boxes. Walls
are thin boxes. Every ray is one beam elevation crossed with one azimuth;
the nearest hit within ``max_range`` becomes a point. Each point carries the
index of the object it came from (0 = ground) so labels can be scored
exactly.
"""
from __future__ import annotations

import argparse
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .types import LidarConfig

GROUND = 0


@dataclass(frozen=True)
class Box:
    lo: tuple[float, float, float]
    hi: tuple[float, float, float]


@dataclass(frozen=True)
class Scene:
    ground_z: float | None = -1.5
    boxes: tuple[Box, ...] = ()
    max_range: float = 100.0


@dataclass
class SyntheticScan:
    points: np.ndarray
    source: np.ndarray  # 0 ground, i >= 1 for scene.boxes[i - 1]

    @property
    def is_ground(self) -> np.ndarray:
        return self.source == GROUND


def benchmark_scene() -> Scene:
    """Ground at -1.5 m, two boxes and one wall, all taller than the sensor."""
    return Scene(
        ground_z=-1.5,
        boxes=(
            Box((4.0, 3.0, -1.5), (5.5, 4.5, 1.0)),
            Box((-7.0, -4.0, -1.5), (-5.0, -3.0, 0.7)),
            Box((12.0, -8.0, -1.5), (12.4, 4.0, 3.0)),
        ),
    )


def room_scene(half: float = 15.0, height: float = 4.0) -> Scene:
    """Closed room so every beam returns (VLP-16 sized scans for benchmarking)."""
    t = 0.3
    zl, zh = -1.5, -1.5 + height
    return Scene(
        ground_z=-1.5,
        boxes=(
            Box((half, -half, zl), (half + t, half, zh)),
            Box((-half - t, -half, zl), (-half, half, zh)),
            Box((-half, half, zl), (half, half + t, zh)),
            Box((-half, -half - t, zl), (half, -half, zh)),
            Box((-half - t, -half - t, zh), (half + t, half + t, zh + t)),  # ceiling
            Box((3.0, 2.0, zl), (4.5, 3.5, 1.0)),
            Box((-6.0, -5.0, zl), (-4.0, -3.5, 0.8)),
        ),
    )


def flat_ground_scene(z: float = -1.5) -> Scene:
    return Scene(ground_z=z, boxes=())


def wall_scene(x: float = 5.0) -> Scene:
    """Vertical wall x = ``x`` spanning far beyond the sensor's view."""
    big = 1e4
    return Scene(ground_z=None, boxes=(Box((x, -big, -big), (x + 1.0, big, big)),))


def ray_directions(cfg: LidarConfig, azimuths: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    elev = cfg.elevations_rad
    e, a = np.meshgrid(elev, azimuths, indexing="ij")
    d = np.stack([np.cos(e) * np.cos(a), np.cos(e) * np.sin(a), np.sin(e)], axis=-1)
    return d.reshape(-1, 3), np.repeat(np.arange(len(elev)), len(azimuths))


def pixel_center_azimuths(cfg: LidarConfig, steps: int | None = None) -> np.ndarray:
    steps = steps or cfg.width
    return -math.pi + 2.0 * math.pi * np.arange(steps) / steps


def cast(scene: Scene, dirs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest hit distance (inf on miss) and source id per unit ray."""
    n = len(dirs)
    best = np.full(n, np.inf)
    src = np.full(n, -1, np.int64)
    if scene.ground_z is not None:
        dz = dirs[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(dz < 0, scene.ground_z / dz, np.inf)
        hit = (t > 0) & (t < best)
        best[hit] = t[hit]
        src[hit] = GROUND
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / dirs
    for i, box in enumerate(scene.boxes, 1):
        lo = np.asarray(box.lo)
        hi = np.asarray(box.hi)
        with np.errstate(invalid="ignore"):
            t1 = lo[None, :] * inv
            t2 = hi[None, :] * inv
        tmin = np.nanmax(np.minimum(t1, t2), axis=1)
        tmax = np.nanmin(np.maximum(t1, t2), axis=1)
        hit = (tmax >= tmin) & (tmin > 0) & (tmin < best)
        best[hit] = tmin[hit]
        src[hit] = i
    return best, src


def scan_scene(
    scene: Scene,
    cfg: LidarConfig | None = None,
    azimuth_steps: int | None = None,
    range_noise: float = 0.0,
    azimuth_jitter: float = 0.0,
    rng: np.random.Generator | None = None,
) -> SyntheticScan:
    """Simulate one revolution. Noise is Gaussian with the given std (m, rad)."""
    cfg = cfg or LidarConfig()
    az = pixel_center_azimuths(cfg, azimuth_steps)
    dirs, _ = ray_directions(cfg, az)
    if azimuth_jitter > 0 or range_noise > 0:
        rng = rng or np.random.default_rng(0)
    if azimuth_jitter > 0:
        e = np.arcsin(dirs[:, 2])
        a = np.arctan2(dirs[:, 1], dirs[:, 0]) + rng.normal(0.0, azimuth_jitter, len(dirs))
        dirs = np.stack([np.cos(e) * np.cos(a), np.cos(e) * np.sin(a), np.sin(e)], axis=1)
    dist, src = cast(scene, dirs)
    if range_noise > 0:
        dist = dist + rng.normal(0.0, range_noise, len(dist))
    ok = np.isfinite(dist) & (dist > 0.1) & (dist <= scene.max_range) & (src >= 0)
    # sensor interface is cartesian; round to float32 like real drivers
    pts = (dirs[ok] * dist[ok, None]).astype(np.float32).astype(np.float64)
    return SyntheticScan(points=pts, source=src[ok])


def plane_depth_image(cfg: LidarConfig, z: float = -1.5) -> np.ndarray:
    """Closed-form depth image of an infinite plane at height ``z`` below the sensor."""
    s = np.sin(cfg.elevations_rad)
    col = np.where(s < 0, z / np.where(s < 0, s, -1.0), 0.0)
    return np.repeat(col[:, None], cfg.width, axis=1)


def wall_depth_image(cfg: LidarConfig, x: float = 5.0, max_range: float = 100.0) -> np.ndarray:
    """Closed-form depth image of the wall x = ``x``, per pixel-centre azimuth."""
    az = pixel_center_azimuths(cfg)
    ce = np.cos(cfg.elevations_rad)[:, None]
    ca = np.cos(az)[None, :]
    with np.errstate(divide="ignore"):
        d = np.where(ca > 0, x / (ce * ca), 0.0)
    d[d > max_range] = 0.0
    return d


# ---------------------------------------------------------------------------
# benchmark sets on disk


def write_benchmark(
    out_dir: str | Path,
    n_scans: int = 5,
    seed: int = 0,
    range_noise: float = 0.03,
    azimuth_jitter: float = 0.002,
    camera=None,
    dilation_radius: int = 2,
) -> Path:
    """Write ``scans/<stem>.csv``, ``truth/<stem>.roi.pgm``/``.rou.pgm`` and ``camera.txt``."""
    from . import evaluation  # avoid an import cycle at module load

    out = Path(out_dir)
    (out / "scans").mkdir(parents=True, exist_ok=True)
    (out / "truth").mkdir(parents=True, exist_ok=True)
    cam = camera or evaluation.default_camera()
    evaluation.write_camera(out / "camera.txt", cam)
    rng = np.random.default_rng(seed)
    scene = benchmark_scene()
    for i in range(n_scans):
        stem = f"scan{i:03d}"
        scan = scan_scene(scene, range_noise=range_noise, azimuth_jitter=azimuth_jitter, rng=rng)
        np.savetxt(out / "scans" / f"{stem}.csv", scan.points, delimiter=",", fmt="%.17g")
        labels = np.where(scan.is_ground, 1, 2)
        roi, rou, _ = evaluation.project_labels(scan.points, labels, cam, dilation_radius)
        evaluation.write_pgm(out / "truth" / f"{stem}.roi.pgm", roi)
        evaluation.write_pgm(out / "truth" / f"{stem}.rou.pgm", rou)
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="lidar-roi-synth", description="write a synthetic labelled benchmark set")
    ap.add_argument("out_dir")
    ap.add_argument("--scans", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--range-noise", type=float, default=0.03)
    ap.add_argument("--azimuth-jitter", type=float, default=0.002)
    args = ap.parse_args(argv)
    write_benchmark(args.out_dir, args.scans, args.seed, args.range_noise, args.azimuth_jitter)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
