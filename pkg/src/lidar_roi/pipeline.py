"""End-to-end filter: depth image -> maxima sharpening -> angles -> SSA -> labels."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import angles, peaks, projection, segment, sharpen, ssa
from .types import DepthMapper, FilterParams, LidarConfig, as_cloud, validate_config

STAGES = ("depth", "filtered", "processed", "angle", "smoothed", "labels")


@dataclass
class PipelineResult:
    depth: np.ndarray
    mapper: DepthMapper
    barcode: peaks.Barcode | None
    filtered: np.ndarray
    processed: np.ndarray
    angle: np.ndarray
    smoothed: np.ndarray
    labels: np.ndarray
    regions: segment.Regions
    timings_ms: dict[str, float] = field(default_factory=dict)

    @property
    def total_ms(self) -> float:
        return sum(self.timings_ms[s] for s in STAGES)


def _empty_barcode(img) -> peaks.Barcode:
    e = np.zeros(0, np.int64)
    f = np.zeros(0)
    lo = float(img.min()) if img.size else 0.0
    return peaks.Barcode(e, e, f, f, lo, lo)


def sharpen_maxima(depth: np.ndarray, cfg: LidarConfig, params: FilterParams):
    """Persistence maxima of ``depth`` and the bilateral-sharpened image."""
    if not np.any(depth > 0):
        return _empty_barcode(depth), depth.copy()
    bc = peaks.persistence_maxima(depth, params.connectivity, wrap=cfg.wraps, mode=params.peaks_mode)
    bc = peaks.filter_barcode(bc, params.persistence_threshold)
    filtered = sharpen.modified_bf(depth, bc.locations, params.sigma_x, params.sigma_n, wrap=cfg.wraps)
    return bc, filtered


def run_pipeline(cloud, cfg: LidarConfig | None = None, params: FilterParams | None = None, validate: bool = True) -> PipelineResult:
    cfg = cfg or LidarConfig()
    params = params or FilterParams()
    if validate:
        validate_config(cfg, params)
    pts = as_cloud(cloud)
    t = {}
    clock = time.perf_counter

    t0 = clock()
    depth, mapper = projection.build_depth_image(pts, cfg)
    t1 = clock()
    t["depth"] = t1 - t0

    bc, filtered = sharpen_maxima(depth, cfg, params)
    t2 = clock()
    t["filtered"] = t2 - t1

    processed = sharpen.merge_processed(depth, filtered)
    t3 = clock()
    t["processed"] = t3 - t2

    angle = angles.build_angle_image(processed, cfg, params.depth_epsilon)
    t4 = clock()
    t["angle"] = t4 - t3

    smoothed = ssa.smooth_angle_image(angle, params.window, params.pc)
    t5 = clock()
    t["smoothed"] = t5 - t4

    labels = segment.label_components(
        processed, smoothed, None, params.beta, params.theta_seg, params.depth_epsilon, wrap=cfg.wraps
    )
    regions = segment.extract_regions(labels, mapper, pts)
    t6 = clock()
    t["labels"] = t6 - t5

    return PipelineResult(
        depth=depth,
        mapper=mapper,
        barcode=bc,
        filtered=filtered,
        processed=processed,
        angle=angle,
        smoothed=smoothed,
        labels=labels,
        regions=regions,
        timings_ms={k: v * 1e3 for k, v in t.items()},
    )
