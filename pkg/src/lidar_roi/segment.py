"""Seed selection and two-phase BFS labelling of the processed depth image.

Phase 1 grows the uninterest region (label 1) from seeds lying on
ground-like returns, i.e. whose adjacent range angle is below ``beta``.
Phase 2 splits the remaining valid pixels into regions of interest
(labels 2, 3, ...) by growing over neighbours with similar range angle.

The angle attached to a pixel is the smoothed angle of the edge to the row
below it, or of the edge above when that one does not exist. A pixel with
no valid vertical neighbour gets pi/2 and never counts as ground.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import _accel
from ._accel import njit
from .types import DepthMapper, DimensionMismatch

UNLABELED = 0
UNINTEREST = 1
FIRST_ROI = 2


def pixel_angles(processed_depth_img, smoothed_angle_img, depth_epsilon: float = 0.01) -> np.ndarray:
    depth = np.asarray(processed_depth_img, dtype=np.float64)
    ang = np.asarray(smoothed_angle_img, dtype=np.float64)
    h = depth.shape[0]
    if ang.shape != (h - 1, depth.shape[1]):
        raise DimensionMismatch(f"angle image {ang.shape} for depth image {depth.shape}")
    valid = depth > depth_epsilon
    edge_ok = valid[:-1] & valid[1:]
    out = np.full(depth.shape, np.pi / 2)
    # edge above first, then overwrite with the edge below where it exists
    out[1:] = np.where(edge_ok, ang, out[1:])
    out[:-1] = np.where(edge_ok, ang, out[:-1])
    return out


@njit
def _seeds_nb(depth, eps):
    h, w = depth.shape
    out = np.empty((2 * w, 2), np.int64)
    m = 0
    for c in range(w):
        first = -1
        best = -1
        best_v = np.inf
        for r in range(h - 1, -1, -1):
            v = depth[r, c]
            if v > eps:
                if first < 0:
                    first = r
                if v < best_v:
                    best_v = v
                    best = r
        if first >= 0:
            out[m, 0] = first
            out[m, 1] = c
            m += 1
            if best != first:
                out[m, 0] = best
                out[m, 1] = c
                m += 1
    return out[:m]


def _seeds_np(depth, eps):
    h, w = depth.shape
    valid = depth > eps
    has = valid.any(axis=0)
    # bottom-most valid row
    first = h - 1 - np.argmax(valid[::-1], axis=0)
    masked = np.where(valid, depth, np.inf)[::-1]
    best = h - 1 - np.argmin(masked, axis=0)  # first minimum in bottom-up order
    cols = np.flatnonzero(has)
    seeds = []
    for c in cols.tolist():
        seeds.append((first[c], c))
        if best[c] != first[c]:
            seeds.append((best[c], c))
    return np.asarray(seeds, np.int64).reshape(-1, 2)


def select_seeds(processed_depth_img, depth_epsilon: float = 0.01) -> np.ndarray:
    """Per column: first valid pixel scanning bottom-up, then the nearest return."""
    depth = np.ascontiguousarray(processed_depth_img, dtype=np.float64)
    impl = _seeds_nb if _accel.USE_NUMBA else _seeds_np
    return impl(depth, float(depth_epsilon))


@njit
def _label_nb(valid, ang, seeds, beta, theta, wrap):
    h, w = valid.shape
    labels = np.zeros((h, w), np.int64)
    queue = np.empty(h * w, np.int64)
    dr = np.array([-1, 1, 0, 0])
    dc = np.array([0, 0, -1, 1])

    for s in range(seeds.shape[0]):
        r0 = seeds[s, 0]
        c0 = seeds[s, 1]
        if labels[r0, c0] != 0 or not valid[r0, c0] or not ang[r0, c0] < beta:
            continue
        labels[r0, c0] = 1
        head = 0
        tail = 0
        queue[tail] = r0 * w + c0
        tail += 1
        while head < tail:
            p = queue[head]
            head += 1
            r = p // w
            c = p % w
            for o in range(4):
                rr = r + dr[o]
                cc = c + dc[o]
                if rr < 0 or rr >= h:
                    continue
                if cc < 0 or cc >= w:
                    if not wrap:
                        continue
                    cc = cc % w
                if labels[rr, cc] == 0 and valid[rr, cc] and ang[rr, cc] < beta:
                    labels[rr, cc] = 1
                    queue[tail] = rr * w + cc
                    tail += 1

    next_id = 2
    n_seeds = seeds.shape[0]
    for s in range(n_seeds + h * w):
        if s < n_seeds:
            r0 = seeds[s, 0]
            c0 = seeds[s, 1]
        else:
            r0 = (s - n_seeds) // w
            c0 = (s - n_seeds) % w
        if labels[r0, c0] != 0 or not valid[r0, c0]:
            continue
        labels[r0, c0] = next_id
        head = 0
        tail = 0
        queue[tail] = r0 * w + c0
        tail += 1
        while head < tail:
            p = queue[head]
            head += 1
            r = p // w
            c = p % w
            a = ang[r, c]
            for o in range(4):
                rr = r + dr[o]
                cc = c + dc[o]
                if rr < 0 or rr >= h:
                    continue
                if cc < 0 or cc >= w:
                    if not wrap:
                        continue
                    cc = cc % w
                if labels[rr, cc] == 0 and valid[rr, cc] and abs(ang[rr, cc] - a) < theta:
                    labels[rr, cc] = next_id
                    queue[tail] = rr * w + cc
                    tail += 1
        next_id += 1
    return labels


def _label_py(valid, ang, seeds, beta, theta, wrap):
    h, w = valid.shape
    labels = np.zeros((h, w), np.int64)
    steps = ((-1, 0), (1, 0), (0, -1), (0, 1))

    def neighbours(r, c):
        for dr, dc in steps:
            rr, cc = r + dr, c + dc
            if not 0 <= rr < h:
                continue
            if not 0 <= cc < w:
                if not wrap:
                    continue
                cc %= w
            yield rr, cc

    def grow(start, label, joins):
        labels[start] = label
        queue = deque([start])
        while queue:
            p = queue.popleft()
            for q in neighbours(*p):
                if labels[q] == 0 and valid[q] and joins(p, q):
                    labels[q] = label
                    queue.append(q)

    seed_list = [tuple(s) for s in seeds.tolist()]
    for s in seed_list:
        if labels[s] == 0 and valid[s] and ang[s] < beta:
            grow(s, UNINTEREST, lambda p, q: ang[q] < beta)

    next_id = FIRST_ROI
    for s in seed_list + [(r, c) for r in range(h) for c in range(w)]:
        if labels[s] == 0 and valid[s]:
            grow(s, next_id, lambda p, q: abs(ang[q] - ang[p]) < theta)
            next_id += 1
    return labels


def label_components(
    processed_depth_img,
    smoothed_angle_img,
    seeds=None,
    beta: float = 10.0,
    theta_seg: float = 10.0,
    depth_epsilon: float = 0.01,
    wrap: bool = True,
) -> np.ndarray:
    """Label image: 0 no return, 1 uninterest, 2.. regions of interest.

    ``beta`` and ``theta_seg`` are in degrees.
    """
    depth = np.ascontiguousarray(processed_depth_img, dtype=np.float64)
    ang = pixel_angles(depth, smoothed_angle_img, depth_epsilon)
    if seeds is None:
        seeds = select_seeds(depth, depth_epsilon)
    seeds = np.ascontiguousarray(np.asarray(seeds, dtype=np.int64).reshape(-1, 2))
    valid = depth > depth_epsilon
    impl = _label_nb if _accel.USE_NUMBA else _label_py
    return impl(valid, ang, seeds, math.radians(beta), math.radians(theta_seg), wrap)


@dataclass
class Regions:
    point_labels: np.ndarray  # per input point; 0 when discarded or on an unlabeled pixel
    roi_ids: list[int]
    roi: list[np.ndarray]
    non_roi: np.ndarray
    n_discarded: int
    n_unlabeled: int


def extract_regions(label_img, mapper: DepthMapper, cloud) -> Regions:
    """Give every mapped point its pixel's label and split the cloud by label."""
    pts = np.asarray(cloud, dtype=np.float64).reshape(-1, 3)
    if len(pts) != mapper.n_points:
        raise DimensionMismatch(f"cloud has {len(pts)} points, mapper {mapper.n_points}")
    flat = np.asarray(label_img).ravel()
    pix = mapper.pixel_of_point
    labels = np.zeros(len(pts), np.int64)
    mapped = pix >= 0
    labels[mapped] = flat[pix[mapped]]
    ids = np.unique(labels[labels >= FIRST_ROI])
    order = np.argsort(labels, kind="stable")
    srt = labels[order]
    roi = []
    for i in ids:
        lo, hi = np.searchsorted(srt, [i, i + 1])
        roi.append(pts[np.sort(order[lo:hi])])
    return Regions(
        point_labels=labels,
        roi_ids=[int(i) for i in ids],
        roi=roi,
        non_roi=pts[labels == UNINTEREST],
        n_discarded=int((~mapped).sum()),
        n_unlabeled=int((mapped & (labels == UNLABELED)).sum()),
    )
