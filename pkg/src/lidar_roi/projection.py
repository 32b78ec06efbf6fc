"""Point cloud to depth image projection with a pixel -> point mapper."""
from __future__ import annotations

import math

import numpy as np

from . import _accel
from ._accel import njit
from .types import DepthMapper, LidarConfig, as_cloud

OUTSIDE = -1


class ZeroRangeError(ValueError):
    pass


def point_angles(p) -> tuple[float, float, float]:
    """Return (elevation, azimuth, range) of one point; angles in radians."""
    x, y, z = (float(v) for v in p)
    dist = math.sqrt(x * x + y * y + z * z)
    if dist <= 1e-9:
        raise ZeroRangeError(f"point ({x}, {y}, {z}) is at the sensor origin")
    return math.asin(z / dist), math.atan2(y, x), dist


def _row_tables(cfg: LidarConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Elevations (rad) and the accepted deviation above/below each beam."""
    elev = cfg.elevations_rad
    gaps = -np.diff(elev)
    above = np.empty_like(elev)
    below = np.empty_like(elev)
    above[1:] = gaps
    above[0] = gaps[0]
    below[:-1] = gaps
    below[-1] = gaps[-1]
    half = 0.5 * cfg.row_margin
    return elev, above * half, below * half


@njit
def _pixel_nb(ax, ay, elev, tol_above, tol_below, width, fov, wraps):
    best = 0
    best_d = abs(ax - elev[0])
    for r in range(1, elev.shape[0]):
        d = abs(ax - elev[r])
        if d < best_d:
            best = r
            best_d = d
    dev = ax - elev[best]
    if dev > tol_above[best] or -dev > tol_below[best]:
        return OUTSIDE, OUTSIDE
    u = (ay + 0.5 * fov) / fov * width
    col = int(math.floor(u + 0.5))
    if wraps:
        col = col % width
    elif col < 0 or col >= width:
        return OUTSIDE, OUTSIDE
    return best, col


def pixel_of(angle_x: float, angle_y: float, cfg: LidarConfig) -> tuple[int, int] | None:
    """Nearest-beam row and azimuth column, or None when outside the vertical band."""
    elev, above, below = _row_tables(cfg)
    fov = math.radians(cfg.horizontal_fov)
    r, c = _pixel_nb(float(angle_x), float(angle_y), elev, above, below, cfg.width, fov, cfg.wraps)
    if r == OUTSIDE:
        return None
    return int(r), int(c)


@njit
def _project_nb(pts, elev, tol_above, tol_below, width, fov, wraps):
    n = pts.shape[0]
    h = elev.shape[0]
    npix = h * width
    pix = np.full(n, -1, np.int64)
    dist = np.zeros(n)
    depth = np.zeros(npix)
    retained = np.full(npix, -1, np.int64)
    counts = np.zeros(npix + 1, np.int64)
    for i in range(n):
        x = pts[i, 0]
        y = pts[i, 1]
        z = pts[i, 2]
        d = math.sqrt(x * x + y * y + z * z)
        dist[i] = d
        if d <= 1e-9:
            continue
        r, c = _pixel_nb(math.asin(z / d), math.atan2(y, x), elev, tol_above, tol_below, width, fov, wraps)
        if r == OUTSIDE:
            continue
        p = r * width + c
        pix[i] = p
        counts[p + 1] += 1
        if retained[p] < 0 or d < depth[p]:
            depth[p] = d
            retained[p] = i
    for p in range(npix):
        counts[p + 1] += counts[p]
    members = np.empty(counts[npix], np.int64)
    fill = counts[:npix].copy()
    for i in range(n):
        p = pix[i]
        if p >= 0:
            members[fill[p]] = i
            fill[p] += 1
    return depth, retained, counts, members, pix


def _project_np(pts, elev, tol_above, tol_below, width, fov, wraps):
    n = pts.shape[0]
    npix = elev.shape[0] * width
    dist = np.sqrt((pts * pts).sum(axis=1))
    pix = np.full(n, -1, np.int64)
    ok = dist > 1e-9
    safe = np.where(ok, dist, 1.0)
    ax = np.arcsin(pts[:, 2] / safe)
    ay = np.arctan2(pts[:, 1], pts[:, 0])
    # argmin returns the first minimum, so ties go to the smaller row
    row = np.argmin(np.abs(ax[:, None] - elev[None, :]), axis=1)
    dev = ax - elev[row]
    ok &= (dev <= tol_above[row]) & (-dev <= tol_below[row])
    col = np.floor((ay + 0.5 * fov) / fov * width + 0.5).astype(np.int64)
    if wraps:
        col %= width
    else:
        ok &= (col >= 0) & (col < width)
    pix[ok] = row[ok] * width + col[ok]

    idx = np.flatnonzero(ok)
    members = idx[np.argsort(pix[idx], kind="stable")]
    counts = np.zeros(npix + 1, np.int64)
    np.cumsum(np.bincount(pix[idx], minlength=npix), out=counts[1:])

    depth = np.zeros(npix)
    retained = np.full(npix, -1, np.int64)
    if len(idx):
        order = np.lexsort((idx, dist[idx], pix[idx]))
        srt = idx[order]
        first = np.ones(len(srt), bool)
        first[1:] = pix[srt][1:] != pix[srt][:-1]
        keep = srt[first]
        retained[pix[keep]] = keep
        depth[pix[keep]] = dist[keep]
    return depth, retained, counts, members, pix


def build_depth_image(cloud, cfg: LidarConfig) -> tuple[np.ndarray, DepthMapper]:
    """Project ``cloud`` to an ``(I_h, I_w)`` image keeping the closest range per pixel.

    Points outside the vertical band (or at the origin) are listed in
    ``mapper.discarded``.
    """
    pts = as_cloud(cloud)
    elev, above, below = _row_tables(cfg)
    fov = math.radians(cfg.horizontal_fov)
    impl = _project_nb if _accel.USE_NUMBA else _project_np
    depth, retained, offsets, members, pix = impl(pts, elev, above, below, cfg.width, fov, cfg.wraps)
    shape = cfg.shape
    mapper = DepthMapper(
        shape=shape,
        offsets=offsets,
        members=members,
        retained=retained.reshape(shape),
        pixel_of_point=pix,
        discarded=np.flatnonzero(pix < 0),
    )
    return depth.reshape(shape), mapper
