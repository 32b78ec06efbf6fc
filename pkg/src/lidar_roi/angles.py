"""Range angle image: inclination of the segment joining vertically adjacent returns."""
from __future__ import annotations

import math

import numpy as np

from .types import DimensionMismatch, LidarConfig


def range_angle(d_up: float, d_down: float, eps_up: float, eps_down: float, depth_epsilon: float = 0.01) -> float:
    """Angle in [0, pi/2] between two returns of one column; 0 when either is missing.

    ``eps_up``/``eps_down`` are the beam elevations in radians.
    """
    if d_up <= depth_epsilon or d_down <= depth_epsilon:
        return 0.0
    dz = abs(d_up * math.sin(eps_up) - d_down * math.sin(eps_down))
    dx = abs(d_up * math.cos(eps_up) - d_down * math.cos(eps_down))
    return math.atan2(dz, dx)


def build_angle_image(depth_img, cfg: LidarConfig, depth_epsilon: float = 0.01) -> np.ndarray:
    """``(I_h - 1, I_w)`` image; entry ``(r, c)`` joins depth rows ``r`` and ``r + 1``."""
    depth = np.asarray(depth_img, dtype=np.float64)
    if depth.shape != cfg.shape:
        raise DimensionMismatch(f"depth image {depth.shape}, config {cfg.shape}")
    eps = cfg.elevations_rad[:, None]
    z = depth * np.sin(eps)
    x = depth * np.cos(eps)
    alpha = np.arctan2(np.abs(z[:-1] - z[1:]), np.abs(x[:-1] - x[1:]))
    valid = depth > depth_epsilon
    alpha[~(valid[:-1] & valid[1:])] = 0.0
    return alpha
