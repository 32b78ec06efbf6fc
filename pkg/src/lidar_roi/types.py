"""Shared domain types, LiDAR geometry configuration and validation.

Point clouds are plain ``(N, 3)`` float64 arrays in the sensor frame
(x forward, y left, z up, meters). Images are 2D float64 arrays with row 0
the topmost beam and column 0 at azimuth -180 degrees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

VLP16_ELEVATIONS = tuple(float(e) for e in range(15, -16, -2))


class ConfigError(ValueError):
    """A configuration or parameter constraint is violated."""

    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class LidarConfig:
    channels: int = 16
    width: int = 870
    elevations: tuple[float, ...] = VLP16_ELEVATIONS
    horizontal_fov: float = 360.0
    # rejection margin for row assignment, in multiples of the half beam gap
    row_margin: float = 1.5

    @property
    def shape(self) -> tuple[int, int]:
        return (self.channels, self.width)

    @property
    def elevations_rad(self) -> np.ndarray:
        return np.deg2rad(np.asarray(self.elevations, dtype=np.float64))

    @property
    def wraps(self) -> bool:
        """Columns 0 and width-1 are adjacent only for a full revolution."""
        return self.horizontal_fov >= 360.0


@dataclass(frozen=True)
class FilterParams:
    pc: int = 5
    beta: float = 10.0
    window: int = 8
    sigma_x: float = 1.2
    sigma_n: float = 1.3
    persistence_threshold: float = 0.1
    theta_seg: float = 10.0
    depth_epsilon: float = 0.01
    connectivity: int = 8
    peaks_mode: str = "2d"


def validate_config(cfg: LidarConfig, params: FilterParams) -> None:
    """Raise ``ConfigError`` on the first violated constraint."""
    if cfg.channels < 2:
        raise ConfigError("channels", "need at least 2 beams")
    if cfg.width < 2:
        raise ConfigError("width", "need at least 2 columns")
    if len(cfg.elevations) != cfg.channels:
        raise ConfigError(
            "elevations", f"{len(cfg.elevations)} angles given for {cfg.channels} channels"
        )
    elev = np.asarray(cfg.elevations, dtype=np.float64)
    if not np.all(np.isfinite(elev)):
        raise ConfigError("elevations", "non-finite angle")
    if np.any(np.diff(elev) >= 0):
        raise ConfigError("elevations", "must be strictly decreasing from row 0")
    if np.any(np.abs(elev) >= 90):
        raise ConfigError("elevations", "must lie in (-90, 90) degrees")
    if not (0 < cfg.horizontal_fov <= 360):
        raise ConfigError("horizontal_fov", "must be in (0, 360]")
    if not cfg.row_margin > 0:
        raise ConfigError("row_margin", "must be positive")

    n = cfg.channels - 1  # SSA series length: rows of the angle image
    if not (1 < params.window < n):
        raise ConfigError("window", f"need 1 < window < {n}")
    if not (1 <= params.pc <= params.window):
        raise ConfigError("pc", f"need 1 <= pc <= window ({params.window})")
    if not (0 < params.beta < 90):
        raise ConfigError("beta", "must be in (0, 90) degrees")
    if not (0 < params.theta_seg < 90):
        raise ConfigError("theta_seg", "must be in (0, 90) degrees")
    if not (params.sigma_x > 0 and math.isfinite(params.sigma_x)):
        raise ConfigError("sigma_x", "must be positive")
    if not (params.sigma_n > 0 and math.isfinite(params.sigma_n)):
        raise ConfigError("sigma_n", "must be positive")
    if not (0 <= params.persistence_threshold <= 1):
        raise ConfigError("persistence_threshold", "must be in [0, 1]")
    if not (params.depth_epsilon >= 0 and math.isfinite(params.depth_epsilon)):
        raise ConfigError("depth_epsilon", "must be non-negative")
    if params.connectivity not in (4, 8):
        raise ConfigError("connectivity", "must be 4 or 8")
    if params.peaks_mode not in ("2d", "rows"):
        raise ConfigError("peaks_mode", "must be '2d' or 'rows'")


def as_cloud(points) -> np.ndarray:
    """Coerce to a C-contiguous ``(N, 3)`` float64 array, rejecting non-finite values."""
    arr = np.ascontiguousarray(points, dtype=np.float64)
    if arr.size == 0:
        return np.zeros((0, 3), dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"expected an (N, 3) array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point cloud contains non-finite coordinates")
    return arr


@dataclass(frozen=True)
class DepthMapper:
    """Links depth-image pixels back to point indices.

    ``members[offsets[p]:offsets[p + 1]]`` are the point indices of flat
    pixel ``p`` in ascending order; ``retained[r, c]`` is the closest one or -1.
    """

    shape: tuple[int, int]
    offsets: np.ndarray
    members: np.ndarray
    retained: np.ndarray
    pixel_of_point: np.ndarray  # flat pixel per point, -1 when discarded
    discarded: np.ndarray

    def points_at(self, row: int, col: int) -> np.ndarray:
        p = row * self.shape[1] + col
        return self.members[self.offsets[p] : self.offsets[p + 1]]

    @property
    def n_points(self) -> int:
        return len(self.pixel_of_point)


# ---------------------------------------------------------------------------
# config file

_LIDAR_KEYS = {
    "lidar.channels": ("channels", int),
    "lidar.width": ("width", int),
    "lidar.horizontal_fov": ("horizontal_fov", float),
    "lidar.row_margin": ("row_margin", float),
}
_PARAM_KEYS = {
    "filter.pc": ("pc", int),
    "filter.beta": ("beta", float),
    "filter.window": ("window", int),
    "bf.sigma_x": ("sigma_x", float),
    "bf.sigma_n": ("sigma_n", float),
    "peaks.persistence_threshold": ("persistence_threshold", float),
    "peaks.connectivity": ("connectivity", int),
    "peaks.mode": ("peaks_mode", str),
    "segment.theta_seg": ("theta_seg", float),
    "segment.depth_epsilon": ("depth_epsilon", float),
}


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}", "empty key")
        out[key] = value
    return out


def apply_overrides(
    cfg: LidarConfig, params: FilterParams, values: dict[str, str]
) -> tuple[LidarConfig, FilterParams]:
    """Return copies of ``cfg``/``params`` with namespaced ``values`` applied."""
    lidar_kw, param_kw = {}, {}
    for key, value in values.items():
        try:
            if key == "lidar.elevations":
                lidar_kw["elevations"] = tuple(float(v) for v in value.split(",") if v.strip())
            elif key in _LIDAR_KEYS:
                name, conv = _LIDAR_KEYS[key]
                lidar_kw[name] = conv(value)
            elif key in _PARAM_KEYS:
                name, conv = _PARAM_KEYS[key]
                param_kw[name] = conv(value)
            else:
                raise ConfigError(key, "unknown key")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(key, f"cannot parse {value!r}") from None
    if "elevations" in lidar_kw and "channels" not in lidar_kw:
        lidar_kw["channels"] = len(lidar_kw["elevations"])
    return replace(cfg, **lidar_kw), replace(params, **param_kw)


def load_config(path: str | Path) -> tuple[LidarConfig, FilterParams]:
    text = Path(path).read_text()
    return apply_overrides(LidarConfig(), FilterParams(), parse_config_text(text))


def param_names() -> list[str]:
    return [f.name for f in fields(FilterParams)]
