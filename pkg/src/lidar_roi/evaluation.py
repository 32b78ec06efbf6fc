"""Precision/recall/F1 of the filter output, scored in camera image space.

Labelled points are projected through a pinhole camera, rasterised as
small discs into one mask per class (roi, rou = region of uninterest) and
compared with truth masks stored as PGM files.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ingest import read_scan
from .pipeline import run_pipeline
from .types import ConfigError, DimensionMismatch, FilterParams, LidarConfig, parse_config_text

log = logging.getLogger(__name__)

CLASSES = ("roi", "rou")


class MissingTruth(FileNotFoundError):
    def __init__(self, stem: str):
        super().__init__(f"no truth masks for scan {stem!r}")
        self.stem = stem


@dataclass(frozen=True)
class Scores:
    precision: float
    recall: float
    f1: float


def prf1(predicted, truth) -> Scores:
    predicted = np.asarray(predicted, dtype=bool)
    truth = np.asarray(truth, dtype=bool)
    if predicted.shape != truth.shape:
        raise DimensionMismatch(f"{predicted.shape} vs {truth.shape}")
    tp = int(np.count_nonzero(predicted & truth))
    fp = int(np.count_nonzero(predicted & ~truth))
    fn = int(np.count_nonzero(~predicted & truth))
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return Scores(p, r, f1)


@dataclass(frozen=True)
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    extrinsic: np.ndarray  # 4x4, LiDAR frame -> camera frame (z forward, y down)

    def validate(self) -> None:
        if not (self.fx > 0 and self.fy > 0):
            raise ConfigError("camera", "fx and fy must be positive")
        if self.width < 1 or self.height < 1:
            raise ConfigError("camera", "image size must be positive")
        ext = np.asarray(self.extrinsic, dtype=np.float64)
        if ext.shape != (4, 4):
            raise ConfigError("extrinsic", "need 16 values")
        rot = ext[:3, :3]
        if not np.allclose(rot @ rot.T, np.eye(3), atol=1e-6) or np.linalg.det(rot) < 0:
            raise ConfigError("extrinsic", "rotation block is not orthonormal")


# LiDAR x forward / y left / z up  ->  camera x right / y down / z forward
LIDAR_TO_OPTICAL = np.array(
    [[0.0, -1.0, 0.0, 0.0], [0.0, 0.0, -1.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]]
)


def default_camera() -> CameraModel:
    return CameraModel(500.0, 500.0, 320.0, 240.0, 640, 480, LIDAR_TO_OPTICAL.copy())


def read_camera(path: str | Path) -> CameraModel:
    values = parse_config_text(Path(path).read_text())
    try:
        ext = np.array([float(v) for v in values["extrinsic"].replace(",", " ").split()])
        cam = CameraModel(
            fx=float(values["fx"]),
            fy=float(values["fy"]),
            cx=float(values["cx"]),
            cy=float(values["cy"]),
            width=int(values["width"]),
            height=int(values["height"]),
            extrinsic=ext.reshape(4, 4) if ext.size == 16 else ext,
        )
    except KeyError as exc:
        raise ConfigError("camera", f"missing key {exc.args[0]}") from None
    except ValueError as exc:
        raise ConfigError("camera", str(exc)) from None
    cam.validate()
    return cam


def write_camera(path: str | Path, cam: CameraModel) -> None:
    ext = " ".join(repr(float(v)) for v in np.asarray(cam.extrinsic).ravel())
    Path(path).write_text(
        f"fx = {cam.fx!r}\nfy = {cam.fy!r}\ncx = {cam.cx!r}\ncy = {cam.cy!r}\n"
        f"width = {cam.width}\nheight = {cam.height}\nextrinsic = {ext}\n"
    )


def project_points(points, cam: CameraModel) -> tuple[np.ndarray, np.ndarray]:
    """Continuous pixel coordinates ``(u, v)`` and a mask of points landing in the image."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    ext = np.asarray(cam.extrinsic, dtype=np.float64)
    pc = pts @ ext[:3, :3].T + ext[:3, 3]
    z = pc[:, 2]
    front = z > 0
    safe = np.where(front, z, 1.0)
    u = cam.fx * pc[:, 0] / safe + cam.cx
    v = cam.fy * pc[:, 1] / safe + cam.cy
    inside = front & (u >= 0) & (u < cam.width) & (v >= 0) & (v < cam.height)
    return np.stack([u, v], axis=1), inside


def _disc(radius: int) -> tuple[np.ndarray, np.ndarray]:
    r = int(radius)
    dy, dx = np.mgrid[-r : r + 1, -r : r + 1]
    keep = dx * dx + dy * dy <= r * r
    return dy[keep], dx[keep]


def rasterize(uv: np.ndarray, cam: CameraModel, radius: int) -> np.ndarray:
    mask = np.zeros((cam.height, cam.width), dtype=bool)
    if len(uv) == 0:
        return mask
    col = np.floor(uv[:, 0]).astype(np.int64)
    row = np.floor(uv[:, 1]).astype(np.int64)
    dy, dx = _disc(radius)
    rr = (row[:, None] + dy[None, :]).ravel()
    cc = (col[:, None] + dx[None, :]).ravel()
    ok = (rr >= 0) & (rr < cam.height) & (cc >= 0) & (cc < cam.width)
    mask[rr[ok], cc[ok]] = True
    return mask


def project_labels(points, labels, cam: CameraModel, dilation_radius: int = 2):
    """Rasterised ``(roi_mask, rou_mask, n_dropped)``; roi wins on overlap.

    Points with label 0 are ignored; points behind the camera or outside
    the image are dropped and counted.
    """
    labels = np.asarray(labels).ravel()
    uv, inside = project_points(points, cam)
    labelled = labels > 0
    n_dropped = int(np.count_nonzero(labelled & ~inside))
    use = labelled & inside
    roi = rasterize(uv[use & (labels >= 2)], cam, dilation_radius)
    rou = rasterize(uv[use & (labels == 1)], cam, dilation_radius)
    rou &= ~roi
    return roi, rou, n_dropped


# ---------------------------------------------------------------------------
# PGM


def write_pgm(path: str | Path, mask: np.ndarray, binary: bool = True) -> None:
    img = (np.asarray(mask) != 0).astype(np.uint8) * 255
    h, w = img.shape
    if binary:
        Path(path).write_bytes(f"P5\n{w} {h}\n255\n".encode() + img.tobytes())
    else:
        body = "\n".join(" ".join(map(str, row)) for row in img.tolist())
        Path(path).write_text(f"P2\n{w} {h}\n255\n{body}\n")


def _pgm_tokens(data: bytes, count: int, pos: int = 0):
    tokens = []
    while len(tokens) < count:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        tokens.append(data[start:pos].decode("ascii"))
    return tokens, pos


def read_pgm(path: str | Path) -> np.ndarray:
    """Read a P2/P5 PGM; returns a boolean mask of nonzero pixels."""
    data = Path(path).read_bytes()
    (magic, w, h, maxval), pos = _pgm_tokens(data, 4)
    w, h, maxval = int(w), int(h), int(maxval)
    if magic == "P5":
        dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
        raw = np.frombuffer(data, dtype=dtype, count=w * h, offset=pos + 1)
    elif magic == "P2":
        raw = np.array(data[pos:].split()[: w * h], dtype=np.int64)
    else:
        raise ValueError(f"{path}: not a PGM (magic {magic!r})")
    if raw.size != w * h:
        raise ValueError(f"{path}: expected {w * h} pixels, found {raw.size}")
    return raw.reshape(h, w) != 0


# ---------------------------------------------------------------------------
# runs


def scan_files(scan_dir: str | Path) -> list[Path]:
    d = Path(scan_dir)
    return sorted(p for p in d.iterdir() if p.suffix.lower() in (".csv", ".pcd"))


def evaluate_scan(points, cfg, params, cam, truth_roi, truth_rou, dilation_radius=2) -> dict[str, Scores]:
    res = run_pipeline(points, cfg, params)
    roi, rou, _ = project_labels(points, res.regions.point_labels, cam, dilation_radius)
    return {"roi": prf1(roi, truth_roi), "rou": prf1(rou, truth_rou)}


@dataclass
class RunReport:
    per_scan: dict[str, dict[str, Scores]]

    def summary(self) -> dict[str, dict[str, tuple[float, float]]]:
        """Per class and metric: unweighted (mean, population std) over scans."""
        out = {}
        for cls in CLASSES:
            out[cls] = {}
            for metric in ("precision", "recall", "f1"):
                vals = [getattr(s[cls], metric) for s in self.per_scan.values()]
                n = len(vals)
                mean = math.fsum(vals) / n if n else float("nan")
                var = math.fsum((v - mean) ** 2 for v in vals) / n if n else float("nan")
                out[cls][metric] = (mean, math.sqrt(var))
        return out

    def to_csv(self) -> str:
        lines = ["scan,class,precision,recall,f1"]
        for stem, scores in self.per_scan.items():
            for cls in CLASSES:
                s = scores[cls]
                lines.append(f"{stem},{cls},{s.precision:.6f},{s.recall:.6f},{s.f1:.6f}")
        summ = self.summary()
        for stat, k in (("mean", 0), ("std", 1)):
            for cls in CLASSES:
                m = summ[cls]
                lines.append(
                    f"{stat},{cls},{m['precision'][k]:.6f},{m['recall'][k]:.6f},{m['f1'][k]:.6f}"
                )
        return "\n".join(lines) + "\n"


def evaluate_run(
    scan_dir,
    truth_dir,
    cfg: LidarConfig | None = None,
    params: FilterParams | None = None,
    cam: CameraModel | None = None,
    dilation_radius: int = 2,
) -> RunReport:
    """Run the filter on every scan in ``scan_dir`` and score it against ``truth_dir``."""
    cfg = cfg or LidarConfig()
    params = params or FilterParams()
    cam = cam or default_camera()
    truth_dir = Path(truth_dir)
    files = scan_files(scan_dir)
    if not files:
        raise FileNotFoundError(f"no .csv/.pcd scans in {scan_dir}")
    per_scan = {}
    for path in files:
        stem = path.stem
        roi_p = truth_dir / f"{stem}.roi.pgm"
        rou_p = truth_dir / f"{stem}.rou.pgm"
        if not (roi_p.exists() and rou_p.exists()):
            raise MissingTruth(stem)
        truth_roi = read_pgm(roi_p)
        truth_rou = read_pgm(rou_p)
        if truth_roi.shape != (cam.height, cam.width) or truth_rou.shape != (cam.height, cam.width):
            raise DimensionMismatch(f"{stem}: truth masks do not match the camera image size")
        scan = read_scan(path)
        per_scan[stem] = evaluate_scan(scan.points, cfg, params, cam, truth_roi, truth_rou, dilation_radius)
    return RunReport(per_scan)
