"""Scan loading (ASCII PCD, CSV) and sliding-window concatenation."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .types import ConfigError

log = logging.getLogger(__name__)

FORMATS = ("pcd", "csv")


class ParseError(ValueError):
    def __init__(self, line: int, reason: str):
        super().__init__(f"line {line}: {reason}")
        self.line = line
        self.reason = reason


@dataclass
class Scan:
    points: np.ndarray
    dropped: int = 0


def detect_format(path: str | Path) -> str:
    suffix = Path(path).suffix.lower().lstrip(".")
    if suffix in ("pcd", "csv"):
        return suffix
    if suffix == "txt":
        return "csv"
    raise ConfigError("format", f"cannot infer scan format from {path}; pass --format")


def _finite_rows(rows: np.ndarray) -> tuple[np.ndarray, int]:
    if rows.size == 0:
        return np.zeros((0, 3), dtype=np.float64), 0
    keep = np.all(np.isfinite(rows), axis=1)
    dropped = int(len(rows) - keep.sum())
    return np.ascontiguousarray(rows[keep]), dropped


def parse_csv(text: str) -> Scan:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) < 3:
            raise ParseError(lineno, f"expected x,y,z, got {line!r}")
        try:
            rows.append([float(parts[0]), float(parts[1]), float(parts[2])])
        except ValueError:
            if not rows and lineno == 1:
                continue  # header line such as "x,y,z"
            raise ParseError(lineno, f"non-numeric field in {line!r}") from None
    pts, dropped = _finite_rows(np.asarray(rows, dtype=np.float64).reshape(-1, 3))
    return Scan(pts, dropped)


def parse_pcd(text: str) -> Scan:
    lines = text.splitlines()
    header = {}
    data_start = None
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, *vals = line.split()
        header[key.upper()] = vals
        if key.upper() == "DATA":
            data_start = lineno
            break
    if data_start is None:
        raise ParseError(len(lines), "missing DATA line")
    kind = header["DATA"][0].lower() if header["DATA"] else ""
    if kind != "ascii":
        raise ParseError(data_start, f"only ASCII PCD is supported, got DATA {kind!r}")
    fields = header.get("FIELDS")
    if not fields:
        raise ParseError(data_start, "missing FIELDS")
    counts = [int(c) for c in header.get("COUNT", ["1"] * len(fields))]
    if len(counts) != len(fields):
        raise ParseError(data_start, "COUNT does not match FIELDS")
    columns = {}
    pos = 0
    for name, cnt in zip(fields, counts):
        columns[name] = pos
        pos += cnt
    try:
        xyz_cols = [columns["x"], columns["y"], columns["z"]]
    except KeyError:
        raise ParseError(data_start, "FIELDS must include x y z") from None

    rows = []
    for lineno, raw in enumerate(lines[data_start:], data_start + 1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != pos:
            raise ParseError(lineno, f"expected {pos} values, got {len(parts)}")
        try:
            rows.append([float(parts[c]) for c in xyz_cols])
        except ValueError:
            raise ParseError(lineno, f"non-numeric value in {line!r}") from None
    expected = header.get("POINTS")
    if expected and int(expected[0]) != len(rows):
        raise ParseError(len(lines), f"POINTS says {expected[0]}, found {len(rows)} rows")
    pts, dropped = _finite_rows(np.asarray(rows, dtype=np.float64).reshape(-1, 3))
    return Scan(pts, dropped)


def read_scan(path: str | Path, format: str | None = None) -> Scan:
    """Read one scan; non-finite rows are dropped and counted in ``Scan.dropped``."""
    path = Path(path)
    fmt = format or detect_format(path)
    text = path.read_text()  # OSError propagates as the I/O failure
    scan = parse_pcd(text) if fmt == "pcd" else parse_csv(text)
    if scan.dropped:
        log.info("%s: dropped %d non-finite rows", path, scan.dropped)
    return scan


def sliding_window(clouds: Sequence[np.ndarray], k: int) -> np.ndarray:
    """Concatenate the most recent ``min(k, len(clouds))`` clouds, oldest first."""
    if k < 1:
        raise ValueError("window size must be >= 1")
    if not clouds:
        raise ValueError("need at least one cloud")
    recent = [np.asarray(c, dtype=np.float64).reshape(-1, 3) for c in clouds[-k:]]
    return np.concatenate(recent, axis=0)


def write_csv(path: str | Path, points: np.ndarray) -> None:
    np.savetxt(path, np.asarray(points).reshape(-1, 3), delimiter=",", fmt="%.17g")


def write_pcd(path: str | Path, points: np.ndarray) -> None:
    pts = np.asarray(points).reshape(-1, 3)
    head = (
        "VERSION 0.7\nFIELDS x y z\nSIZE 4 4 4\nTYPE F F F\nCOUNT 1 1 1\n"
        f"WIDTH {len(pts)}\nHEIGHT 1\nVIEWPOINT 0 0 0 1 0 0 0\nPOINTS {len(pts)}\nDATA ascii\n"
    )
    body = "".join(f"{x!r} {y!r} {z!r}\n" for x, y, z in pts.tolist())
    Path(path).write_text(head + body)
