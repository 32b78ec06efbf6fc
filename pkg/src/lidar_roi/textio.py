"""Text-matrix and CSV emission shared by the CLI and golden tests.

Matrix format: first line ``rows cols``, then one line per row of
space-separated values. Floats use ``repr`` so files round-trip exactly.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np


def format_matrix(a: np.ndarray) -> str:
    a = np.asarray(a)
    if a.ndim != 2:
        raise ValueError("matrix must be 2D")
    if np.issubdtype(a.dtype, np.integer):
        fmt = str
    else:
        fmt = lambda v: repr(float(v))  # noqa: E731
    lines = [f"{a.shape[0]} {a.shape[1]}"]
    lines.extend(" ".join(fmt(v) for v in row) for row in a.tolist())
    return "\n".join(lines) + "\n"


def write_matrix(path: str | Path, a: np.ndarray) -> None:
    Path(path).write_text(format_matrix(a))


def read_matrix(path: str | Path, dtype=np.float64) -> np.ndarray:
    lines = Path(path).read_text().split("\n")
    rows, cols = (int(v) for v in lines[0].split())
    data = np.array(" ".join(lines[1 : rows + 1]).split(), dtype=dtype)
    if data.size != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} values, found {data.size}")
    return data.reshape(rows, cols)


def write_labeled_cloud(path: str | Path, points: np.ndarray, labels: np.ndarray) -> None:
    """``x,y,z,label`` per point, in input order."""
    lines = ["x,y,z,label"]
    lines.extend(
        f"{x!r},{y!r},{z!r},{int(l)}" for (x, y, z), l in zip(points.tolist(), labels.tolist())
    )
    Path(path).write_text("\n".join(lines) + "\n")


def read_labeled_cloud(path: str | Path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.size == 0:
        return np.zeros((0, 3)), np.zeros(0, dtype=np.int64)
    return data[:, :3].copy(), data[:, 3].astype(np.int64)
