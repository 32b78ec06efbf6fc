"""Local maxima of a depth image via 0-dimensional superlevel-set persistence.

Pixels are added in decreasing intensity (ties in row-major order) and
joined with a union-find. When components meet, the younger one dies at the
current level (elder rule). Components that never merge die at the image
floor, the global minimum of the grid including no-return pixels.
Zero-length bars of non-surviving components are dropped, so a plateau
yields one pair at its first pixel in row-major order.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _accel
from ._accel import njit


class EmptyImage(ValueError):
    pass


@dataclass(frozen=True)
class Barcode:
    """Persistence pairs, sorted by (row, col).

    ``floor`` and ``ceiling`` are the global minimum and maximum of the grid
    the barcode was computed on; ``span = ceiling - floor``.
    """

    rows: np.ndarray
    cols: np.ndarray
    birth: np.ndarray
    death: np.ndarray
    floor: float
    ceiling: float

    @property
    def persistence(self) -> np.ndarray:
        return self.birth - self.death

    @property
    def span(self) -> float:
        return self.ceiling - self.floor

    @property
    def locations(self) -> np.ndarray:
        return np.stack([self.rows, self.cols], axis=1)

    def __len__(self):
        return len(self.rows)

    def pairs(self) -> list[tuple[int, int, float, float]]:
        return [
            (int(r), int(c), float(b), float(d))
            for r, c, b, d in zip(self.rows, self.cols, self.birth, self.death)
        ]

    def subset(self, keep: np.ndarray) -> Barcode:
        return Barcode(
            self.rows[keep], self.cols[keep], self.birth[keep], self.death[keep], self.floor, self.ceiling
        )


def _offsets(connectivity):
    if connectivity == 4:
        return np.array([[-1, 0], [0, -1], [0, 1], [1, 0]], np.int64)
    return np.array(
        [[-1, -1], [-1, 0], [-1, 1], [0, -1], [0, 1], [1, -1], [1, 0], [1, 1]], np.int64
    )


@njit
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@njit
def _persistence_nb(img, offsets, wrap, floor):
    h, w = img.shape
    flat = img.ravel()
    n = flat.shape[0]
    # stable sort on -value keeps row-major order within a level
    order = np.argsort(-flat, kind="mergesort")
    rank = np.empty(n, np.int64)
    for k in range(n):
        rank[order[k]] = k
    parent = np.full(n, -1, np.int64)
    # oldest pixel of each root; union-by-age keeps it at the root itself
    out_loc = np.empty(n, np.int64)
    out_death = np.empty(n)
    m = 0
    roots = np.empty(offsets.shape[0], np.int64)
    for k in range(n):
        p = order[k]
        v = flat[p]
        if not v > 0:
            break
        r = p // w
        c = p % w
        nr = 0
        for o in range(offsets.shape[0]):
            rr = r + offsets[o, 0]
            cc = c + offsets[o, 1]
            if rr < 0 or rr >= h:
                continue
            if cc < 0 or cc >= w:
                if not wrap:
                    continue
                cc = cc % w
            q = rr * w + cc
            if q == p or parent[q] < 0:
                continue
            root = _find(parent, q)
            dup = False
            for t in range(nr):
                if roots[t] == root:
                    dup = True
                    break
            if not dup:
                roots[nr] = root
                nr += 1
        if nr == 0:
            parent[p] = p
            continue
        elder = roots[0]
        for t in range(1, nr):
            if rank[roots[t]] < rank[elder]:
                elder = roots[t]
        for t in range(nr):
            root = roots[t]
            if root != elder:
                if flat[root] > v:
                    out_loc[m] = root
                    out_death[m] = v
                    m += 1
                parent[root] = elder
        parent[p] = elder
    for p in range(n):
        if parent[p] == p:
            out_loc[m] = p
            out_death[m] = floor
            m += 1
    return out_loc[:m], out_death[:m]


def _persistence_py(img, offsets, wrap, floor):
    h, w = img.shape
    flat = img.ravel()
    order = np.argsort(-flat, kind="stable")
    rank = np.empty(len(flat), np.int64)
    rank[order] = np.arange(len(flat))
    parent = {}

    def find(i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    locs, deaths = [], []
    offs = offsets.tolist()
    for p in order[flat[order] > 0].tolist():
        v = flat[p]
        r, c = divmod(p, w)
        roots = []
        for dr, dc in offs:
            rr, cc = r + dr, c + dc
            if not 0 <= rr < h:
                continue
            if not 0 <= cc < w:
                if not wrap:
                    continue
                cc %= w
            q = rr * w + cc
            if q != p and q in parent:
                root = find(q)
                if root not in roots:
                    roots.append(root)
        if not roots:
            parent[p] = p
            continue
        elder = min(roots, key=lambda t: rank[t])
        for root in roots:
            if root != elder:
                if flat[root] > v:
                    locs.append(root)
                    deaths.append(v)
                parent[root] = elder
        parent[p] = elder
    for p in sorted(parent):
        if parent[p] == p:
            locs.append(p)
            deaths.append(floor)
    return np.asarray(locs, np.int64), np.asarray(deaths, np.float64)


def _barcode_from(img, locs, deaths, floor, ceiling) -> Barcode:
    w = img.shape[1]
    order = np.argsort(locs, kind="stable")
    locs = locs[order]
    deaths = deaths[order]
    return Barcode(
        rows=locs // w,
        cols=locs % w,
        birth=img.ravel()[locs],
        death=deaths,
        floor=floor,
        ceiling=ceiling,
    )


def persistence_maxima(img, connectivity: int = 8, wrap: bool = False, mode: str = "2d") -> Barcode:
    """Superlevel-set persistence pairs of the positive pixels of ``img``.

    ``wrap`` makes the first and last column adjacent (full-revolution scans).
    ``mode="rows"`` runs an independent 1D filtration per image row.
    """
    img = np.ascontiguousarray(img, dtype=np.float64)
    if img.ndim == 1:
        img = img[None, :]
    if img.ndim != 2 or img.size == 0:
        raise EmptyImage("expected a non-empty 2D grid")
    if not np.all(np.isfinite(img)):
        raise ValueError("grid contains non-finite values")
    if not np.any(img > 0):
        raise EmptyImage("no positive pixel")
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    floor = float(img.min())
    ceiling = float(img.max())
    impl = _persistence_nb if _accel.USE_NUMBA else _persistence_py
    if mode == "2d":
        locs, deaths = impl(img, _offsets(connectivity), wrap, floor)
    elif mode == "rows":
        offs = np.array([[0, -1], [0, 1]], np.int64)
        w = img.shape[1]
        parts = [impl(img[r : r + 1], offs, wrap, floor) for r in range(img.shape[0]) if np.any(img[r] > 0)]
        r_idx = [r for r in range(img.shape[0]) if np.any(img[r] > 0)]
        locs = np.concatenate([l + r * w for (l, _), r in zip(parts, r_idx)])
        deaths = np.concatenate([d for _, d in parts])
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return _barcode_from(img, locs, deaths, floor, ceiling)


def filter_barcode(bc: Barcode, persistence_threshold: float) -> Barcode:
    """Keep bars at least ``persistence_threshold`` of the grid span long.

    The bar born at the global maximum always survives.
    """
    if not 0 <= persistence_threshold <= 1:
        raise ValueError("persistence_threshold must be in [0, 1]")
    if len(bc) == 0:
        return bc
    keep = bc.persistence >= persistence_threshold * bc.span
    top = np.argmax(bc.birth)  # first (row-major) pair at the global maximum
    keep[top] = True
    return bc.subset(keep)


def write_barcode_csv(path, bc: Barcode) -> None:
    lines = ["row,col,birth,death,persistence"]
    for r, c, b, d in bc.pairs():
        lines.append(f"{r},{c},{b!r},{d!r},{b - d!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
