"""Singular spectrum analysis, used column-wise to smooth the angle image."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import _accel
from ._accel import njit

RANK_TOL = 1e-10


class BadWindow(ValueError):
    pass


@dataclass(frozen=True)
class Decomposition:
    """Eigentriples of a trajectory matrix, eigenvalues descending.

    Only the ``d`` components with eigenvalue above ``RANK_TOL * lambda_1``
    are kept in ``u`` (W x d) and ``v`` (K x d); ``eigenvalues`` holds all W.
    """

    eigenvalues: np.ndarray
    u: np.ndarray
    v: np.ndarray
    n: int
    window: int

    @property
    def d(self) -> int:
        return self.u.shape[1]


def trajectory(series, window: int) -> np.ndarray:
    """W x K lagged-copy (Hankel) matrix, column j = series[j : j + W]."""
    s = np.asarray(series, dtype=np.float64)
    if not 1 < window < len(s):
        raise BadWindow(f"need 1 < window < {len(s)}, got {window}")
    return sliding_window_view(s, window).T.copy()


def hankelize(mat) -> np.ndarray:
    """Average the anti-diagonals of a W x K matrix into a length W+K-1 series."""
    mat = np.asarray(mat, dtype=np.float64)
    w, k = mat.shape
    out = np.zeros(w + k - 1)
    cnt = np.zeros(w + k - 1)
    for i in range(w):
        out[i : i + k] += mat[i]
        cnt[i : i + k] += 1
    return out / cnt


def decompose(series, window: int) -> Decomposition:
    x = trajectory(series, window)
    lam, vec = np.linalg.eigh(x @ x.T)
    lam = lam[::-1]
    vec = vec[:, ::-1]
    lam = np.clip(lam, 0.0, None)
    d = int(np.count_nonzero(lam > RANK_TOL * lam[0])) if lam[0] > 0 else 0
    u = vec[:, :d]
    v = (x.T @ u) / np.sqrt(lam[:d])
    return Decomposition(lam, u, v, len(series), window)


def reconstruct(dec: Decomposition, pc: int) -> np.ndarray:
    """Hankelized sum of the leading ``min(pc, d)`` elementary matrices."""
    if pc < 1:
        raise ValueError("pc must be >= 1")
    m = min(pc, dec.d)
    k = dec.n - dec.window + 1
    if m == 0:
        return np.zeros(dec.n)
    approx = np.zeros((dec.window, k))
    for j in range(m):
        approx += np.sqrt(dec.eigenvalues[j]) * np.outer(dec.u[:, j], dec.v[:, j])
    return hankelize(approx)


def smooth_series(series, window: int, pc: int) -> np.ndarray:
    return reconstruct(decompose(series, window), pc)


# ---------------------------------------------------------------------------
# column-wise kernels for the angle image


@njit
def _smooth_columns_nb(img, window, pc):
    n, ncol = img.shape
    k = n - window + 1
    out = np.empty_like(img)
    x = np.empty((window, k))
    approx = np.empty((window, k))
    for c in range(ncol):
        for i in range(window):
            for j in range(k):
                x[i, j] = img[i + j, c]
        lam, vec = np.linalg.eigh(x @ x.T)
        top = lam[window - 1]
        m = 0
        if top > 0:
            for j in range(window - 1, -1, -1):
                if lam[j] > RANK_TOL * top and m < pc:
                    m += 1
                else:
                    break
        if m == 0:
            approx[:, :] = 0.0
        else:
            u = np.ascontiguousarray(vec[:, window - m :])
            # sum_j sqrt(l_j) u_j v_j^T with v_j = X^T u_j / sqrt(l_j) equals U U^T X
            approx[:, :] = u @ (np.ascontiguousarray(u.T) @ x)
        for t in range(n):
            lo = max(0, t - k + 1)
            hi = min(window - 1, t)
            acc = 0.0
            for i in range(lo, hi + 1):
                acc += approx[i, t - i]
            out[t, c] = acc / (hi - lo + 1)
    return out


def _smooth_columns_np(img, window, pc):
    n, ncol = img.shape
    k = n - window + 1
    # (ncol, W, K) trajectories
    x = sliding_window_view(img.T, window, axis=1).transpose(0, 2, 1)
    lam, vec = np.linalg.eigh(x @ x.transpose(0, 2, 1))
    top = lam[:, -1:]
    keep = (lam > RANK_TOL * top) & (top > 0)
    # ascending order: the leading pc components are the last pc columns
    rank_from_top = np.arange(window)[::-1]
    keep &= rank_from_top[None, :] < pc
    # components are taken from the top; a gap in 'keep' cannot happen since lam is sorted
    u = vec * keep[:, None, :]
    approx = u @ (u.transpose(0, 2, 1) @ x)
    i, j = np.divmod(np.arange(window * k), k)
    counts = np.bincount(i + j, minlength=n).astype(np.float64)
    sums = np.zeros((ncol, n))
    flat = approx.reshape(ncol, window * k)
    for t in range(n):
        sums[:, t] = flat[:, (i + j) == t].sum(axis=1)
    return (sums / counts).T.copy()


def smooth_angle_image(angle_img, window: int = 8, pc: int = 5, clamp: bool = True) -> np.ndarray:
    """Smooth each column independently; output clamped to [0, pi/2]."""
    img = np.ascontiguousarray(angle_img, dtype=np.float64)
    n = img.shape[0]
    if not 1 < window < n:
        raise BadWindow(f"need 1 < window < {n}, got {window}")
    if pc < 1:
        raise ValueError("pc must be >= 1")
    impl = _smooth_columns_nb if _accel.USE_NUMBA else _smooth_columns_np
    out = impl(img, window, pc)
    if clamp:
        np.clip(out, 0.0, np.pi / 2, out=out)
    return out
