"""Pure-numpy box-kernel routines (fallback for the compiled ``_kernels``).

``dist`` is an ``n x n`` matrix of max-coordinate distances; unit ``k`` is in
the neighbourhood of ``i`` at bandwidth ``h`` when ``dist[i, k] <= h``.
An empty neighbourhood falls back to the mean of all (other) units.
"""

from __future__ import annotations

import numpy as np

IMPLEMENTATION = "python"


def _fallback(resp: np.ndarray, loo: bool) -> np.ndarray:
    n = resp.shape[0]
    tot = resp.sum(axis=0)
    if loo:
        if n == 1:
            return np.zeros_like(resp)
        return (tot[None, :] - resp) / (n - 1)
    return np.broadcast_to(tot / n, resp.shape)


def box_means(dist: np.ndarray, resp: np.ndarray, h: np.ndarray, loo: bool) -> np.ndarray:
    """Local box averages of ``resp[:, l]`` at bandwidth ``h[l]`` for every unit."""
    dist = np.ascontiguousarray(dist, dtype=float)
    resp = np.ascontiguousarray(resp, dtype=float)
    h = np.ascontiguousarray(h, dtype=float)
    n, r = resp.shape
    out = np.empty((n, r))
    fb = _fallback(resp, loo)
    for hv in np.unique(h):
        cols = np.flatnonzero(h == hv)
        A = (dist <= hv).astype(float)
        if loo:
            np.fill_diagonal(A, 0.0)
        cnt = A.sum(axis=1)
        S = A @ resp[:, cols]
        has = cnt > 0
        block = fb[:, cols].copy()
        block[has] = S[has] / cnt[has, None]
        out[:, cols] = block
    return out


def box_cv_scores(dist: np.ndarray, resp: np.ndarray, cands: np.ndarray) -> np.ndarray:
    """Leave-one-out squared-error totals, shape ``(len(cands), r)``."""
    dist = np.ascontiguousarray(dist, dtype=float)
    resp = np.ascontiguousarray(resp, dtype=float)
    cands = np.ascontiguousarray(cands, dtype=float)
    n, r = resp.shape
    fb = _fallback(resp, True)
    scores = np.empty((cands.size, r))
    for j, hv in enumerate(cands):
        A = (dist <= hv).astype(float)
        np.fill_diagonal(A, 0.0)
        cnt = A.sum(axis=1)
        S = A @ resp
        has = cnt > 0
        pred = fb.copy()
        pred[has] = S[has] / cnt[has, None]
        scores[j] = np.sum((resp - pred) ** 2, axis=0)
    return scores
