"""Box-kernel hot loops, compiled when available.

The Cython extension is used if it imports; set ``FUNCSURVEY_PURE_PYTHON=1``
to force the numpy fallback.  ``IMPLEMENTATION`` names the active backend.
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_py

if os.environ.get("FUNCSURVEY_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _kernels_py

IMPLEMENTATION: str = _impl.IMPLEMENTATION

__all__ = ["IMPLEMENTATION", "box_means", "box_cv_scores", "backend"]


def backend(name: str | None = None):
    """Return the module implementing the kernels (``'python'``, ``'cython'`` or active)."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels  # type: ignore[attr-defined]

        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")


def box_means(dist, resp, h, loo: bool = False, impl=None) -> np.ndarray:
    resp = np.asarray(resp, dtype=float)
    h = np.broadcast_to(np.asarray(h, dtype=float), (resp.shape[1],))
    return (impl or _impl).box_means(dist, resp, h, bool(loo))


def box_cv_scores(dist, resp, cands, impl=None) -> np.ndarray:
    cands = np.asarray(cands, dtype=float)
    order = np.argsort(cands, kind="stable")
    scores = (impl or _impl).box_cv_scores(dist, np.asarray(resp, dtype=float), cands[order])
    out = np.empty_like(scores)
    out[order] = scores
    return out
