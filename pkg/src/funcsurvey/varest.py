"""Estimated covariance operators of ``sqrt(n) * (estimate - mean)`` on the grid.

An operator is stored as its kernel matrix ``K`` on the nodes, acting as
``(A f)(t_l) = (T/r) * sum_m K[l, m] f(t_m)``.  Hence
``trace = (T/r) * sum_l K[l, l]`` and ``||A||_HS = (T/r) * ||K||_F``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .designs import DesignKind, DrawnSample
from .estimators import EstimatorError, EstimatorKind, check_pair, design_weights, greg_fit
from .population import Grid, Population, format_float

__all__ = [
    "CovOperatorEstimate",
    "residual_curves",
    "cov_op_pi",
    "cov_op_rhc",
    "estimate_cov_op",
    "hs_norm",
    "save_kernel",
    "PSD_TOL",
]

PSD_TOL = -1e-8


@dataclass(frozen=True)
class CovOperatorEstimate:
    kernel: np.ndarray
    trace: float
    estimator: EstimatorKind
    design: DesignKind
    grid: Grid
    min_eigenvalue: float

    @property
    def psd_violation(self) -> bool:
        """True when the smallest eigenvalue falls below the roundoff allowance."""
        scale = max(1.0, float(np.max(np.abs(self.kernel), initial=0.0)))
        return self.min_eigenvalue < PSD_TOL * scale


def hs_norm(est: CovOperatorEstimate) -> float:
    return est.grid.step * float(np.linalg.norm(est.kernel))


def _finish(kernel: np.ndarray, grid: Grid, estimator, design) -> CovOperatorEstimate:
    kernel = 0.5 * (kernel + kernel.T)
    trace = grid.step * float(np.trace(kernel))
    min_eig = float(np.linalg.eigvalsh(kernel)[0]) if kernel.size else 0.0
    return CovOperatorEstimate(kernel, trace, EstimatorKind.parse(estimator), DesignKind.parse(design), grid, min_eig)


def residual_curves(
    sample: DrawnSample,
    pop: Population,
    estimator: "str | EstimatorKind",
    weight_kind: str | None = None,
) -> np.ndarray:
    """Curves ``V_i`` entering the covariance estimate, one row per sampled unit.

    For HT/RHC these are the responses.  For GREG the residuals are taken
    about the unnormalized HT (or RHC) means of ``Y`` and ``Z`` with the
    Hajek-weighted slope from :func:`greg_fit`.
    """
    est = EstimatorKind.parse(estimator)
    Y = pop.Y[sample.indices]
    if est is not EstimatorKind.GREG:
        check_pair(est, sample.kind)
        return Y.copy()
    fit = greg_fit(sample, pop, weight_kind)
    w = design_weights(sample, pop, weight_kind)
    Z = pop.Z[sample.indices]
    ybar = (w @ Y) / pop.N
    zbar = (w @ Z) / pop.N
    return Y - ybar - (Z - zbar) @ fit.bhat


def cov_op_pi(
    sample: DrawnSample,
    pop: Population,
    vhat: np.ndarray,
    estimator: "str | EstimatorKind" = EstimatorKind.HT,
) -> CovOperatorEstimate:
    """Estimator for pi-weighted designs.

    ``(n/N^2) sum_{i in s} u_i (x) u_i (1/pi_i - 1)/pi_i`` with
    ``u_i = V_i - T_hat pi_i`` and
    ``T_hat = sum V_i (1/pi_i - 1) / sum (1 - pi_i)``.
    """
    if sample.pi is None:
        raise EstimatorError("sample carries no inclusion probabilities")
    pi = sample.pi
    vhat = np.asarray(vhat, dtype=float)
    n, N, r = sample.n, pop.N, pop.grid.r
    denom = float(np.sum(1.0 - pi))
    if denom <= 0.0:
        warnings.warn("census sample: design variance is zero, returning the zero operator", stacklevel=2)
        return _finish(np.zeros((r, r)), pop.grid, estimator, sample.kind)
    t_hat = ((1.0 / pi - 1.0) @ vhat) / denom
    u = vhat - pi[:, None] * t_hat[None, :]
    wt = (n / N**2) * (1.0 / pi - 1.0) / pi
    kernel = u.T @ (wt[:, None] * u)
    return _finish(kernel, pop.grid, estimator, sample.kind)


def cov_op_rhc(
    sample: DrawnSample,
    pop: Population,
    vhat: np.ndarray,
    estimator: "str | EstimatorKind" = EstimatorKind.RHC,
) -> CovOperatorEstimate:
    """Estimator under RHC sampling.

    ``n gamma (Xbar/N) sum_{i in s} u_i (x) u_i Q_i / X_i^2`` with
    ``u_i = V_i - X_i Vbar_RHC / Xbar`` and ``Vbar_RHC = sum (Q_i/(N X_i)) V_i``.
    """
    if sample.q is None or sample.gamma is None:
        raise EstimatorError("sample lacks RHC bookkeeping (Q_i, gamma)")
    vhat = np.asarray(vhat, dtype=float)
    n, N = sample.n, pop.N
    x = pop.X[sample.indices]
    xbar = float(pop.X.mean())
    vbar = ((sample.q / x) @ vhat) / N
    u = vhat - (x / xbar)[:, None] * vbar[None, :]
    wt = n * sample.gamma * (xbar / N) * sample.q / x**2
    kernel = u.T @ (wt[:, None] * u)
    return _finish(kernel, pop.grid, estimator, sample.kind)


def estimate_cov_op(
    sample: DrawnSample, pop: Population, estimator: "str | EstimatorKind"
) -> CovOperatorEstimate:
    """Residuals plus the covariance formula matching the sample's design."""
    est = EstimatorKind.parse(estimator)
    check_pair(est, sample.kind)
    vhat = residual_curves(sample, pop, est)
    if sample.kind is DesignKind.RHC:
        return cov_op_rhc(sample, pop, vhat, est)
    return cov_op_pi(sample, pop, vhat, est)


def save_kernel(est: CovOperatorEstimate, path: str | Path) -> None:
    lines = [
        f"# grid T={format_float(est.grid.T)} r={est.grid.r}",
        f"# estimator={est.estimator.value} design={est.design.value}",
        f"# trace={format_float(est.trace)} min_eigenvalue={format_float(est.min_eigenvalue)}"
        f" psd_violation={int(est.psd_violation)}",
    ]
    lines += [",".join(format_float(v) for v in row) for row in est.kernel]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
