"""Determining the degree of heteroscedasticity ``eta`` from a pilot sample.

Two routes are offered: a nonparametric log-log slope of estimated
conditional total variance against size (:func:`eta_slope_estimate`), and
a scan over ``eta`` in ``{0, 0.1, ..., 1}`` picking the value whose rescaled
data look most homoscedastic under a Breusch-Pagan, White or Glejser test
(:func:`eta_grid_test`).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import kernels
from .population import Grid, format_float

__all__ = [
    "EtaReport",
    "BandwidthSelection",
    "OLSResult",
    "HeteroError",
    "ETA_GRID",
    "standardize",
    "chebyshev_distances",
    "bandwidth_candidates",
    "local_mean",
    "loocv_bandwidth",
    "select_bandwidths",
    "eta_slope_estimate",
    "ols_fit",
    "hetero_test",
    "eta_grid_test",
    "save_eta_report",
]

ETA_GRID = np.round(np.arange(11) * 0.1, 10)
N_CANDIDATES = 16
COND_LIMIT = 1e12


class HeteroError(ValueError):
    pass


@dataclass(frozen=True)
class BandwidthSelection:
    h1: np.ndarray
    h2: np.ndarray
    candidates: np.ndarray


@dataclass(frozen=True)
class EtaReport:
    eta_hat: float
    method: str
    per_candidate: tuple[tuple[float, float], ...] = ()
    theta_hat: float | None = None
    intercept: float | None = None
    eta_raw: float | None = None
    log_trace: np.ndarray | None = None
    log_x: np.ndarray | None = None
    dropped: int = 0
    bandwidths: BandwidthSelection | None = field(default=None, repr=False)


# ---------------------------------------------------------------------------
# local averaging


def standardize(cov: np.ndarray) -> np.ndarray:
    """Divide each column by its sample standard deviation (constant columns untouched)."""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim == 1:
        cov = cov[:, None]
    sd = cov.std(axis=0, ddof=1) if cov.shape[0] > 1 else np.zeros(cov.shape[1])
    sd = np.where(sd > 0, sd, 1.0)
    return cov / sd


def chebyshev_distances(cov: np.ndarray) -> np.ndarray:
    """``max_j |c_ij - c_kj|``: the box kernel's product of indicators is ``dist <= h``."""
    cov = np.asarray(cov, dtype=float)
    if cov.ndim == 1:
        cov = cov[:, None]
    return np.max(np.abs(cov[:, None, :] - cov[None, :, :]), axis=2)


def bandwidth_candidates(dist: np.ndarray, count: int = N_CANDIDATES) -> np.ndarray:
    """Geometric grid between the 5th and 95th percentiles of pairwise distances."""
    iu = np.triu_indices(dist.shape[0], k=1)
    pair = dist[iu]
    pos = pair[pair > 0]
    if pos.size == 0:
        return np.array([1.0])
    lo, hi = np.percentile(pair, [5, 95])
    if lo <= 0:
        lo = float(pos.min())
    if hi <= lo:
        return np.array([lo])
    return np.geomspace(lo, hi, count)


def local_mean(
    responses: np.ndarray,
    covariates: np.ndarray,
    h: float,
    query: int,
    loo: bool = False,
) -> float:
    """Box-neighbourhood average of ``responses`` around unit ``query``.

    Direct scan; the vectorized paths in :mod:`funcsurvey.kernels` compute the
    same quantity for all units at once.
    """
    if h <= 0:
        raise HeteroError("bandwidth must be positive")
    y = np.asarray(responses, dtype=float)
    c = np.asarray(covariates, dtype=float)
    if c.ndim == 1:
        c = c[:, None]
    mask = np.all(np.abs(c - c[query]) <= h, axis=1)
    if loo:
        mask[query] = False
    if mask.any():
        return float(y[mask].mean())
    if loo:
        others = np.delete(y, query)
        return float(others.mean()) if others.size else 0.0
    return float(y.mean())


def _argmin_smallest(scores: np.ndarray, resp: np.ndarray) -> np.ndarray:
    """Per-column argmin over candidates (rows); near-ties go to the smaller bandwidth."""
    centered = resp - resp.mean(axis=0)
    scale = np.max(np.abs(resp), axis=0)
    tol = 1e-10 * np.sum(centered**2, axis=0) + 1e-20 * resp.shape[0] * scale**2
    best = scores.min(axis=0)
    return np.argmax(scores <= best + tol, axis=0)


def loocv_bandwidth(responses: np.ndarray, covariates: np.ndarray, candidates: np.ndarray) -> float:
    cands = np.asarray(candidates, dtype=float)
    if cands.size == 0:
        raise HeteroError("candidate bandwidth grid is empty")
    order = np.argsort(cands, kind="stable")
    cands = cands[order]
    y = np.asarray(responses, dtype=float)[:, None]
    dist = chebyshev_distances(covariates)
    scores = kernels.box_cv_scores(dist, y, cands)
    return float(cands[_argmin_smallest(scores, y)[0]])


def select_bandwidths(dist: np.ndarray, resp: np.ndarray, cands: np.ndarray) -> np.ndarray:
    """LOOCV bandwidth per column of ``resp`` (candidates assumed ascending)."""
    scores = kernels.box_cv_scores(dist, resp, cands)
    return cands[_argmin_smallest(scores, resp)]


# ---------------------------------------------------------------------------
# regression utilities


@dataclass(frozen=True)
class OLSResult:
    coef: np.ndarray
    resid: np.ndarray
    r_squared: float


def ols_fit(design: np.ndarray, response: np.ndarray, include_intercept: bool = True) -> OLSResult:
    """Least squares with a column-scaled conditioning guard.

    With ``include_intercept`` a leading constant column is added and R^2 uses
    the centred total sum of squares; otherwise it is uncentred.
    """
    A = np.asarray(design, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    y = np.asarray(response, dtype=float)
    if include_intercept:
        A = np.column_stack([np.ones(A.shape[0]), A])
    n, p = A.shape
    if n <= p:
        raise HeteroError(f"need more observations than regressors (n={n}, p={p})")
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0) or np.linalg.cond(A / norms) > COND_LIMIT:
        raise HeteroError("design matrix is rank deficient")
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    tss = np.sum((y - y.mean()) ** 2) if include_intercept else np.sum(y**2)
    rss = np.sum(resid**2)
    r2 = 0.0 if tss <= 0 else float(max(0.0, 1.0 - rss / tss))
    return OLSResult(coef, resid, r2)


def _prune_columns(cols: list[np.ndarray]) -> list[np.ndarray]:
    """Drop columns that are constant (collinear with the intercept) or repeat an earlier one."""
    kept: list[np.ndarray] = []
    units: list[np.ndarray] = []
    for c in cols:
        mag = np.max(np.abs(c))
        if mag == 0 or np.ptp(c) <= 1e-10 * mag:
            continue
        u = c / np.linalg.norm(c)
        if any(abs(abs(float(u @ v)) - 1.0) <= 1e-12 for v in units):
            continue
        kept.append(c)
        units.append(u)
    return kept


def _aux_regressors(X: np.ndarray, kind: str) -> list[np.ndarray]:
    p = X.shape[1]
    cols = [X[:, j] for j in range(p)]
    if kind == "white":
        cols += [X[:, j] ** 2 for j in range(p)]
        cols += [X[:, j] * X[:, k] for j in range(p) for k in range(j + 1, p)]
    return _prune_columns(cols)


def hetero_test(response: np.ndarray, regressors: np.ndarray, kind: str) -> float:
    """Upper-tail chi-square p-value of ``n R^2`` from the auxiliary regression.

    The main fit has no added intercept; the auxiliary regression of squared
    (BP, White) or absolute (Glejser) residuals does.  Auxiliary columns that
    are constant or duplicated are dropped and the degrees of freedom count
    what remains.
    """
    kind = kind.lower()
    if kind not in ("bp", "white", "glejser"):
        raise HeteroError(f"unknown test {kind!r}")
    y = np.asarray(response, dtype=float)
    X = np.asarray(regressors, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = y.size
    main = ols_fit(X, y, include_intercept=False)
    e = main.resid
    target = np.abs(e) if kind == "glejser" else e**2
    # exact fit: what is left is rounding noise, not heteroscedasticity
    if np.linalg.norm(e) <= 1e-10 * np.linalg.norm(y):
        return 1.0
    aux = _aux_regressors(X, kind)
    df = len(aux)
    if df == 0:
        return 1.0
    if n <= df + 1:
        raise HeteroError("too few observations for the auxiliary regression")
    mag = np.max(np.abs(target))
    if np.ptp(target) <= 1e-13 * mag:
        return 1.0
    fit = ols_fit(np.column_stack(aux), target, include_intercept=True)
    stat = n * fit.r_squared
    return float(np.clip(stats.chi2.sf(stat, df), 0.0, 1.0))


# ---------------------------------------------------------------------------
# the two eta procedures


def _check_pilot(Y, Z, X, grid: Grid):
    Y = np.asarray(Y, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if Z.ndim == 1:
        Z = Z[:, None]
    X = np.asarray(X, dtype=float)
    if Y.ndim != 2 or Y.shape[1] != grid.r:
        raise HeteroError("curves do not conform to the grid")
    if not (Y.shape[0] == Z.shape[0] == X.shape[0]):
        raise HeteroError("Y, Z and X must have one row per sampled unit")
    if np.any(X <= 0):
        raise HeteroError("sizes must be positive")
    return Y, Z, X


def eta_slope_estimate(
    Y: np.ndarray,
    Z: np.ndarray,
    X: np.ndarray,
    grid: Grid,
    candidates: np.ndarray | None = None,
) -> EtaReport:
    """Half the slope of log estimated conditional total variance on log size."""
    Y, Z, X = _check_pilot(Y, Z, X, grid)
    n = Y.shape[0]
    if n < 10:
        raise HeteroError("slope method needs at least 10 units")
    cov = standardize(np.column_stack([Z, X]))
    dist = chebyshev_distances(cov)
    cands = bandwidth_candidates(dist) if candidates is None else np.sort(np.asarray(candidates, dtype=float))
    h1 = select_bandwidths(dist, Y, cands)
    fitted = kernels.box_means(dist, Y, h1, loo=False)
    sq = (Y - fitted) ** 2
    h2 = select_bandwidths(dist, sq, cands)
    cond_var = kernels.box_means(dist, sq, h2, loo=False)
    trace = grid.step * cond_var.sum(axis=1)
    keep = trace > 0
    if keep.sum() < 3:
        raise HeteroError("insufficient data for log-log regression")
    log_t = np.log(trace[keep])
    log_x = np.log(X[keep])
    fit = ols_fit(log_x, log_t, include_intercept=True)
    intercept, theta = float(fit.coef[0]), float(fit.coef[1])
    raw = 0.5 * theta
    return EtaReport(
        eta_hat=float(np.clip(raw, 0.0, 1.5)),
        method="slope",
        theta_hat=theta,
        intercept=intercept,
        eta_raw=raw,
        log_trace=log_t,
        log_x=log_x,
        dropped=int(n - keep.sum()),
        bandwidths=BandwidthSelection(h1, h2, cands),
    )


def eta_grid_test(
    Y: np.ndarray,
    Z: np.ndarray,
    X: np.ndarray,
    grid: Grid,
    kind: str = "bp",
    etas: np.ndarray = ETA_GRID,
) -> EtaReport:
    """Pick the ``eta`` whose rescaled integrated data give the largest p-value."""
    Y, Z, X = _check_pilot(Y, Z, X, grid)
    n, d = Z.shape
    if n <= d + 2:
        raise HeteroError("grid test needs n > d + 2")
    y_int = grid.step * Y.sum(axis=1)
    base = np.column_stack([np.ones(n), Z])
    pvals = []
    for eta in etas:
        scale = X ** (-eta)
        pvals.append(hetero_test(y_int * scale, base * scale[:, None], kind))
    pvals = np.asarray(pvals)
    best = int(np.argmax(pvals >= pvals.max() - 1e-12))
    return EtaReport(
        eta_hat=float(etas[best]),
        method=kind.lower(),
        per_candidate=tuple((float(e), float(p)) for e, p in zip(etas, pvals)),
    )


def save_eta_report(report: EtaReport, path) -> None:
    """Write the report as CSV to a path or an open text stream."""
    lines = [f"# method={report.method} eta_hat={format_float(report.eta_hat)}"]
    if report.method == "slope":
        lines.append(f"# eta_raw={format_float(report.eta_raw)} intercept={format_float(report.intercept)}"
                     f" dropped={report.dropped}")
        lines.append("theta_hat,eta_hat")
        lines.append(f"{format_float(report.theta_hat)},{format_float(report.eta_hat)}")
        lines.append("log_trace,log_x")
        lines += [f"{format_float(a)},{format_float(b)}" for a, b in zip(report.log_trace, report.log_x)]
    else:
        lines.append("eta,p_value")
        lines += [f"{format_float(e)},{format_float(p)}" for e, p in report.per_candidate]
    text = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")
