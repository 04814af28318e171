"""Horvitz-Thompson, RHC and GREG estimators of a finite-population mean curve."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .designs import DesignKind, DrawnSample
from .population import Curve, Population

__all__ = [
    "EstimatorKind",
    "MeanEstimate",
    "GregFit",
    "EstimatorError",
    "design_weights",
    "ht_mean",
    "rhc_mean",
    "greg_fit",
    "greg_mean",
    "estimate_mean",
    "check_pair",
    "COND_LIMIT",
]

COND_LIMIT = 1e12


class EstimatorError(ValueError):
    pass


class EstimatorKind(str, enum.Enum):
    HT = "HT"
    RHC = "RHC"
    GREG = "GREG"

    @classmethod
    def parse(cls, value: "str | EstimatorKind") -> "EstimatorKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise ValueError(f"unknown estimator {value!r}") from None


def check_pair(estimator: "str | EstimatorKind", design: "str | DesignKind") -> None:
    """Reject estimator/design combinations the weighting cannot support."""
    est = EstimatorKind.parse(estimator)
    des = DesignKind.parse(design)
    if est is EstimatorKind.RHC and des is not DesignKind.RHC:
        raise EstimatorError(f"the RHC estimator requires the RHC design, not {des.value}")
    if est is EstimatorKind.HT and des is DesignKind.RHC:
        raise EstimatorError("the HT estimator is not defined under the RHC design (no pi_i)")


@dataclass(frozen=True)
class MeanEstimate:
    curve: Curve
    estimator: EstimatorKind
    design: DesignKind


@dataclass(frozen=True)
class GregFit:
    zbar_hat: np.ndarray  # (d,)
    ybar_hat: np.ndarray  # (r,)
    szz_hat: np.ndarray  # (d, d)
    szy_hat: np.ndarray  # (d, r)
    bhat: np.ndarray  # (d, r)
    weights: np.ndarray  # normalized, aligned with sample.indices


def _resolve_weight_kind(sample: DrawnSample, weight_kind: str | None) -> str:
    if weight_kind is None:
        return "rhc" if sample.q is not None else "pi"
    wk = str(weight_kind).lower()
    if wk not in ("pi", "rhc"):
        raise ValueError(f"weight_kind must be 'pi' or 'rhc', got {weight_kind!r}")
    return wk


def design_weights(sample: DrawnSample, pop: Population, weight_kind: str | None = None) -> np.ndarray:
    """Unnormalized weights: ``1/pi_i`` or ``Q_i/X_i``."""
    wk = _resolve_weight_kind(sample, weight_kind)
    if wk == "pi":
        if sample.pi is None:
            raise EstimatorError("sample carries no inclusion probabilities")
        return 1.0 / sample.pi
    if sample.q is None:
        raise EstimatorError("sample carries no RHC group totals Q_i")
    return sample.q / pop.X[sample.indices]


def ht_mean(sample: DrawnSample, pop: Population) -> MeanEstimate:
    """``N^-1 sum_{i in s} Y_i / pi_i``."""
    w = design_weights(sample, pop, "pi")
    values = (w @ pop.Y[sample.indices]) / pop.N
    return MeanEstimate(Curve(values, pop.grid), EstimatorKind.HT, sample.kind)


def rhc_mean(sample: DrawnSample, pop: Population) -> MeanEstimate:
    """``N^-1 sum_{i in s} (Q_i / X_i) Y_i``."""
    w = design_weights(sample, pop, "rhc")
    values = (w @ pop.Y[sample.indices]) / pop.N
    return MeanEstimate(Curve(values, pop.grid), EstimatorKind.RHC, sample.kind)


def _scaled_cond(S: np.ndarray, Z: np.ndarray) -> float:
    diag = np.diag(S)
    # a column whose spread is lost in rounding of its magnitude counts as constant
    mag = np.max(np.abs(Z), axis=0)
    if np.any(diag <= (1e-12 * mag) ** 2):
        return np.inf
    D = 1.0 / np.sqrt(diag)
    return float(np.linalg.cond(S * D[:, None] * D[None, :]))


def greg_fit(sample: DrawnSample, pop: Population, weight_kind: str | None = None) -> GregFit:
    """Hajek-weighted regression pieces of the GREG estimator.

    ``bhat`` solves ``szz_hat @ bhat = szy_hat`` with one factorization for
    all grid nodes.  The conditioning guard is applied to the
    correlation-scaled ``szz_hat`` so that it does not depend on covariate units.
    """
    w = design_weights(sample, pop, weight_kind)
    w = w / w.sum()
    Z = pop.Z[sample.indices]
    Y = pop.Y[sample.indices]
    zbar = w @ Z
    ybar = w @ Y
    Zc = Z - zbar
    szz = Zc.T @ (w[:, None] * Zc)
    szz = 0.5 * (szz + szz.T)
    szy = Zc.T @ (w[:, None] * (Y - ybar))
    if _scaled_cond(szz, Z) > COND_LIMIT:
        raise EstimatorError("covariate design degenerate in sample")
    bhat = np.linalg.solve(szz, szy)
    return GregFit(zbar, ybar, szz, szy, bhat, w)


def greg_mean(sample: DrawnSample, pop: Population, weight_kind: str | None = None) -> MeanEstimate:
    fit = greg_fit(sample, pop, weight_kind)
    values = fit.ybar_hat + (pop.zbar - fit.zbar_hat) @ fit.bhat
    return MeanEstimate(Curve(values, pop.grid), EstimatorKind.GREG, sample.kind)


def estimate_mean(estimator: "str | EstimatorKind", sample: DrawnSample, pop: Population) -> MeanEstimate:
    est = EstimatorKind.parse(estimator)
    check_pair(est, sample.kind)
    if est is EstimatorKind.HT:
        return ht_mean(sample, pop)
    if est is EstimatorKind.RHC:
        return rhc_mean(sample, pop)
    return greg_mean(sample, pop)
