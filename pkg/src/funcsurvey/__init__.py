"""Design-based estimation of mean curves for functional survey data."""

from .designs import (
    DesignDistribution,
    DesignError,
    DesignKind,
    DesignSpec,
    DrawnSample,
    draw,
    enumerate_design,
    gamma_factor,
    inclusion_probs,
    rhc_group_sizes,
)
from .estimators import EstimatorError, EstimatorKind, MeanEstimate, estimate_mean, greg_fit, greg_mean, ht_mean, rhc_mean
from .hetero import EtaReport, eta_grid_test, eta_slope_estimate, hetero_test
from .kernels import IMPLEMENTATION as KERNEL_IMPLEMENTATION
from .population import Curve, Grid, Population, PopulationFormatError, inner_product, load_population, save_population
from .sim import SimConfig, SimResult, gen_population, mse, relative_efficiency, run_study, run_sweep
from .varest import CovOperatorEstimate, estimate_cov_op

__version__ = "0.1.0"

__all__ = [
    "Curve",
    "CovOperatorEstimate",
    "DesignDistribution",
    "DesignError",
    "DesignKind",
    "DesignSpec",
    "DrawnSample",
    "EstimatorError",
    "EstimatorKind",
    "EtaReport",
    "Grid",
    "KERNEL_IMPLEMENTATION",
    "MeanEstimate",
    "Population",
    "PopulationFormatError",
    "SimConfig",
    "SimResult",
    "draw",
    "enumerate_design",
    "estimate_cov_op",
    "estimate_mean",
    "eta_grid_test",
    "eta_slope_estimate",
    "gamma_factor",
    "gen_population",
    "greg_fit",
    "greg_mean",
    "hetero_test",
    "ht_mean",
    "inclusion_probs",
    "inner_product",
    "load_population",
    "mse",
    "relative_efficiency",
    "rhc_group_sizes",
    "rhc_mean",
    "run_study",
    "run_sweep",
    "save_population",
]
