"""Synthetic functional populations and the Monte Carlo MSE / relative-efficiency harness."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.special import ndtri

from .designs import DesignKind, DesignSpec, draw, inclusion_probs
from .estimators import EstimatorKind, check_pair, estimate_mean
from .population import Curve, Grid, Population, format_float

__all__ = [
    "SimConfig",
    "SimResult",
    "BETA_KINDS",
    "gamma_by_moments",
    "standard_normals",
    "brownian_curve",
    "brownian_paths",
    "beta_curve",
    "gen_population",
    "population_rng",
    "replicate_rng",
    "mse",
    "relative_efficiency",
    "re_name",
    "resolve_pairs",
    "default_re_pairs",
    "run_study",
    "run_sweep",
    "save_sim_result",
    "save_sweep",
]

BETA_KINDS = ("one", "t", "parabola")
DEFAULT_ETAS = tuple(round(0.1 * k, 10) for k in range(11))


@dataclass(frozen=True)
class SimConfig:
    N: int = 1000
    n: int = 100
    I: int = 1000
    grid: Grid = field(default_factory=Grid)
    beta_kind: str = "one"
    eta: float = 0.0
    size_mean: float = 500.0
    size_sd: float = 100.0
    intercept: float = 1000.0
    master_seed: int = 0
    designs: tuple[DesignKind, ...] = (DesignKind.SRSWOR, DesignKind.RAO_SAMPFORD, DesignKind.RHC)
    estimators: tuple[EstimatorKind, ...] = (EstimatorKind.HT, EstimatorKind.RHC, EstimatorKind.GREG)
    pairs: tuple[tuple[EstimatorKind, DesignKind], ...] | None = None
    noise_scale: float = 1.0
    eta_sweep: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "designs", tuple(DesignKind.parse(d) for d in self.designs))
        object.__setattr__(self, "estimators", tuple(EstimatorKind.parse(e) for e in self.estimators))
        if self.pairs is not None:
            object.__setattr__(
                self,
                "pairs",
                tuple((EstimatorKind.parse(e), DesignKind.parse(d)) for e, d in self.pairs),
            )
        if self.N < 2 or int(self.N) != self.N:
            raise ValueError("N must be an integer >= 2")
        if not (1 <= self.n < self.N) or int(self.n) != self.n:
            raise ValueError(f"need 1 <= n < N, got n={self.n}, N={self.N}")
        if self.I < 1 or int(self.I) != self.I:
            raise ValueError("I must be a positive integer")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")
        if self.size_mean <= 0 or self.size_sd <= 0:
            raise ValueError("size_mean and size_sd must be positive")
        if self.beta_kind not in BETA_KINDS:
            raise ValueError(f"beta_kind must be one of {BETA_KINDS}, got {self.beta_kind!r}")
        if self.noise_scale < 0:
            raise ValueError("noise_scale must be non-negative")
        if int(self.master_seed) != self.master_seed or self.master_seed < 0:
            raise ValueError("master_seed must be a non-negative integer")
        if not self.designs:
            raise ValueError("at least one design is required")
        if self.eta_sweep is not None:
            etas = tuple(float(e) for e in self.eta_sweep)
            if not etas or any(e < 0 for e in etas):
                raise ValueError("eta_sweep must be a non-empty list of non-negative values")
            object.__setattr__(self, "eta_sweep", etas)


@dataclass(frozen=True)
class SimResult:
    mse: dict[tuple[EstimatorKind, DesignKind], float]
    re: dict[str, float]
    replicates: int
    config: SimConfig
    seed: int


# ---------------------------------------------------------------------------
# random ingredients


def gamma_by_moments(mean: float, sd: float) -> tuple[float, float]:
    """Shape and scale of the gamma law with the given mean and standard deviation."""
    if mean <= 0 or sd <= 0:
        raise ValueError("mean and sd must be positive")
    return (mean / sd) ** 2, sd**2 / mean


def standard_normals(rng: np.random.Generator, shape) -> np.ndarray:
    """Normal variates by inversion of uniform draws (``ndtri``)."""
    u = rng.random(shape)
    u[u == 0.0] = 2.0**-54
    return ndtri(u)


def brownian_paths(grid: Grid, rng: np.random.Generator, size: int) -> np.ndarray:
    """``size`` Brownian paths at the grid nodes via cumulative N(0, T/r) increments."""
    steps = standard_normals(rng, (size, grid.r)) * np.sqrt(grid.step)
    return np.cumsum(steps, axis=1)


def brownian_curve(grid: Grid, rng: np.random.Generator) -> Curve:
    return Curve(brownian_paths(grid, rng, 1)[0], grid)


def beta_curve(kind: str, grid: Grid) -> np.ndarray:
    t = grid.nodes
    if kind == "one":
        return np.ones_like(t)
    if kind == "t":
        return t.copy()
    if kind == "parabola":
        return 1.0 - (t - 0.5) ** 2
    raise ValueError(f"unknown beta kind {kind!r}")


def population_rng(master_seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), 0]))


def replicate_rng(master_seed: int, design: DesignKind, rep: int) -> np.random.Generator:
    # keyed on the design's fixed code, not its position, so designs never share streams
    return np.random.default_rng(np.random.SeedSequence([int(master_seed), 1, design.code, int(rep)]))


def gen_population(cfg: SimConfig, rng: np.random.Generator | None = None) -> Population:
    """``Y_i(t) = c + beta(t) X_i + eps_i(t) X_i^eta`` with gamma sizes and ``Z = X``."""
    if rng is None:
        rng = population_rng(cfg.master_seed)
    shape, scale = gamma_by_moments(cfg.size_mean, cfg.size_sd)
    X = rng.gamma(shape, scale, size=cfg.N)
    eps = brownian_paths(cfg.grid, rng, cfg.N)
    beta = beta_curve(cfg.beta_kind, cfg.grid)
    Y = cfg.intercept + X[:, None] * beta[None, :]
    if cfg.noise_scale:
        Y = Y + cfg.noise_scale * eps * (X**cfg.eta)[:, None]
    return Population(cfg.grid, Y, X[:, None], X)


# ---------------------------------------------------------------------------
# efficiency measures


def mse(estimates: np.ndarray, truth: np.ndarray) -> float:
    """Average squared error over replicates and grid nodes."""
    if isinstance(truth, Curve):
        grids = {c.grid for c in estimates if isinstance(c, Curve)}
        if grids - {truth.grid}:
            raise ValueError("estimates and truth are on different grids")
    est = np.array([getattr(c, "values", c) for c in estimates], dtype=float)
    tru = np.asarray(getattr(truth, "values", truth), dtype=float)
    if est.ndim == 1:
        est = est[None, :]
    if est.shape[1] != tru.shape[0]:
        raise ValueError("estimates and truth are on different grids")
    return float(np.mean((est - tru[None, :]) ** 2))


def relative_efficiency(mse1: float, mse2: float) -> float:
    """``mse2 / mse1``; above 1 means the first estimator/design pair wins."""
    if mse1 <= 0:
        raise ValueError("relative efficiency undefined: first MSE is zero")
    return float(mse2 / mse1)


def re_name(first: tuple[EstimatorKind, DesignKind], second: tuple[EstimatorKind, DesignKind]) -> str:
    return f"{first[0].value}.{first[1].value}|{second[0].value}.{second[1].value}"


def resolve_pairs(cfg: SimConfig) -> list[tuple[EstimatorKind, DesignKind]]:
    """Explicit pairs are validated; otherwise all legal estimator/design combinations."""
    if cfg.pairs is not None:
        for est, des in cfg.pairs:
            check_pair(est, des)
            if des not in cfg.designs:
                raise ValueError(f"pair {est.value}:{des.value} uses a design not in the study")
        return list(cfg.pairs)
    out = []
    for des in cfg.designs:
        for est in cfg.estimators:
            try:
                check_pair(est, des)
            except ValueError:
                continue
            out.append((est, des))
    return out


def default_re_pairs(available: Iterable[tuple[EstimatorKind, DesignKind]]):
    H, R, G = EstimatorKind.HT, EstimatorKind.RHC, EstimatorKind.GREG
    S, L, RS, RH = DesignKind.SRSWOR, DesignKind.LMS, DesignKind.RAO_SAMPFORD, DesignKind.RHC
    wanted = [
        ((H, S), (G, S)),
        ((H, L), (G, L)),
        ((H, RS), (G, RS)),
        ((R, RH), (G, RH)),
        ((G, S), (G, L)),
        ((G, S), (G, RS)),
        ((G, S), (G, RH)),
    ]
    have = set(available)
    return [(a, b) for a, b in wanted if a in have and b in have]


def run_study(cfg: SimConfig, threads: int = 1) -> SimResult:
    """One population from ``master_seed``, then ``I`` design replicates per design.

    Each replicate draws from its own stream derived from
    ``(master_seed, design, replicate)``; squared errors are stored per
    replicate and reduced in replicate order, so the result does not depend
    on ``threads``.
    """
    pairs = resolve_pairs(cfg)
    pop = gen_population(cfg)
    truth = pop.mean_curve
    by_design: dict[DesignKind, list[EstimatorKind]] = {}
    for est, des in pairs:
        by_design.setdefault(des, []).append(est)
    for des in by_design:
        if des is not DesignKind.RHC:
            inclusion_probs(DesignSpec(des, cfg.n), pop.X)  # feasibility check up front

    results: dict[tuple[EstimatorKind, DesignKind], float] = {}
    denom = cfg.grid.r * cfg.I
    for des, ests in by_design.items():
        spec = DesignSpec(des, cfg.n)

        def one(rep: int, spec=spec, des=des, ests=ests) -> np.ndarray:
            sample = draw(spec, pop, replicate_rng(cfg.master_seed, des, rep))
            out = np.empty(len(ests))
            for k, est in enumerate(ests):
                err = estimate_mean(est, sample, pop).curve.values - truth
                out[k] = err @ err
            return out

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                rows = list(pool.map(one, range(cfg.I)))
        else:
            rows = [one(rep) for rep in range(cfg.I)]
        sse = np.array(rows)
        totals = sse.sum(axis=0)
        for k, est in enumerate(ests):
            results[(est, des)] = float(totals[k] / denom)

    re: dict[str, float] = {}
    for a, b in default_re_pairs(results):
        try:
            re[re_name(a, b)] = relative_efficiency(results[a], results[b])
        except ValueError:
            warnings.warn(f"RE {re_name(a, b)} undefined (zero MSE)", stacklevel=2)
            re[re_name(a, b)] = float("nan")
    return SimResult(results, re, cfg.I, cfg, cfg.master_seed)


def run_sweep(cfg: SimConfig, etas: Sequence[float] | None = None, threads: int = 1) -> list[tuple[float, SimResult]]:
    """Repeat :func:`run_study` over ``eta`` (same seed, hence same sizes and noise paths)."""
    etas = etas if etas is not None else (cfg.eta_sweep or DEFAULT_ETAS)
    return [(float(e), run_study(replace(cfg, eta=float(e), eta_sweep=None), threads)) for e in etas]


# ---------------------------------------------------------------------------
# export


def _meta(cfg: SimConfig) -> list[str]:
    return [
        f"# N={cfg.N} n={cfg.n} I={cfg.I} T={format_float(cfg.grid.T)} r={cfg.grid.r}"
        f" beta_kind={cfg.beta_kind} master_seed={cfg.master_seed}",
        f"# size_mean={format_float(cfg.size_mean)} size_sd={format_float(cfg.size_sd)}"
        f" intercept={format_float(cfg.intercept)} noise_scale={format_float(cfg.noise_scale)}",
    ]


def save_sim_result(result: SimResult, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = _meta(result.config) + [f"# eta={format_float(result.config.eta)}"]
    mse_lines = meta + ["estimator,design,mse"]
    mse_lines += [f"{e.value},{d.value},{format_float(v)}" for (e, d), v in result.mse.items()]
    re_lines = meta + ["re_name,value"]
    re_lines += [f"{k},{format_float(v)}" for k, v in result.re.items()]
    p1, p2 = out / "mse.csv", out / "re.csv"
    p1.write_text("\n".join(mse_lines) + "\n", encoding="utf-8")
    p2.write_text("\n".join(re_lines) + "\n", encoding="utf-8")
    return p1, p2


def save_sweep(results: Sequence[tuple[float, SimResult]], out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = _meta(results[0][1].config)
    re_lines = meta + ["eta,re_name,value"]
    mse_lines = meta + ["eta,estimator,design,mse"]
    for eta, res in results:
        re_lines += [f"{format_float(eta)},{k},{format_float(v)}" for k, v in res.re.items()]
        mse_lines += [f"{format_float(eta)},{e.value},{d.value},{format_float(v)}" for (e, d), v in res.mse.items()]
    p1, p2 = out / "sweep_mse.csv", out / "sweep.csv"
    p1.write_text("\n".join(mse_lines) + "\n", encoding="utf-8")
    p2.write_text("\n".join(re_lines) + "\n", encoding="utf-8")
    return p1, p2
