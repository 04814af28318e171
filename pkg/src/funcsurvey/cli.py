"""Command-line interface: ``gen-pop``, ``estimate``, ``simulate``, ``eta``.

Exit status is 0 on success, 2 for usage or configuration errors and 3 for
data or precondition failures.  Errors go to stderr prefixed ``error:``.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path
from typing import Sequence

import numpy as np

from .designs import DesignKind, DesignSpec, draw
from .estimators import EstimatorKind, check_pair, design_weights, estimate_mean
from .hetero import eta_grid_test, eta_slope_estimate, save_eta_report
from .population import Grid, format_float, load_population, save_population
from .sim import DEFAULT_ETAS, SimConfig, gen_population, run_study, run_sweep, save_sim_result, save_sweep
from .varest import estimate_cov_op, save_kernel

EXIT_USAGE = 2
EXIT_DATA = 3


class ConfigError(ValueError):
    pass


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D401 - argparse hook
        raise UsageError(message)


_SCALAR_KEYS = {
    "N": int,
    "n": int,
    "I": int,
    "T": float,
    "r": int,
    "beta_kind": str,
    "eta": float,
    "size_mean": float,
    "size_sd": float,
    "intercept": float,
    "master_seed": int,
    "noise_scale": float,
}
_LIST_KEYS = ("designs", "estimators", "pairs", "eta_sweep")
_KNOWN = set(_SCALAR_KEYS) | set(_LIST_KEYS) | {"out_dir", "seed"}


def parse_config_text(text: str) -> tuple[SimConfig, Path | None]:
    """Parse ``key = value`` lines into a validated :class:`SimConfig` and ``out_dir``."""
    raw: dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {line_no}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KNOWN:
            raise ConfigError(f"line {line_no}: unknown key {key!r}")
        if key in raw or (key == "seed" and "master_seed" in raw) or (key == "master_seed" and "seed" in raw):
            raise ConfigError(f"line {line_no}: duplicate key {key!r}")
        raw["master_seed" if key == "seed" else key] = value
    if "master_seed" not in raw:
        raise ConfigError("config must set master_seed (or seed); no implicit entropy")

    kwargs: dict = {}
    try:
        for key, conv in _SCALAR_KEYS.items():
            if key in raw and key not in ("T", "r"):
                kwargs[key] = conv(raw[key])
        grid = Grid(float(raw.get("T", 1.0)), int(raw.get("r", 100)))
        kwargs["grid"] = grid
        if "n" not in kwargs and "N" in kwargs:
            kwargs["n"] = max(1, kwargs["N"] // 10)
        if "designs" in raw:
            kwargs["designs"] = tuple(DesignKind.parse(s) for s in _split(raw["designs"]))
        if "estimators" in raw:
            kwargs["estimators"] = tuple(EstimatorKind.parse(s) for s in _split(raw["estimators"]))
        if "pairs" in raw:
            pairs = []
            for item in _split(raw["pairs"]):
                est, _, des = item.partition(":")
                pairs.append((EstimatorKind.parse(est), DesignKind.parse(des)))
            kwargs["pairs"] = tuple(pairs)
        if "eta_sweep" in raw:
            val = raw["eta_sweep"].strip().lower()
            kwargs["eta_sweep"] = DEFAULT_ETAS if val == "default" else tuple(float(s) for s in _split(val))
        cfg = SimConfig(**kwargs)
        if cfg.pairs is not None:
            for est, des in cfg.pairs:
                check_pair(est, des)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    out_dir = Path(raw["out_dir"]) if "out_dir" in raw else None
    return cfg, out_dir


def _split(value: str) -> list[str]:
    return [s.strip() for s in value.split(",") if s.strip()]


def load_config(path: str | Path) -> tuple[SimConfig, Path | None]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


# ---------------------------------------------------------------------------
# commands


def cmd_gen_pop(args) -> int:
    cfg, _ = load_config(args.config)
    save_population(gen_population(cfg), args.out)
    return 0


def _emit(lines: list[str], out: str | None) -> None:
    text = "\n".join(lines) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_estimate(args) -> int:
    design = DesignKind.parse(args.design)
    estimator = EstimatorKind.parse(args.estimator)
    check_pair(estimator, design)
    pop = load_population(args.pop)
    rng = np.random.default_rng(np.random.SeedSequence([args.seed]))
    sample = draw(DesignSpec(design, args.n), pop, rng)
    est = estimate_mean(estimator, sample, pop)
    lines = [
        f"# grid T={format_float(pop.grid.T)} r={pop.grid.r}",
        f"# estimator={estimator.value} design={design.value} n={args.n} seed={args.seed}",
    ]
    if args.echo_weights:
        kind = "rhc" if design is DesignKind.RHC else "pi"
        w = design_weights(sample, pop, kind)
        sys.stderr.write(f"# weights kind={kind}\nid,weight\n")
        for i, wi in zip(sample.indices, w):
            sys.stderr.write(f"{pop.ids[i]},{format_float(wi)}\n")
    if args.with_variance:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            cov = estimate_cov_op(sample, pop, estimator)
        for w_ in caught:
            sys.stderr.write(f"warning: {w_.message}\n")
        lines.append(f"# trace={format_float(cov.trace)} psd_violation={int(cov.psd_violation)}")
        kernel_path = args.kernel_out or (f"{args.out}.kernel.csv" if args.out else "kernel.csv")
        save_kernel(cov, kernel_path)
        sys.stderr.write(f"trace={format_float(cov.trace)} kernel={kernel_path}\n")
    lines.append("t,value")
    lines += [f"{format_float(t)},{format_float(v)}" for t, v in zip(pop.grid.nodes, est.curve.values)]
    _emit(lines, args.out)
    return 0


def cmd_simulate(args) -> int:
    cfg, out_dir = load_config(args.config)
    out_dir = Path(args.out_dir) if args.out_dir else out_dir
    if out_dir is None:
        raise ConfigError("no output directory: set out_dir in the config or pass --out-dir")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    if cfg.eta_sweep is not None:
        written = save_sweep(run_sweep(cfg, threads=args.threads), out_dir)
    else:
        written = save_sim_result(run_study(cfg, threads=args.threads), out_dir)
    for p in written:
        sys.stderr.write(f"wrote {p}\n")
    return 0


def cmd_eta(args) -> int:
    pop = load_population(args.pop)
    rng = np.random.default_rng(np.random.SeedSequence([args.seed]))
    sample = draw(DesignSpec(DesignKind.SRSWOR, args.n), pop, rng)
    idx = sample.indices
    Y, Z, X = pop.Y[idx], pop.Z[idx], pop.X[idx]
    if args.method == "slope":
        report = eta_slope_estimate(Y, Z, X, pop.grid)
    else:
        report = eta_grid_test(Y, Z, X, pop.grid, kind=args.method)
    save_eta_report(report, args.out or sys.stdout)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="funcsurvey", description="Design-based estimation for curve-valued survey data.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("gen-pop", help="generate a synthetic population CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_pop)

    p = sub.add_parser("estimate", help="draw one sample and estimate the mean curve")
    p.add_argument("--pop", required=True)
    p.add_argument("--design", required=True, choices=[k.value for k in DesignKind], type=_design_choice)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--estimator", required=True, choices=[k.value for k in EstimatorKind], type=str.upper)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--with-variance", action="store_true")
    p.add_argument("--out")
    p.add_argument("--kernel-out")
    p.add_argument("--echo-weights", action="store_true", help="write the design weights to stderr")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="run a Monte Carlo efficiency study")
    p.add_argument("--config", required=True)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eta", help="determine the degree of heteroscedasticity from an SRSWOR pilot")
    p.add_argument("--pop", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--method", required=True, choices=["slope", "bp", "white", "glejser"])
    p.add_argument("--out")
    p.set_defaults(func=cmd_eta)
    return parser


def _design_choice(value: str) -> str:
    try:
        return DesignKind.parse(value).value
    except ValueError:
        return value


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return int(args.func(args))
    except (UsageError, ConfigError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (ValueError, OSError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
