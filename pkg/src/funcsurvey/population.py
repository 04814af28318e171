"""Grid-discretized functional populations and their CSV format."""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "Grid",
    "Curve",
    "Population",
    "PopulationFormatError",
    "inner_product",
    "load_population",
    "save_population",
    "format_float",
]

_GRID_LINE = re.compile(r"^# grid T=(\S+) r=(\d+)\s*$")


def format_float(value: float) -> str:
    """Shortest-safe text form used in every CSV this package writes."""
    return format(float(value), ".17g")


class PopulationFormatError(ValueError):
    """Raised when a population CSV does not conform to the file format."""


@dataclass(frozen=True)
class Grid:
    """Equally spaced right-endpoint nodes ``t_l = l*T/r`` on ``[0, T]``."""

    T: float = 1.0
    r: int = 100

    def __post_init__(self) -> None:
        if not (math.isfinite(self.T) and self.T > 0):
            raise ValueError(f"grid length T must be positive, got {self.T!r}")
        if int(self.r) != self.r or self.r < 1:
            raise ValueError(f"grid size r must be a positive integer, got {self.r!r}")
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "r", int(self.r))

    @property
    def step(self) -> float:
        return self.T / self.r

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(1, self.r + 1, dtype=float) * self.T / self.r

    def inner(self, f: np.ndarray, g: np.ndarray) -> np.ndarray:
        """Rectangle-rule inner product over the last axis of two arrays."""
        f = np.asarray(f, dtype=float)
        g = np.asarray(g, dtype=float)
        if f.shape[-1] != self.r or g.shape[-1] != self.r:
            raise ValueError("array does not conform to grid")
        return self.step * np.sum(f * g, axis=-1)

    def norm2(self, f: np.ndarray) -> np.ndarray:
        return self.inner(f, f)


@dataclass(frozen=True)
class Curve:
    """Function values at the nodes of ``grid``."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.r,):
            raise ValueError(f"curve has {values.size} values, grid has r={self.grid.r}")
        if not np.all(np.isfinite(values)):
            raise ValueError("curve values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.grid.r


def inner_product(f: Curve, g: Curve) -> float:
    """``(T/r) * sum_l f(t_l) g(t_l)``; both curves must share a grid."""
    if f.grid != g.grid:
        raise ValueError(f"grid mismatch: {f.grid} vs {g.grid}")
    return float(f.grid.inner(f.values, g.values))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Population:
    """N units with curve responses ``Y`` (N x r), covariates ``Z`` (N x d), sizes ``X``."""

    grid: Grid
    Y: np.ndarray
    Z: np.ndarray
    X: np.ndarray
    ids: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        Y = _frozen(self.Y)
        Z = np.array(self.Z, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        Z = _frozen(Z)
        X = _frozen(self.X)
        if Y.ndim != 2 or Y.shape[0] < 1:
            raise ValueError("population must contain at least one unit (N >= 1)")
        N = Y.shape[0]
        if Y.shape[1] != self.grid.r:
            raise ValueError(f"curves have {Y.shape[1]} values, grid has r={self.grid.r}")
        if Z.ndim != 2 or Z.shape[0] != N or Z.shape[1] < 1:
            raise ValueError("Z must be an N x d matrix with d >= 1")
        if X.shape != (N,):
            raise ValueError("X must hold one size per unit")
        for name, arr in (("Y", Y), ("Z", Z), ("X", X)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} contains non-finite values")
        if np.any(X <= 0):
            bad = int(np.flatnonzero(X <= 0)[0])
            raise ValueError(f"size must be positive (unit {bad + 1})")
        ids = tuple(str(i) for i in self.ids) if self.ids else tuple(str(i + 1) for i in range(N))
        if len(ids) != N:
            raise ValueError("ids must have one entry per unit")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "ids", ids)

    @property
    def N(self) -> int:
        return self.Y.shape[0]

    @property
    def d(self) -> int:
        return self.Z.shape[1]

    @property
    def mean_curve(self) -> np.ndarray:
        return self.Y.mean(axis=0)

    @property
    def zbar(self) -> np.ndarray:
        return self.Z.mean(axis=0)

    def curve(self, i: int) -> Curve:
        return Curve(self.Y[i], self.grid)

    def with_responses(self, Y: np.ndarray) -> "Population":
        return Population(self.grid, Y, self.Z, self.X, self.ids)

    def with_covariates(self, Z: np.ndarray) -> "Population":
        return Population(self.grid, self.Y, Z, self.X, self.ids)


def save_population(pop: Population, path: str | Path) -> None:
    """Write ``pop`` in the self-describing population CSV format."""
    path = Path(path)
    header = ["id", "x"] + [f"z{j + 1}" for j in range(pop.d)] + [f"y{l + 1}" for l in range(pop.grid.r)]
    lines = [f"# grid T={format_float(pop.grid.T)} r={pop.grid.r}", ",".join(header)]
    for i in range(pop.N):
        fields = [pop.ids[i], format_float(pop.X[i])]
        fields += [format_float(v) for v in pop.Z[i]]
        fields += [format_float(v) for v in pop.Y[i]]
        lines.append(",".join(fields))
    try:
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write population to {path}: {exc}") from exc


def _parse_header(header: Sequence[str], r: int) -> int:
    if len(header) < 3 or header[0] != "id" or header[1] != "x":
        raise PopulationFormatError("header: must start with 'id,x'")
    rest = list(header[2:])
    d = 0
    while d < len(rest) and rest[d] == f"z{d + 1}":
        d += 1
    if d < 1:
        raise PopulationFormatError("header: missing covariate column 'z1'")
    ys = rest[d:]
    expected = [f"y{l + 1}" for l in range(r)]
    if ys != expected:
        missing = next((e for e, got in zip(expected, ys + [None] * r) if e != got), None)
        raise PopulationFormatError(
            f"header: curve columns must be y1..y{r} to match the grid line (first mismatch at {missing})"
        )
    return d


def load_population(path: str | Path) -> Population:
    """Read and validate a population CSV; row order becomes unit order."""
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        first = fh.readline().rstrip("\r\n")
        match = _GRID_LINE.match(first)
        if match is None:
            raise PopulationFormatError(f"{path}: first line must be '# grid T=<real> r=<int>'")
        try:
            grid = Grid(float(match.group(1)), int(match.group(2)))
        except ValueError as exc:
            raise PopulationFormatError(f"{path}: invalid grid line: {exc}") from exc
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PopulationFormatError(f"{path}: missing header line") from None
        d = _parse_header(header, grid.r)
        ncol = len(header)
        ids: list[str] = []
        rows: list[list[float]] = []
        for row_no, row in enumerate(reader, start=1):
            if not row:
                continue
            if len(row) != ncol:
                raise PopulationFormatError(
                    f"row {row_no} has {len(row)} fields, expected {ncol}"
                )
            values = []
            for name, text in zip(header[1:], row[1:]):
                try:
                    v = float(text)
                except ValueError:
                    raise PopulationFormatError(
                        f"cannot parse {text!r} as a number (row {row_no}, column {name})"
                    ) from None
                if not math.isfinite(v):
                    raise PopulationFormatError(f"non-finite value (row {row_no}, column {name})")
                values.append(v)
            if values[0] <= 0:
                raise PopulationFormatError(f"size must be positive (row {row_no})")
            ids.append(row[0])
            rows.append(values)
    if not rows:
        raise PopulationFormatError(f"{path}: population has no units")
    data = np.array(rows, dtype=float)
    return Population(
        grid=grid,
        X=data[:, 0],
        Z=data[:, 1 : 1 + d],
        Y=data[:, 1 + d :],
        ids=tuple(ids),
    )
