"""Without-replacement sampling designs: SRSWOR, Lahiri-Midzuno-Sen, RHC, Rao-Sampford.

Every randomized routine takes an explicit :class:`numpy.random.Generator`.
Indices are 0-based throughout.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "DesignKind",
    "DesignSpec",
    "DrawnSample",
    "DesignOutcome",
    "DesignDistribution",
    "DesignError",
    "inclusion_probs",
    "draw",
    "rhc_group_sizes",
    "gamma_factor",
    "enumerate_design",
]

DEFAULT_MAX_ATTEMPTS = 10**6
SUBSET_CAP = 10**6
RHC_OUTCOME_CAP = 10**7


class DesignError(ValueError):
    """Infeasible design request or exhausted rejection sampler."""


class DesignKind(str, enum.Enum):
    SRSWOR = "SRSWOR"
    LMS = "LMS"
    RHC = "RHC"
    RAO_SAMPFORD = "RaoSampford"

    @classmethod
    def parse(cls, value: "str | DesignKind") -> "DesignKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        aliases = {
            "srswor": cls.SRSWOR,
            "srs": cls.SRSWOR,
            "lms": cls.LMS,
            "rhc": cls.RHC,
            "raosampford": cls.RAO_SAMPFORD,
            "rs": cls.RAO_SAMPFORD,
            "sampford": cls.RAO_SAMPFORD,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown design {value!r}") from None

    @property
    def code(self) -> int:
        # stable per-kind integer used in replicate seed derivation
        return {"SRSWOR": 0, "LMS": 1, "RHC": 2, "RaoSampford": 3}[self.value]


@dataclass(frozen=True)
class DesignSpec:
    kind: DesignKind
    n: int
    max_attempts: int = DEFAULT_MAX_ATTEMPTS

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", DesignKind.parse(self.kind))
        if int(self.n) != self.n or self.n < 1:
            raise DesignError(f"sample size must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))


@dataclass(frozen=True)
class DrawnSample:
    """A realized sample with the weights its design supplies.

    ``pi`` is set for SRSWOR, LMS and Rao-Sampford.  RHC samples carry
    ``q`` (group x-totals), ``group_sizes``, ``gamma`` and ``groups`` (the
    member indices of each random group), all aligned with ``indices``.
    """

    indices: np.ndarray
    kind: DesignKind
    N: int
    pi: np.ndarray | None = None
    q: np.ndarray | None = None
    group_sizes: tuple[int, ...] | None = None
    gamma: float | None = None
    groups: tuple[np.ndarray, ...] | None = None
    attempts: int = 1

    @property
    def n(self) -> int:
        return int(self.indices.size)


def _check_sizes(X: np.ndarray, n: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 1 or X.size < 1:
        raise DesignError("size vector must be one-dimensional and non-empty")
    if np.any(~np.isfinite(X)) or np.any(X <= 0):
        raise DesignError("sizes must be finite and positive")
    if n > X.size:
        raise DesignError(f"sample size n={n} exceeds population size N={X.size}")
    return X


def _sampford_lambdas(X: np.ndarray, n: int) -> np.ndarray:
    lam = n * X / X.sum()
    bad = np.flatnonzero(lam >= 1.0)
    if bad.size:
        i = int(bad[0])
        raise DesignError(
            f"Rao-Sampford infeasible: n*X/sum(X) = {lam[i]:.6g} >= 1 for unit {i + 1}; "
            "reduce n or remove/certainty-select that unit"
        )
    return lam


def inclusion_probs(spec: DesignSpec, X: Sequence[float]) -> np.ndarray:
    """First-order inclusion probabilities for the pi-weighted designs."""
    X = _check_sizes(X, spec.n)
    N, n = X.size, spec.n
    if spec.kind is DesignKind.SRSWOR:
        return np.full(N, n / N)
    if spec.kind is DesignKind.LMS:
        if N == 1:
            return np.ones(1)
        return (n - 1) / (N - 1) + (X / X.sum()) * ((N - n) / (N - 1))
    if spec.kind is DesignKind.RAO_SAMPFORD:
        return _sampford_lambdas(X, n)
    raise DesignError("RHC samples are weighted by Q_i/X_i; inclusion probabilities are not used")


def rhc_group_sizes(N: int, n: int) -> list[int]:
    """Variance-minimizing RHC group sizes: as equal as possible, smaller ones first."""
    if n < 1 or N < 1:
        raise DesignError("N and n must be positive")
    if n > N:
        raise DesignError(f"cannot form n={n} groups from N={N} units")
    base, extra = divmod(N, n)
    return [base] * (n - extra) + [base + 1] * extra


def gamma_factor(group_sizes: Sequence[int], N: int) -> float:
    sizes = np.asarray(group_sizes, dtype=float)
    if int(sizes.sum()) != N:
        raise DesignError("group sizes must sum to N")
    if N == 1:
        return 0.0
    return float(np.sum(sizes * (sizes - 1)) / (N * (N - 1)))


def _pick(cum: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Weighted index selection: first index with cumulative mass > u."""
    idx = np.searchsorted(cum, u, side="right")
    return np.minimum(idx, cum.size - 1)


def _draw_srswor(N: int, n: int, rng: np.random.Generator) -> np.ndarray:
    return np.sort(rng.choice(N, size=n, replace=False))


def _draw_lms(X: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    N = X.size
    cum = np.cumsum(X)
    first = int(_pick(cum, rng.random() * cum[-1]))
    rest = np.delete(np.arange(N), first)
    others = rest[rng.choice(N - 1, size=n - 1, replace=False)] if n > 1 else rest[:0]
    return np.sort(np.concatenate(([first], others)))


def _draw_rhc(X: np.ndarray, n: int, rng: np.random.Generator) -> DrawnSample:
    N = X.size
    sizes = rhc_group_sizes(N, n)
    # successive SRSWOR splits of the remainder == consecutive blocks of a uniform permutation
    perm = rng.permutation(N)
    bounds = np.concatenate(([0], np.cumsum(sizes)))
    u = rng.random(n)
    chosen = np.empty(n, dtype=np.intp)
    q = np.empty(n)
    groups = []
    for g in range(n):
        members = perm[bounds[g] : bounds[g + 1]]
        cum = np.cumsum(X[members])
        chosen[g] = members[_pick(cum, u[g] * cum[-1])]
        q[g] = cum[-1]
        groups.append(members)
    return DrawnSample(
        indices=chosen,
        kind=DesignKind.RHC,
        N=N,
        q=q,
        group_sizes=tuple(sizes),
        gamma=gamma_factor(sizes, N),
        groups=tuple(groups),
    )


def _draw_sampford(X: np.ndarray, n: int, rng: np.random.Generator, max_attempts: int) -> tuple[np.ndarray, int]:
    lam = _sampford_lambdas(X, n)
    cum_first = np.cumsum(X)
    odds = lam / (1.0 - lam)
    cum_rest = np.cumsum(odds)
    if n == 1:
        return np.array([int(_pick(cum_first, rng.random() * cum_first[-1]))]), 1
    attempts = 0
    batch = 64
    while attempts < max_attempts:
        b = min(batch, max_attempts - attempts)
        u = rng.random((b, n))
        draws = np.empty((b, n), dtype=np.intp)
        draws[:, 0] = _pick(cum_first, u[:, 0] * cum_first[-1])
        draws[:, 1:] = _pick(cum_rest, u[:, 1:] * cum_rest[-1])
        srt = np.sort(draws, axis=1)
        ok = np.all(srt[:, 1:] != srt[:, :-1], axis=1)
        hit = np.flatnonzero(ok)
        if hit.size:
            k = int(hit[0])
            return srt[k], attempts + k + 1
        attempts += b
        batch = min(batch * 2, 8192)
    raise DesignError(
        f"Rao-Sampford rejection sampler gave no distinct sample in {max_attempts} attempts; "
        "use a smaller n or a less skewed size variable"
    )


def draw(spec: DesignSpec, pop_or_X, rng: np.random.Generator) -> DrawnSample:
    """Draw one sample under ``spec`` from a population (or a bare size vector)."""
    X = getattr(pop_or_X, "X", pop_or_X)
    X = _check_sizes(X, spec.n)
    N, n = X.size, spec.n
    kind = spec.kind
    if kind is DesignKind.RHC:
        return _draw_rhc(X, n, rng)
    attempts = 1
    if kind is DesignKind.SRSWOR:
        idx = _draw_srswor(N, n, rng)
    elif kind is DesignKind.LMS:
        idx = _draw_lms(X, n, rng)
    else:
        idx, attempts = _draw_sampford(X, n, rng, spec.max_attempts)
    pi = inclusion_probs(spec, X)[idx]
    return DrawnSample(indices=idx, kind=kind, N=N, pi=pi, attempts=attempts)


# ---------------------------------------------------------------------------
# exact enumeration (test oracle)


@dataclass(frozen=True)
class DesignOutcome:
    indices: tuple[int, ...]
    prob: float
    q: tuple[float, ...] | None = None
    groups: tuple[tuple[int, ...], ...] | None = None


@dataclass(frozen=True)
class DesignDistribution:
    spec: DesignSpec
    X: np.ndarray
    outcomes: tuple[DesignOutcome, ...] = field(default=())

    @property
    def total(self) -> float:
        return math.fsum(o.prob for o in self.outcomes)

    def membership(self) -> np.ndarray:
        """Inclusion probability of every unit under the enumerated law."""
        acc = [[] for _ in range(self.X.size)]
        for o in self.outcomes:
            for i in o.indices:
                acc[i].append(o.prob)
        return np.array([math.fsum(a) for a in acc])

    def subset_probs(self) -> dict[tuple[int, ...], float]:
        out: dict[tuple[int, ...], list[float]] = {}
        for o in self.outcomes:
            out.setdefault(tuple(sorted(o.indices)), []).append(o.prob)
        return {k: math.fsum(v) for k, v in out.items()}

    def samples(self) -> Iterator[tuple[DrawnSample, float]]:
        """Each outcome as a :class:`DrawnSample` with its probability."""
        N = self.X.size
        kind = self.spec.kind
        if kind is DesignKind.RHC:
            sizes = rhc_group_sizes(N, self.spec.n)
            gam = gamma_factor(sizes, N)
            for o in self.outcomes:
                s = DrawnSample(
                    indices=np.array(o.indices, dtype=np.intp),
                    kind=kind,
                    N=N,
                    q=np.array(o.q),
                    group_sizes=tuple(len(g) for g in o.groups),
                    gamma=gam,
                    groups=tuple(np.array(g, dtype=np.intp) for g in o.groups),
                )
                yield s, o.prob
        else:
            pi_all = inclusion_probs(self.spec, self.X)
            for o in self.outcomes:
                idx = np.array(o.indices, dtype=np.intp)
                yield DrawnSample(indices=idx, kind=kind, N=N, pi=pi_all[idx]), o.prob


def _ordered_splits(units: tuple[int, ...], sizes: Sequence[int]) -> Iterator[tuple[tuple[int, ...], ...]]:
    if not sizes:
        yield ()
        return
    head, tail = sizes[0], sizes[1:]
    for group in itertools.combinations(units, head):
        rest = tuple(u for u in units if u not in group)
        for more in _ordered_splits(rest, tail):
            yield (group,) + more


def enumerate_design(spec: DesignSpec, X: Sequence[float]) -> DesignDistribution:
    """Exact sampling law for small populations.

    For RHC the outcomes are (random groups, selected units) pairs aggregated
    over group order; all other designs enumerate size-``n`` subsets.
    """
    X = _check_sizes(X, spec.n)
    N, n = X.size, spec.n
    kind = spec.kind
    if kind is DesignKind.RHC:
        sizes = rhc_group_sizes(N, n)
        n_splits = math.factorial(N) // math.prod(math.factorial(s) for s in sizes)
        if n_splits * math.prod(sizes) > RHC_OUTCOME_CAP:
            raise DesignError("RHC enumeration exceeds the outcome cap")
        p_split = 1.0 / n_splits
        acc: dict[tuple, list[float]] = {}
        for split in _ordered_splits(tuple(range(N)), sizes):
            totals = [math.fsum(X[list(g)]) for g in split]
            for picks in itertools.product(*split):
                p = p_split
                for unit, tot in zip(picks, totals):
                    p *= X[unit] / tot
                key = tuple(sorted((u, tuple(sorted(g))) for u, g in zip(picks, split)))
                acc.setdefault(key, []).append(p)
        outcomes = []
        for key, ps in acc.items():
            units = tuple(u for u, _ in key)
            groups = tuple(g for _, g in key)
            q = tuple(math.fsum(X[list(g)]) for g in groups)
            outcomes.append(DesignOutcome(units, math.fsum(ps), q=q, groups=groups))
        return DesignDistribution(spec, X, tuple(outcomes))

    if math.comb(N, n) > SUBSET_CAP:
        raise DesignError("enumeration exceeds the subset cap")
    subsets = list(itertools.combinations(range(N), n))
    if kind is DesignKind.SRSWOR:
        weights = [1.0] * len(subsets)
    elif kind is DesignKind.LMS:
        weights = [math.fsum(X[list(s)]) for s in subsets]
    else:
        lam = _sampford_lambdas(X, n)
        odds = lam / (1.0 - lam)
        weights = [math.prod(odds[list(s)]) * math.fsum(1.0 - lam[list(s)]) for s in subsets]
    total = math.fsum(weights)
    outcomes = tuple(DesignOutcome(s, w / total) for s, w in zip(subsets, weights))
    return DesignDistribution(spec, X, outcomes)
