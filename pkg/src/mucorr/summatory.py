"""
Checkpointed partial sums of arithmetic functions and log-power decay fits.

Unnormalized sums are exact int64 prefix sums with an explicit overflow guard.
Sums weighted by 1/n are correctly rounded per checkpoint block (``math.fsum``)
and the block sums are combined with ``math.fsum`` again. The blocks are fixed
by the checkpoint grid, so the values are the same bits on every run.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Union

import numpy as np

from .numerics import (EULER_GAMMA, INT64_SAFE, SIX_OVER_PI_SQUARED, blocked_fsum,
                       checkpoint_grid, neumaier_cumsum)
from .sieve import DIVISORS, LAMBDA, MU, MU_SQ, ArithFnSpec, FactorTable, build_table, product


class Normalization(enum.Enum):
    NONE = "none"
    OVER_N = "over_n"


class Weight(enum.Enum):
    TIMES_N = "times_n"
    OVER_N = "over_n"


@dataclass(frozen=True)
class Progression:
    a: int
    q: int

    def __post_init__(self):
        if self.q < 2 or not 1 <= self.a < self.q:
            raise ValueError(f"progression needs 1 <= a < q, got a={self.a}, q={self.q}")
        if math.gcd(self.a, self.q) != 1:
            raise ValueError(f"progression needs gcd(a, q) = 1, got gcd({self.a}, {self.q}) = "
                             f"{math.gcd(self.a, self.q)}")

    @property
    def tag(self) -> str:
        return f"{self.a} mod {self.q}"

    def __call__(self, ns: np.ndarray) -> np.ndarray:
        return ns % self.q == self.a


@dataclass(frozen=True)
class Subset:
    """An arbitrary restriction given by a vectorized predicate on n."""
    predicate: Callable[[np.ndarray], np.ndarray]
    tag: str

    def __call__(self, ns: np.ndarray) -> np.ndarray:
        return np.asarray(self.predicate(ns), dtype=bool)


Restriction = Union[Progression, Subset]


@dataclass
class SeriesSample:
    x: np.ndarray
    value: np.ndarray
    normalization: Normalization = Normalization.NONE
    restriction: Optional[str] = None
    main_term: Optional[np.ndarray] = None
    error_term: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.int64)
        if len(self.x) != len(self.value):
            raise ValueError("x and value lengths differ")
        if len(self.x) > 1 and np.any(np.diff(self.x) <= 0):
            raise ValueError("checkpoints must be strictly increasing")

    @property
    def checkpoints(self) -> list[tuple]:
        return list(zip(self.x.tolist(), list(self.value)))

    @property
    def dense(self) -> bool:
        return len(self.x) > 0 and self.x[0] == 1 and self.x[-1] == len(self.x)

    def at(self, x: int):
        i = int(np.searchsorted(self.x, x))
        if i == len(self.x) or self.x[i] != x:
            raise KeyError(f"{x} is not a checkpoint")
        return self.value[i]

    @property
    def last(self):
        return self.value[-1]


@dataclass
class FitReport:
    amplitude: float
    exponent_C: float
    rms_residual: float
    model: str
    points_used: int
    points_excluded: int
    reliable: bool
    rms_high: bool


def _table_for(limit: int, table: Optional[FactorTable], threads: int = 1) -> FactorTable:
    if table is None:
        return build_table(1, limit + 1, threads=threads)
    if not table.covers(1, limit + 1):
        raise ValueError(f"table [{table.lo}, {table.hi}) does not cover [1, {limit}]")
    return table


def exact_cumsum(values: np.ndarray) -> np.ndarray:
    """Exact int64 prefix sums; refuses to run if the total could overflow."""
    bound = float(np.abs(values).sum(dtype=np.float64))
    if bound >= INT64_SAFE:
        raise OverflowError(f"partial sums may reach {bound:.3e}, beyond the exact int64 accumulator")
    return np.cumsum(values, dtype=np.int64)


def partial_sums(f: ArithFnSpec, limit: int, normalization: Normalization = Normalization.NONE,
                 restriction: Optional[Restriction] = None, *, table: Optional[FactorTable] = None,
                 dense: bool = False, grid: Optional[np.ndarray] = None) -> SeriesSample:
    """S(x) = sum over n <= x of f(n) (optionally f(n)/n, optionally restricted).

    Checkpoints follow :func:`checkpoint_grid` unless ``dense`` (every integer)
    or an explicit ``grid`` is requested.
    """
    if limit < 1:
        raise ValueError("limit must be >= 1")
    table = _table_for(limit, table)
    vals = table.values(f)[:limit]
    ns = np.arange(1, limit + 1, dtype=np.int64)
    if restriction is not None:
        vals = np.where(restriction(ns), vals, 0)
    if dense:
        xs = ns
    elif grid is not None:
        xs = np.asarray(grid, dtype=np.int64)
        if xs[-1] > limit or xs[0] < 1:
            raise ValueError("grid outside [1, limit]")
    else:
        xs = checkpoint_grid(limit)
    if normalization is Normalization.NONE:
        sums = exact_cumsum(vals)[xs - 1]
    else:
        terms = vals / ns
        sums = neumaier_cumsum(terms) if dense else blocked_fsum(terms, xs)
    tag = restriction.tag if restriction is not None else None
    return SeriesSample(xs, sums, normalization, tag, label=f.name)


def squarefree_count(limit: int, *, table: Optional[FactorTable] = None) -> SeriesSample:
    """Q(x) with main term (6/pi^2) x and error E(x) = Q(x) - (6/pi^2) x."""
    s = partial_sums(MU_SQ, limit, table=table)
    main = SIX_OVER_PI_SQUARED * s.x.astype(np.float64)
    s.main_term = main
    s.error_term = s.value - main
    s.label = "Q"
    return s


def squarefree_divisor_sum(limit: int, *, table: Optional[FactorTable] = None) -> SeriesSample:
    """sum mu(n)^2 d(n) against (6/pi^2)(log x + 1 - gamma) x."""
    table = _table_for(limit, table)
    s = partial_sums(product(MU_SQ, DIVISORS), limit, table=table)
    x = s.x.astype(np.float64)
    main = SIX_OVER_PI_SQUARED * (np.log(x) + 1.0 - EULER_GAMMA) * x
    s.main_term = main
    s.error_term = s.value - main
    s.label = "mu^2 d"
    return s


def abel_transform(series: SeriesSample, weight: Weight, exact: bool = False) -> SeriesSample:
    """Rebuild sum w(n) a(n) from the dense partial sums A(x) of a(n).

    Uses sum_{n<=x} a(n) w(n) = A(x) w(x) - sum_{n<x} A(n) (w(n+1) - w(n)).
    With ``exact`` and integer or Fraction inputs the result is exact rationals.
    """
    if not series.dense:
        raise ValueError("summation by parts needs a checkpoint at every integer 1..x")
    A = series.value
    x = series.x
    if weight is Weight.TIMES_N:
        if exact or A.dtype == object:
            out = []
            run = 0
            for n, a in zip(x.tolist(), A.tolist()):
                out.append(a * n - run)
                run += a
            value = np.array(out, dtype=object)
        elif np.issubdtype(A.dtype, np.integer):
            tail = np.concatenate(([0], exact_cumsum(A)[:-1]))
            if float(np.abs(A).max()) * float(x[-1]) >= INT64_SAFE:
                raise OverflowError("weighted sum exceeds the exact int64 accumulator")
            value = A * x - tail
        else:
            tail = np.concatenate(([0.0], neumaier_cumsum(A)[:-1]))
            value = A * x - tail
        norm = Normalization.NONE
    else:
        if exact:
            out = []
            run = Fraction(0)
            for n, a in zip(x.tolist(), A.tolist()):
                a = Fraction(a)
                out.append(a / n + run)
                run += a / (n * (n + 1))
            value = np.array(out, dtype=object)
        else:
            xf = x.astype(np.float64)
            inc = A.astype(np.float64) / (xf * (xf + 1.0))
            tail = np.concatenate(([0.0], neumaier_cumsum(inc)[:-1]))
            value = A.astype(np.float64) / xf + tail
        norm = Normalization.OVER_N
    return SeriesSample(x.copy(), value, norm, series.restriction, label=f"abel({series.label})")


def fit_log_power(series: SeriesSample, window: tuple[int, int], rms_threshold: float = 0.05,
                  min_points: int = 8) -> FitReport:
    """Least-squares fit of |S(x)| ~ a x / (log x)^C (a / (log x)^C if normalized).

    Works in log space: log|S| - log x = log a - C log log x. Checkpoints with
    S(x) = 0 are dropped; dropping more than half the window marks the fit
    unreliable.
    """
    lo, hi = window
    if lo <= 1:
        raise ValueError("window must start above 1 (log log x undefined)")
    x = series.x
    inwin = (x >= lo) & (x <= hi)
    vals = np.asarray(series.value[inwin], dtype=np.float64)
    xs = x[inwin].astype(np.float64)
    nz = vals != 0
    if not np.any(nz):
        raise ValueError("degenerate fit: every checkpoint in the window is zero")
    if int(nz.sum()) < min_points:
        raise ValueError(f"need at least {min_points} nonzero checkpoints in window, "
                         f"found {int(nz.sum())}")
    xs, vals = xs[nz], vals[nz]
    normalized = series.normalization is Normalization.OVER_N
    y = np.log(np.abs(vals)) - (0.0 if normalized else np.log(xs))
    t = np.log(np.log(xs))
    design = np.column_stack([np.ones_like(t), -t])
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    rms = float(np.sqrt(np.mean(resid ** 2)))
    excluded = int(inwin.sum() - nz.sum())
    return FitReport(
        amplitude=float(np.exp(coef[0])),
        exponent_C=float(coef[1]),
        rms_residual=rms,
        model="a/(log x)^C" if normalized else "a*x/(log x)^C",
        points_used=int(nz.sum()),
        points_excluded=excluded,
        reliable=excluded <= int(inwin.sum()) // 2,
        rms_high=rms > rms_threshold,
    )


def sign_counts(limit: int, *, table: Optional[FactorTable] = None) -> SeriesSample:
    """Direct counts of n <= x with mu(n) = +1 and mu(n) = -1 at each checkpoint.

    ``value`` holds the +1 counts, ``main_term`` the -1 counts.
    """
    table = _table_for(limit, table)
    mu = table.values(MU)[:limit]
    xs = checkpoint_grid(limit)
    plus = np.cumsum(mu == 1, dtype=np.int64)[xs - 1]
    minus = np.cumsum(mu == -1, dtype=np.int64)[xs - 1]
    return SeriesSample(xs, plus, main_term=minus, label="mu=+1 / mu=-1")


def square_indicator_sums(limit: int, *, table: Optional[FactorTable] = None) -> SeriesSample:
    """sum_{n<=x} sum_{d|n} lambda(d) at each checkpoint, via sum_{d<=x} lambda(d) floor(x/d)."""
    table = _table_for(limit, table)
    lam = table.values(LAMBDA)[:limit]
    xs = checkpoint_grid(limit)
    d = np.arange(1, limit + 1, dtype=np.int64)
    vals = np.array([int(np.dot(lam[:x], x // d[:x])) for x in xs.tolist()], dtype=np.int64)
    main = np.array([math.isqrt(x) for x in xs.tolist()], dtype=np.int64)
    return SeriesSample(xs, vals, main_term=main, label="sum_{d|n} lambda(d)")
