"""
Exponential sums sum_{n<=x} f(n) e(alpha n^k) and related twisted sums.

Phases are reduced exactly: frac(alpha n^k) is formed in integer arithmetic
from the rational value of alpha (a float counts as the dyadic rational it
stores), so only the final cos/sin round. Real and imaginary parts are
summed with ``math.fsum`` per checkpoint block.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

import numpy as np

from .numerics import blocked_fsum, checkpoint_grid, frac_of_product
from .sieve import LAMBDA, MU, TOTIENT, ArithFnSpec, FactorTable, build_table, product
from .summatory import SeriesSample, partial_sums

TWO_PI = 2.0 * math.pi
Real = Union[Fraction, float]


@dataclass
class ExpSumResult:
    alpha: Real
    limit: int
    value: complex
    phase_power: int = 1
    label: str = ""
    checkpoints: list[tuple[int, float, float]] = field(default_factory=list)

    @property
    def re(self) -> float:
        return self.value.real

    @property
    def im(self) -> float:
        return self.value.imag

    @property
    def magnitude(self) -> float:
        return abs(self.value)


def _table_for(limit: int, table: Optional[FactorTable]) -> FactorTable:
    if table is None:
        return build_table(1, limit + 1)
    if not table.covers(1, limit + 1):
        raise ValueError(f"table [{table.lo}, {table.hi}) does not cover [1, {limit}]")
    return table


def _check_alpha(alpha: Real) -> Real:
    if isinstance(alpha, (int, Fraction)):
        alpha = Fraction(alpha)
    else:
        alpha = float(alpha)
        if not math.isfinite(alpha):
            raise ValueError("alpha must be finite")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie strictly between 0 and 1, got {alpha}")
    return alpha


def exp_sum(f: ArithFnSpec, alpha: Real, limit: int, phase_power: int = 1, *,
            table: Optional[FactorTable] = None, grid: Optional[np.ndarray] = None) -> ExpSumResult:
    """S = sum_{n<=limit} f(n) exp(2 pi i alpha n^phase_power)."""
    alpha = _check_alpha(alpha)
    if limit < 1:
        raise ValueError("limit must be >= 1")
    if phase_power < 1:
        raise ValueError("phase power must be >= 1")
    table = _table_for(limit, table)
    vals = table.values(f)[:limit]
    xs = checkpoint_grid(limit) if grid is None else np.asarray(grid, dtype=np.int64)
    nz = np.flatnonzero(vals)
    ns = nz + 1
    theta = TWO_PI * frac_of_product(alpha, ns, phase_power)
    w = vals[nz].astype(np.float64)
    ends = np.searchsorted(ns, xs, side="right")
    re = blocked_fsum(w * np.cos(theta), ends)
    im = blocked_fsum(w * np.sin(theta), ends)
    cps = list(zip(xs.tolist(), re.tolist(), im.tolist()))
    return ExpSumResult(alpha, limit, complex(re[-1], im[-1]), phase_power, f.name, cps)


@dataclass
class RationalPhaseResult:
    a: int
    q: int
    limit: int
    decomposed: complex
    direct: complex
    class_sums: np.ndarray

    @property
    def discrepancy(self) -> float:
        return abs(self.decomposed - self.direct)

    @property
    def magnitude(self) -> float:
        return abs(self.decomposed)


def rational_phase_sum(f: ArithFnSpec, a: int, q: int, limit: int, *,
                       table: Optional[FactorTable] = None) -> RationalPhaseResult:
    """S(a/q) through the residue classes, cross-checked against :func:`exp_sum`.

    Since e(a n / q) depends only on n mod q, S = sum_{k mod q} e(a k / q) F(k)
    with F(k) the exact integer sum of f over n = k mod q.
    """
    if q < 1 or not 0 <= a < q:
        raise ValueError(f"need q >= 1 and 0 <= a < q, got a={a}, q={q}")
    table = _table_for(limit, table)
    vals = table.values(f)[:limit]
    ns = np.arange(1, limit + 1, dtype=np.int64)
    F = np.zeros(q, dtype=np.int64)
    np.add.at(F, ns % q, vals)
    ks = np.arange(q, dtype=np.int64)
    theta = TWO_PI * ((a * ks) % q) / q
    Ff = F.astype(np.float64)
    decomposed = complex(math.fsum((Ff * np.cos(theta)).tolist()),
                         math.fsum((Ff * np.sin(theta)).tolist()))
    if a == 0:
        direct = complex(int(vals.sum(dtype=np.int64)), 0.0)
    else:
        direct = exp_sum(f, Fraction(a, q), limit, table=table, grid=np.array([limit])).value
    return RationalPhaseResult(a, q, limit, decomposed, direct, F)


def digit_sum_twist(limit: int, f: ArithFnSpec = MU, *, table: Optional[FactorTable] = None) -> int:
    """Exact sum_{n<=limit} f(n) (-1)^s(n), s the binary digit sum."""
    table = _table_for(limit, table)
    vals = table.values(f)[:limit]
    ns = np.arange(1, limit + 1, dtype=np.int64)
    sign = 1 - 2 * (np.bitwise_count(ns).astype(np.int64) & 1)
    return int(np.dot(vals, sign))


@dataclass
class TwistResult:
    value: int
    series: SeriesSample


def totient_twist(f: ArithFnSpec, limit: int, *, table: Optional[FactorTable] = None) -> TwistResult:
    """Exact sum_{n<=limit} f(n) phi(n) with checkpoint partial sums."""
    if f not in (MU, LAMBDA):
        raise ValueError("totient twist is defined for mu and lambda")
    table = _table_for(limit, table)
    s = partial_sums(product(f, TOTIENT), limit, table=table)
    s.label = f"{f.name}*phi"
    return TwistResult(int(s.last), s)
