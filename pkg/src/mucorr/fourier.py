"""
The sawtooth D(x) and truncated Davenport-type series.

For a(n) with divisor sums A(n) = sum_{d|n} a(d), compare
    sum_{n<=N} a(n)/n D(n x)   against   -(1/pi) sum_{n<=N} A(n)/n sin(2 pi n x).
Arguments n x and n^2 x are reduced exactly (see ``frac_of_product``), so a
rational x written as a Fraction hits integers exactly where it should.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .numerics import blocked_fsum, frac_of_product
from .sieve import LAMBDA, MU, FactorTable, build_table

Real = Union[Fraction, float, int]


class Series(enum.Enum):
    MU = "mu"
    LAMBDA = "lambda"
    VON_MANGOLDT = "vonmangoldt"


def sawtooth(x: Real) -> float:
    """D(x) = {x} - 1/2 off the integers, 0 on them; {x} = x - floor(x) in [0, 1)."""
    if isinstance(x, (int, Fraction)):
        frac = Fraction(x) - math.floor(x)
        return 0.0 if frac == 0 else float(frac - Fraction(1, 2))
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("sawtooth needs a finite argument")
    frac = x - math.floor(x)  # exact for doubles
    return 0.0 if frac == 0.0 else frac - 0.5


def sawtooth_array(frac: np.ndarray) -> np.ndarray:
    """D from precomputed fractional parts."""
    return np.where(frac == 0.0, 0.0, frac - 0.5)


@dataclass
class SeriesComparison:
    x: Real
    terms: int
    lhs_partial: float
    rhs_partial: float

    @property
    def gap(self) -> float:
        return abs(self.lhs_partial - self.rhs_partial)


def _exact(x: Real) -> Real:
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("x must be finite")
    return x


def _table_for(hi: int, table: Optional[FactorTable]) -> FactorTable:
    if table is None:
        return build_table(1, hi)
    if not table.covers(1, hi):
        raise ValueError(f"table [{table.lo}, {table.hi}) does not cover [1, {hi})")
    return table


def divisor_sums(a: np.ndarray) -> np.ndarray:
    """A(n) = sum_{d|n} a(d) for n = 1..len(a) by adding a(d) to each multiple of d."""
    n = len(a)
    out = np.zeros(n, dtype=np.int64)
    for d in range(1, n + 1):
        if a[d - 1]:
            out[d - 1::d] += a[d - 1]
    return out


def closed_form_divisor_sums(series: Series, n: int) -> np.ndarray:
    """[n = 1] for mu, [n is a square] for lambda."""
    out = np.zeros(n, dtype=np.int64)
    if series is Series.MU:
        out[0] = 1
    elif series is Series.LAMBDA:
        r = np.arange(1, math.isqrt(n) + 1)
        out[r * r - 1] = 1
    else:
        raise ValueError("closed form exists for mu and lambda only")
    return out


def davenport_sweep(series: Union[Series, str], x: Real, checkpoints: Sequence[int], *,
                    table: Optional[FactorTable] = None) -> list[SeriesComparison]:
    """Both truncations at each N in ``checkpoints`` (ascending)."""
    series = Series(series)
    if series is Series.VON_MANGOLDT:
        return [vonmangoldt_series(x, N, table=table) for N in checkpoints]
    x = _exact(x)
    Ns = np.asarray(checkpoints, dtype=np.int64)
    if len(Ns) == 0 or Ns[0] < 1 or np.any(np.diff(Ns) <= 0):
        raise ValueError("checkpoints must be ascending integers >= 1")
    top = int(Ns[-1])
    table = _table_for(top + 1, table)
    a = table.values(MU if series is Series.MU else LAMBDA)[:top]
    ns = np.arange(1, top + 1, dtype=np.int64)
    lhs = blocked_fsum(a / ns * sawtooth_array(frac_of_product(x, ns)), Ns)
    if series is Series.MU:
        # A(n) = [n = 1]
        s = -math.sin(2.0 * math.pi * frac_of_product(x, np.array([1]))[0]) / math.pi
        rhs = np.full(len(Ns), s)
    else:
        # A(n) = [n = m^2]; terms sin(2 pi m^2 x) / m^2
        ms = np.arange(1, math.isqrt(top) + 1, dtype=np.int64)
        terms = np.sin(2.0 * math.pi * frac_of_product(x, ms, 2)) / (ms * ms)
        ends = np.array([math.isqrt(int(N)) for N in Ns])
        rhs = -blocked_fsum(terms, ends) / math.pi
    return [SeriesComparison(x, int(N), float(l), float(r)) for N, l, r in zip(Ns, lhs, rhs)]


def davenport_compare(series: Union[Series, str], x: Real, N: int, *,
                      table: Optional[FactorTable] = None) -> SeriesComparison:
    if N < 1:
        raise ValueError("N must be >= 1")
    return davenport_sweep(series, x, [N], table=table)[0]


def vonmangoldt_series(x: Real, N: int, *, table: Optional[FactorTable] = None) -> SeriesComparison:
    """sum_{n<=N} L(n^2+1)/n^2 D(n^2 x) against -(1/pi) sum_{n<=N} B(n)/n sin(2 pi n x),
    B(n) = sum_{d^2 | n} L(d^2 + 1), L the von Mangoldt function.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    x = _exact(x)
    if sawtooth_is_integer(x):
        raise ValueError("x must not be an integer")
    table = _table_for(N * N + 2, table)
    ds = np.arange(1, N + 1, dtype=np.int64)
    lam = table.von_mangoldt(ds * ds + 1)
    lhs = math.fsum((lam / (ds * ds) * sawtooth_array(frac_of_product(x, ds, 2))).tolist())
    B = np.zeros(N, dtype=np.float64)
    for d in range(1, math.isqrt(N) + 1):
        B[d * d - 1::d * d] += lam[d - 1]
    rhs = -math.fsum((B / ds * np.sin(2.0 * math.pi * frac_of_product(x, ds))).tolist()) / math.pi
    return SeriesComparison(x, N, lhs, rhs)


def sawtooth_is_integer(x: Real) -> bool:
    if isinstance(x, Fraction):
        return x.denominator == 1
    return float(x).is_integer()


def geometric_checkpoints(terms: int) -> list[int]:
    """10, 100, ... below ``terms``, then ``terms``."""
    out = []
    n = 10
    while n < terms:
        out.append(n)
        n *= 10
    out.append(terms)
    return out
