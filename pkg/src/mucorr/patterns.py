"""
Sign patterns of mu on runs of consecutive integers.

A pattern is a short vector over {-1, 0, +1, *}; the census counts where mu
matches it, and the CRT construction produces integers where chosen cells
are forced to zero by a prime square. The orthogonality metric at the end is
a truncated prime sum comparing two multiplicative functions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .sieve import MU, ArithFnSpec, FactorTable, build_table, primes_upto

WILDCARD = None
_CELL_TEXT = {"-1": -1, "0": 0, "1": 1, "+1": 1, "*": None}


@dataclass(frozen=True)
class Pattern:
    cells: tuple

    def __post_init__(self):
        cells = tuple(self.cells)
        object.__setattr__(self, "cells", cells)
        if not cells:
            raise ValueError("pattern needs at least one cell")
        bad = [c for c in cells if c not in (-1, 0, 1, None)]
        if bad:
            raise ValueError(f"pattern cells must be -1, 0, +1 or wildcard, got {bad}")

    @classmethod
    def parse(cls, text: str) -> "Pattern":
        """``"0,*,0"`` style text; ``*`` is a wildcard."""
        cells = []
        for tok in text.split(","):
            tok = tok.strip()
            if tok not in _CELL_TEXT:
                raise ValueError(f"bad pattern cell {tok!r}")
            cells.append(_CELL_TEXT[tok])
        return cls(tuple(cells))

    @property
    def length(self) -> int:
        return len(self.cells)

    @property
    def zero_positions(self) -> list[int]:
        return [i for i, c in enumerate(self.cells) if c == 0]

    def __str__(self) -> str:
        return ",".join("*" if c is None else str(c) for c in self.cells)


@dataclass
class PatternCensus:
    pattern: Pattern
    limit: int
    count: int
    first: Optional[int]


def _table_for(hi: int, table: Optional[FactorTable]) -> FactorTable:
    if table is None:
        return build_table(1, hi)
    if not table.covers(1, hi):
        raise ValueError(f"table [{table.lo}, {table.hi}) does not cover [1, {hi})")
    return table


def _match_mask(pattern: Pattern, vals: np.ndarray, limit: int) -> np.ndarray:
    # n runs over 1..limit-k, vals[j] = mu(j + 1)
    span = limit - pattern.length + 1
    mask = np.ones(span, dtype=bool)
    for i, c in enumerate(pattern.cells):
        if c is not None:
            mask &= vals[i:i + span] == c
    return mask


def pattern_census(pattern: Union[Pattern, str], limit: int, *, table: Optional[FactorTable] = None,
                   f: ArithFnSpec = MU) -> PatternCensus:
    """Count n <= limit - k with f(n + i) = cell i for every non-wildcard cell."""
    if isinstance(pattern, str):
        pattern = Pattern.parse(pattern)
    if limit < pattern.length:
        raise ValueError(f"limit {limit} is shorter than the pattern ({pattern.length})")
    table = _table_for(limit + 1, table)
    mask = _match_mask(pattern, table.values(f), limit)
    hits = np.flatnonzero(mask)
    first = int(hits[0]) + 1 if len(hits) else None
    return PatternCensus(pattern, limit, int(len(hits)), first)


def sign_change_count(limit: int, *, table: Optional[FactorTable] = None) -> int:
    """Number of n <= limit - 1 where mu(n), mu(n + 1) are +1, -1 or -1, +1."""
    table = _table_for(limit + 1, table)
    a = pattern_census(Pattern((1, -1)), limit, table=table).count
    b = pattern_census(Pattern((-1, 1)), limit, table=table).count
    return a + b


def nth_prime(i: int) -> int:
    """p_1 = 2, p_2 = 3, ..."""
    if i < 1:
        raise ValueError("prime index starts at 1")
    bound = 15 if i < 6 else int(i * (math.log(i) + math.log(math.log(i)))) + 1
    return int(primes_upto(bound)[i - 1])


@dataclass
class ZeroPatternSolution:
    n: int
    modulus: int
    zero_positions: tuple[int, ...]
    primes: tuple[int, ...]
    verified: bool


def crt(residues: Sequence[int], moduli: Sequence[int]) -> tuple[int, int]:
    """Solve n = r_i mod m_i for pairwise coprime moduli by successive substitution."""
    n, M = 0, 1
    for r, m in zip(residues, moduli):
        # n + M*t = r mod m
        t = ((r - n) * pow(M, -1, m)) % m
        n += M * t
        M *= m
    return n % M, M


def construct_zero_pattern(zero_positions: Sequence[int], seed_index: int = 1) -> ZeroPatternSolution:
    """Smallest n >= 1 with p_{m+i}^2 | n + i for every listed position i.

    Only zero cells can be forced this way; residues mod p^2 say nothing about
    the sign of mu at the other positions. The result is checked by direct
    division before it is returned.
    """
    pos = sorted({int(i) for i in zero_positions})
    if not pos:
        raise ValueError("need at least one zero position")
    if pos[0] < 0:
        raise ValueError("positions must be >= 0")
    if seed_index < 1:
        raise ValueError("seed index starts at 1 (p_1 = 2)")
    primes = tuple(nth_prime(seed_index + i) for i in pos)
    moduli = [p * p for p in primes]
    n, M = crt([-i for i in pos], moduli)
    if n == 0:
        n = M
    verified = all((n + i) % q == 0 for i, q in zip(pos, moduli))
    if not verified:
        raise ArithmeticError(f"CRT result {n} failed the divisibility check")
    return ZeroPatternSolution(n, M, tuple(pos), primes, verified)


@dataclass
class PatternLengthBound:
    limit: int
    loglog_floor: int
    length_bound: int
    product_length: int

    @property
    def consistent(self) -> bool:
        return self.product_length <= self.length_bound


def max_pattern_length(limit: int) -> PatternLengthBound:
    """Bounds on how long a forced zero run can be below ``limit``.

    ``loglog_floor`` is floor(log2 log2 limit), computed exactly from bit
    lengths, and ``length_bound`` adds one. ``product_length`` is the largest
    r with p_1^2 ... p_r^2 <= limit, the size of the smallest CRT modulus for
    r consecutive zeros.
    """
    if limit < 1:
        raise ValueError("limit must be >= 1")
    log2_floor = limit.bit_length() - 1
    loglog = log2_floor.bit_length() - 1 if log2_floor >= 1 else 0
    prod, r = 1, 0
    for p in primes_upto(64).tolist():
        if prod * p * p > limit:
            break
        prod *= p * p
        r += 1
    return PatternLengthBound(limit, loglog, loglog + 1, r)


PrimeFn = Union[ArithFnSpec, Callable[[np.ndarray], np.ndarray], complex, float, int]


def _on_primes(f: PrimeFn, ps: np.ndarray, table: Optional[FactorTable]) -> np.ndarray:
    if isinstance(f, ArithFnSpec):
        return table.values(f)[ps - table.lo].astype(np.float64)
    if callable(f):
        return np.asarray(f(ps))
    return np.full(len(ps), f)


def _tag(f: PrimeFn) -> str:
    if isinstance(f, ArithFnSpec):
        return f.name
    if callable(f):
        return getattr(f, "__name__", "fn")
    return f"const({f})"


@dataclass
class OrthogonalityReport:
    f_tag: str
    g_tag: str
    prime_cutoff: int
    partial_metric: float
    diverging: bool
    tail_sum: float


def orthogonality_terms(f: PrimeFn, g: PrimeFn, prime_cutoff: int,
                        table: Optional[FactorTable] = None) -> tuple[np.ndarray, np.ndarray]:
    """Primes p <= cutoff and the summands (1 + Re f(p) conj(g(p))) / p."""
    if prime_cutoff < 2:
        raise ValueError("prime cutoff must be >= 2")
    ps = primes_upto(prime_cutoff)
    if isinstance(f, ArithFnSpec) or isinstance(g, ArithFnSpec):
        table = _table_for(prime_cutoff + 1, table)
    fv = _on_primes(f, ps, table)
    gv = _on_primes(g, ps, table)
    inner = np.real(fv * np.conj(gv)).astype(np.float64)
    return ps, (1.0 + inner) / ps


def orthogonality_metric(f: PrimeFn, g: PrimeFn, prime_cutoff: int,
                         table: Optional[FactorTable] = None) -> OrthogonalityReport:
    """D(f, g) = |sum_{p <= cutoff} (1 + Re f(p) conj(g(p))) / p|^(1/2).

    ``diverging`` is a heuristic: the primes in (sqrt(c), c] contribute about
    s * log 2 when the summands average s, so a tail of at least log(2) / 4
    suggests the full series keeps growing.
    """
    ps, terms = orthogonality_terms(f, g, prime_cutoff, table)
    total = math.fsum(terms.tolist())
    tail = math.fsum(terms[ps > math.isqrt(prime_cutoff)].tolist())
    return OrthogonalityReport(_tag(f), _tag(g), prime_cutoff, math.sqrt(abs(total)),
                               tail >= 0.25 * math.log(2), tail)
