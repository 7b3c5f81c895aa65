"""
Shifted correlation sums R = sum_{n<=x} f(n+t_1) ... f(n+t_k) and the
experiments built on them: the two-value profile, the divisor-sum
rearrangement check, the non-correlation census, Legendre-symbol
correlations, and squarefree pair counts.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .numerics import SIX_OVER_PI_SQUARED, blocked_fsum
from .sieve import (DIVISORS, MU, MU_SQ, OMEGA, ArithFnSpec, FactorTable, build_table,
                    is_prime, legendre_array, primes_upto, restricted_lambda)
from .summatory import Normalization

MAX_DEGREE = 16


@dataclass(frozen=True)
class CorrelationSpec:
    f: ArithFnSpec
    shifts: tuple[int, ...]
    limit: int
    normalization: Normalization = Normalization.NONE
    restriction: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)

    def __post_init__(self):
        shifts = tuple(int(t) for t in self.shifts)
        object.__setattr__(self, "shifts", shifts)
        if not shifts:
            raise ValueError("shift vector is empty")
        if len(shifts) > MAX_DEGREE:
            raise ValueError(f"degree {len(shifts)} exceeds the cap of {MAX_DEGREE}")
        if any(b <= a for a, b in zip(shifts, shifts[1:])):
            raise ValueError(f"shifts must be strictly increasing, got {list(shifts)}")
        if shifts[0] < 0:
            raise ValueError("shifts must be non-negative so every argument is >= 1")
        if self.limit < 1:
            raise ValueError("limit must be >= 1")

    @property
    def needed_hi(self) -> int:
        return self.limit + self.shifts[-1] + 1


@dataclass
class CorrelationResult:
    value: object
    limit: int
    spec: CorrelationSpec
    elapsed: float

    @property
    def normalized_value(self) -> float:
        return float(self.value) / self.limit


def _table_for(hi: int, table: Optional[FactorTable]) -> FactorTable:
    if table is None:
        return build_table(1, hi)
    if not table.covers(1, hi):
        raise ValueError(f"table [{table.lo}, {table.hi}) does not cover [1, {hi})")
    return table


def correlation_terms(values: np.ndarray, shifts: Sequence[int], limit: int) -> np.ndarray:
    """Products prod_i f(n + t_i) for n = 1..limit; values[j] holds f(j + 1)."""
    out = values[shifts[0]:shifts[0] + limit].astype(np.int64, copy=True)
    for t in shifts[1:]:
        out *= values[t:t + limit]
    return out


def correlate(spec: CorrelationSpec, table: Optional[FactorTable] = None) -> CorrelationResult:
    """Exact sum over n <= limit of prod_i f(n + t_i)."""
    start = time.perf_counter()
    table = _table_for(spec.needed_hi, table)
    vals = table.values(spec.f)
    terms = correlation_terms(vals, spec.shifts, spec.limit)
    ns = np.arange(1, spec.limit + 1, dtype=np.int64)
    if spec.restriction is not None:
        terms = np.where(np.asarray(spec.restriction(ns), dtype=bool), terms, 0)
    if spec.normalization is Normalization.NONE:
        if spec.f.log_power > 0:
            bound = float(np.abs(terms).sum(dtype=np.float64))
            if bound >= 2.0 ** 62:
                raise OverflowError("correlation sum exceeds the exact int64 accumulator")
        value = int(terms.sum(dtype=np.int64))
    else:
        value = float(blocked_fsum(terms / ns, np.array([spec.limit]))[0])
    return CorrelationResult(value, spec.limit, spec, time.perf_counter() - start)


@dataclass
class ProfileEntry:
    tau: int
    value: int
    ratio: float


def two_value_profile(f: ArithFnSpec, max_tau: int, limit: int,
                      table: Optional[FactorTable] = None) -> list[ProfileEntry]:
    """R(tau) = sum_{n<=x} f(n) f(n+tau) for tau = 0..max_tau.

    R(0) is the energy sum f(n)^2 (Q(x) for mu, x for lambda).
    """
    if max_tau < 0:
        raise ValueError("max_tau must be >= 0")
    table = _table_for(limit + max_tau + 1, table)
    vals = table.values(f)
    out = []
    for tau in range(max_tau + 1):
        terms = correlation_terms(vals, (0, tau), limit)
        r = int(terms.sum(dtype=np.int64))
        out.append(ProfileEntry(tau, r, abs(r) / limit))
    return out


def decomposition_check(limit: int, extra_shifts: Sequence[int],
                        table: Optional[FactorTable] = None) -> float:
    """Max discrepancy between the two sides of the divisor-sum rearrangement.

    Left:  sum_{n<=x} (-1)^omega(n) mu(n)^2 g(n) / n
    Right: sum_{q<=x} sum_{m<=x/q} mu(qm)^2 g(qm) mu(q) d(q) / (qm)
    with g(n) = prod_i mu(n + t_i). Both are evaluated at every x in 1..limit
    and the largest absolute gap is returned.
    """
    if limit < 1:
        raise ValueError("limit must be >= 1")
    shifts = tuple(int(t) for t in extra_shifts)
    if any(t < 1 for t in shifts):
        raise ValueError("extra shifts must be positive")
    hi = limit + (max(shifts) if shifts else 0) + 1
    table = _table_for(hi, table)
    mu = table.values(MU)
    g = correlation_terms(mu, shifts, limit) if shifts else np.ones(limit, dtype=np.int64)
    musq = table.values(MU_SQ)[:limit]
    omega = table.values(OMEGA)[:limit]
    ns = np.arange(1, limit + 1, dtype=np.int64)

    left_terms = np.where(omega % 2 == 1, -1, 1) * musq * g / ns
    left = blocked_fsum(left_terms, ns)

    # right side, grouped by n = q m so each x gets an exact prefix
    mud = mu[:limit] * table.values(DIVISORS)[:limit]
    right_terms = np.zeros(limit, dtype=np.float64)
    acc = [[] for _ in range(limit)]
    for q in range(1, limit + 1):
        c = int(mud[q - 1])
        if c == 0:
            continue
        m = np.arange(1, limit // q + 1, dtype=np.int64)
        n = q * m
        w = musq[n - 1] * g[n - 1]
        for nn, ww in zip(n[w != 0].tolist(), w[w != 0].tolist()):
            acc[nn - 1].append(c * ww / nn)
    for i, parts in enumerate(acc):
        right_terms[i] = math.fsum(parts)
    right = blocked_fsum(right_terms, ns)
    return float(np.max(np.abs(left - right)))


@dataclass
class CensusWindow:
    lo: int
    hi: int
    pairs: int
    equal_deg2: int
    equal_deg3: int

    @property
    def freq_deg2(self) -> float:
        return self.equal_deg2 / self.pairs if self.pairs else math.nan

    @property
    def freq_deg3(self) -> float:
        return self.equal_deg3 / self.pairs if self.pairs else math.nan


@dataclass
class CensusReport:
    limit: int
    pairs: int
    equal_deg2: int
    equal_deg3: int
    squarefree_pairs: int
    squarefree_equal_deg2: int
    squarefree_equal_deg3: int
    windows: list[CensusWindow]

    @property
    def freq_deg2(self) -> float:
        return self.equal_deg2 / self.pairs

    @property
    def freq_deg3(self) -> float:
        return self.equal_deg3 / self.pairs


def census_events(limit: int, table: Optional[FactorTable] = None) -> list[tuple[int, int, bool, bool]]:
    """Every pair (q, m) with qm <= limit and whether each event holds.

    Events: mu(qm+1) = mu(q) mu(m), and mu(qm+1) mu(qm+2) = mu(q) mu(m).
    """
    table = _table_for(limit + 3, table)
    mu = table.values(MU)
    out = []
    for q in range(1, limit + 1):
        for m in range(1, limit // q + 1):
            n = q * m
            rhs = int(mu[q - 1] * mu[m - 1])
            out.append((q, m, int(mu[n]) == rhs, int(mu[n] * mu[n + 1]) == rhs))
    return out


def noncorrelation_census(limit: int, table: Optional[FactorTable] = None,
                          windows_per_decade: int = 1) -> CensusReport:
    """Frequencies of the coincidence events over all pairs (q, m) with qm <= limit.

    Frequencies are also split into geometric windows of n = qm so a trend can
    be read off; nothing about the trend is asserted here.
    """
    if limit < 1:
        raise ValueError("limit must be >= 1")
    table = _table_for(limit + 3, table)
    mu = table.values(MU)
    edges = [1]
    k = 1
    while edges[-1] <= limit:
        edges.append(min(math.ceil(10 ** (k / windows_per_decade)), limit + 1))
        k += 1
    edges = np.array(edges, dtype=np.int64)
    nb = len(edges) - 1
    pairs = np.zeros(nb, dtype=np.int64)
    eq2 = np.zeros(nb, dtype=np.int64)
    eq3 = np.zeros(nb, dtype=np.int64)
    sq_pairs = sq2 = sq3 = 0
    for q in range(1, limit + 1):
        m = np.arange(1, limit // q + 1, dtype=np.int64)
        n = q * m
        rhs = mu[q - 1] * mu[m - 1]
        e2 = mu[n] == rhs
        e3 = mu[n] * mu[n + 1] == rhs
        b = np.searchsorted(edges, n, side="right") - 1
        pairs += np.bincount(b, minlength=nb)
        eq2 += np.bincount(b, weights=e2, minlength=nb).astype(np.int64)
        eq3 += np.bincount(b, weights=e3, minlength=nb).astype(np.int64)
        sf = mu[n - 1] != 0
        sq_pairs += int(sf.sum())
        sq2 += int((e2 & sf).sum())
        sq3 += int((e3 & sf).sum())
    wins = [CensusWindow(int(edges[i]), int(edges[i + 1]), int(pairs[i]), int(eq2[i]), int(eq3[i]))
            for i in range(nb)]
    return CensusReport(limit, int(pairs.sum()), int(eq2.sum()), int(eq3.sum()),
                        sq_pairs, sq2, sq3, wins)


def legendre_correlation(p: int, shifts: Sequence[int]) -> int:
    """Exact sum over n = 1..p of prod_i chi(n + t_i), chi the Legendre symbol mod p."""
    if p < 3 or not is_prime(p):
        raise ValueError(f"p must be an odd prime, got {p}")
    shifts = [int(t) for t in shifts]
    if not shifts:
        raise ValueError("shift vector is empty")
    if len({t % p for t in shifts}) != len(shifts):
        raise ValueError("shifts must be distinct mod p")
    chi = legendre_array(np.arange(p, dtype=np.int64), p)
    n = np.arange(1, p + 1, dtype=np.int64)
    prod = np.ones(p, dtype=np.int64)
    for t in shifts:
        prod *= chi[(n + t) % p]
    return int(prod.sum())


@dataclass
class CharacterLawReport:
    prime_max: int
    k_max: int
    checked: int
    violations: list[tuple[int, int, int]]
    degenerate: list[tuple[int, int, int]]


def character_law(prime_max: int, k_max: int = 5) -> CharacterLawReport:
    """Evaluate sum_{n<=p} chi(n) chi(n+k) for odd primes p <= prime_max and 1 <= k <= k_max.

    The sum is -1 whenever p does not divide k; entries breaking that go to
    ``violations``. When p | k the sum is p - 1 instead, and those cases are
    listed under ``degenerate`` with their value.
    """
    bad, degenerate = [], []
    checked = 0
    for p in primes_upto(prime_max).tolist():
        if p < 3:
            continue
        n = np.arange(1, p + 1, dtype=np.int64)
        chi = legendre_array(np.arange(p, dtype=np.int64), p)
        base = chi[n % p]
        for k in range(1, k_max + 1):
            v = int(np.dot(base, chi[(n + k) % p]))
            checked += 1
            if k % p == 0:
                degenerate.append((p, k, v))
            elif v != -1:
                bad.append((p, k, v))
    return CharacterLawReport(prime_max, k_max, checked, bad, degenerate)


@dataclass
class WeilTrial:
    p: int
    a: int
    b: int
    value: int

    @property
    def bound(self) -> float:
        return 2.0 * math.sqrt(self.p)

    @property
    def ok(self) -> bool:
        return abs(self.value) <= self.bound


def weil_trials(count: int, prime_max: int, seed: int = 0) -> list[WeilTrial]:
    """Random triple sums sum_{n<=p} chi(n) chi(n+a) chi(n+b), 0 < a < b < p, p >= 5."""
    rng = np.random.default_rng(seed)
    ps = primes_upto(prime_max)
    ps = ps[ps >= 5]
    out = []
    for _ in range(count):
        p = int(rng.choice(ps))
        a, b = sorted(int(v) for v in rng.choice(np.arange(1, p), size=2, replace=False))
        out.append(WeilTrial(p, a, b, legendre_correlation(p, (0, a, b))))
    return out


@dataclass
class PairSquarefreeReport:
    k: int
    limit: int
    count: int
    ratio: float
    independent_constant: float
    euler_product: float
    closer: str


def pair_density_euler_product(k: int, prime_cutoff: int = 10 ** 6) -> float:
    """prod_p (1 - c_p / p^2), c_p = 1 if p^2 | k else 2, over p <= cutoff."""
    ps = primes_upto(prime_cutoff).astype(np.float64)
    c = np.full(len(ps), 2.0)
    if k == 0:
        c[:] = 1.0
    else:
        pk = primes_upto(prime_cutoff)
        c[(k % (pk * pk)) == 0] = 1.0
    return float(np.exp(np.sum(np.log1p(-c / (ps * ps)))))


def pair_squarefree_correlation(k: int, limit: int, table: Optional[FactorTable] = None,
                                prime_cutoff: int = 10 ** 6) -> PairSquarefreeReport:
    """Count n <= x with n and n + k both squarefree, against two density candidates.

    The candidates are (6/pi^2)^2, as if the two events were independent, and
    the local-density Euler product.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    table = _table_for(limit + k + 1, table)
    sq = table.values(MU_SQ)
    count = int(correlation_terms(sq, (0, k) if k else (0,), limit).sum())
    ratio = count / limit
    indep = SIX_OVER_PI_SQUARED ** 2
    euler = pair_density_euler_product(k, prime_cutoff)
    closer = "independent" if abs(ratio - indep) < abs(ratio - euler) else "euler_product"
    return PairSquarefreeReport(k, limit, count, ratio, indep, euler, closer)


def default_restricted_q() -> ArithFnSpec:
    """Restricted Liouville function on primes p = 1 mod 4."""
    return restricted_lambda(lambda p: p % 4 == 1, "1mod4")


__all__ = [
    "CorrelationSpec", "CorrelationResult", "correlate", "two_value_profile",
    "decomposition_check", "noncorrelation_census", "census_events", "legendre_correlation",
    "pair_squarefree_correlation", "pair_density_euler_product", "ProfileEntry",
    "CensusReport", "PairSquarefreeReport", "character_law", "weil_trials", "CharacterLawReport",
    "WeilTrial", "default_restricted_q", "MAX_DEGREE",
]
