"""
Exhaustive checks of the Mobius/Liouville convolution identities.

For each n the left side is read from the table's bulk sieve arrays and the
right side is rebuilt from the factorization of n (smallest-prime-factor
chain) by expanding its divisors. The two routes share no arrays.
"""
from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Union

from .sieve import LAMBDA, MU, MU_SQ, OMEGA, ArithFnSpec, FactorTable

MAX_STORED_FAILURES = 100


class IdentityId(enum.Enum):
    L2_1 = "L2.1"
    L2_2 = "L2.2"
    L2_3 = "L2.3"
    L2_4 = "L2.4"
    L2_5 = "L2.5"
    L2_6 = "L2.6"
    MOBIUS_INVERSION = "inversion"

    @classmethod
    def parse(cls, text: str) -> "IdentityId":
        t = text.strip().upper().replace("_", ".")
        for member in cls:
            if member.value.upper() == t or member.name == text.strip().upper():
                return member
        raise ValueError(f"unknown identity {text!r}")


DESCRIPTIONS = {
    IdentityId.L2_1: "mu(n) = (-1)^omega(n) mu(n)^2",
    IdentityId.L2_2: "(-1)^omega(n) = sum_{q|n} mu(q) d(q)",
    IdentityId.L2_3: "lambda(n) = sum_{d^2|n} mu(n/d^2)",
    IdentityId.L2_4: "mu(n) = sum_{d^2|n} mu(d) lambda(n/d^2)",
    IdentityId.L2_5: "|mu(n)| = sum_{d^2|n} mu(d)",
    IdentityId.L2_6: "sum_{d|n} lambda(d) = [n is a square]",
    IdentityId.MOBIUS_INVERSION: "g(n) = sum_{d|n} mu(d) f(n/d), f = 1 * g",
}


@dataclass
class IdentityReport:
    identity_id: IdentityId
    lo: int
    hi: int
    failures: list[tuple[int, int, int]] = field(default_factory=list)
    failure_count: int = 0

    @property
    def ok(self) -> bool:
        return self.failure_count == 0

    @property
    def range(self) -> tuple[int, int]:
        return (self.lo, self.hi)

    def record(self, n: int, lhs: int, rhs: int) -> None:
        self.failure_count += 1
        if len(self.failures) < MAX_STORED_FAILURES:
            self.failures.append((n, lhs, rhs))

    def merge(self, other: "IdentityReport") -> None:
        for n, l, r in other.failures:
            if len(self.failures) < MAX_STORED_FAILURES:
                self.failures.append((n, l, r))
        self.failure_count += other.failure_count
        self.lo = min(self.lo, other.lo)
        self.hi = max(self.hi, other.hi)

    @property
    def checked(self) -> int:
        return self.hi - self.lo

    def to_dict(self) -> dict:
        return {
            "identity": self.identity_id.value,
            "statement": DESCRIPTIONS[self.identity_id],
            "range": [self.lo, self.hi],
            "count": self.checked,
            "failures": self.failure_count,
            "counterexamples": [list(f) for f in self.failures],
        }


def _divisors(fac: list[tuple[int, int]]) -> list[tuple[int, int, int, int]]:
    """All divisors q of n as (q, mu(q), d(q), lambda(q)), from the exponents only."""
    divs = [(1, 1, 1, 1)]
    for p, e in fac:
        nxt = []
        for q, mu, d, lam in divs:
            pk = 1
            for k in range(e + 1):
                m = mu if k == 0 else (-mu if k == 1 else 0)
                nxt.append((q * pk, m, d * (k + 1), lam if k % 2 == 0 else -lam))
                pk *= p
        divs = nxt
    return divs


def _square_divisors(fac: list[tuple[int, int]]) -> list[tuple[int, int, int]]:
    """Each d with d^2 | n as (mu(d), mu(n/d^2), lambda(n/d^2))."""
    out = [(1, (), 0)]  # (mu(d), exponents of n/d^2 so far, bigomega so far)
    for p, e in fac:
        nxt = []
        for mu_d, rest, big in out:
            for f in range(e // 2 + 1):
                m = mu_d if f == 0 else (-mu_d if f == 1 else 0)
                r = e - 2 * f
                nxt.append((m, rest + (r,), big + r))
        out = nxt
    result = []
    for mu_d, rest, big in out:
        if any(r > 1 for r in rest):
            mu_rest = 0
        else:
            mu_rest = -1 if sum(rest) % 2 else 1
        result.append((mu_d, mu_rest, -1 if big % 2 else 1))
    return result


def _inversion_rhs(fac, divs, g_of: Callable[[int], int]) -> int:
    # mixed-radix index: digit for the last prime varies fastest
    F = [g_of(q) for q, *_ in divs]
    stride = 1
    for _, e in reversed(fac):
        block = stride * (e + 1)
        for base in range(0, len(F), block):
            for k in range(1, e + 1):
                for j in range(base + k * stride, base + (k + 1) * stride):
                    F[j] += F[j - stride]
        stride = block
    # F[i] = f(q_i) = sum_{e | q_i} g(e); n / q_i sits at the mirrored index
    top = len(F) - 1
    return sum(mu * F[top - i] for i, (_, mu, _, _) in enumerate(divs) if mu)


def _sweep_chunk(table: FactorTable, lo: int, hi: int, ids: tuple[IdentityId, ...],
                 g: Union[ArithFnSpec, Callable[[int], int], None]) -> dict:
    reports = {i: IdentityReport(i, lo, hi) for i in ids}
    off = table.lo
    need = set(ids)
    # divisors of n never exceed n, so arrays up to hi suffice
    top = hi - off
    mu = table.values(MU)[:top].tolist() if need & {IdentityId.L2_1, IdentityId.L2_4} else None
    omega = table.values(OMEGA)[:top].tolist() if IdentityId.L2_2 in need else None
    lam = table.values(LAMBDA)[:top].tolist() if need & {IdentityId.L2_3, IdentityId.L2_6} else None
    musq = table.values(MU_SQ)[:top].tolist() if IdentityId.L2_5 in need else None
    if IdentityId.MOBIUS_INVERSION in need:
        if isinstance(g, ArithFnSpec):
            garr = table.values(g)[:top].tolist()
            g_of = lambda q: garr[q - off]  # noqa: E731
        else:
            g_of = g
    want_divs = bool(need & {IdentityId.L2_2, IdentityId.L2_6, IdentityId.MOBIUS_INVERSION})
    for n in range(lo, hi):
        fac = table.factorize(n)
        i = n - off
        sq = None
        divs = _divisors(fac) if want_divs else None
        if IdentityId.L2_1 in need:
            rhs = 0 if any(e > 1 for _, e in fac) else (-1) ** len(fac)
            if mu[i] != rhs:
                reports[IdentityId.L2_1].record(n, mu[i], rhs)
        if IdentityId.L2_2 in need:
            lhs = -1 if omega[i] % 2 else 1
            rhs = sum(m * d for _, m, d, _ in divs)
            if lhs != rhs:
                reports[IdentityId.L2_2].record(n, lhs, rhs)
        if need & {IdentityId.L2_3, IdentityId.L2_4, IdentityId.L2_5}:
            sq = _square_divisors(fac)
        if IdentityId.L2_3 in need:
            rhs = sum(mr for _, mr, _ in sq)
            if lam[i] != rhs:
                reports[IdentityId.L2_3].record(n, lam[i], rhs)
        if IdentityId.L2_4 in need:
            rhs = sum(md * lr for md, _, lr in sq)
            if mu[i] != rhs:
                reports[IdentityId.L2_4].record(n, mu[i], rhs)
        if IdentityId.L2_5 in need:
            rhs = sum(md for md, _, _ in sq)
            if musq[i] != rhs:
                reports[IdentityId.L2_5].record(n, musq[i], rhs)
        if IdentityId.L2_6 in need:
            lhs = sum(lam[q - off] for q, *_ in divs)
            r = math.isqrt(n)
            rhs = 1 if r * r == n else 0
            if lhs != rhs:
                reports[IdentityId.L2_6].record(n, lhs, rhs)
        if IdentityId.MOBIUS_INVERSION in need:
            lhs = g_of(n)
            rhs = _inversion_rhs(fac, divs, g_of)
            if lhs != rhs:
                reports[IdentityId.MOBIUS_INVERSION].record(n, lhs, rhs)
    return reports


_WORKER_TABLE: Optional[FactorTable] = None


def _init_worker(table: FactorTable) -> None:
    global _WORKER_TABLE
    _WORKER_TABLE = table


def _worker(args):
    return _sweep_chunk(_WORKER_TABLE, *args)


def check_identities(table: FactorTable, lo: int, hi: int, ids: Iterable[IdentityId],
                     g: Union[ArithFnSpec, Callable[[int], int], None] = None,
                     threads: int = 1, chunk: int = 1 << 17) -> dict[IdentityId, IdentityReport]:
    """Run several identity checks over n in [lo, hi) in one factorization pass."""
    ids = tuple(ids)
    if not 1 <= lo < hi:
        raise ValueError("need 1 <= lo < hi")
    if table.lo != 1 or hi > table.hi:
        raise ValueError(f"range [{lo}, {hi}) needs a table starting at 1 and reaching {hi}")
    if IdentityId.MOBIUS_INVERSION in ids and g is None:
        raise ValueError("Mobius inversion needs a function g")
    bounds = [(s, min(s + chunk, hi)) for s in range(lo, hi, chunk)]
    if threads > 1 and len(bounds) > 1 and not (callable(g) and not isinstance(g, ArithFnSpec)):
        small = table.restrict(hi)
        with ProcessPoolExecutor(max_workers=min(threads, len(bounds)), initializer=_init_worker,
                                 initargs=(small,)) as pool:
            parts = list(pool.map(_worker, [(s, e, ids, g) for s, e in bounds]))
    else:
        parts = [_sweep_chunk(table, s, e, ids, g) for s, e in bounds]
    merged = {i: IdentityReport(i, lo, lo) for i in ids}
    for part in parts:  # ascending n
        for i in ids:
            merged[i].merge(part[i])
    return merged


def _single(ident: IdentityId, table, lo, hi, g=None, threads=1) -> IdentityReport:
    return check_identities(table, lo, hi, [ident], g=g, threads=threads)[ident]


def check_mu_decomposition(table: FactorTable, lo: int, hi: int, threads: int = 1) -> IdentityReport:
    return _single(IdentityId.L2_1, table, lo, hi, threads=threads)


def check_quasi_mobius(table: FactorTable, lo: int, hi: int, threads: int = 1) -> IdentityReport:
    return _single(IdentityId.L2_2, table, lo, hi, threads=threads)


def check_liouville_conv(table: FactorTable, lo: int, hi: int, threads: int = 1) -> IdentityReport:
    return _single(IdentityId.L2_3, table, lo, hi, threads=threads)


def check_mobius_from_liouville(table: FactorTable, lo: int, hi: int, threads: int = 1) -> IdentityReport:
    return _single(IdentityId.L2_4, table, lo, hi, threads=threads)


def check_squarefree_indicator(table: FactorTable, lo: int, hi: int, threads: int = 1) -> IdentityReport:
    return _single(IdentityId.L2_5, table, lo, hi, threads=threads)


def check_square_indicator(table: FactorTable, lo: int, hi: int, threads: int = 1) -> IdentityReport:
    return _single(IdentityId.L2_6, table, lo, hi, threads=threads)


def check_mobius_inversion(table: FactorTable, lo: int, hi: int,
                           g: Union[ArithFnSpec, Callable[[int], int]],
                           threads: int = 1) -> IdentityReport:
    """With f(n) = sum_{d|n} g(d), confirm g(n) = sum_{d|n} mu(d) f(n/d).

    ``g`` is an :class:`ArithFnSpec` (read from the sieve arrays) or any
    callable on positive integers.
    """
    return _single(IdentityId.MOBIUS_INVERSION, table, lo, hi, g=g, threads=threads)


SIX_IDENTITIES = (IdentityId.L2_1, IdentityId.L2_2, IdentityId.L2_3,
                  IdentityId.L2_4, IdentityId.L2_5, IdentityId.L2_6)
