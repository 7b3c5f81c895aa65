"""
Segmented smallest-prime-factor sieve and per-integer arithmetic functions.

A :class:`FactorTable` covers the half-open range ``[lo, hi)``. It answers
scalar questions (``factorize``, ``evaluate``) by walking the smallest-prime-
factor chain, and bulk questions (``values``) by a separate prime-power sieve
over the same range. The two routes share nothing but the list of base primes,
which is what lets the identity checks use one as an oracle for the other.
"""
from __future__ import annotations

import enum
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

DEFAULT_SEGMENT = 1 << 16
VALUE_CHUNK = 1 << 20
MAX_HI = 1 << 62
MEMORY_BUDGET = 4 << 30

CACHE_MAGIC = b"MUCR"
CACHE_VERSION = 1
_HEADER = struct.Struct("<4sIQQB")


class RangeError(ValueError):
    """Raised when an integer lies outside the sieved range."""


class Kind(enum.Enum):
    MU = "mu"
    LAMBDA = "lambda"
    MU_SQ = "musq"
    OMEGA = "omega"
    BIG_OMEGA = "bigomega"
    DIVISORS = "d"
    TOTIENT = "phi"
    LEGENDRE_CHI = "chi"
    LAMBDA_RESTRICTED = "lambdaq"
    CUSTOM = "custom"
    PRODUCT = "product"


@dataclass(frozen=True)
class CustomRule:
    rule: Callable[[np.ndarray], np.ndarray]
    log_power: float


_CUSTOM: dict[str, CustomRule] = {}


def register_custom(tag: str, rule: Callable[[np.ndarray], np.ndarray], log_power: float) -> None:
    """Register a custom arithmetic function.

    ``rule`` maps an int64 array of n to an integer array of f(n). Every value
    is checked against ``|f(n)| <= max(1, log n) ** log_power`` when evaluated.
    """
    if log_power < 0:
        raise ValueError("log_power must be non-negative")
    _CUSTOM[tag] = CustomRule(rule, float(log_power))


@dataclass(frozen=True)
class ArithFnSpec:
    kind: Kind
    p: Optional[int] = None
    predicate: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    tag: Optional[str] = None
    factors: tuple["ArithFnSpec", ...] = ()

    def __post_init__(self):
        if self.kind is Kind.LEGENDRE_CHI:
            if self.p is None or self.p < 3 or not is_prime(self.p):
                raise ValueError(f"LegendreChi needs an odd prime, got {self.p}")
        elif self.kind is Kind.LAMBDA_RESTRICTED:
            if self.predicate is None:
                raise ValueError("LambdaRestricted needs a prime predicate")
        elif self.kind is Kind.CUSTOM:
            if self.tag not in _CUSTOM:
                raise ValueError(f"custom function {self.tag!r} is not registered")
        elif self.kind is Kind.PRODUCT:
            if not self.factors:
                raise ValueError("product of no functions")

    @property
    def name(self) -> str:
        if self.kind is Kind.LEGENDRE_CHI:
            return f"chi{self.p}"
        if self.kind in (Kind.LAMBDA_RESTRICTED, Kind.CUSTOM):
            return f"{self.kind.value}:{self.tag}"
        if self.kind is Kind.PRODUCT:
            return "*".join(f.name for f in self.factors)
        return self.kind.value

    @property
    def log_power(self) -> float:
        """Exponent B with |f(n)| << (log n)^B, or inf for polynomial growth."""
        if self.kind in (Kind.DIVISORS, Kind.TOTIENT):
            return math.inf
        if self.kind is Kind.OMEGA or self.kind is Kind.BIG_OMEGA:
            return 1.0
        if self.kind is Kind.CUSTOM:
            return _CUSTOM[self.tag].log_power
        if self.kind is Kind.PRODUCT:
            return sum(f.log_power for f in self.factors)
        return 0.0


MU = ArithFnSpec(Kind.MU)
LAMBDA = ArithFnSpec(Kind.LAMBDA)
MU_SQ = ArithFnSpec(Kind.MU_SQ)
OMEGA = ArithFnSpec(Kind.OMEGA)
BIG_OMEGA = ArithFnSpec(Kind.BIG_OMEGA)
DIVISORS = ArithFnSpec(Kind.DIVISORS)
TOTIENT = ArithFnSpec(Kind.TOTIENT)


def legendre(p: int) -> ArithFnSpec:
    return ArithFnSpec(Kind.LEGENDRE_CHI, p=p)


def restricted_lambda(predicate: Callable[[np.ndarray], np.ndarray], tag: str) -> ArithFnSpec:
    """Liouville function restricted to a set Q of primes.

    Takes the value -1 on primes p with ``predicate(p)`` true and 0 on every
    other integer.
    """
    return ArithFnSpec(Kind.LAMBDA_RESTRICTED, predicate=predicate, tag=tag)


def custom(tag: str) -> ArithFnSpec:
    return ArithFnSpec(Kind.CUSTOM, tag=tag)


def product(*factors: ArithFnSpec) -> ArithFnSpec:
    return ArithFnSpec(Kind.PRODUCT, factors=tuple(factors))


_BY_NAME = {
    "mu": MU, "lambda": LAMBDA, "liouville": LAMBDA, "musq": MU_SQ, "mu2": MU_SQ,
    "omega": OMEGA, "bigomega": BIG_OMEGA, "d": DIVISORS, "divisors": DIVISORS,
    "phi": TOTIENT, "totient": TOTIENT,
}


def parse_fn(text: str) -> ArithFnSpec:
    """Parse names like ``mu``, ``lambda``, ``chi7``, ``mu*d``, ``lambdaq1mod4``.

    Case is ignored except for ``Omega``, which is Omega(n) (with multiplicity)
    rather than omega(n).
    """
    text = text.strip()
    if "*" in text:
        return product(*(parse_fn(part) for part in text.split("*")))
    if text == "Omega":
        return BIG_OMEGA
    text = text.lower()
    if text in _BY_NAME:
        return _BY_NAME[text]
    if text.startswith("chi") and text[3:].isdigit():
        return legendre(int(text[3:]))
    if text == "lambdaq1mod4":
        return restricted_lambda(lambda p: p % 4 == 1, "1mod4")
    if text == "lambdaq3mod4":
        return restricted_lambda(lambda p: p % 4 == 3, "3mod4")
    if text.startswith("custom:") and text[7:] in _CUSTOM:
        return custom(text[7:])
    raise ValueError(f"unknown arithmetic function {text!r}")


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    for q in range(3, math.isqrt(n) + 1, 2):
        if n % q == 0:
            return False
    return True


def primes_upto(limit: int) -> np.ndarray:
    """All primes <= limit as an int64 array."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p::p] = False
    return np.flatnonzero(flags).astype(np.int64)


def legendre_symbol(n: int, p: int) -> int:
    r = pow(n % p, (p - 1) // 2, p)
    return -1 if r == p - 1 else r


def legendre_array(ns: np.ndarray, p: int) -> np.ndarray:
    """Euler's criterion by vectorized square-and-multiply; needs p < 3e9."""
    if p >= 3_000_000_000:
        return np.array([legendre_symbol(int(n), p) for n in ns], dtype=np.int64)
    base = np.mod(ns, p).astype(np.int64)
    result = np.ones_like(base)
    e = (p - 1) // 2
    while e:
        if e & 1:
            result = result * base % p
        base = base * base % p
        e >>= 1
    result[result == p - 1] = -1
    return result


@dataclass(eq=False)
class FactorTable:
    lo: int
    hi: int
    spf: np.ndarray
    base_primes: np.ndarray
    segment_len: int = DEFAULT_SEGMENT
    _values: dict = field(default_factory=dict, repr=False)
    _spf_list: Optional[list] = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.spf) != self.hi - self.lo:
            raise ValueError("spf length does not match the range")

    def __contains__(self, n: int) -> bool:
        return self.lo <= n < self.hi

    def _check(self, n: int) -> None:
        if not self.lo <= n < self.hi:
            raise RangeError(f"{n} outside sieved range [{self.lo}, {self.hi})")

    def covers(self, lo: int, hi: int) -> bool:
        return self.lo <= lo and hi <= self.hi

    def restrict(self, hi: int) -> "FactorTable":
        """The same table cut down to [lo, hi); shares the spf array."""
        if not self.lo < hi <= self.hi:
            raise RangeError(f"cannot restrict [{self.lo}, {self.hi}) to end at {hi}")
        if hi == self.hi:
            return self
        base = self.base_primes[self.base_primes <= math.isqrt(hi - 1)]
        return FactorTable(self.lo, hi, self.spf[:hi - self.lo], base, self.segment_len)

    def __getstate__(self):
        # caches are rebuilt on demand; keep pickles small for worker processes
        state = self.__dict__.copy()
        state["_values"] = {}
        state["_spf_list"] = None
        return state

    def smallest_prime_factor(self, n: int) -> int:
        self._check(n)
        return int(self.spf[n - self.lo])

    def factorize(self, n: int) -> list[tuple[int, int]]:
        """Prime factorization of n as ``[(p, e), ...]`` with p increasing."""
        self._check(n)
        if n < 1:
            raise ValueError("factorize needs n >= 1")
        if self._spf_list is None:
            self._spf_list = self.spf.tolist()
        spf, lo, hi = self._spf_list, self.lo, self.hi
        out = []
        m = n
        floor = 2
        while m > 1:
            if lo <= m < hi:
                p = spf[m - lo]
            else:
                p = self._trial_spf(m, floor)
            e = 0
            while m % p == 0:
                m //= p
                e += 1
            out.append((p, e))
            floor = p + 1
        return out

    def _trial_spf(self, m: int, floor: int) -> int:
        # cofactor fell below lo; its prime factors are all >= floor
        start = int(np.searchsorted(self.base_primes, floor))
        for q in self.base_primes[start:].tolist():
            if q * q > m:
                break
            if m % q == 0:
                return q
        return m

    def evaluate(self, f: ArithFnSpec, n: int) -> int:
        """Exact f(n) from the factorization of n."""
        self._check(n)
        return evaluate_factored(f, n, self.factorize(n))

    def values(self, f: ArithFnSpec) -> np.ndarray:
        """f(n) for every n in [lo, hi) as an int64 array indexed by n - lo."""
        key = f
        if key in self._values:
            return self._values[key]
        out = self._compute_values(f)
        out.flags.writeable = False
        if f.kind is not Kind.LAMBDA_RESTRICTED:
            self._values[key] = out
        return out

    def _compute_values(self, f: ArithFnSpec) -> np.ndarray:
        k = f.kind
        if k is Kind.PRODUCT:
            out = np.ones(self.hi - self.lo, dtype=np.int64)
            for g in f.factors:
                out = out * self.values(g)
            return out
        if k is Kind.LEGENDRE_CHI:
            return legendre_array(np.arange(self.lo, self.hi, dtype=np.int64), f.p)
        if k is Kind.CUSTOM:
            ns = np.arange(self.lo, self.hi, dtype=np.int64)
            return apply_custom(f.tag, ns)
        if k is Kind.LAMBDA_RESTRICTED:
            ns = np.arange(self.lo, self.hi, dtype=np.int64)
            prime = (self.spf == ns) & (ns > 1)
            keep = np.zeros(len(ns), dtype=bool)
            keep[prime] = np.asarray(f.predicate(ns[prime]), dtype=bool)
            return np.where(keep, -1, 0).astype(np.int64)
        prof = self._profile()
        if k is Kind.OMEGA:
            return prof["omega"].astype(np.int64)
        if k is Kind.BIG_OMEGA:
            return prof["bigomega"].astype(np.int64)
        if k is Kind.MU_SQ:
            return prof["squarefree"].astype(np.int64)
        if k is Kind.MU:
            sign = 1 - 2 * (prof["omega"].astype(np.int64) & 1)
            return np.where(prof["squarefree"], sign, 0)
        if k is Kind.LAMBDA:
            return 1 - 2 * (prof["bigomega"].astype(np.int64) & 1)
        if k is Kind.DIVISORS:
            return self._multiplicative_pass("divisors")
        if k is Kind.TOTIENT:
            return self._multiplicative_pass("totient")
        raise ValueError(f"unsupported kind {k}")

    def _profile(self) -> dict:
        if "_profile" not in self._values:
            omega = np.zeros(self.hi - self.lo, dtype=np.int8)
            bigomega = np.zeros(self.hi - self.lo, dtype=np.int8)
            squarefree = np.ones(self.hi - self.lo, dtype=bool)
            for s in range(self.lo, self.hi, VALUE_CHUNK):
                e = min(s + VALUE_CHUNK, self.hi)
                a, b = s - self.lo, e - self.lo
                _profile_chunk(s, e, self.base_primes, omega[a:b], bigomega[a:b], squarefree[a:b])
            self._values["_profile"] = {"omega": omega, "bigomega": bigomega, "squarefree": squarefree}
        return self._values["_profile"]

    def _multiplicative_pass(self, which: str) -> np.ndarray:
        out = np.empty(self.hi - self.lo, dtype=np.int64)
        for s in range(self.lo, self.hi, VALUE_CHUNK):
            e = min(s + VALUE_CHUNK, self.hi)
            out[s - self.lo:e - self.lo] = _multiplicative_chunk(s, e, self.base_primes, which)
        return out

    def von_mangoldt(self, ns: np.ndarray) -> np.ndarray:
        """Lambda(n) = log p when n = p^k, else 0, for an array of n in range."""
        ns = np.asarray(ns, dtype=np.int64)
        if ns.size and (ns.min() < self.lo or ns.max() >= self.hi):
            raise RangeError("von Mangoldt argument outside sieved range")
        omega = self._profile()["omega"][ns - self.lo]
        p = self.spf[ns - self.lo].astype(np.float64)
        return np.where(omega == 1, np.log(p), 0.0)


def apply_custom(tag: str, ns: np.ndarray) -> np.ndarray:
    rule = _CUSTOM[tag]
    vals = np.asarray(rule.rule(ns), dtype=np.int64)
    logs = np.maximum(1.0, np.log(np.maximum(ns, 1).astype(np.float64)))
    bound = logs ** rule.log_power
    if np.any(np.abs(vals) > bound * (1 + 1e-12)):
        bad = int(ns[np.argmax(np.abs(vals) > bound * (1 + 1e-12))])
        raise ValueError(f"custom function {tag!r} exceeds its log-power bound at n={bad}")
    return vals


def _profile_chunk(s, e, base_primes, omega, bigomega, squarefree):
    rem = np.arange(s, e, dtype=np.int64)
    top = e - 1
    for p in base_primes.tolist():
        if p * p > top:
            break
        st = (-s) % p
        if st >= e - s:
            continue
        omega[st::p] += 1
        pk, k = p, 1
        while pk <= top:
            st = (-s) % pk
            bigomega[st::pk] += 1
            rem[st::pk] //= p
            if k == 2:
                squarefree[st::pk] = False
            pk *= p
            k += 1
    large = rem > 1
    omega[large] += 1
    bigomega[large] += 1


def _multiplicative_chunk(s, e, base_primes, which):
    ns = np.arange(s, e, dtype=np.int64)
    rem = ns.copy()
    top = e - 1
    if which == "divisors":
        out = np.ones(e - s, dtype=np.int64)
        cnt = np.zeros(e - s, dtype=np.int64)
    else:
        out = ns.copy()
    for p in base_primes.tolist():
        if p * p > top:
            break
        st = (-s) % p
        if st >= e - s:
            continue
        if which == "totient":
            out[st::p] = out[st::p] // p * (p - 1)
        pk = p
        while pk <= top:
            st2 = (-s) % pk
            rem[st2::pk] //= p
            if which == "divisors":
                cnt[st2::pk] += 1
            pk *= p
        if which == "divisors":
            out[st::p] *= cnt[st::p] + 1
            cnt[st::p] = 0
    large = rem > 1
    if which == "divisors":
        out[large] *= 2
    else:
        out[large] = out[large] // rem[large] * (rem[large] - 1)
    return out


def evaluate_factored(f: ArithFnSpec, n: int, fac: list[tuple[int, int]]) -> int:
    """f(n) computed from the exponent vector of n alone."""
    k = f.kind
    if k is Kind.MU:
        return 0 if any(e > 1 for _, e in fac) else (-1) ** len(fac)
    if k is Kind.LAMBDA:
        return (-1) ** sum(e for _, e in fac)
    if k is Kind.MU_SQ:
        return 0 if any(e > 1 for _, e in fac) else 1
    if k is Kind.OMEGA:
        return len(fac)
    if k is Kind.BIG_OMEGA:
        return sum(e for _, e in fac)
    if k is Kind.DIVISORS:
        return math.prod(e + 1 for _, e in fac)
    if k is Kind.TOTIENT:
        return math.prod((p - 1) * p ** (e - 1) for p, e in fac)
    if k is Kind.LEGENDRE_CHI:
        return legendre_symbol(n, f.p)
    if k is Kind.LAMBDA_RESTRICTED:
        if len(fac) == 1 and fac[0][1] == 1 and bool(f.predicate(np.array([n]))[0]):
            return -1
        return 0
    if k is Kind.CUSTOM:
        return int(apply_custom(f.tag, np.array([n], dtype=np.int64))[0])
    if k is Kind.PRODUCT:
        return math.prod(evaluate_factored(g, n, fac) for g in f.factors)
    raise ValueError(f"unsupported kind {k}")


def _sieve_segment(out: np.ndarray, s: int, e: int, base_primes_desc: list[int]) -> None:
    seg = np.zeros(e - s, dtype=out.dtype)
    top = e - 1
    for p in base_primes_desc:
        if p * p > top:
            continue
        st = (-s) % p
        seg[st::p] = p
    ns = np.arange(s, e, dtype=out.dtype)
    zero = seg == 0
    seg[zero] = ns[zero]
    out[:] = seg


def build_table(lo: int, hi: int, segment_len: int = DEFAULT_SEGMENT, threads: int = 1,
                memory_budget: int = MEMORY_BUDGET) -> FactorTable:
    """Sieve smallest prime factors for every n in [lo, hi).

    spf(n) is n itself for primes and 1 for n = 1. Segments are sieved
    independently, so the table is the same for any thread count.
    """
    if not 1 <= lo < hi:
        raise ValueError(f"need 1 <= lo < hi, got lo={lo}, hi={hi}")
    if hi > MAX_HI:
        raise ValueError(f"hi={hi} exceeds the supported word limit {MAX_HI}")
    if segment_len < 1 or segment_len & (segment_len - 1):
        raise ValueError("segment_len must be a power of two")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    dtype = np.uint32 if hi <= 1 << 32 else np.uint64
    if (hi - lo) * np.dtype(dtype).itemsize > memory_budget:
        raise MemoryError(f"range of {hi - lo} entries exceeds the memory budget")
    base = primes_upto(math.isqrt(hi - 1))
    spf = np.empty(hi - lo, dtype=dtype)
    desc = base[::-1].tolist()
    bounds = [(s, min(s + segment_len, hi)) for s in range(lo, hi, segment_len)]

    def work(b):
        s, e = b
        _sieve_segment(spf[s - lo:e - lo], s, e, desc)

    if threads == 1:
        for b in bounds:
            work(b)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, bounds))
    if lo == 1:
        spf[0] = 1
    return FactorTable(lo, hi, spf, base, segment_len)


def save_table(table: FactorTable, path) -> None:
    width = table.spf.dtype.itemsize
    header = _HEADER.pack(CACHE_MAGIC, CACHE_VERSION, table.lo, table.hi, width)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(table.spf.astype(f"<u{width}").tobytes())


def load_table(path) -> FactorTable:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated cache header")
    magic, version, lo, hi, width = _HEADER.unpack_from(raw)
    if magic != CACHE_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != CACHE_VERSION:
        raise ValueError(f"{path}: unsupported cache version {version}")
    if width not in (4, 8):
        raise ValueError(f"{path}: bad entry width {width}")
    body = np.frombuffer(raw, dtype=f"<u{width}", offset=_HEADER.size)
    if len(body) != hi - lo:
        raise ValueError(f"{path}: expected {hi - lo} entries, found {len(body)}")
    spf = body.astype(np.uint32 if width == 4 else np.uint64)
    return FactorTable(lo, hi, spf, primes_upto(math.isqrt(hi - 1)))


def read_header(path) -> tuple[int, int, int, int]:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
    magic, version, lo, hi, width = _HEADER.unpack(raw)
    if magic != CACHE_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    return version, lo, hi, width
