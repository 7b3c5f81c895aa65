"""Constants, checkpoint grids and compensated summation shared by the modules."""
from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

# 20 significant digits
PI_SQUARED = 9.8696044010893586188
EULER_GAMMA = 0.57721566490153286061
SIX_OVER_PI_SQUARED = 6.0 / PI_SQUARED

INT64_SAFE = 1 << 62


def checkpoint_grid(limit: int, per_decade: int = 8) -> np.ndarray:
    """Integers ceil(10**(k/per_decade)) up to limit, deduplicated, plus limit."""
    if limit < 1:
        raise ValueError("limit must be >= 1")
    pts = []
    k = 0
    while True:
        target = 10 ** k  # compare c**per_decade against 10**k exactly
        c = max(1, math.ceil(10 ** (k / per_decade)))
        while c > 1 and (c - 1) ** per_decade >= target:
            c -= 1
        while c ** per_decade < target:
            c += 1
        if c > limit:
            break
        if not pts or pts[-1] != c:
            pts.append(c)
        k += 1
    if pts[-1] != limit:
        pts.append(limit)
    return np.array(pts, dtype=np.int64)


def neumaier_cumsum(terms: np.ndarray) -> np.ndarray:
    """Prefix sums with Neumaier compensation. Sequential; meant for dense short series."""
    out = np.empty(len(terms), dtype=np.float64)
    s = 0.0
    c = 0.0
    for i, t in enumerate(terms.tolist()):
        u = s + t
        if abs(s) >= abs(t):
            c += (s - u) + t
        else:
            c += (t - u) + s
        s = u
        out[i] = s + c
    return out


def blocked_fsum(terms: np.ndarray, ends: np.ndarray) -> np.ndarray:
    """Running sums at block ends: each block is summed with ``math.fsum`` and
    the block sums are combined with ``math.fsum`` again.

    ``ends`` are exclusive indices into ``terms``; the value at each end is the
    sum of ``terms[:end]``. For fixed ``ends`` the result is bit-reproducible,
    whatever the thread count; a different set of ends can move the last bit.
    """
    out = np.empty(len(ends), dtype=np.float64)
    blocks: list[float] = []
    start = 0
    for i, end in enumerate(ends.tolist()):
        blocks.append(math.fsum(terms[start:end].tolist()))
        start = end
        out[i] = math.fsum(blocks)
    return out


def fsum_complex(re: np.ndarray, im: np.ndarray) -> complex:
    return complex(math.fsum(re.tolist()), math.fsum(im.tolist()))


def frac_of_product(alpha, ns: np.ndarray, power: int = 1) -> np.ndarray:
    """Fractional part of alpha * n**power for each n, reduced exactly.

    ``alpha`` is a Fraction (exact rational) or a float (taken as the exact
    dyadic rational it stores). The reduction happens in integers so large n
    lose no phase precision; only the final division rounds.
    """
    ns = np.asarray(ns, dtype=np.int64)
    if isinstance(alpha, Fraction):
        num, den = alpha.numerator, alpha.denominator
    else:
        num, den = float(alpha).as_integer_ratio()
    num %= den
    if den == 1:
        return np.zeros(len(ns), dtype=np.float64)
    if den < (1 << 31):
        r = np.mod(ns, den)
        acc = np.ones_like(r)
        for _ in range(power):
            acc = acc * r % den
        acc = acc * (num % den) % den
        return acc.astype(np.float64) / den
    if den & (den - 1) == 0 and den <= (1 << 64):
        # dyadic: arithmetic mod 2**64 wraps exactly, then mask to the denominator
        mask = np.uint64(den - 1)
        r = ns.astype(np.uint64)
        acc = np.ones_like(r)
        with np.errstate(over="ignore"):
            for _ in range(power):
                acc = acc * r
            acc = (acc * np.uint64(num)) & mask
        return np.ldexp(acc.astype(np.float64), -(den.bit_length() - 1))
    vals = [(num * pow(int(n), power, den)) % den / den for n in ns.tolist()]
    return np.array(vals, dtype=np.float64)


def parse_real(text: str):
    """Decimal or a/b literal to an exact Fraction."""
    return Fraction(text.strip())
