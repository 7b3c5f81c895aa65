import math
from fractions import Fraction

import numpy as np
import pytest

import oracles
from mucorr.fourier import (Series, closed_form_divisor_sums, davenport_compare, davenport_sweep,
                            divisor_sums, geometric_checkpoints, sawtooth, sawtooth_is_integer,
                            vonmangoldt_series)
from mucorr.sieve import LAMBDA, MU, build_table

GOLDEN = (math.sqrt(5) - 1) / 2


@pytest.mark.parametrize("x,want", [(0, 0.0), (3, 0.0), (Fraction(1, 4), -0.25), (0.75, 0.25),
                                    (-0.25, 0.25), (Fraction(-7, 2), 0.0), (2.5, 0.0)])
def test_sawtooth_values(x, want):
    assert sawtooth(x) == want


def test_sawtooth_odd_and_periodic():
    for x in (Fraction(1, 3), Fraction(5, 7), Fraction(13, 10)):
        assert sawtooth(-x) == -sawtooth(x)
        assert sawtooth(x + 5) == sawtooth(x)
    with pytest.raises(ValueError):
        sawtooth(float("inf"))


def test_divisor_sums_closed_forms(small_table):
    n = 5000
    assert np.array_equal(divisor_sums(small_table.values(MU)[:n]),
                          closed_form_divisor_sums(Series.MU, n))
    assert np.array_equal(divisor_sums(small_table.values(LAMBDA)[:n]),
                          closed_form_divisor_sums(Series.LAMBDA, n))
    with pytest.raises(ValueError):
        closed_form_divisor_sums(Series.VON_MANGOLDT, 10)


def brute_lhs(fn, x, N):
    return math.fsum(fn(n) / n * sawtooth(Fraction(x) * n) for n in range(1, N + 1))


def test_lhs_against_brute(small_table):
    for series, fn in ((Series.MU, oracles.mu), (Series.LAMBDA, oracles.liouville)):
        for x in (Fraction(1, 3), Fraction(2, 7), GOLDEN):
            c = davenport_compare(series, x, 2000, table=small_table)
            assert abs(c.lhs_partial - brute_lhs(fn, x, 2000)) < 1e-12


def test_rhs_forms(small_table):
    c = davenport_compare("mu", GOLDEN, 100, table=small_table)
    assert c.rhs_partial == -math.sin(2 * math.pi * GOLDEN) / math.pi
    c = davenport_compare("lambda", Fraction(1, 5), 100, table=small_table)
    want = -math.fsum(math.sin(2 * math.pi * (m * m % 5) / 5) / (m * m) for m in range(1, 11)) / math.pi
    assert abs(c.rhs_partial - want) < 1e-15


def test_gap_shrinks(table_1e6):
    for s in ("mu", "lambda"):
        rows = davenport_sweep(s, GOLDEN, geometric_checkpoints(10 ** 6), table=table_1e6)
        assert [r.terms for r in rows] == [10, 100, 1000, 10 ** 4, 10 ** 5, 10 ** 6]
        assert rows[-1].gap < rows[2].gap
        assert rows[-1].gap < 1e-3


def test_sweep_matches_single_calls(small_table):
    rows = davenport_sweep("mu", Fraction(3, 11), [10, 500, 7000], table=small_table)
    for r in rows:
        one = davenport_compare("mu", Fraction(3, 11), r.terms, table=small_table)
        assert abs(one.lhs_partial - r.lhs_partial) < 1e-14


def test_sweep_validation(small_table):
    with pytest.raises(ValueError):
        davenport_sweep("mu", 0.3, [100, 10], table=small_table)
    with pytest.raises(ValueError):
        davenport_compare("mu", 0.3, 0, table=small_table)
    with pytest.raises(ValueError):
        davenport_sweep("zeta", 0.3, [10])


def test_vonmangoldt_series():
    N = 60
    t = build_table(1, N * N + 2)
    x = Fraction(1, 3)
    c = vonmangoldt_series(x, N, table=t)
    lam = [oracles.von_mangoldt(d * d + 1) for d in range(1, N + 1)]
    lhs = math.fsum(lam[d - 1] / d ** 2 * sawtooth(x * d * d) for d in range(1, N + 1))
    B = [math.fsum(lam[d - 1] for d in range(1, math.isqrt(n) + 1) if n % (d * d) == 0)
         for n in range(1, N + 1)]
    rhs = -math.fsum(B[n - 1] / n * math.sin(2 * math.pi * float(x * n % 1)) for n in range(1, N + 1)) / math.pi
    assert abs(c.lhs_partial - lhs) < 1e-12 and abs(c.rhs_partial - rhs) < 1e-12
    with pytest.raises(ValueError):
        vonmangoldt_series(2, N, table=t)
    with pytest.raises(ValueError):
        vonmangoldt_series(x, N, table=build_table(1, 100))


def test_helpers():
    assert sawtooth_is_integer(Fraction(4, 2)) and sawtooth_is_integer(3.0)
    assert not sawtooth_is_integer(0.5)
    assert geometric_checkpoints(10) == [10]
    assert geometric_checkpoints(5) == [5]
    assert geometric_checkpoints(250) == [10, 100, 250]
