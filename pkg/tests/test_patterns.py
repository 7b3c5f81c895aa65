import math

import numpy as np
import pytest

import oracles
from mucorr.patterns import (Pattern, construct_zero_pattern, crt, max_pattern_length, nth_prime,
                             orthogonality_metric, orthogonality_terms, pattern_census,
                             sign_change_count)
from mucorr.sieve import LAMBDA, MU


def brute_census(cells, limit):
    k = len(cells)
    hits = [n for n in range(1, limit - k + 2)
            if all(c is None or oracles.mu(n + i) == c for i, c in enumerate(cells))]
    return len(hits), (hits[0] if hits else None)


def test_parse_and_str():
    p = Pattern.parse("0, *, +1,-1")
    assert p.cells == (0, None, 1, -1)
    assert str(p) == "0,*,1,-1"
    assert p.length == 4 and p.zero_positions == [0]
    with pytest.raises(ValueError):
        Pattern.parse("0,2")
    with pytest.raises(ValueError):
        Pattern(())


@pytest.mark.parametrize("text", ["0", "1,1", "-1,-1,-1", "0,0", "0,*,0", "1,0,-1", "*,*", "0,0,0"])
def test_census_against_brute_force(small_table, text):
    p = Pattern.parse(text)
    c = pattern_census(p, 3000, table=small_table)
    assert (c.count, c.first) == brute_census(p.cells, 3000)


def test_census_frozen(small_table):
    # first three consecutive zeros of mu: 48, 49, 50
    assert pattern_census("0,0,0", 1000, table=small_table).first == 48
    assert pattern_census("0,0", 100, table=small_table).first == 8
    # an all-wildcard pattern matches every start
    assert pattern_census("*,*,*", 100, table=small_table).count == 98


def test_census_limit_checks(small_table):
    with pytest.raises(ValueError):
        pattern_census("0,0,0", 2, table=small_table)


def test_sign_changes(small_table):
    want = sum(1 for n in range(1, 2000) if oracles.mu(n) * oracles.mu(n + 1) == -1)
    assert sign_change_count(2000, table=small_table) == want


def test_nth_prime():
    assert [nth_prime(i) for i in range(1, 11)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert nth_prime(1000) == 7919
    with pytest.raises(ValueError):
        nth_prime(0)


def test_crt():
    n, M = crt([2, 3, 2], [3, 5, 7])
    assert (n, M) == (23, 105)


@pytest.mark.parametrize("pos,n,M", [([0], 4, 4), ([0, 1], 8, 36), ([0, 1, 2], 548, 900)])
def test_construct_frozen(pos, n, M):
    s = construct_zero_pattern(pos)
    assert (s.n, s.modulus) == (n, M) and s.verified
    assert all(oracles.mu(s.n + i) == 0 for i in pos)


def test_construct_is_smallest():
    for pos in ([0, 2], [1, 3], [0, 1, 3]):
        s = construct_zero_pattern(pos, seed_index=2)
        qs = [p * p for p in s.primes]
        brute = next(n for n in range(1, s.modulus + 1)
                     if all((n + i) % q == 0 for i, q in zip(pos, qs)))
        assert s.n == brute


def test_construct_validation():
    with pytest.raises(ValueError):
        construct_zero_pattern([])
    with pytest.raises(ValueError):
        construct_zero_pattern([-1])
    with pytest.raises(ValueError):
        construct_zero_pattern([0], seed_index=0)


@pytest.mark.parametrize("limit,want", [(2 ** 16, (4, 5, 4)), (15, (1, 2, 1)), (10 ** 6, (4, 5, 4)),
                                        (1, (0, 1, 0)), (3, (0, 1, 0))])
def test_max_pattern_length(limit, want):
    b = max_pattern_length(limit)
    assert (b.loglog_floor, b.length_bound, b.product_length) == want
    assert b.consistent


def test_loglog_floor_against_float():
    for x in [5, 17, 255, 256, 65535, 65536, 10 ** 9, 2 ** 40]:
        assert max_pattern_length(x).loglog_floor == math.floor(math.log2(math.log2(x)))


def test_orthogonality_terms():
    ps, t = orthogonality_terms(1, 1, 30)
    assert ps.tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert np.allclose(t, 2.0 / ps)


def test_orthogonality_metric(small_table):
    # mu(p) = -1 so mu against 1 cancels exactly
    r = orthogonality_metric(MU, 1, 10 ** 4, table=small_table)
    assert r.partial_metric == 0.0 and not r.diverging
    r = orthogonality_metric(LAMBDA, LAMBDA, 10 ** 4, table=small_table)
    want = math.sqrt(math.fsum(2.0 / p for p in range(2, 10 ** 4 + 1) if oracles.is_prime(p)))
    assert abs(r.partial_metric - want) < 1e-12 and r.diverging
    r = orthogonality_metric(lambda ps: np.exp(1j * np.log(ps)), 1, 10 ** 4)
    assert r.f_tag == "<lambda>" and r.g_tag == "const(1)"
