import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from mucorr.sieve import (BIG_OMEGA, CACHE_MAGIC, DIVISORS, LAMBDA, MU, MU_SQ, OMEGA, TOTIENT,
                          ArithFnSpec, Kind, RangeError, build_table, custom, legendre,
                          legendre_array, load_table, parse_fn, primes_upto, product, read_header,
                          register_custom, restricted_lambda, save_table)

BRUTE = {MU: oracles.mu, LAMBDA: oracles.liouville, MU_SQ: oracles.is_squarefree,
         OMEGA: oracles.omega, BIG_OMEGA: oracles.big_omega, DIVISORS: oracles.num_divisors,
         TOTIENT: oracles.totient}


def test_spf_small_range():
    t = build_table(1, 11)
    assert t.spf.tolist() == [1, 2, 3, 2, 5, 2, 7, 2, 3, 2]


def test_table_with_only_one():
    t = build_table(1, 2)
    assert t.spf.tolist() == [1]
    assert t.factorize(1) == []
    assert t.evaluate(MU, 1) == 1


def test_offset_range_against_trial_division():
    lo = 10 ** 6
    t = build_table(lo, lo + 1000)
    rng = random.Random(7)
    for n in rng.sample(range(lo, lo + 1000), 50):
        assert t.smallest_prime_factor(n) == oracles.spf(n)
        assert t.factorize(n) == oracles.factor(n)


def test_spf_matches_oracle_everywhere(small_table):
    got = small_table.spf[:3000].tolist()
    assert got == [oracles.spf(n) for n in range(1, 3001)]


@pytest.mark.parametrize("f,n,want", [
    (MU, 1, 1), (LAMBDA, 1, 1), (DIVISORS, 1, 1),
    (MU, 4, 0), (LAMBDA, 4, 1), (LAMBDA, 8, -1),
    (MU, 6, 1), (TOTIENT, 10, 4), (DIVISORS, 12, 6),
    (OMEGA, 1, 0), (BIG_OMEGA, 1, 0), (TOTIENT, 1, 1),
])
def test_eval_examples(small_table, f, n, want):
    assert small_table.evaluate(f, n) == want
    assert small_table.values(f)[n - 1] == want


def test_legendre_example():
    t = build_table(1, 10)
    assert t.evaluate(legendre(7), 3) == -1
    assert pow(3, 3, 7) == 6


@pytest.mark.parametrize("f", list(BRUTE))
def test_arrays_match_brute_force(small_table, f):
    n = 1500
    assert small_table.values(f)[:n].tolist() == [BRUTE[f](k) for k in range(1, n + 1)]


@pytest.mark.parametrize("f", list(BRUTE))
def test_arrays_on_offset_range(f):
    lo = 123_457
    t = build_table(lo, lo + 400, segment_len=64)
    assert t.values(f).tolist() == [BRUTE[f](k) for k in range(lo, lo + 400)]


def test_legendre_array_against_residue_list():
    for p in (3, 5, 7, 11, 13, 101):
        ns = np.arange(0, 3 * p)
        assert legendre_array(ns, p).tolist() == [oracles.legendre(int(n), p) for n in ns]


def test_factorize_examples(small_table):
    assert small_table.factorize(1) == []
    assert small_table.factorize(12) == [(2, 2), (3, 1)]


def test_factorize_random_below_1e6(table_1e6):
    rng = random.Random(11)
    for n in rng.sample(range(2, 10 ** 6), 300):
        assert table_1e6.factorize(n) == oracles.factor(n)


def test_range_errors(small_table):
    with pytest.raises(RangeError):
        small_table.evaluate(MU, 20_001)
    with pytest.raises(RangeError):
        small_table.factorize(0)
    with pytest.raises(ValueError):
        build_table(5, 5)
    with pytest.raises(ValueError):
        build_table(0, 10)
    with pytest.raises(MemoryError):
        build_table(1, 10 ** 9, memory_budget=1 << 20)


def test_mu_definition_and_omega_ordering(table_1e5):
    mu = table_1e5.values(MU)
    om = table_1e5.values(OMEGA)
    big = table_1e5.values(BIG_OMEGA)
    nz = mu != 0
    assert np.array_equal(mu[nz], (-1) ** om[nz])
    assert np.all(big >= om)
    assert np.array_equal(big == om, nz)


def test_liouville_completely_multiplicative(table_1e6):
    lam = table_1e6.values(LAMBDA)
    rng = np.random.default_rng(3)
    a = rng.integers(1, 1000, 10 ** 4)
    b = rng.integers(1, 1000, 10 ** 4)
    assert np.array_equal(lam[a * b - 1], lam[a - 1] * lam[b - 1])


def test_rebuild_is_bit_identical():
    a = build_table(1, 300_000)
    b = build_table(1, 300_000, threads=4)
    c = build_table(1, 300_000, segment_len=1 << 12)
    assert a.spf.tobytes() == b.spf.tobytes() == c.spf.tobytes()


def test_cache_roundtrip(tmp_path):
    t = build_table(1000, 5000)
    path = tmp_path / "t.mucr"
    save_table(t, path)
    raw = path.read_bytes()
    assert raw[:4] == CACHE_MAGIC
    assert read_header(path) == (1, 1000, 5000, 4)
    assert len(raw) == 4 + 4 + 8 + 8 + 1 + 4 * 4000
    back = load_table(path)
    assert (back.lo, back.hi) == (1000, 5000)
    assert np.array_equal(back.spf, t.spf)
    assert back.values(MU).tolist() == t.values(MU).tolist()


def test_cache_rejects_corruption(tmp_path):
    t = build_table(1, 100)
    path = tmp_path / "t.mucr"
    save_table(t, path)
    raw = bytearray(path.read_bytes())
    bad = tmp_path / "bad.mucr"
    bad.write_bytes(b"XXXX" + bytes(raw[4:]))
    with pytest.raises(ValueError, match="magic"):
        load_table(bad)
    bad.write_bytes(bytes(raw[:-4]))
    with pytest.raises(ValueError, match="entries"):
        load_table(bad)


def test_spec_validation():
    with pytest.raises(ValueError):
        legendre(9)
    with pytest.raises(ValueError):
        legendre(2)
    with pytest.raises(ValueError):
        custom("never-registered")
    with pytest.raises(ValueError):
        ArithFnSpec(Kind.LAMBDA_RESTRICTED)


def test_parse_fn():
    assert parse_fn("mu") is MU
    assert parse_fn("Lambda") is LAMBDA
    assert parse_fn("chi7") == legendre(7)
    assert parse_fn("mu*d") == product(MU, DIVISORS)
    assert parse_fn("Omega") is BIG_OMEGA and parse_fn("omega") is OMEGA
    assert parse_fn("bigomega") is BIG_OMEGA
    assert parse_fn("mu*Omega") == product(MU, BIG_OMEGA)
    assert parse_fn("lambdaq1mod4").kind is Kind.LAMBDA_RESTRICTED
    with pytest.raises(ValueError):
        parse_fn("zeta")


def test_restricted_lambda(small_table):
    f = restricted_lambda(lambda p: p % 4 == 1, "1mod4")
    vals = small_table.values(f)[:60]
    want = [-1 if oracles.is_prime(n) and n % 4 == 1 else 0 for n in range(1, 61)]
    assert vals.tolist() == want


def test_custom_function_bounded(small_table):
    register_custom("test-sign", lambda ns: np.where(ns % 3 == 0, -1, 1), log_power=0)
    f = custom("test-sign")
    assert f.log_power == 0
    assert small_table.values(f)[:6].tolist() == [1, 1, -1, 1, 1, -1]
    register_custom("test-big", lambda ns: ns, log_power=1)
    with pytest.raises(ValueError):
        small_table.values(custom("test-big"))


def test_log_power_bookkeeping():
    assert MU.log_power == 0
    assert product(MU, OMEGA).log_power == 1
    assert math.isinf(DIVISORS.log_power)


def test_von_mangoldt(small_table):
    ns = np.arange(1, 500)
    got = small_table.von_mangoldt(ns)
    want = [oracles.von_mangoldt(int(n)) for n in ns]
    assert np.allclose(got, want, rtol=0, atol=1e-15)


def test_primes_upto():
    assert primes_upto(30).tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert len(primes_upto(10 ** 6)) == 78498


@settings(max_examples=200, deadline=None)
@given(st.integers(min_value=1, max_value=20_000))
def test_pointwise_eval_agrees_with_arrays(n):
    t = _shared()
    for f in (MU, LAMBDA, OMEGA, BIG_OMEGA, DIVISORS, TOTIENT, MU_SQ):
        assert t.evaluate(f, n) == t.values(f)[n - 1]


_T = {}


def _shared():
    if "t" not in _T:
        _T["t"] = build_table(1, 20_001)
    return _T["t"]
