"""
Acceptance criteria 1-13, evaluated from the files written by ``mucorr reproduce``.

The bundled manifest is run twice, with 1 and 8 threads, into separate
directories. Each criterion is then checked as stated, straight from the JSON
output, and one PASS/FAIL line per criterion is printed (at the end of a
pytest run, or on stdout when this file is run as a script).

Three criteria are false as literally stated (4, 5 and the first half of 8).
They are evaluated literally, print FAIL, and are marked strict xfail; the
corrected statement is checked alongside and must pass.
"""
import io
import json
import math
import sys
import time
from pathlib import Path

import pytest

from mucorr.cli import run

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script
    ACCEPTANCE_LINES = []

pytestmark = pytest.mark.slow

# tolerances pinned from the criteria
DENSITY_SLACK = 2.0          # |Q(x) - 6x/pi^2| <= 2 sqrt(x)
SUM_BUDGET = 1e-9            # accumulation budget for the 1/n sums
DECOMP_TOL = 1e-12
EXPSUM_TOL = 1e-9
MU_GAP_MAX = 0.05
FIT_C, FIT_TOL = 3.0, 0.01
ENERGY_MIN = 0.6
X_TOP = 10 ** 7


def _record(criterion, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def reproduce(out_dir: Path, threads: int, cache_dir: Path) -> tuple[int, str, float]:
    buf = io.StringIO()
    t0 = time.perf_counter()
    code = run(["reproduce", "--out-dir", str(out_dir), "--threads", str(threads),
                "--cache-dir", str(cache_dir)], stdout=buf)
    return code, buf.getvalue(), time.perf_counter() - t0


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("acceptance")
    cache = base / "empty-cache"
    out = {}
    for threads in (1, 8):
        d = base / f"threads{threads}"
        out[threads] = (d,) + reproduce(d, threads, cache)
    return out


@pytest.fixture(scope="module")
def docs(runs):
    d = runs[1][0]
    return {p.stem: json.loads(p.read_text()) for p in d.glob("*.json")}


def test_manifest_runs_clean(runs):
    for threads, (_, code, log, secs) in runs.items():
        assert code == 0, log
        assert "FAIL" not in log
        assert secs < 15 * 60


# ---- 1 ---------------------------------------------------------------------

def check_1(docs):
    d = docs["c01_identities"]
    ids = [r["identity"] for r in d["reports"]]
    ok = (d["failures"] == 0 and d["count"] == 10 ** 6 and len(ids) == 7
          and all(r["failures"] == 0 and r["count"] == 10 ** 6 for r in d["reports"]))
    return _record(1, ok, f"{len(ids)} identities ({','.join(ids)}) on n <= 10^6, "
                          f"failures={d['failures']}")


def test_criterion_1(docs):
    assert check_1(docs)


# ---- 2 ---------------------------------------------------------------------

def check_2(docs):
    d = docs["c02_squarefree_density"]
    bound = DENSITY_SLACK * math.sqrt(X_TOP)
    Q = d["value"]
    err = Q - 6 / math.pi ** 2 * X_TOP
    return _record(2, d["limit"] == X_TOP and abs(err) <= bound,
                   f"Q(10^7)={Q}, |error|={abs(err):.3f} <= {bound:.3f}")


def test_criterion_2(docs):
    assert check_2(docs)


# ---- 3 ---------------------------------------------------------------------

def check_3(docs):
    d = docs["c03_sign_bookkeeping"]
    rows = d["rows"]
    bad = sum(1 for x, plus, minus, Q, M in rows if 2 * plus != Q + M or 2 * minus != Q - M)
    ok = bad == 0 and d["mismatches"] == 0 and rows[-1][0] == X_TOP and plus_minus_total(rows)
    return _record(3, ok, f"{len(rows)} checkpoints to 10^7, mismatches={bad}")


def plus_minus_total(rows):
    return all(plus + minus == Q for _, plus, minus, Q, _ in rows)


def test_criterion_3(docs):
    assert check_3(docs)


# ---- 4 ---------------------------------------------------------------------

def check_4_literal(docs):
    mu = docs["c04_mu_over_n"]["rows"]
    lam = docs["c04_lambda_over_n"]["rows"]
    bad_mu = [(x, v) for x, v in mu if not abs(v) < 1]
    bad_lam = [(x, v) for x, v in lam if not abs(v) < 2]
    return _record(4, not bad_mu and not bad_lam,
                   f"|sum mu(n)/n| < 1 and |sum lambda(n)/n| < 2 at all {len(mu)} checkpoints; "
                   f"violations mu={bad_mu[:3]} lambda={bad_lam[:3]}")


def check_4_corrected(docs):
    mu = docs["c04_mu_over_n"]["rows"]
    lam = docs["c04_lambda_over_n"]["rows"]
    ok = (mu[0] == [1, 1.0]
          and all(abs(v) < 1 - SUM_BUDGET for x, v in mu if x >= 2)
          and all(abs(v) < 2 - SUM_BUDGET for _, v in lam))
    worst = max(abs(v) for x, v in mu if x >= 2)
    return _record("4 (corrected: <= 1 with equality only at x=1)", ok,
                   f"mu sum is exactly 1 at x=1, max over x>=2 is {worst:.6f}; "
                   f"lambda max {max(abs(v) for _, v in lam):.6f} < 2 - 1e-9")


@pytest.mark.xfail(strict=True, reason="sum_{n<=1} mu(n)/n = 1, so the strict bound fails at x = 1")
def test_criterion_4_literal(docs):
    assert check_4_literal(docs)


def test_criterion_4_corrected(docs):
    assert check_4_corrected(docs)


# ---- 5 ---------------------------------------------------------------------

def check_5_literal(docs):
    rows = docs["c05_square_indicator"]["rows"]
    bad = [x for x, v, _ in rows if not (math.sqrt(x) <= v < 2 * math.sqrt(x))]
    exact = all(v == math.isqrt(x) for x, v, _ in rows)
    return _record(5, exact and not bad,
                   f"value == isqrt(x) at all {len(rows)} checkpoints: {exact}; "
                   f"sqrt(x) <= value fails at {len(bad)} checkpoints, first {bad[:4]}")


def check_5_corrected(docs):
    rows = docs["c05_square_indicator"]["rows"]
    ok = all(v == math.isqrt(x) and v <= math.sqrt(x) < v + 1 <= 2 * math.sqrt(x) for x, v, _ in rows)
    return _record("5 (corrected: sqrt(x) - 1 < value <= sqrt(x))", ok,
                   f"value == floor(sqrt x) exactly at all {len(rows)} checkpoints")


@pytest.mark.xfail(strict=True, reason="the sum is floor(sqrt x), below sqrt x when x is not a square")
def test_criterion_5_literal(docs):
    assert check_5_literal(docs)


def test_criterion_5_corrected(docs):
    assert check_5_corrected(docs)


# ---- 6 ---------------------------------------------------------------------

def check_6(docs):
    gaps = {k: docs[k]["max_discrepancy"] for k in
            ("c06_decomposition_1", "c06_decomposition_1_2", "c06_decomposition_1_2_3")}
    ok = all(g < DECOMP_TOL for g in gaps.values()) and all(docs[k]["limit"] == 10 ** 4 for k in gaps)
    return _record(6, ok, "max discrepancy " + ", ".join(f"{g:.3g}" for g in gaps.values())
                   + f" < {DECOMP_TOL:g}")


def test_criterion_6(docs):
    assert check_6(docs)


# ---- 7 ---------------------------------------------------------------------

def check_7(docs):
    bound = X_TOP / math.log(X_TOP) ** 2
    mu, lam = docs["c07_profile_mu"], docs["c07_profile_lambda"]
    off = [abs(v) for d in (mu, lam) for tau, v, _ in d["rows"] if 1 <= tau <= 8]
    taus = sorted({tau for d in (mu, lam) for tau, _, _ in d["rows"]})
    ok = mu["energy"] >= ENERGY_MIN * X_TOP and len(off) == 16 and max(off) <= bound and taus == list(range(9))
    return _record(7, ok, f"R_mu(0)={mu['energy']} >= {ENERGY_MIN}x, max |R(tau)| over tau=1..8 "
                          f"= {max(off)} <= x/(log x)^2 = {bound:.1f}")


def test_criterion_7(docs):
    assert check_7(docs)


# ---- 8 ---------------------------------------------------------------------

def check_8_literal(docs):
    law, weil = docs["c08_character_law"], docs["c08_weil"]
    # every (p, k) must give -1; degenerate entries are the cases that did not
    off = law["violations"] + len(law["degenerate"])
    weil_ok = weil["violations"] == 0 and weil["trials"] == 100
    return _record(8, off == 0 and weil_ok,
                   f"{law['checked']} (p, k) pairs, {off} not equal to -1 "
                   f"({[tuple(d) for d in law['degenerate']]}); Weil {weil['trials']} trials, "
                   f"violations={weil['violations']}")


def check_8_corrected(docs):
    law, weil = docs["c08_character_law"], docs["c08_weil"]
    deg_ok = all(k % p == 0 and v == p - 1 for p, k, v in law["degenerate"])
    rows_ok = all(abs(v) <= 2 * math.sqrt(p) and 0 < a < b < p for p, a, b, v, _ in weil["rows"])
    ok = law["violations"] == 0 and law["checked"] == 6140 and deg_ok and rows_ok and weil["trials"] == 100
    return _record("8 (corrected: p does not divide k)", ok,
                   f"sum = -1 for all pairs with p not dividing k, p - 1 for p | k; "
                   f"Weil max |S|/(2 sqrt p) = {weil['max_ratio']:.4f}")


@pytest.mark.xfail(strict=True, reason="for p | k the sum is p - 1: (3, 3) gives 2 and (5, 5) gives 4")
def test_criterion_8_literal(docs):
    assert check_8_literal(docs)


def test_criterion_8_corrected(docs):
    assert check_8_corrected(docs)


# ---- 9 ---------------------------------------------------------------------

def check_9(docs):
    parts = []
    ok = True
    for name, pos, primes in (("c09_construct_1", [0], [2]), ("c09_construct_2", [0, 1], [2, 3]),
                              ("c09_construct_3", [0, 1, 2], [2, 3, 5])):
        d = docs[name]
        n = d["n"]
        direct = all((n + i) % (p * p) == 0 for i, p in zip(pos, primes))
        ok &= (d["primes"] == primes and d["zero_positions"] == pos and direct
               and d["divisibility_ok"] is True and d["sieve_mu_zero"] is True)
        parts.append(f"{pos}->n={n}")
    return _record(9, ok, "; ".join(parts) + ", p^2 | n+i and mu(n+i) = 0 by sieve")


def test_criterion_9(docs):
    assert check_9(docs)


# ---- 10 --------------------------------------------------------------------

def check_10(docs):
    rat = [docs[k]["discrepancy"] for k in ("c10_rational_1_2", "c10_rational_1_3", "c10_rational_2_5")]
    conj = [docs[k]["conjugate_gap"] for k in
            ("c10_conjugate_1_3", "c10_conjugate_2_5", "c10_conjugate_0p6180339887")]
    ok = max(rat) < EXPSUM_TOL and max(conj) < EXPSUM_TOL
    return _record(10, ok, f"max decomposition discrepancy {max(rat):.3g}, "
                           f"max conjugate gap {max(conj):.3g} < {EXPSUM_TOL:g}")


def test_criterion_10(docs):
    assert check_10(docs)


# ---- 11 --------------------------------------------------------------------

def check_11(docs):
    mu, lam = docs["c11_davenport_mu"], docs["c11_davenport_lambda"]
    g = {s: {N: gap for N, _, _, gap in d["rows"]} for s, d in (("mu", mu), ("lambda", lam))}
    rhs = -math.sin(2 * math.pi * 0.3) / math.pi
    ok = (mu["x"] == lam["x"] == "0.29999999999999999"
          and all(r[2] == rhs for r in mu["rows"])
          and g["mu"][10 ** 6] < g["mu"][10 ** 3] and g["mu"][10 ** 6] < MU_GAP_MAX
          and g["lambda"][10 ** 6] < g["lambda"][10 ** 3])
    return _record(11, ok, f"mu gap {g['mu'][10**3]:.3g} -> {g['mu'][10**6]:.3g} (< {MU_GAP_MAX}); "
                           f"lambda gap {g['lambda'][10**3]:.3g} -> {g['lambda'][10**6]:.3g}")


def test_criterion_11(docs):
    assert check_11(docs)


# ---- 12 --------------------------------------------------------------------

def check_12(docs):
    syn, mert = docs["c12_fit_synthetic"], docs["c12_fit_mertens"]
    ok = (abs(syn["exponent_C"] - FIT_C) <= FIT_TOL and mert["exponent_C"] > 0
          and mert["window"] == [10 ** 4, X_TOP])
    return _record(12, ok, f"synthetic C = {syn['exponent_C']:.6f} (3 +/- {FIT_TOL}), "
                           f"M(x) fit C = {mert['exponent_C']:.4f} > 0")


def test_criterion_12(docs):
    assert check_12(docs)


# ---- 13 --------------------------------------------------------------------

def check_13(runs):
    d1, d8 = runs[1][0], runs[8][0]
    f1 = sorted(p.name for p in d1.iterdir())
    f8 = sorted(p.name for p in d8.iterdir())
    diff = [n for n in f1 if (d1 / n).read_bytes() != (d8 / n).read_bytes()] if f1 == f8 else ["file lists"]
    return _record(13, not diff and len(f1) > 0,
                   f"{len(f1)} output files, threads 1 vs 8, differing: {diff or 'none'}")


def test_criterion_13(runs):
    assert check_13(runs)


if __name__ == "__main__":
    import tempfile
    with tempfile.TemporaryDirectory() as tmp:
        base = Path(tmp)
        runs_ = {t: (base / f"t{t}",) + reproduce(base / f"t{t}", t, base / "cache") for t in (1, 8)}
        docs_ = {p.stem: json.loads(p.read_text()) for p in runs_[1][0].glob("*.json")}
        checks = [check_1, check_2, check_3, check_4_literal, check_4_corrected, check_5_literal,
                  check_5_corrected, check_6, check_7, check_8_literal, check_8_corrected, check_9,
                  check_10, check_11, check_12]
        known_false = {check_4_literal, check_5_literal, check_8_literal}
        ok = all(c(docs_) or c in known_false for c in checks)
        ok &= check_13(runs_)
        for t, (_, code, _, secs) in runs_.items():
            print(f"reproduce threads={t}: exit {code}, {secs:.1f} s")
            ok &= code == 0
    # the three literal statements above are known to be false; anything else failing is a regression
    sys.exit(0 if ok else 1)
