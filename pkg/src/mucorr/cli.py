"""
mucorr command line.

Every subcommand validates its parameters, computes, and writes one JSON
document (and optionally a CSV table) atomically. Exit status: 0 success,
1 a check found a failure, 2 usage or I/O error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import struct
import sys
import tempfile
import time
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from .correlation import (CorrelationSpec, character_law, correlate, decomposition_check,
                          legendre_correlation, noncorrelation_census, pair_squarefree_correlation,
                          two_value_profile, weil_trials)
from .expsum import digit_sum_twist, exp_sum, rational_phase_sum, totient_twist
from .fourier import davenport_sweep, geometric_checkpoints, vonmangoldt_series
from .identities import SIX_IDENTITIES, IdentityId, check_identities
from .numerics import checkpoint_grid
from .patterns import (Pattern, construct_zero_pattern, max_pattern_length, orthogonality_metric,
                       pattern_census, sign_change_count)
from .sieve import (LAMBDA, MU, FactorTable, build_table, load_table, parse_fn, read_header,
                    save_table)
from .summatory import (Normalization, Progression, SeriesSample, fit_log_power, partial_sums,
                        sign_counts, square_indicator_sums, squarefree_count,
                        squarefree_divisor_sum)

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2
RUNTIME_KEYS = {"threads", "cache_dir", "no_build", "json", "csv", "reproducible", "command",
                "out", "out_dir"}


class UsageError(Exception):
    pass


# ---- parsing helpers -------------------------------------------------------

def parse_int(text: str) -> int:
    """Integers written as 1000000, 1e6 or 10^6."""
    t = str(text).strip().replace("_", "")
    if "^" in t:
        b, e = t.split("^", 1)
        return parse_int(b) ** parse_int(e)
    try:
        d = Decimal(t)
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if d != d.to_integral_value():
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    return int(d)


def parse_int_list(text: str) -> list[int]:
    return [parse_int(t) for t in text.split(",") if t.strip()]


def parse_real(text: str):
    """``a/b`` is an exact Fraction; a decimal literal is the nearest double."""
    t = text.strip()
    try:
        return Fraction(t) if "/" in t else float(t)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a real number: {text!r}") from None


def _real_text(x) -> str:
    return f"{x.numerator}/{x.denominator}" if isinstance(x, Fraction) else format(x, ".17g")


# ---- serialization ---------------------------------------------------------

def _num(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def to_json(obj: Any, indent: int = 0) -> str:
    """JSON text with floats at 17 significant digits."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return "null" if obj is None else ("true" if obj else "false")
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, Fraction):
        return json.dumps(_real_text(obj))
    if isinstance(obj, complex):
        return to_json({"re": obj.real, "im": obj.imag}, indent)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(to_json(v) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + to_json(v, indent + 1) for v in seq) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return _num(float(v))
    if isinstance(v, Fraction):
        return _real_text(v)
    return str(v)


def to_csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def write_atomic(path, data) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "ascii", "newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---- tables ----------------------------------------------------------------

def default_cache_dir() -> Path:
    return Path(os.environ.get("MUCORR_CACHE_DIR", Path.home() / ".cache" / "mucorr"))


@dataclass
class Context:
    threads: int = 1
    cache_dir: Optional[Path] = None
    no_build: bool = False
    _table: Optional[FactorTable] = field(default=None, repr=False)

    def table(self, hi: int) -> FactorTable:
        """A table covering [1, hi): reused, loaded from the cache, or built."""
        if self._table is not None and self._table.covers(1, hi):
            return self._table
        t = self._from_cache(hi)
        if t is None:
            if self.no_build:
                raise UsageError(f"no cached table covers [1, {hi}) and --no-build is set")
            t = build_table(1, hi, threads=self.threads)
        self._table = t
        return t

    def _from_cache(self, hi: int) -> Optional[FactorTable]:
        d = self.cache_dir or default_cache_dir()
        if not d.is_dir():
            return None
        best = None
        for p in sorted(d.glob("*.mucr")):
            try:
                _, lo, top, _ = read_header(p)
            except (ValueError, OSError, struct.error):
                continue
            if lo == 1 and top >= hi and (best is None or top < best[1]):
                best = (p, top)
        return load_table(best[0]) if best else None


@dataclass
class Outcome:
    result: dict
    header: Optional[list[str]] = None
    rows: Optional[list[list]] = None
    ok: bool = True


def _need(cond: bool, msg: str) -> None:
    if not cond:
        raise UsageError(msg)


def _fn(text: str):
    try:
        return parse_fn(text)
    except ValueError as e:
        raise UsageError(str(e)) from None


# ---- commands --------------------------------------------------------------

def cmd_sieve(a, ctx: Context) -> Outcome:
    _need(1 <= a.lo < a.hi, "need 1 <= lo < hi")
    t = build_table(a.lo, a.hi, threads=ctx.threads)
    out = Path(a.out) if a.out else (ctx.cache_dir or default_cache_dir()) / f"table_{a.lo}_{a.hi}.mucr"
    out.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=out.parent, prefix=f".{out.name}.")
    os.close(fd)
    try:
        save_table(t, tmp)
        os.replace(tmp, out)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    primes = int(np.count_nonzero(t.spf == np.arange(a.lo, a.hi)) - (1 if a.lo == 1 else 0))
    return Outcome({"lo": a.lo, "hi": a.hi, "entries": a.hi - a.lo,
                    "entry_width": t.spf.dtype.itemsize, "primes": primes, "file": out.name})


def _identity_ids(names: list[str]) -> list[IdentityId]:
    ids: list[IdentityId] = []
    for name in names or ["all"]:
        try:
            new = list(SIX_IDENTITIES) if name.lower() == "all" else [IdentityId.parse(name)]
        except ValueError as e:
            raise UsageError(str(e)) from None
        ids += [i for i in new if i not in ids]
    return ids


def cmd_verify(a, ctx: Context) -> Outcome:
    _need(a.limit >= 1, "limit must be >= 1")
    _need(1 <= a.lo <= a.limit, "need 1 <= lo <= limit")
    ids = _identity_ids(a.identity)
    g = _fn(a.g) if IdentityId.MOBIUS_INVERSION in ids else None
    table = ctx.table(a.limit + 1)
    reps = check_identities(table, a.lo, a.limit + 1, ids, g=g, threads=ctx.threads)
    reports = [reps[i].to_dict() for i in ids]
    total = sum(r["failures"] for r in reports)
    result = {"identity": ",".join(i.value for i in ids), "limit": a.limit, "count": a.limit - a.lo + 1,
              "failures": total, "reports": reports}
    if g is not None:
        result["g"] = g.name
    rows = [[r["identity"], r["range"][0], r["range"][1] - 1, r["count"], r["failures"]] for r in reports]
    return Outcome(result, ["identity", "lo", "hi", "count", "failures"], rows, ok=total == 0)


def _series_rows(s: SeriesSample) -> tuple[list[str], list[list]]:
    header = ["x", "value"]
    cols = [s.x.tolist(), list(s.value.tolist())]
    if s.main_term is not None and s.error_term is not None:
        header += ["main_term", "error_term"]
        cols += [s.main_term.tolist(), s.error_term.tolist()]
    return header, [list(r) for r in zip(*cols)]


def cmd_sum(a, ctx: Context) -> Outcome:
    _need(a.limit >= 1, "limit must be >= 1")
    _need((a.mod is None) == (a.res is None), "--mod and --res go together")
    restriction = None
    if a.mod is not None:
        try:
            restriction = Progression(a.res, a.mod)
        except ValueError as e:
            raise UsageError(str(e)) from None
    kind = a.kind
    _need(kind == "partial" or (restriction is None and not a.over_n),
          f"--kind {kind} takes no --over-n or progression")
    f = _fn(a.fn)
    table = ctx.table(a.limit + 1)
    result: dict = {"kind": kind, "limit": a.limit}
    if kind == "signs":
        s = sign_counts(a.limit, table=table)
        Q = partial_sums(parse_fn("musq"), a.limit, table=table).value
        M = partial_sums(MU, a.limit, table=table).value
        plus, minus = s.value, s.main_term
        bad = int(np.count_nonzero((Q + M) != 2 * plus) + np.count_nonzero((Q - M) != 2 * minus))
        header = ["x", "plus", "minus", "Q", "M"]
        rows = [list(r) for r in zip(s.x.tolist(), plus.tolist(), minus.tolist(), Q.tolist(), M.tolist())]
        result.update({"checkpoints": len(rows), "mismatches": bad, "rows": rows})
        return Outcome(result, header, rows, ok=bad == 0)
    if kind == "square-indicator":
        s = square_indicator_sums(a.limit, table=table)
        bad = int(np.count_nonzero(s.value != s.main_term))
        header = ["x", "value", "isqrt"]
        rows = [list(r) for r in zip(s.x.tolist(), s.value.tolist(), s.main_term.tolist())]
        result.update({"checkpoints": len(rows), "mismatches": bad, "rows": rows})
        return Outcome(result, header, rows, ok=bad == 0)
    if kind == "squarefree":
        s = squarefree_count(a.limit, table=table)
    elif kind == "squarefree-divisor":
        s = squarefree_divisor_sum(a.limit, table=table)
    else:
        norm = Normalization.OVER_N if a.over_n else Normalization.NONE
        s = partial_sums(f, a.limit, norm, restriction, table=table, dense=a.dense)
        result.update({"fn": f.name, "normalization": norm.value,
                       "restriction": restriction.tag if restriction else None})
    header, rows = _series_rows(s)
    vals = np.asarray(s.value, dtype=np.float64)
    result.update({"value": s.last, "max_abs": float(np.max(np.abs(vals))),
                   "max_abs_x_ge_2": float(np.max(np.abs(vals[s.x >= 2]), initial=0.0)),
                   "checkpoints": len(rows), "rows": rows})
    if s.error_term is not None:
        result["error"] = float(s.error_term[-1])
        result["max_abs_error"] = float(np.max(np.abs(s.error_term)))
    return Outcome(result, header, rows)


def cmd_correlate(a, ctx: Context) -> Outcome:
    _need(a.limit >= 1, "limit must be >= 1")
    if a.profile is not None:
        _need(a.profile >= 0, "max tau must be >= 0")
        f = _fn(a.fn)
        prof = two_value_profile(f, a.profile, a.limit, ctx.table(a.limit + a.profile + 1))
        bound = a.limit / math.log(a.limit) ** 2 if a.limit > 1 else math.inf
        rows = [[e.tau, e.value, e.ratio] for e in prof]
        off = [abs(e.value) for e in prof[1:]]
        return Outcome({"mode": "profile", "fn": f.name, "limit": a.limit, "energy": prof[0].value,
                        "energy_ratio": prof[0].value / a.limit,
                        "max_abs_offdiag": max(off) if off else 0, "bound": bound, "rows": rows},
                       ["tau", "value", "ratio"], rows)
    if a.decomposition:
        shifts = a.shifts or []
        d = decomposition_check(a.limit, shifts, ctx.table(a.limit + max(shifts, default=0) + 1))
        return Outcome({"mode": "decomposition", "limit": a.limit, "shifts": shifts, "max_discrepancy": d})
    if a.census:
        r = noncorrelation_census(a.limit, ctx.table(a.limit + 3))
        rows = [[w.lo, w.hi, w.pairs, w.freq_deg2, w.freq_deg3] for w in r.windows]
        return Outcome({"mode": "census", "limit": a.limit, "pairs": r.pairs,
                        "freq_deg2": r.freq_deg2, "freq_deg3": r.freq_deg3,
                        "squarefree_pairs": r.squarefree_pairs, "rows": rows},
                       ["lo", "hi", "pairs", "freq_deg2", "freq_deg3"], rows)
    if a.pairs is not None:
        _need(a.pairs >= 0, "k must be >= 0")
        r = pair_squarefree_correlation(a.pairs, a.limit, ctx.table(a.limit + a.pairs + 1))
        return Outcome({"mode": "squarefree-pairs", "k": r.k, "limit": r.limit, "count": r.count,
                        "ratio": r.ratio, "independent_constant": r.independent_constant,
                        "euler_product": r.euler_product, "closer": r.closer})
    if a.character_law is not None:
        r = character_law(a.character_law, a.kmax)
        return Outcome({"mode": "character-law", "prime_max": r.prime_max, "k_max": r.k_max,
                        "checked": r.checked, "violations": len(r.violations),
                        "counterexamples": r.violations[:100],
                        "degenerate": [list(d) for d in r.degenerate]}, ok=not r.violations)
    if a.weil is not None:
        trials = weil_trials(a.weil, a.pmax, a.seed)
        rows = [[t.p, t.a, t.b, t.value, t.bound] for t in trials]
        bad = sum(not t.ok for t in trials)
        worst = max((abs(t.value) / t.bound for t in trials), default=0.0)
        return Outcome({"mode": "weil", "trials": len(trials), "seed": a.seed, "violations": bad,
                        "max_ratio": worst, "rows": rows},
                       ["p", "a", "b", "value", "bound"], rows, ok=bad == 0)
    _need(a.shifts is not None, "--shifts is required")
    if a.legendre is not None:
        try:
            v = legendre_correlation(a.legendre, a.shifts)
        except ValueError as e:
            raise UsageError(str(e)) from None
        return Outcome({"mode": "legendre", "p": a.legendre, "shifts": a.shifts, "value": v})
    f = _fn(a.fn)
    restriction = None
    if a.mod is not None:
        try:
            restriction = Progression(a.res, a.mod)
        except ValueError as e:
            raise UsageError(str(e)) from None
    norm = Normalization.OVER_N if a.normalized else Normalization.NONE
    try:
        spec = CorrelationSpec(f, tuple(a.shifts), a.limit, norm, restriction)
    except ValueError as e:
        raise UsageError(str(e)) from None
    r = correlate(spec, ctx.table(spec.needed_hi))
    return Outcome({"mode": "correlate", "fn": f.name, "shifts": list(spec.shifts), "limit": a.limit,
                    "normalization": norm.value, "value": r.value,
                    "normalized_value": r.normalized_value})


def cmd_pattern(a, ctx: Context) -> Outcome:
    if a.construct is not None:
        try:
            pat = Pattern.parse(a.construct)
        except ValueError as e:
            raise UsageError(str(e)) from None
        _need(all(c in (0, None) for c in pat.cells),
              "construction only controls zero cells; use * for the others")
        _need(bool(pat.zero_positions), "no zero cell to construct")
        sol = construct_zero_pattern(pat.zero_positions, a.seed_index)
        top = sol.n + pat.length
        sieve_ok = None
        if top <= 10 ** 7:
            mu = ctx.table(top + 1).values(MU)
            sieve_ok = all(int(mu[sol.n + i - 1]) == 0 for i in sol.zero_positions)
        ok = sol.verified and sieve_ok is not False
        return Outcome({"mode": "construct", "cells": str(pat), "seed_index": a.seed_index,
                        "n": sol.n, "modulus": sol.modulus, "primes": list(sol.primes),
                        "zero_positions": list(sol.zero_positions), "divisibility_ok": sol.verified,
                        "sieve_mu_zero": sieve_ok}, ok=ok)
    if a.max_length is not None:
        b = max_pattern_length(a.max_length)
        return Outcome({"mode": "max-length", "limit": b.limit, "loglog_floor": b.loglog_floor,
                        "length_bound": b.length_bound, "product_length": b.product_length,
                        "consistent": b.consistent})
    if a.orthogonality is not None:
        parts = a.orthogonality.split(",")
        _need(len(parts) == 2, "--orthogonality takes F,G")
        f, g = (_const_or_fn(p) for p in parts)
        r = orthogonality_metric(f, g, a.cutoff, ctx.table(a.cutoff + 1))
        return Outcome({"mode": "orthogonality", "f": r.f_tag, "g": r.g_tag, "prime_cutoff": r.prime_cutoff,
                        "metric": r.partial_metric, "tail_sum": r.tail_sum, "diverging": r.diverging})
    _need(a.limit is not None, "--limit is required")
    table = ctx.table(a.limit + 1)
    if a.sign_changes:
        _need(a.limit >= 2, "limit must be >= 2")
        c = sign_change_count(a.limit, table=table)
        lower = a.limit / math.log(a.limit) ** 8
        return Outcome({"mode": "sign-changes", "limit": a.limit, "count": c, "shape_bound": lower})
    _need(a.cells is not None, "one of --cells, --construct, --max-length, --orthogonality, --sign-changes")
    try:
        r = pattern_census(a.cells, a.limit, table=table)
    except ValueError as e:
        raise UsageError(str(e)) from None
    return Outcome({"mode": "census", "cells": str(r.pattern), "limit": a.limit, "count": r.count,
                    "first": r.first})


def _const_or_fn(text: str):
    t = text.strip()
    try:
        return float(t) if t.lstrip("+-").replace(".", "", 1).isdigit() else parse_fn(t)
    except ValueError as e:
        raise UsageError(str(e)) from None


def cmd_expsum(a, ctx: Context) -> Outcome:
    _need(a.limit >= 1, "limit must be >= 1")
    f = _fn(a.fn)
    table = ctx.table(a.limit + 1)
    if a.digit_sum:
        return Outcome({"mode": "digit-sum", "fn": f.name, "limit": a.limit,
                        "value": digit_sum_twist(a.limit, f, table=table)})
    if a.totient:
        _need(f in (MU, LAMBDA), "totient twist takes mu or lambda")
        r = totient_twist(f, a.limit, table=table)
        header, rows = _series_rows(r.series)
        return Outcome({"mode": "totient", "fn": f.name, "limit": a.limit, "value": r.value,
                        "rows": rows}, header, rows)
    if a.rational is not None:
        _need(isinstance(a.rational, Fraction), "--rational takes a/q")
        _need(0 <= a.rational < 1, "need 0 <= a/q < 1")
        r = rational_phase_sum(f, a.rational.numerator, a.rational.denominator, a.limit, table=table)
        return Outcome({"mode": "rational", "fn": f.name, "alpha": _real_text(a.rational),
                        "limit": a.limit, "re": r.decomposed.real, "im": r.decomposed.imag,
                        "magnitude": r.magnitude, "direct_re": r.direct.real,
                        "direct_im": r.direct.imag, "discrepancy": r.discrepancy})
    _need(a.alpha is not None, "--alpha is required")
    _need(0 < a.alpha < 1, "alpha must lie strictly between 0 and 1")
    _need(a.phase_power >= 1, "phase power must be >= 1")
    r = exp_sum(f, a.alpha, a.limit, a.phase_power, table=table)
    rows = [list(c) for c in r.checkpoints]
    result = {"mode": "expsum", "fn": f.name, "alpha": _real_text(a.alpha), "phase_power": a.phase_power,
              "limit": a.limit, "re": r.re, "im": r.im, "magnitude": r.magnitude}
    if a.conjugate_check:
        other = exp_sum(f, 1 - a.alpha, a.limit, a.phase_power, table=table)
        result["conjugate_gap"] = abs(r.value - other.value.conjugate())
    result["rows"] = rows
    return Outcome(result, ["x", "re", "im"], rows)


def cmd_fourier(a, ctx: Context) -> Outcome:
    _need(a.terms >= 1, "terms must be >= 1")
    Ns = geometric_checkpoints(a.terms)
    if a.series == "vonmangoldt":
        _need(not float(a.x).is_integer(), "x must not be an integer")
        table = ctx.table(a.terms * a.terms + 2)
        comps = [vonmangoldt_series(a.x, N, table=table) for N in Ns]
    else:
        comps = davenport_sweep(a.series, a.x, Ns, table=ctx.table(a.terms + 1))
    rows = [[c.terms, c.lhs_partial, c.rhs_partial, c.gap] for c in comps]
    return Outcome({"series": a.series, "x": _real_text(a.x), "terms": a.terms, "rows": rows},
                   ["N", "lhs", "rhs", "gap"], rows)


def cmd_fit(a, ctx: Context) -> Outcome:
    lo, hi = a.window
    _need(1 < lo < hi, "window needs 1 < lo < hi")
    if a.synthetic is not None:
        x = checkpoint_grid(hi)
        xf = x.astype(np.float64)
        s = SeriesSample(x, xf / np.log(np.maximum(xf, 2.0)) ** a.synthetic, label="synthetic")
        label = f"x/(log x)^{a.synthetic:g}"
    else:
        f = _fn(a.fn)
        norm = Normalization.OVER_N if a.over_n else Normalization.NONE
        s = partial_sums(f, hi, norm, table=ctx.table(hi + 1))
        label = f.name
    try:
        r = fit_log_power(s, (lo, hi))
    except ValueError as e:
        raise UsageError(str(e)) from None
    return Outcome({"series": label, "window": [lo, hi], "amplitude": r.amplitude,
                    "exponent_C": r.exponent_C, "rms_residual": r.rms_residual, "model": r.model,
                    "points_used": r.points_used, "points_excluded": r.points_excluded,
                    "reliable": r.reliable, "rms_high": r.rms_high})


# ---- reproduce -------------------------------------------------------------

def _lookup(doc: Any, path: str) -> Any:
    cur = doc
    for part in path.split("."):
        if isinstance(cur, list):
            cur = cur[int(part)]
        else:
            cur = cur[part]
    return cur


_OPS = {
    "==": lambda a, b: a == b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "abs<": lambda a, b: abs(a) < b,
    "abs<=": lambda a, b: abs(a) <= b,
}


def evaluate_check(doc: dict, check: dict) -> tuple[bool, str]:
    path, op = check["path"], check["op"]
    try:
        got = _lookup(doc, path)
        want = _lookup(doc, check["ref"]) if "ref" in check else check["value"]
        ok = bool(_OPS[op](got, want))
    except (KeyError, IndexError, TypeError, ValueError) as e:
        return False, f"{path}: {e!r}"
    return ok, f"{path} {op} {want!r} (got {got!r})"


def default_manifest():
    return resources.files("mucorr").joinpath("data", "acceptance.manifest")


def reproduce_all(manifest, out_dir, ctx: Context, reproducible: bool = True, log=sys.stdout) -> dict:
    """Run every experiment in a manifest and compare against its expectations."""
    if isinstance(manifest, str):
        manifest = Path(manifest)
    spec = json.loads(manifest.read_text())
    out_dir = Path(out_dir)
    results = []
    for exp in spec.get("experiments", []):
        name = exp["name"]
        path = out_dir / f"{name}.json"
        argv = list(exp["argv"]) + ["--json", str(path), "--threads", str(ctx.threads)]
        if ctx.cache_dir is not None:
            argv += ["--cache-dir", str(ctx.cache_dir)]
        if ctx.no_build:
            argv.append("--no-build")
        if exp.get("csv"):
            argv += ["--csv", str(out_dir / f"{name}.csv")]
        if reproducible:
            argv.append("--reproducible")
        code = run(argv, ctx=ctx, stdout=io.StringIO())
        want_exit = exp.get("exit", 0)
        notes = [] if code == want_exit else [f"exit {code}, expected {want_exit}"]
        passed = code == want_exit
        doc = json.loads(path.read_text()) if code in (EXIT_OK, EXIT_CHECK) and path.exists() else {}
        for check in exp.get("checks", []):
            ok, msg = evaluate_check(doc, check)
            passed &= ok
            if not ok:
                notes.append(msg)
        results.append({"name": name, "criterion": exp.get("criterion"), "pass": passed, "notes": notes})
        print(f"{'PASS' if passed else 'FAIL'} {name}" + (f": {'; '.join(notes)}" if notes else ""), file=log)
    summary = {"experiments": len(results), "passed": sum(r["pass"] for r in results),
               "failed": sum(not r["pass"] for r in results), "results": results}
    summary["all_pass"] = summary["failed"] == 0
    return summary


# ---- argument parser -------------------------------------------------------

def _globals(p: argparse.ArgumentParser, sub: bool) -> None:
    d = argparse.SUPPRESS if sub else None
    g = p.add_argument_group("global options")
    g.add_argument("--threads", type=parse_int, default=d if sub else 1, help="worker count (default 1)")
    g.add_argument("--cache-dir", default=d, help="directory of cached sieve tables")
    g.add_argument("--no-build", action="store_true", default=d if sub else False,
                   help="fail instead of building a missing table")
    g.add_argument("--json", default=d, metavar="PATH", help="write the JSON result here")
    g.add_argument("--csv", default=d, metavar="PATH", help="write the table here as CSV")
    g.add_argument("--reproducible", action="store_true", default=d if sub else False,
                   help="zero the timing and omit runtime-only settings so reruns are byte-identical")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mucorr", description=__doc__.strip().splitlines()[0])
    p.add_argument("--version", action="version", version=f"mucorr {__version__}")
    _globals(p, sub=False)
    sp = p.add_subparsers(dest="command", required=True)

    def sub(name, help_):
        q = sp.add_parser(name, help=help_)
        _globals(q, sub=True)
        return q

    q = sub("sieve", "build and cache a smallest-prime-factor table")
    q.add_argument("--lo", type=parse_int, default=1)
    q.add_argument("--hi", type=parse_int, required=True)
    q.add_argument("--out", help="cache file path (default: cache dir)")
    q.set_defaults(func=cmd_sieve)

    q = sub("verify", "check the convolution identities exhaustively")
    q.add_argument("--identity", action="append", help="L2.1..L2.6, inversion or all (repeatable)")
    q.add_argument("--limit", type=parse_int, required=True)
    q.add_argument("--lo", type=parse_int, default=1)
    q.add_argument("--g", default="d", help="g for the inversion check (default d)")
    q.set_defaults(func=cmd_verify)

    q = sub("sum", "checkpointed partial sums")
    q.add_argument("--fn", default="mu")
    q.add_argument("--limit", type=parse_int, required=True)
    q.add_argument("--over-n", action="store_true", help="sum f(n)/n")
    q.add_argument("--mod", type=parse_int)
    q.add_argument("--res", type=parse_int)
    q.add_argument("--dense", action="store_true", help="checkpoint at every integer")
    q.add_argument("--kind", default="partial",
                   choices=["partial", "squarefree", "squarefree-divisor", "signs", "square-indicator"])
    q.set_defaults(func=cmd_sum)

    q = sub("correlate", "shifted correlation sums and related experiments")
    q.add_argument("--fn", default="mu")
    q.add_argument("--shifts", type=parse_int_list)
    q.add_argument("--limit", type=parse_int, default=1)
    q.add_argument("--normalized", action="store_true", help="weight each term by 1/n")
    q.add_argument("--mod", type=parse_int)
    q.add_argument("--res", type=parse_int)
    m = q.add_mutually_exclusive_group()
    m.add_argument("--profile", type=parse_int, metavar="MAX_TAU", help="two-value profile R(0..tau)")
    m.add_argument("--decomposition", action="store_true", help="rearrangement check over --shifts")
    m.add_argument("--census", action="store_true", help="non-correlation census")
    m.add_argument("--pairs", type=parse_int, metavar="K", help="count n, n+K both squarefree")
    m.add_argument("--legendre", type=parse_int, metavar="P", help="Legendre correlation mod P")
    m.add_argument("--character-law", type=parse_int, metavar="PMAX",
                   help="sum chi(n)chi(n+k) = -1 for odd p <= PMAX, k <= --kmax")
    m.add_argument("--weil", type=parse_int, metavar="TRIALS", help="random triple sums vs 2 sqrt(p)")
    q.add_argument("--kmax", type=parse_int, default=5)
    q.add_argument("--pmax", type=parse_int, default=10 ** 4)
    q.add_argument("--seed", type=parse_int, default=0)
    q.set_defaults(func=cmd_correlate)

    q = sub("pattern", "sign-pattern census and zero-pattern construction")
    q.add_argument("--cells", help='pattern such as "0,*,0"')
    q.add_argument("--limit", type=parse_int)
    q.add_argument("--construct", metavar="CELLS", help='zero cells to force, e.g. "0,0"')
    q.add_argument("--seed-index", type=parse_int, default=1, help="index m of the first prime (p_1 = 2)")
    q.add_argument("--max-length", type=parse_int, metavar="LIMIT")
    q.add_argument("--orthogonality", metavar="F,G")
    q.add_argument("--cutoff", type=parse_int, default=10 ** 4)
    q.add_argument("--sign-changes", action="store_true")
    q.set_defaults(func=cmd_pattern)

    q = sub("expsum", "exponential and twisted sums")
    q.add_argument("--fn", default="mu")
    q.add_argument("--alpha", type=parse_real)
    q.add_argument("--limit", type=parse_int, required=True)
    q.add_argument("--phase-power", type=parse_int, default=1)
    q.add_argument("--rational", type=parse_real, metavar="A/Q")
    q.add_argument("--digit-sum", action="store_true")
    q.add_argument("--totient", action="store_true")
    q.add_argument("--conjugate-check", action="store_true", help="also report |S(a) - conj S(1-a)|")
    q.set_defaults(func=cmd_expsum)

    q = sub("fourier", "Davenport-type series comparisons")
    q.add_argument("--series", choices=["mu", "lambda", "vonmangoldt"], required=True)
    q.add_argument("--x", type=parse_real, required=True)
    q.add_argument("--terms", type=parse_int, required=True)
    q.set_defaults(func=cmd_fourier)

    q = sub("fit", "fit |S(x)| ~ a x / (log x)^C")
    q.add_argument("--fn", default="mu")
    q.add_argument("--window", type=parse_int_list, required=True, metavar="LO,HI")
    q.add_argument("--over-n", action="store_true")
    q.add_argument("--synthetic", type=float, metavar="C", help="fit x/(log x)^C instead of a sum")
    q.set_defaults(func=cmd_fit)

    q = sub("reproduce", "run a manifest of experiments and compare to expectations")
    q.add_argument("--manifest", help="manifest JSON (default: bundled acceptance.manifest)")
    q.add_argument("--out-dir", required=True)
    q.set_defaults(func=None)
    return p


def _config(a) -> dict:
    cfg = {}
    for k, v in vars(a).items():
        if k in RUNTIME_KEYS or k == "func":
            continue
        cfg[k] = _real_text(v) if isinstance(v, Fraction) else v
    return cfg


def run(argv: Optional[list[str]] = None, *, ctx: Optional[Context] = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    if getattr(a, "window", None) is not None and len(a.window) != 2:
        print("mucorr: error: --window takes LO,HI", file=sys.stderr)
        return EXIT_USAGE
    if a.threads < 1:
        print("mucorr: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    cache_dir = Path(a.cache_dir) if a.cache_dir else None
    if ctx is None:
        ctx = Context(a.threads, cache_dir, a.no_build)
    else:
        ctx.threads, ctx.no_build = a.threads, a.no_build
        ctx.cache_dir = cache_dir or ctx.cache_dir
    start = time.perf_counter()
    try:
        if a.command == "reproduce":
            manifest = Path(a.manifest) if a.manifest else default_manifest()
            res = reproduce_all(manifest, a.out_dir, ctx, reproducible=True, log=stdout)
            out = Outcome(res, ["name", "criterion", "pass"],
                          [[r["name"], r["criterion"], r["pass"]] for r in res["results"]], ok=res["all_pass"])
        else:
            out = a.func(a, ctx)
    except UsageError as e:
        print(f"mucorr: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OverflowError) as e:
        print(f"mucorr: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"mucorr: I/O error: {e}", file=sys.stderr)
        return EXIT_USAGE
    elapsed_ms = 0 if a.reproducible else round((time.perf_counter() - start) * 1000)
    doc = {"tool_version": __version__, "command": a.command, "config": _config(a),
           "elapsed_ms": elapsed_ms}
    if not a.reproducible:
        doc["runtime"] = {"threads": a.threads, "cache_dir": a.cache_dir}
    doc.update(out.result)
    doc["ok"] = out.ok
    text = to_json(doc) + "\n"
    try:
        if a.json:
            write_atomic(a.json, text)
        if a.csv:
            if out.header is not None:
                write_atomic(a.csv, to_csv(out.header, out.rows))
            else:
                scalars = [[k, v] for k, v in doc.items() if not isinstance(v, (dict, list))]
                write_atomic(a.csv, to_csv(["key", "value"], scalars))
    except OSError as e:
        print(f"mucorr: I/O error: {e}", file=sys.stderr)
        return EXIT_USAGE
    if not a.json and not a.csv:
        stdout.write(text)
    return EXIT_OK if out.ok else EXIT_CHECK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
