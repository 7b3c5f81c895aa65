"""Mobius and Liouville experiments: sieve tables, identities, sums and correlations."""

__version__ = "0.1.0"

from .sieve import (BIG_OMEGA, DIVISORS, LAMBDA, MU, MU_SQ, OMEGA, TOTIENT, ArithFnSpec,
                    FactorTable, RangeError, build_table, legendre, load_table, parse_fn,
                    product, restricted_lambda, save_table)
from .summatory import Normalization, Progression, SeriesSample, partial_sums

__all__ = [
    "__version__", "ArithFnSpec", "FactorTable", "RangeError", "build_table", "load_table",
    "save_table", "parse_fn", "legendre", "restricted_lambda", "product", "MU", "LAMBDA",
    "MU_SQ", "OMEGA", "BIG_OMEGA", "DIVISORS", "TOTIENT", "Normalization", "Progression",
    "SeriesSample", "partial_sums",
]
