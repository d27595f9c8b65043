"""Exact expression kernel: parsing, canonical forms, zero tests, evaluation."""

from .core import (
    AssumptionError,
    Assumptions,
    DivisionByZeroError,
    EvaluationError,
    Expr,
    Verdict,
    VerdictKind,
    atoms_of,
    canonicalize,
    combine,
    differentiate,
    eval_interval,
    eval_numeric,
    is_jet,
    is_zero,
    jets,
    rational_parts,
    rewrite,
    sample_points,
    working_precision,
)
from .parser import Namespace, ParseError, parse
from .printer import to_text

__all__ = [
    "AssumptionError",
    "Assumptions",
    "DivisionByZeroError",
    "EvaluationError",
    "Expr",
    "Namespace",
    "ParseError",
    "Verdict",
    "VerdictKind",
    "atoms_of",
    "canonicalize",
    "combine",
    "differentiate",
    "eval_interval",
    "eval_numeric",
    "is_jet",
    "is_zero",
    "jets",
    "parse",
    "rational_parts",
    "rewrite",
    "sample_points",
    "working_precision",
    "to_text",
]
