"""Anytime computation of cautious consequences of ground normal programs."""

from .algorithms import (
    ALL_ALGORITHMS,
    AlgorithmId,
    CautiousResult,
    EstimateEvent,
    EventKind,
    Procedure,
    cautious_reasoning,
)
from .ingest import (
    ParseError,
    SourceFormat,
    parse,
    parse_asp,
    parse_dimacs,
    parse_query,
)
from .multi import run_multi
from .oracle import enumerate_stable_models
from .program import AtomTable, Program, Rule

__all__ = [
    "ALL_ALGORITHMS",
    "AlgorithmId",
    "AtomTable",
    "CautiousResult",
    "EstimateEvent",
    "EventKind",
    "ParseError",
    "Procedure",
    "Program",
    "Rule",
    "SourceFormat",
    "cautious_reasoning",
    "enumerate_stable_models",
    "parse",
    "parse_asp",
    "parse_dimacs",
    "parse_query",
    "run_multi",
]
