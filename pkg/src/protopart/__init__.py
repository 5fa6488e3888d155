"""Guarantee analysis, partitioning and execution of cryptographic protocol models."""

__version__ = "0.1.0"

from .analysis import (
    Conflict,
    ConstraintSet,
    brute_force_lexmin,
    collect_constraints,
    extract_conflict,
    solve_lexmin,
)
from .assertions import check_assertions
from .executor import run_network
from .model import Network, instance_guarantee, domain_guarantee
from .modelio import ModelDocument, parse_model, serialize_annotated
from .partition import partition, metrics

__all__ = [
    "Conflict",
    "ConstraintSet",
    "ModelDocument",
    "Network",
    "brute_force_lexmin",
    "check_assertions",
    "collect_constraints",
    "domain_guarantee",
    "extract_conflict",
    "instance_guarantee",
    "metrics",
    "parse_model",
    "partition",
    "run_network",
    "serialize_annotated",
    "solve_lexmin",
]
