"""Finite, exact models of probability-measure-preserving free group actions."""

from .action import Action, FactorMap, Word, action_distance, support_witness, uniform_distance
from .errors import (
    DomainMismatchError,
    InvalidInputError,
    InvariantViolation,
    ParseError,
    PmpError,
    PreconditionError,
    ResourceError,
)
from .measure import AtomSpace, Event, Subalgebra

__all__ = [
    "Action", "FactorMap", "Word", "action_distance", "support_witness", "uniform_distance",
    "DomainMismatchError", "InvalidInputError", "InvariantViolation", "ParseError", "PmpError",
    "PreconditionError", "ResourceError", "AtomSpace", "Event", "Subalgebra",
]

__version__ = "0.1.0"
