"""Executable coherent causal memory."""

from ccm.core import (
    CapExceeded,
    Execution,
    Operation,
    Order,
    Program,
    ProgramError,
    build_red,
    validate_execution,
)
from ccm.expr import VarDecl, VarSpace

__version__ = "0.1.0"

__all__ = [
    "CapExceeded",
    "Execution",
    "Operation",
    "Order",
    "Program",
    "ProgramError",
    "VarDecl",
    "VarSpace",
    "build_red",
    "validate_execution",
]
