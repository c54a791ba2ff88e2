"""sgcalc: numerical toolkit for SG-classical symbols, phase functions and their Lagrangians."""

from .expr import DomainError, Expression, ExprError, Jet, ParseError, eval_jet, parse, unparse

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "Expression",
    "ExprError",
    "Jet",
    "ParseError",
    "eval_jet",
    "parse",
    "unparse",
]
