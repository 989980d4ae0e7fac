"""Symbolic scalar expressions: parsing, exact differentiation, evaluation."""
from .chart import Chart, ChartError, Point
from .evaluate import DomainError, evaluate, evaluate_exact, evaluate_many
from .expr import (
    FUNCTIONS,
    MINUS_ONE,
    ONE,
    ZERO,
    Expr,
    add,
    as_expr,
    const,
    cos,
    differentiate as _differentiate,
    div,
    exp,
    func,
    ln,
    mul,
    neg,
    node_count,
    power,
    simplify,
    sin,
    sqrt,
    sub,
    substitute,
    sym,
    tan,
    to_string,
)
from .parser import ExprSyntaxError, UnknownSymbol, parse_expr, parse_free
from .tape import BACKEND, Tape, compile_tape


def differentiate(e: Expr, coord: str, chart: Chart | None = None) -> Expr:
    """Exact partial derivative; parameters are constants.

    When ``chart`` is given, ``coord`` must be one of its coordinates.
    """
    if chart is not None and coord not in chart.coords:
        raise UnknownSymbol(coord)
    return _differentiate(e, coord)


def print_expr(e: Expr) -> str:
    return to_string(e)


__all__ = [
    "BACKEND", "Chart", "ChartError", "DomainError", "Expr", "ExprSyntaxError",
    "FUNCTIONS", "MINUS_ONE", "ONE", "Point", "Tape", "UnknownSymbol", "ZERO",
    "add", "as_expr", "compile_tape", "const", "cos", "differentiate", "div",
    "evaluate", "evaluate_exact", "evaluate_many", "exp", "func", "ln", "mul",
    "neg", "node_count", "parse_expr", "parse_free", "power", "print_expr",
    "simplify", "sin", "sqrt", "sub", "substitute", "sym", "tan", "to_string",
]
