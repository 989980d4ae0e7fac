"""Numeric evaluation of expression trees.

Trees built only from rationals and symbols are evaluated exactly in
``Fraction`` arithmetic and converted to ``float`` once at the end.
Anything involving an elementary function is evaluated in IEEE doubles.
"""
from __future__ import annotations

import math
from fractions import Fraction

from .expr import Expr, postorder


class DomainError(ArithmeticError):
    """Evaluation left the domain of an operation.

    Attributes:
        subexpression: the node whose evaluation failed.
        reason: short description (``"division by zero"`` and so on).
    """

    def __init__(self, reason: str, subexpression: Expr):
        self.reason = reason
        self.subexpression = subexpression
        super().__init__(f"{reason} in {subexpression}")


_FLOAT_FUNCS = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
}


def _float_func(name, x, node):
    if name == "ln":
        if x <= 0:
            raise DomainError("ln of non-positive value", node)
        return math.log(x)
    if name == "sqrt":
        if x < 0:
            raise DomainError("sqrt of negative value", node)
        return math.sqrt(x)
    if name == "tan" and math.cos(x) == 0.0:
        raise DomainError("tan at a pole", node)
    try:
        return _FLOAT_FUNCS[name](x)
    except OverflowError:
        raise DomainError("overflow", node) from None


def _run(roots, env, exact: bool) -> dict:
    vals: dict = {}
    for node in postorder(roots):
        k = node.kind
        if k == "const":
            v = node.args[0]
            vals[node] = v if exact else float(v)
        elif k == "sym":
            try:
                vals[node] = env[node.args[0]]
            except KeyError:
                from .parser import UnknownSymbol

                raise UnknownSymbol(node.args[0]) from None
        elif k == "add":
            s = vals[node.args[0]]
            for a in node.args[1:]:
                s = s + vals[a]
            vals[node] = s
        elif k == "mul":
            num = 1 if exact else 1.0
            den = 1 if exact else 1.0
            for a in node.args:
                if a.kind == "pow" and a.args[1] < 0:
                    b = vals[a.args[0]]
                    if b == 0:
                        raise DomainError("division by zero", a)
                    den = den * b ** (-a.args[1])
                else:
                    num = num * vals[a]
            vals[node] = num if den == 1 else num / den
            if not exact and den == 0:
                raise DomainError("division by zero", node)
        elif k == "pow":
            b, n = vals[node.args[0]], node.args[1]
            if n < 0:
                if b == 0:
                    raise DomainError("division by zero", node)
                try:
                    vals[node] = 1 / (b ** (-n))
                except ZeroDivisionError:
                    raise DomainError("division by zero", node) from None
            elif n == 0 and b == 0:
                raise DomainError("zero to the power zero", node)
            else:
                vals[node] = b ** n
        else:
            name = node.args[0]
            vals[node] = _float_func(name, float(vals[node.args[1]]), node)
        if not exact:
            v = vals[node]
            if isinstance(v, float) and not math.isfinite(v):
                raise DomainError("non-finite value", node)
    return vals


def _env(point, chart, exact: bool) -> dict:
    env = {}
    if chart is not None:
        coords = chart.coords
        if len(point) != len(coords):
            raise ValueError(f"expected {len(coords)} coordinates, got {len(point)}")
        for name, v in zip(coords, point):
            env[name] = v
        env.update(chart.param_values)
    else:
        env.update(point)
    conv = Fraction if exact else float
    out = {}
    for k, v in env.items():
        if isinstance(v, float) and not math.isfinite(v):
            raise ValueError(f"non-finite value for {k}")
        out[k] = conv(v)
    return out


def evaluate(e: Expr, point, chart=None) -> float:
    """Evaluate ``e`` at ``point``.

    ``point`` is a sequence in chart coordinate order (parameters come
    from the chart), or a name-to-value mapping when ``chart`` is None.

    Raises:
        DomainError: pole, ln of a non-positive or sqrt of a negative value.
    """
    exact = not e.has_functions
    vals = _run([e], _env(point, chart, exact), exact)
    return float(vals[e])


def evaluate_exact(e: Expr, point, chart=None) -> Fraction:
    """Exact rational value of a function-free expression."""
    if e.has_functions:
        raise ValueError("expression contains transcendental functions")
    return _run([e], _env(point, chart, True), True)[e]


def evaluate_many(exprs, point, chart=None) -> list:
    """Float values of several expressions with shared subtrees evaluated once."""
    exprs = list(exprs)
    vals = _run(exprs, _env(point, chart, False), False)
    return [float(vals[e]) for e in exprs]
