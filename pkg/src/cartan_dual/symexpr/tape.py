"""Compile expression DAGs to a flat instruction tape for fast float evaluation.

A tape evaluates many expressions at many points.  Shared subtrees are
computed once per point.  The inner loop runs in the compiled extension
``_tape_kernel`` when it is importable; otherwise a pure-Python loop is
used.  Set ``CARTAN_DUAL_PURE_PYTHON=1`` to force the fallback.

When a point produces a non-finite value, that point is re-evaluated
with :func:`evaluate_many` so the caller receives a :class:`DomainError`
naming the offending subexpression.
"""
from __future__ import annotations

import math
import os

import numpy as np

from .evaluate import DomainError, evaluate_many
from .expr import Expr, postorder

OP_CONST, OP_SYM, OP_ADD, OP_MUL, OP_DIV, OP_POWI = 0, 1, 2, 3, 4, 5
OP_SIN, OP_COS, OP_TAN, OP_EXP, OP_LN, OP_SQRT = 6, 7, 8, 9, 10, 11
_FUNC_OPS = {"sin": OP_SIN, "cos": OP_COS, "tan": OP_TAN, "exp": OP_EXP,
             "ln": OP_LN, "sqrt": OP_SQRT}

_kernel = None
if os.environ.get("CARTAN_DUAL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _tape_kernel as _kernel  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on build
        _kernel = None

BACKEND = "compiled" if _kernel is not None else "python"


class Tape:
    """Straight-line program computing ``outputs`` from ``symbols``.

    Attributes:
        symbols: input names in slot order.
        n_outputs: number of expressions compiled.
    """

    def __init__(self, exprs, symbols):
        self.exprs = list(exprs)
        self.symbols = tuple(symbols)
        slot = {s: i for i, s in enumerate(self.symbols)}
        ops, a_args, b_args, consts = [], [], [], []
        reg: dict = {}

        def emit(op, a=0, b=0):
            ops.append(op)
            a_args.append(a)
            b_args.append(b)
            return len(ops) - 1

        def chain(op, regs):
            r = regs[0]
            for q in regs[1:]:
                r = emit(op, r, q)
            return r

        one = None
        for node in postorder(self.exprs):
            k = node.kind
            if k == "const":
                consts.append(float(node.args[0]))
                reg[node] = emit(OP_CONST, len(consts) - 1)
            elif k == "sym":
                name = node.args[0]
                if name not in slot:
                    from .parser import UnknownSymbol

                    raise UnknownSymbol(name)
                reg[node] = emit(OP_SYM, slot[name])
            elif k == "add":
                reg[node] = chain(OP_ADD, [reg[a] for a in node.args])
            elif k == "mul":
                num, den = [], []
                for a in node.args:
                    if a.kind == "pow" and a.args[1] < 0:
                        b, n = a.args
                        den.append(reg[b] if n == -1 else emit(OP_POWI, reg[b], -n))
                    else:
                        num.append(reg[a])
                if not num:
                    if one is None:
                        consts.append(1.0)
                        one = emit(OP_CONST, len(consts) - 1)
                    num = [one]
                r = chain(OP_MUL, num)
                if den:
                    r = emit(OP_DIV, r, chain(OP_MUL, den))
                reg[node] = r
            elif k == "pow":
                reg[node] = emit(OP_POWI, reg[node.args[0]], node.args[1])
            else:
                reg[node] = emit(_FUNC_OPS[node.args[0]], reg[node.args[1]])
        self.ops = np.asarray(ops, dtype=np.int32)
        self.a = np.asarray(a_args, dtype=np.int32)
        self.b = np.asarray(b_args, dtype=np.int32)
        self.consts = np.asarray(consts, dtype=np.float64)
        self.out = np.asarray([reg[e] for e in self.exprs], dtype=np.int32)
        self.n_outputs = len(self.exprs)

    def __len__(self):
        return len(self.ops)

    def run(self, inputs, backend: str | None = None) -> np.ndarray:
        """Evaluate at each row of ``inputs`` (shape ``(npoints, nsymbols)``).

        Returns an array of shape ``(npoints, n_outputs)``.
        """
        x = np.ascontiguousarray(np.atleast_2d(np.asarray(inputs, dtype=np.float64)))
        if x.shape[1] != len(self.symbols):
            raise ValueError(f"expected {len(self.symbols)} inputs per point, got {x.shape[1]}")
        use = backend or BACKEND
        if use == "compiled":
            if _kernel is None:
                raise RuntimeError("compiled kernel is not available")
            res, bad = _kernel.run_tape(self.ops, self.a, self.b, self.consts, self.out, x)
        else:
            res, bad = run_tape_python(self.ops, self.a, self.b, self.consts, self.out, x)
        if bad >= 0:
            env = dict(zip(self.symbols, x[bad].tolist()))
            evaluate_many(self.exprs, env)
            raise DomainError("non-finite value", self.exprs[0])  # pragma: no cover
        return res


def run_tape_python(ops, a, b, consts, out, x):
    """Reference interpreter with the same contract as the compiled kernel.

    Returns ``(results, bad_row)`` where ``bad_row`` is -1 when every value
    was finite.
    """
    ops_l, a_l, b_l = ops.tolist(), a.tolist(), b.tolist()
    c_l = consts.tolist()
    out_l = out.tolist()
    n = len(ops_l)
    res = np.empty((x.shape[0], len(out_l)), dtype=np.float64)
    sin, cos, tan, exp, log, sqrt, isfinite = (
        math.sin, math.cos, math.tan, math.exp, math.log, math.sqrt, math.isfinite)
    for row in range(x.shape[0]):
        xin = x[row].tolist()
        r = [0.0] * n
        try:
            for i in range(n):
                op = ops_l[i]
                if op == OP_ADD:
                    v = r[a_l[i]] + r[b_l[i]]
                elif op == OP_MUL:
                    v = r[a_l[i]] * r[b_l[i]]
                elif op == OP_CONST:
                    v = c_l[a_l[i]]
                elif op == OP_SYM:
                    v = xin[a_l[i]]
                elif op == OP_DIV:
                    v = r[a_l[i]] / r[b_l[i]]
                elif op == OP_POWI:
                    n_exp = b_l[i]
                    v = r[a_l[i]] ** n_exp if n_exp >= 0 else 1.0 / (r[a_l[i]] ** -n_exp)
                elif op == OP_SIN:
                    v = sin(r[a_l[i]])
                elif op == OP_COS:
                    v = cos(r[a_l[i]])
                elif op == OP_TAN:
                    v = tan(r[a_l[i]])
                elif op == OP_EXP:
                    v = exp(r[a_l[i]])
                elif op == OP_LN:
                    v = log(r[a_l[i]])
                else:
                    v = sqrt(r[a_l[i]])
                if not isfinite(v):
                    return res, row
                r[i] = v
        except (ZeroDivisionError, ValueError, OverflowError):
            return res, row
        for j, o in enumerate(out_l):
            res[row, j] = r[o]
    return res, -1


def compile_tape(exprs, symbols) -> Tape:
    return Tape(exprs, symbols)


__all__ = ["Tape", "compile_tape", "BACKEND", "run_tape_python", "Expr"]
