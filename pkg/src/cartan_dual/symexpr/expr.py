"""Hash-consed expression trees with canonicalising constructors.

Every node is interned, so structurally equal expressions are the same
object.  That makes equality an identity test, keeps derivative and
evaluation caches small, and lets large geometric computations share
subexpressions as a DAG.

Node kinds
----------
``const``  exact rational (``fractions.Fraction``)
``sym``    coordinate or parameter name
``add``    n-ary sum, flattened, like terms collected
``mul``    n-ary product, flattened, powers of equal bases merged
``pow``    base raised to a nonzero integer exponent other than 1
``func``   one of ``sin cos tan exp ln sqrt`` applied to one argument
"""
from __future__ import annotations

import hashlib
import threading
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Iterator

FUNCTIONS = ("sin", "cos", "tan", "exp", "ln", "sqrt")

_KIND_RANK = {"const": 0, "sym": 1, "func": 2, "pow": 3, "mul": 4, "add": 5}

_table: dict = {}
_lock = threading.Lock()


class Expr:
    """Immutable interned expression node.  Build with the module helpers."""

    __slots__ = ("kind", "args", "_sk", "_free", "_hasfunc", "__weakref__")

    kind: str
    args: tuple

    def __new__(cls, *a, **k):  # pragma: no cover - guard
        raise TypeError("use the constructor functions in cartan_dual.symexpr")

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other):
        return add(self, _coerce(other))

    def __radd__(self, other):
        return add(_coerce(other), self)

    def __sub__(self, other):
        return add(self, neg(_coerce(other)))

    def __rsub__(self, other):
        return add(_coerce(other), neg(self))

    def __mul__(self, other):
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return mul(self, power(_coerce(other), -1))

    def __rtruediv__(self, other):
        return mul(_coerce(other), power(self, -1))

    def __neg__(self):
        return neg(self)

    def __pos__(self):
        return self

    def __pow__(self, n):
        if isinstance(n, Expr) and n.kind == "const":
            n = n.args[0]
        if isinstance(n, Fraction) and n.denominator == 1:
            n = int(n)
        if not isinstance(n, int):
            raise TypeError("only integer exponents are supported; use exp/ln")
        return power(self, n)

    # -- comparison --------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, Expr):
            return self is other
        if isinstance(other, (int, Fraction)):
            return self.kind == "const" and self.args[0] == other
        if isinstance(other, float):
            return self.kind == "const" and float(self.args[0]) == other
        return NotImplemented

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    __hash__ = object.__hash__

    def __bool__(self):
        raise TypeError("truth value of an Expr is undefined; compare with 0 explicitly")

    # -- inspection --------------------------------------------------------
    @property
    def is_const(self) -> bool:
        return self.kind == "const"

    @property
    def value(self) -> Fraction:
        if self.kind != "const":
            raise ValueError("not a constant")
        return self.args[0]

    @property
    def free_symbols(self) -> frozenset:
        return self._free

    @property
    def has_functions(self) -> bool:
        return self._hasfunc

    def __repr__(self):
        return f"Expr({to_string(self)!r})"

    def __str__(self):
        return to_string(self)

    def __reduce__(self):
        return (parse_canonical, (to_string(self),))


def _digest(kind: str, payload: bytes) -> bytes:
    return hashlib.blake2b(kind.encode() + b"|" + payload, digest_size=8).digest()


def _make(kind: str, args: tuple) -> Expr:
    """Intern a node without any simplification."""
    key = (kind, args)
    node = _table.get(key)
    if node is not None:
        return node
    with _lock:
        node = _table.get(key)
        if node is not None:
            return node
        node = object.__new__(Expr)
        Expr.kind.__set__(node, kind)
        Expr.args.__set__(node, args)
        if kind == "const":
            v = args[0]
            sk = (0, v, b"")
            free = frozenset()
            hf = False
        elif kind == "sym":
            sk = (1, 0, args[0].encode())
            free = frozenset((args[0],))
            hf = False
        elif kind == "func":
            a = args[1]
            sk = (2, 0, _digest("func" + args[0], a._sk[2] + bytes(str(a._sk[1]), "ascii")))
            free = a._free
            hf = True
        elif kind == "pow":
            b, n = args
            sk = (3, 0, _digest("pow" + str(n), b._sk[2] + bytes(str(b._sk[1]), "ascii")))
            free = b._free
            hf = b._hasfunc
        else:
            payload = b"".join(a._sk[2] + bytes(str(a._sk[1]), "ascii") for a in args)
            sk = (_KIND_RANK[kind], 0, _digest(kind, payload))
            free = frozenset().union(*(a._free for a in args))
            hf = any(a._hasfunc for a in args)
        Expr._sk.__set__(node, sk)
        Expr._free.__set__(node, free)
        Expr._hasfunc.__set__(node, hf)
        _table[key] = node
        return node


def _coerce(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a valid coefficient")
    if isinstance(x, (int, Rational)):
        return const(Fraction(x))
    if isinstance(x, float):
        return const(Fraction(x))
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


def as_expr(x) -> Expr:
    """Convert numbers (int, Fraction, float) to constant expressions."""
    return _coerce(x)


# -- leaf constructors -----------------------------------------------------

def const(v) -> Expr:
    if isinstance(v, float):
        v = Fraction(v)
    return _make("const", (Fraction(v),))


def sym(name: str) -> Expr:
    if not isinstance(name, str) or not name:
        raise ValueError("symbol name must be a non-empty string")
    return _make("sym", (name,))


ZERO = const(0)
ONE = const(1)
MINUS_ONE = const(-1)


# -- canonicalising constructors ------------------------------------------

def _split_coeff(t: Expr) -> tuple:
    """Split ``c * m`` into ``(c, m)`` with ``m`` free of a numeric factor."""
    if t.kind == "mul" and t.args[0].kind == "const":
        rest = t.args[1:]
        return t.args[0].args[0], rest[0] if len(rest) == 1 else _make("mul", rest)
    return Fraction(1), t


def _scale(c: Fraction, m: Expr) -> Expr:
    if c == 1:
        return m
    if m.kind == "mul":
        return _make("mul", (const(c),) + m.args)
    return _make("mul", (const(c), m))


def add(*terms) -> Expr:
    """Sum with flattening, constant folding and like-term collection."""
    total = Fraction(0)
    coeffs: dict = {}
    stack = list(terms)
    stack.reverse()
    while stack:
        t = _coerce(stack.pop())
        if t.kind == "add":
            stack.extend(reversed(t.args))
        elif t.kind == "const":
            total += t.args[0]
        else:
            c, m = _split_coeff(t)
            if m.kind == "add":
                # c*(a + b) joins the sum term by term so that x - x cancels
                stack.extend(reversed([mul(const(c), s) for s in m.args]))
                continue
            coeffs[m] = coeffs.get(m, 0) + c
    items = [(m, c) for m, c in coeffs.items() if c != 0]
    items.sort(key=lambda mc: mc[0]._sk)
    out = [_scale(c, m) for m, c in items]
    if total != 0:
        out.insert(0, const(total))
    if not out:
        return ZERO
    if len(out) == 1:
        return out[0]
    return _make("add", tuple(out))


def _sqrt_reduce(base: Expr, n: int):
    """Rewrite ``sqrt(u)^n`` as ``u^(n//2) * sqrt(u)^(n%2)``."""
    return base.args[1], n // 2, n % 2


def mul(*factors) -> Expr:
    """Product with flattening, constant folding and power merging.

    A zero factor absorbs the whole product.
    """
    coeff = Fraction(1)
    powers: dict = {}
    stack = [(f, 1) for f in factors]
    stack.reverse()
    while stack:
        f, e = stack.pop()
        f = _coerce(f)
        if f.kind == "mul":
            stack.extend((a, e) for a in reversed(f.args))
        elif f.kind == "const":
            v = f.args[0]
            if v == 0:
                if e > 0:
                    return ZERO
                powers[f] = powers.get(f, 0) + e  # 1/0 kept for evaluation to flag
            else:
                coeff *= v ** e
        elif f.kind == "pow":
            powers[f.args[0]] = powers.get(f.args[0], 0) + f.args[1] * e
        else:
            powers[f] = powers.get(f, 0) + e
    if coeff == 0:
        return ZERO
    # sqrt(u)^k with |k| >= 2 folds into powers of u
    changed = True
    while changed:
        changed = False
        for b in list(powers):
            n = powers[b]
            if b.kind == "func" and b.args[0] == "sqrt" and (n >= 2 or n <= -2):
                u, q, r = _sqrt_reduce(b, n)
                powers[b] = r
                if u.kind == "mul":
                    for a in u.args:
                        if a.kind == "const":
                            coeff *= a.args[0] ** q
                        elif a.kind == "pow":
                            powers[a.args[0]] = powers.get(a.args[0], 0) + a.args[1] * q
                        else:
                            powers[a] = powers.get(a, 0) + q
                elif u.kind == "const":
                    coeff *= u.args[0] ** q
                elif u.kind == "pow":
                    powers[u.args[0]] = powers.get(u.args[0], 0) + u.args[1] * q
                else:
                    powers[u] = powers.get(u, 0) + q
                changed = True
    items = [(b, n) for b, n in powers.items() if n != 0]
    items.sort(key=lambda bn: bn[0]._sk)
    out = [b if n == 1 else _make("pow", (b, n)) for b, n in items]
    if coeff != 1 or not out:
        out.insert(0, const(coeff))
    if len(out) == 1:
        return out[0]
    return _make("mul", tuple(out))


def power(base, n: int) -> Expr:
    """Integer power with the usual exponent rules."""
    base = _coerce(base)
    if not isinstance(n, int):
        raise TypeError("exponent must be an int")
    if n == 0:
        if base.kind == "const" and base.args[0] == 0:
            return _make("pow", (base, 0))
        return ONE
    if n == 1:
        return base
    if base.kind == "const":
        v = base.args[0]
        if v == 0 and n < 0:
            return _make("pow", (base, n))
        return const(v ** n)
    if base.kind == "pow":
        return power(base.args[0], base.args[1] * n)
    if base.kind == "mul":
        return mul(*(power(f, n) for f in base.args))
    if base.kind == "func" and base.args[0] == "sqrt" and (n >= 2 or n <= -2):
        return mul(power(base.args[1], n // 2), power(base, n % 2))
    return _make("pow", (base, n))


def neg(x) -> Expr:
    return mul(MINUS_ONE, x)


def sub(a, b) -> Expr:
    return add(a, neg(b))


def div(a, b) -> Expr:
    return mul(a, power(_coerce(b), -1))


def _exact_sqrt(v: Fraction):
    from math import isqrt

    if v < 0:
        return None
    p, q = v.numerator, v.denominator
    sp, sq = isqrt(p), isqrt(q)
    if sp * sp == p and sq * sq == q:
        return Fraction(sp, sq)
    return None


def func(name: str, arg) -> Expr:
    """Apply an elementary function; folds the exact special values."""
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    arg = _coerce(arg)
    if arg.kind == "const":
        v = arg.args[0]
        if v == 0 and name in ("sin", "tan"):
            return ZERO
        if v == 0 and name in ("cos", "exp"):
            return ONE
        if v == 1 and name == "ln":
            return ZERO
        if name == "sqrt":
            r = _exact_sqrt(v)
            if r is not None:
                return const(r)
    return _make("func", (name, arg))


def sin(x):
    return func("sin", x)


def cos(x):
    return func("cos", x)


def tan(x):
    return func("tan", x)


def exp(x):
    return func("exp", x)


def ln(x):
    return func("ln", x)


def sqrt(x):
    return func("sqrt", x)


# -- raw constructors (no simplification), used by the parser ---------------

def raw_add(a: Expr, b: Expr) -> Expr:
    return _make("add", (a, b))


def raw_mul(a: Expr, b: Expr) -> Expr:
    return _make("mul", (a, b))


def raw_pow(a: Expr, n: int) -> Expr:
    return _make("pow", (a, n))


def raw_func(name: str, a: Expr) -> Expr:
    return _make("func", (name, a))


# -- traversal -------------------------------------------------------------

def children(e: Expr) -> tuple:
    k = e.kind
    if k in ("add", "mul"):
        return e.args
    if k == "pow":
        return (e.args[0],)
    if k == "func":
        return (e.args[1],)
    return ()


def postorder(roots: Iterable[Expr]) -> list:
    """Unique nodes reachable from ``roots``, children before parents."""
    seen = set()
    order = []
    for root in roots:
        if id(root) in seen:
            continue
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for c in reversed(children(node)):
                if id(c) not in seen:
                    stack.append((c, False))
    return order


def simplify(e: Expr) -> Expr:
    """Rebuild ``e`` bottom-up through the canonicalising constructors.

    Guaranteed rewrites: ``0+x -> x``, ``1*x -> x``, ``0*x -> 0``, exact
    rational folding, ``x^0 -> 1`` and flattening of nested sums and
    products.  Trigonometric identities are not applied.
    """
    memo: dict = {}
    for node in postorder([e]):
        k = node.kind
        if k in ("const", "sym"):
            memo[node] = node
        elif k == "add":
            memo[node] = add(*(memo[a] for a in node.args))
        elif k == "mul":
            memo[node] = mul(*(memo[a] for a in node.args))
        elif k == "pow":
            memo[node] = power(memo[node.args[0]], node.args[1])
        else:
            memo[node] = func(node.args[0], memo[node.args[1]])
    return memo[e]


def node_count(roots) -> int:
    if isinstance(roots, Expr):
        roots = [roots]
    return len(postorder(roots))


def substitute(e: Expr, mapping: dict) -> Expr:
    """Replace symbols by expressions (or numbers) and re-canonicalise."""
    mapping = {k: _coerce(v) for k, v in mapping.items()}
    memo: dict = {}
    for node in postorder([e]):
        k = node.kind
        if k == "const":
            memo[node] = node
        elif k == "sym":
            memo[node] = mapping.get(node.args[0], node)
        elif k == "add":
            memo[node] = add(*(memo[a] for a in node.args))
        elif k == "mul":
            memo[node] = mul(*(memo[a] for a in node.args))
        elif k == "pow":
            memo[node] = power(memo[node.args[0]], node.args[1])
        else:
            memo[node] = func(node.args[0], memo[node.args[1]])
    return memo[e]


# -- differentiation -------------------------------------------------------

_dcache: dict = {}


def differentiate(e: Expr, var: str) -> Expr:
    """Exact partial derivative of ``e`` with respect to symbol ``var``."""
    key = (e, var)
    hit = _dcache.get(key)
    if hit is not None:
        return hit
    for node in postorder([e]):
        k2 = (node, var)
        if k2 in _dcache:
            continue
        _dcache[k2] = _d1(node, var)
    return _dcache[key]


def _d(node: Expr, var: str) -> Expr:
    return _dcache[(node, var)]


def _d1(node: Expr, var: str) -> Expr:
    if var not in node._free:
        return ZERO
    k = node.kind
    if k == "sym":
        return ONE
    if k == "add":
        return add(*(_d(a, var) for a in node.args))
    if k == "mul":
        fs = node.args
        terms = []
        for i, f in enumerate(fs):
            if var not in f._free:
                continue
            terms.append(mul(*fs[:i], _d(f, var), *fs[i + 1:]))
        return add(*terms)
    if k == "pow":
        b, n = node.args
        return mul(const(n), power(b, n - 1), _d(b, var))
    name, a = node.args
    da = _d(a, var)
    if name == "sin":
        outer = cos(a)
    elif name == "cos":
        outer = neg(sin(a))
    elif name == "tan":
        outer = add(ONE, power(node, 2))
    elif name == "exp":
        outer = node
    elif name == "ln":
        outer = power(a, -1)
    else:  # sqrt
        outer = mul(const(Fraction(1, 2)), power(node, -1))
    return mul(outer, da)


# -- printing --------------------------------------------------------------

_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_POW, _PREC_ATOM = 1, 2, 3, 4, 5


def _fmt_const(v: Fraction) -> tuple:
    """String for a nonnegative rational plus its precedence."""
    if v.denominator == 1:
        return str(v.numerator), _PREC_ATOM
    return f"{v.numerator}/{v.denominator}", _PREC_MUL


def _paren(s: str, p: int, need: int) -> str:
    return f"({s})" if p < need else s


def _is_negative(e: Expr) -> bool:
    if e.kind == "const":
        return e.args[0] < 0
    if e.kind == "mul" and e.args[0].kind == "const":
        return e.args[0].args[0] < 0
    return False


def _fmt(e: Expr, memo: dict) -> tuple:
    hit = memo.get(e)
    if hit is not None:
        return hit
    k = e.kind
    if k == "const":
        v = e.args[0]
        if v < 0:
            s, p = _fmt_const(-v)
            out = ("-" + _paren(s, p, _PREC_POW), _PREC_NEG)
        else:
            out = _fmt_const(v)
    elif k == "sym":
        out = (e.args[0], _PREC_ATOM)
    elif k == "func":
        out = (f"{e.args[0]}({_fmt(e.args[1], memo)[0]})", _PREC_ATOM)
    elif k == "pow":
        b, n = e.args
        if n < 0:
            bs, bp = _fmt(b, memo)
            den = bs if -n == 1 else f"{_paren(bs, bp, _PREC_ATOM)}^{-n}"
            dp = bp if -n == 1 else _PREC_POW
            out = (f"1/{_paren(den, dp, _PREC_POW)}", _PREC_MUL)
        else:
            bs, bp = _fmt(b, memo)
            out = (f"{_paren(bs, bp, _PREC_ATOM)}^{n}", _PREC_POW)
    elif k == "mul":
        out = _fmt_mul(e, memo)
    else:
        parts = []
        for i, t in enumerate(e.args):
            if i and _is_negative(t):
                s, p = _fmt(neg(t), memo)
                parts.append(" - " + _paren(s, p, _PREC_MUL))
            else:
                s, p = _fmt(t, memo)
                if i == 0:
                    parts.append(_paren(s, p, _PREC_ADD))
                else:
                    parts.append(" + " + _paren(s, p, _PREC_MUL))
        out = ("".join(parts), _PREC_ADD)
    memo[e] = out
    return out


def _fmt_mul(e: Expr, memo: dict) -> tuple:
    fs = list(e.args)
    coeff = Fraction(1)
    if fs[0].kind == "const" and fs[0].args[0] != 0:
        coeff = fs.pop(0).args[0]
    num, den = [], []
    for f in fs:
        if f.kind == "pow" and f.args[1] < 0:
            den.append(power(f.args[0], -f.args[1]) if f.args[0].kind != "const"
                       else _make("pow", (f.args[0], -f.args[1])))
        else:
            num.append(f)
    negative = coeff < 0
    c = -coeff if negative else coeff
    pieces = []
    if c != 1:
        cs, cp = _fmt_const(c)
        pieces.append(_paren(cs, cp, _PREC_ATOM) if (num or den) else cs)
    for f in num:
        s, p = _fmt(f, memo)
        pieces.append(_paren(s, p, _PREC_MUL + 1))
    text = "*".join(pieces) if pieces else "1"
    if den:
        parts = []
        for f in den:
            s, p = _fmt(f, memo)
            parts.append(_paren(s, p, _PREC_POW))
        dtext = parts[0] if len(parts) == 1 else "(" + "*".join(parts) + ")"
        text = f"{text}/{dtext}"
    if negative:
        return ("-" + text, _PREC_NEG)
    return (text, _PREC_MUL)


def to_string(e: Expr) -> str:
    """Infix text in the grammar accepted by :func:`parse_expr`."""
    memo: dict = {}
    for node in postorder([e]):
        _fmt(node, memo)
    return memo[e][0]


def parse_canonical(text: str) -> Expr:
    from .parser import parse_free

    return parse_free(text)


def iter_table() -> Iterator[Expr]:  # pragma: no cover - debugging aid
    return iter(list(_table.values()))
