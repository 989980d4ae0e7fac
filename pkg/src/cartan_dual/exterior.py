"""Exterior algebra of a four-dimensional cotangent fibre.

A :class:`Multivector` holds 16 coefficients on the basis monomials
``1, e0, .., e3, e01, .., e23, e012, .., e123, e0123`` where ``e01`` is
``theta^0 ^ theta^1``.  Coefficients may be ``Fraction``, ``float`` or
:class:`~cartan_dual.symexpr.Expr`; all operations only use ``+``, ``-``
and ``*`` on them, so exact rational inputs give exact results.

Metric-dependent operations (scalar product, contractions, Hodge star)
take a :class:`FibreMetric`, which caches its multiplication tables.

Example:
    >>> eta = FibreMetric.minkowski()
    >>> hodge_star(theta(0), eta)
    Multivector(e123)
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import cached_property
from itertools import combinations

from .symexpr.expr import Expr, ZERO
from .symexpr import expr as _E

DIM = 4
BLADES: tuple = tuple(b for r in range(DIM + 1) for b in combinations(range(DIM), r))
INDEX = {b: i for i, b in enumerate(BLADES)}
GRADE = tuple(len(b) for b in BLADES)
NAMES = tuple("1" if not b else "e" + "".join(map(str, b)) for b in BLADES)
FULL = (0, 1, 2, 3)


class SingularMetric(ArithmeticError):
    """The metric determinant is (numerically) zero."""


class SignatureError(ValueError):
    """The metric does not have Lorentzian signature (1,3)."""


def is_zero(c) -> bool:
    if isinstance(c, Expr):
        return c is ZERO
    return c == 0


def _canon(indices) -> tuple:
    """Sort ``indices`` into increasing order.  Returns ``(sign, blade)``;
    sign is 0 when an index repeats."""
    idx = list(indices)
    if len(set(idx)) != len(idx):
        return 0, ()
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
    return sign, tuple(idx)


def _wedge_table():
    table = {}
    for a in BLADES:
        for b in BLADES:
            sign, blade = _canon(a + b)
            if sign:
                table[(INDEX[a], INDEX[b])] = (sign, INDEX[blade])
    return table


_WEDGE = _wedge_table()
_WEDGE_BY_LEFT = tuple(
    tuple((j, s, k) for (i2, j), (s, k) in sorted(_WEDGE.items()) if i2 == i) for i in range(16)
)


def _rmul(a, b):
    # ring multiply with cheap zero/one short cuts
    if is_zero(a) or is_zero(b):
        return 0 if not (isinstance(a, Expr) or isinstance(b, Expr)) else ZERO
    return a * b


def _radd(a, b):
    if is_zero(a):
        return b
    if is_zero(b):
        return a
    return a + b


def _scale(s: int, c):
    return c if s == 1 else -c


class Multivector:
    """Element of the 16-dimensional exterior algebra.

    Build from a mapping of index tuples to coefficients; tuples need
    not be sorted (the sign of the permutation is applied) and repeated
    indices give zero.
    """

    __slots__ = ("c",)

    def __init__(self, coeffs=None):
        if coeffs is None:
            self.c = (0,) * 16
        elif isinstance(coeffs, dict):
            c = [0] * 16
            for idx, v in coeffs.items():
                if isinstance(idx, int):
                    idx = (idx,)
                sign, blade = _canon(idx)
                if sign:
                    k = INDEX[blade]
                    c[k] = _radd(c[k], _scale(sign, v))
            self.c = tuple(c)
        else:
            c = tuple(coeffs)
            if len(c) != 16:
                raise ValueError("a multivector has 16 coefficients")
            self.c = c

    # -- construction -----------------------------------------------------
    @classmethod
    def scalar(cls, v) -> "Multivector":
        return cls((v,) + (0,) * 15)

    def __getitem__(self, blade):
        if isinstance(blade, int):
            return self.c[blade]
        sign, b = _canon(blade)
        if not sign:
            return 0
        return _scale(sign, self.c[INDEX[b]])

    # -- linear structure -------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, Multivector):
            other = Multivector.scalar(other)
        return Multivector(tuple(_radd(a, b) for a, b in zip(self.c, other.c)))

    __radd__ = __add__

    def __neg__(self):
        return Multivector(tuple(c if is_zero(c) else -c for c in self.c))

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, s):
        if isinstance(s, Multivector):
            raise TypeError("use wedge (^) or a contraction to multiply multivectors")
        return Multivector(tuple(_rmul(c, s) for c in self.c))

    def __rmul__(self, s):
        return Multivector(tuple(_rmul(s, c) for c in self.c))

    def __xor__(self, other):
        return wedge(self, other)

    def __eq__(self, other):
        if not isinstance(other, Multivector):
            if isinstance(other, (int, Fraction, float, Expr)):
                other = Multivector.scalar(other)
            else:
                return NotImplemented
        return all(_eq(a, b) for a, b in zip(self.c, other.c))

    __hash__ = None

    def map(self, fn) -> "Multivector":
        """Apply ``fn`` to every coefficient."""
        return Multivector(tuple(fn(c) for c in self.c))

    def is_zero(self) -> bool:
        return all(is_zero(c) for c in self.c)

    def grades(self) -> set:
        return {GRADE[i] for i, c in enumerate(self.c) if not is_zero(c)}

    def items(self):
        """Nonzero ``(blade, coefficient)`` pairs in basis order."""
        return [(BLADES[i], c) for i, c in enumerate(self.c) if not is_zero(c)]

    def __repr__(self):
        parts = []
        for i, c in enumerate(self.c):
            if is_zero(c):
                continue
            if _eq(c, 1):
                parts.append(NAMES[i])
            else:
                parts.append(f"({c})*{NAMES[i]}" if i else f"{c}")
        return "Multivector(" + (" + ".join(parts) or "0") + ")"


def _eq(a, b) -> bool:
    if isinstance(a, Expr) or isinstance(b, Expr):
        return _E.as_expr(a) is _E.as_expr(b)
    return a == b


def theta(i: int) -> Multivector:
    """Basis 1-form ``theta^i``."""
    return Multivector({(i,): 1})


def blade(*indices, coeff=1) -> Multivector:
    return Multivector({tuple(indices): coeff})


def grade_project(a: Multivector, r: int) -> Multivector:
    if r < 0 or r > DIM:
        return Multivector()
    return Multivector(tuple(c if GRADE[i] == r else 0 for i, c in enumerate(a.c)))


def reverse(a: Multivector) -> Multivector:
    """Grade-r part times ``(-1)^(r(r-1)/2)``."""
    return Multivector(tuple(c if (GRADE[i] * (GRADE[i] - 1) // 2) % 2 == 0 or is_zero(c) else -c
                             for i, c in enumerate(a.c)))


def involution(a: Multivector) -> Multivector:
    """Grade involution: grade-r part times ``(-1)^r``."""
    return Multivector(tuple(c if GRADE[i] % 2 == 0 or is_zero(c) else -c for i, c in enumerate(a.c)))


def wedge(a: Multivector, b: Multivector) -> Multivector:
    out = [0] * 16
    bc = b.c
    for i, x in enumerate(a.c):
        if is_zero(x):
            continue
        for j, s, k in _WEDGE_BY_LEFT[i]:
            y = bc[j]
            if is_zero(y):
                continue
            t = x * y
            out[k] = _radd(out[k], t if s == 1 else -t)
    return Multivector(tuple(out))


# -- determinants and inverses over an arbitrary ring ------------------------

def _det(m) -> object:
    n = len(m)
    if n == 0:
        return 1
    if n == 1:
        return m[0][0]
    if n == 2:
        return _radd(_rmul(m[0][0], m[1][1]), _neg(_rmul(m[0][1], m[1][0])))
    total = 0
    for j in range(n):
        if is_zero(m[0][j]):
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = _rmul(m[0][j], _det(minor))
        total = _radd(total, term if j % 2 == 0 else _neg(term))
    return total


def _neg(c):
    return c if is_zero(c) else -c


def _numeric_value(c):
    if isinstance(c, Expr):
        return float(c.value) if c.is_const else None
    return float(c)


def _sqrt_ring(v):
    """Square root staying exact for rational perfect squares."""
    if isinstance(v, Expr):
        return _E.sqrt(v)
    if isinstance(v, Fraction) or isinstance(v, int):
        v = Fraction(v)
        r = _E._exact_sqrt(v)
        return r if r is not None else math.sqrt(v)
    return math.sqrt(v)


def invert_matrix(m):
    """Inverse of a 4x4 matrix over Fraction, float or Expr (adjugate / det)."""
    n = len(m)
    det = _det(m)
    dv = _numeric_value(det)
    if dv is not None and abs(dv) < 1e-12:
        raise SingularMetric(f"determinant {dv!r} is numerically zero")
    inv = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1:] for k, row in enumerate(m) if k != i]
            cof = _det(minor)
            if (i + j) % 2:
                cof = _neg(cof)
            if is_zero(cof):
                inv[j][i] = ZERO if isinstance(det, Expr) else 0
            elif isinstance(det, Expr) or isinstance(cof, Expr):
                inv[j][i] = _E.div(cof, det)
            elif isinstance(det, float) or isinstance(cof, float):
                inv[j][i] = cof / det
            else:
                inv[j][i] = Fraction(cof) / Fraction(det)
    return inv, det


class FibreMetric:
    """Symmetric nondegenerate bilinear form on the fibre.

    Args:
        g: 4x4 lower-index components ``g_{mu nu}``.
        ginv: optional precomputed inverse ``g^{mu nu}``.
        sqrt_abs_det: optional precomputed ``sqrt|det g|``.
        check_signature: verify signature (1,3) when entries are numeric.
    """

    def __init__(self, g, ginv=None, sqrt_abs_det=None, det=None, check_signature=True):
        g = [list(row) for row in g]
        if len(g) != 4 or any(len(r) != 4 for r in g):
            raise ValueError("metric must be 4x4")
        for i in range(4):
            for j in range(i + 1, 4):
                if not _eq(g[i][j], g[j][i]):
                    raise ValueError(f"metric is not symmetric at ({i},{j})")
        self.g = tuple(tuple(r) for r in g)
        if ginv is None:
            inv, det = invert_matrix(self.g)
            ginv = inv
        elif det is None:
            det = _det(self.g)
        dv = _numeric_value(det)
        if dv is not None and abs(dv) < 1e-12:
            raise SingularMetric(f"determinant {dv!r} is numerically zero")
        self.det = det
        self.ginv = tuple(tuple(r) for r in ginv)
        if sqrt_abs_det is None:
            if isinstance(det, Expr):
                sqrt_abs_det = _sqrt_ring(_E.neg(det))
            else:
                sqrt_abs_det = _sqrt_ring(-det if det < 0 else det)
        self.sqrt_abs_det = sqrt_abs_det
        if check_signature and dv is not None and all(_numeric_value(x) is not None for r in g for x in r):
            check_lorentzian([[_numeric_value(x) for x in r] for r in g])

    @classmethod
    def minkowski(cls) -> "FibreMetric":
        eta = [[Fraction(0)] * 4 for _ in range(4)]
        for i, s in enumerate((1, -1, -1, -1)):
            eta[i][i] = Fraction(s)
        return cls(eta)

    # -- cached tables ----------------------------------------------------
    @cached_property
    def gram(self) -> dict:
        """Scalar products of same-grade basis blades (Gram determinants)."""
        table = {}
        for i, a in enumerate(BLADES):
            for j, b in enumerate(BLADES):
                if len(a) != len(b):
                    continue
                if not a:
                    table[(i, j)] = 1
                    continue
                m = [[self.ginv[x][y] for y in b] for x in a]
                d = _det(m)
                if not is_zero(d):
                    table[(i, j)] = d
        return table

    @cached_property
    def left_table(self) -> tuple:
        """``left_table[i][j]`` lists ``(k, coeff)`` with blade_i ⌟ blade_j."""
        return tuple(tuple(tuple(self._left_blade(a, b).items()) for b in BLADES) for a in BLADES)

    @cached_property
    def right_table(self) -> tuple:
        return tuple(tuple(tuple(self._right_blade(a, b).items()) for b in BLADES) for a in BLADES)

    def _vec_left(self, i: int, terms: dict) -> dict:
        out: dict = {}
        for k, coeff in terms.items():
            b = BLADES[k]
            for pos, idx in enumerate(b):
                gij = self.ginv[i][idx]
                if is_zero(gij):
                    continue
                rest = INDEX[b[:pos] + b[pos + 1:]]
                t = _rmul(coeff, gij)
                t = t if pos % 2 == 0 else _neg(t)
                out[rest] = _radd(out.get(rest, 0), t)
        return {k: v for k, v in out.items() if not is_zero(v)}

    def _vec_right(self, terms: dict, j: int) -> dict:
        out: dict = {}
        for k, coeff in terms.items():
            b = BLADES[k]
            n = len(b)
            for pos, idx in enumerate(b):
                gij = self.ginv[j][idx]
                if is_zero(gij):
                    continue
                rest = INDEX[b[:pos] + b[pos + 1:]]
                t = _rmul(coeff, gij)
                t = t if (n - 1 - pos) % 2 == 0 else _neg(t)
                out[rest] = _radd(out.get(rest, 0), t)
        return {k: v for k, v in out.items() if not is_zero(v)}

    def _left_blade(self, a: tuple, b: tuple) -> dict:
        terms = {INDEX[b]: 1}
        for i in reversed(a):
            terms = self._vec_left(i, terms)
            if not terms:
                break
        return terms

    def _right_blade(self, a: tuple, b: tuple) -> dict:
        terms = {INDEX[a]: 1}
        for j in b:
            terms = self._vec_right(terms, j)
            if not terms:
                break
        return terms

    def lower(self, i: int) -> Multivector:
        """The 1-form ``g_{i j} theta^j`` reciprocal to ``theta^i``."""
        return Multivector({(j,): self.g[i][j] for j in range(4) if not is_zero(self.g[i][j])})


def check_lorentzian(g) -> None:
    """Raise :class:`SignatureError` unless ``g`` has signature (1,3)."""
    import numpy as np

    m = np.asarray(g, dtype=float)
    if not np.all(np.isfinite(m)):
        raise SignatureError("metric has non-finite entries")
    ev = np.linalg.eigvalsh(0.5 * (m + m.T))
    scale = max(1.0, float(np.max(np.abs(ev))))
    if np.min(np.abs(ev)) < 1e-12 * scale:
        raise SingularMetric("metric is degenerate")
    pos = int(np.sum(ev > 0))
    if pos != 1:
        raise SignatureError(f"signature ({pos},{4 - pos}) is not (1,3)")


class Orientation:
    """Sign of the volume element relative to ``theta^0123``."""

    __slots__ = ("sign",)

    def __init__(self, sign: int = 1):
        if sign not in (1, -1):
            raise ValueError("orientation sign must be +1 or -1")
        self.sign = sign

    def volume(self, metric: FibreMetric) -> Multivector:
        v = metric.sqrt_abs_det
        return blade(0, 1, 2, 3, coeff=v if self.sign == 1 else _neg(v))

    def __repr__(self):
        return f"Orientation({self.sign:+d})"


POSITIVE = Orientation(1)


def volume_element(metric: FibreMetric, orientation: Orientation = POSITIVE) -> Multivector:
    return orientation.volume(metric)


def scalar_product(a: Multivector, b: Multivector, metric: FibreMetric):
    total = 0
    for (i, j), gij in metric.gram.items():
        x, y = a.c[i], b.c[j]
        if is_zero(x) or is_zero(y):
            continue
        total = _radd(total, _rmul(_rmul(x, y), gij))
    return total


def _contract(a: Multivector, b: Multivector, table) -> Multivector:
    out = [0] * 16
    for i, x in enumerate(a.c):
        if is_zero(x):
            continue
        row = table[i]
        for j, y in enumerate(b.c):
            if is_zero(y):
                continue
            xy = None
            for k, coeff in row[j]:
                if xy is None:
                    xy = _rmul(x, y)
                out[k] = _radd(out[k], _rmul(xy, coeff))
    return Multivector(tuple(out))


def left_contract(a: Multivector, b: Multivector, metric: FibreMetric) -> Multivector:
    """``a ⌟ b``: adjoint to wedging with the reverse of ``a``."""
    return _contract(a, b, metric.left_table)


def right_contract(a: Multivector, b: Multivector, metric: FibreMetric) -> Multivector:
    """``a ⌞ b``: adjoint to wedging with the reverse of ``b`` on the right."""
    return _contract(a, b, metric.right_table)


def hodge_star(a: Multivector, metric: FibreMetric, orientation: Orientation = POSITIVE) -> Multivector:
    """``⋆a = reverse(a) ⌟ tau`` with ``tau`` the oriented volume element."""
    return left_contract(reverse(a), orientation.volume(metric), metric)


def hodge_inverse(a: Multivector, metric: FibreMetric, orientation: Orientation = POSITIVE) -> Multivector:
    """Inverse of :func:`hodge_star`: ``-(-1)^(r(4-r)) ⋆`` on each grade."""
    s = hodge_star(a, metric, orientation)
    # ⋆ maps grade r to 4-r and the sign depends only on r(4-r)
    return Multivector(tuple(
        c if is_zero(c) or (GRADE[i] * (4 - GRADE[i])) % 2 == 1 else _neg(c)
        for i, c in enumerate(s.c)))


def expansion_coefficients(y: Multivector, metric: FibreMetric) -> Multivector:
    """Recover coefficients of ``y`` through scalar products with reciprocal blades.

    For each basis blade ``theta^I`` the coefficient is ``y · theta_I``
    with ``theta_i = g_{ij} theta^j``.  The result equals ``y`` exactly.
    """
    lowered = [metric.lower(i) for i in range(4)]
    out = [0] * 16
    for k, b in enumerate(BLADES):
        recip = Multivector.scalar(1)
        for i in b:
            recip = wedge(recip, lowered[i])
        out[k] = scalar_product(y, recip, metric)
    return Multivector(tuple(out))
