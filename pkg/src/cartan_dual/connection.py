"""Connections: coefficients, 1-forms, Levi-Civita, and the torsion/strain/nonmetricity split.

Coefficients follow ``D_{e_alpha} e_beta = L^rho_{alpha beta} e_rho`` and are
stored as ``L[rho][alpha][beta]``.  Lowered arrays put the lowered index
first: ``L_low[sigma][alpha][beta] = g_{sigma rho} L^rho_{alpha beta}``.

The decomposition helpers (strain, contorsion, compose) work in a
coordinate coframe only.
"""
from __future__ import annotations

from fractions import Fraction

from .exterior import Multivector
from .structure import (
    CoFrameField,
    MetricField,
    StructureCoefficients,
    array3,
    structure_coefficients,
)
from .symexpr import ZERO, Expr, add, as_expr, const, mul, neg

R4 = range(4)
HALF = const(Fraction(1, 2))


class SymmetryViolation(ValueError):
    """An array lacks the index symmetry an operation requires."""


class FrameNotCoordinate(ValueError):
    """The operation is only defined for a coordinate coframe."""


def rsum(terms):
    """Sum over a ring; ``Expr`` terms go through the canonical n-ary ``add``."""
    terms = list(terms)
    if any(isinstance(t, Expr) for t in terms):
        return add(*terms)
    total = 0
    for t in terms:
        total = total + t
    return total


def rprod(*factors):
    if any(isinstance(f, Expr) for f in factors):
        return mul(*factors)
    p = 1
    for f in factors:
        p = p * f
    return p


def _is_zero(x) -> bool:
    return x is ZERO if isinstance(x, Expr) else x == 0


def _sub(a, b):
    if isinstance(a, Expr) or isinstance(b, Expr):
        return add(a, neg(as_expr(b)))
    return a - b


def _half(x):
    return mul(HALF, x) if isinstance(x, Expr) else Fraction(1, 2) * x


class ConnectionField:
    """Connection coefficients ``L^rho_{alpha beta}`` in a declared coframe."""

    def __init__(self, coefficients, label: str = ""):
        self.L = array3(lambda r, a, b: as_expr(coefficients[r][a][b]))
        self.label = label

    def __getitem__(self, idx):
        r, a, b = idx
        return self.L[r][a][b]

    def __add__(self, other):
        other_L = other.L if isinstance(other, ConnectionField) else other
        return ConnectionField(array3(lambda r, a, b: add(self.L[r][a][b], other_L[r][a][b])))

    def __sub__(self, other):
        other_L = other.L if isinstance(other, ConnectionField) else other
        return ConnectionField(array3(lambda r, a, b: add(self.L[r][a][b], neg(other_L[r][a][b]))))

    @classmethod
    def zero(cls) -> "ConnectionField":
        return cls(array3(lambda r, a, b: ZERO))

    def lowered(self, g: MetricField) -> tuple:
        return lower_first(self.L, g.components)


def lower_first(arr, g) -> tuple:
    """``out[s][a][b] = g[s][r] * arr[r][a][b]``."""
    return array3(lambda s, a, b: rsum(rprod(g[s][r], arr[r][a][b])
                                       for r in R4 if not _is_zero(g[s][r]) and not _is_zero(arr[r][a][b])))


def raise_first(arr, ginv) -> tuple:
    return lower_first(arr, ginv)


def connection_one_forms(L: ConnectionField, cf: CoFrameField | None = None) -> tuple:
    """``omega^rho_beta = L^rho_{alpha beta} theta^alpha`` as frame 1-forms ``[rho][beta]``."""
    return tuple(tuple(Multivector({(a,): L.L[r][a][b] for a in R4 if L.L[r][a][b] is not ZERO})
                       for b in R4) for r in R4)


def levi_civita_connection(g: MetricField, cf: CoFrameField,
                           sc: StructureCoefficients | None = None) -> ConnectionField:
    """Torsion-free metric-compatible connection, by the Koszul formula.

    ``2 L_{s a b} = e_a g_{b s} + e_b g_{a s} - e_s g_{a b}
    + c_{s a b} - c_{b a s} - c_{a b s}`` with ``c_{s a b} = g_{s r} c^r_{a b}``.
    """
    if sc is None:
        sc = structure_coefficients(cf)
    G = g.components
    dg = [[[cf.frame_derivative(G[b][s], a) for s in R4] for b in R4] for a in R4]
    c_low = lower_first(sc.c, G) if not cf.is_coordinate else None

    def low(s, a, b):
        terms = [dg[a][b][s], dg[b][a][s], neg(dg[s][a][b])]
        if c_low is not None:
            terms += [c_low[s][a][b], neg(c_low[b][a][s]), neg(c_low[a][b][s])]
        return mul(HALF, add(*terms))

    L_low = array3(low)
    return ConnectionField(raise_first(L_low, g.inverse), label="levi-civita")


def metric_compatibility_residual(L: ConnectionField, g: MetricField, cf: CoFrameField) -> tuple:
    """``D_a g_{b s} = e_a g_{b s} - L^m_{a b} g_{m s} - L^m_{a s} g_{b m}``, as ``[a][b][s]``."""
    G = g.components

    def res(a, b, s):
        terms = [cf.frame_derivative(G[b][s], a)]
        for m in R4:
            if L.L[m][a][b] is not ZERO and G[m][s] is not ZERO:
                terms.append(neg(mul(L.L[m][a][b], G[m][s])))
            if L.L[m][a][s] is not ZERO and G[b][m] is not ZERO:
                terms.append(neg(mul(L.L[m][a][s], G[b][m])))
        return add(*terms)

    return array3(res)


def nonmetricity(L: ConnectionField, g_ref: MetricField, cf: CoFrameField) -> tuple:
    """``Q_{a b s} = -D_a g_ref_{b s}``; symmetric in the last two slots."""
    r = metric_compatibility_residual(L, g_ref, cf)
    return array3(lambda a, b, s: neg(r[a][b][s]))


def torsion_components(L, sc: StructureCoefficients | None = None) -> tuple:
    """``T^r_{a b} = L^r_{a b} - L^r_{b a} - c^r_{a b}``."""
    LL = L.L if isinstance(L, ConnectionField) else L

    def t(r, a, b):
        terms = [LL[r][a][b], neg(LL[r][b][a])]
        if sc is not None:
            terms.append(neg(sc.c[r][a][b]))
        return add(*terms)

    return array3(t)


def _require_coordinate(cf: CoFrameField) -> None:
    if not cf.is_coordinate:
        raise FrameNotCoordinate("this decomposition requires a coordinate coframe")


def strain_definition(L: ConnectionField, g_ref: MetricField, cf: CoFrameField) -> tuple:
    """``S^r_{a b} = (L^r_{a b} + L^r_{b a}) - (G^r_{a b} + G^r_{b a})`` with ``G`` the Levi-Civita of ``g_ref``."""
    _require_coordinate(cf)
    lc = levi_civita_connection(g_ref, cf).L
    LL = L.L
    return array3(lambda r, a, b: add(LL[r][a][b], LL[r][b][a], neg(lc[r][a][b]), neg(lc[r][b][a])))


def strain(L: ConnectionField, g_ref: MetricField, cf: CoFrameField) -> tuple:
    """Strain from nonmetricity and torsion.

    ``S^r_{a b} = g^{r s}(Q_{a b s} + Q_{b s a} - Q_{s a b})
    - g^{r s}(g_{b m} T^m_{a s} + g_{a m} T^m_{b s})``.
    """
    _require_coordinate(cf)
    Q = nonmetricity(L, g_ref, cf)
    T = torsion_components(L)
    return strain_from_nonmetricity(Q, T, g_ref.components, g_ref.inverse)


def strain_from_nonmetricity(Q, T, g, ginv) -> tuple:
    """Algebraic inversion of :func:`nonmetricity_from_strain` (ring generic)."""
    T_low_last = array3(lambda b, a, s: rsum(rprod(g[b][m], T[m][a][s]) for m in R4
                                             if not _is_zero(g[b][m]) and not _is_zero(T[m][a][s])))
    # T_low_last[b][a][s] = g_{b m} T^m_{a s}
    lowS = array3(lambda s, a, b: rsum([Q[a][b][s], Q[b][s][a], _neg(Q[s][a][b]),
                                        _neg(T_low_last[b][a][s]), _neg(T_low_last[a][b][s])]))
    return raise_first(lowS, ginv)


def nonmetricity_from_strain(T, S, g) -> tuple:
    """``Q_{a b s} = 1/2 (T_{s a b} + S_{s a b} + T_{b a s} + S_{b a s})`` (ring generic).

    This is the nonmetricity of ``Levi-Civita(g) + (T + S)/2`` relative to ``g``.
    """
    T_low = lower_first(T, g)
    S_low = lower_first(S, g)
    return array3(lambda a, b, s: _half(rsum([T_low[s][a][b], S_low[s][a][b],
                                              T_low[b][a][s], S_low[b][a][s]])))


def _neg(x):
    return neg(x) if isinstance(x, Expr) else -x


def contorsion(L: ConnectionField, g_ref: MetricField, cf: CoFrameField) -> tuple:
    """``K = L - Levi-Civita(g_ref)`` (coordinate coframe)."""
    _require_coordinate(cf)
    lc = levi_civita_connection(g_ref, cf).L
    return array3(lambda r, a, b: add(L.L[r][a][b], neg(lc[r][a][b])))


def contorsion_from_parts(T, S) -> tuple:
    """``K = (T + S) / 2``."""
    return array3(lambda r, a, b: _half(rsum([T[r][a][b], S[r][a][b]])))


def check_antisymmetric(T, name="torsion") -> None:
    for r in R4:
        for a in R4:
            for b in R4:
                x, y = T[r][a][b], T[r][b][a]
                ok = add(as_expr(x), as_expr(y)) is ZERO if isinstance(x, Expr) or isinstance(y, Expr) else x == -y
                if not ok:
                    raise SymmetryViolation(f"{name} not antisymmetric at [{r}][{a}][{b}]")


def check_symmetric(S, name="strain") -> None:
    for r in R4:
        for a in R4:
            for b in range(a + 1, 4):
                x, y = S[r][a][b], S[r][b][a]
                ok = (as_expr(x) is as_expr(y)) if isinstance(x, Expr) or isinstance(y, Expr) else x == y
                if not ok:
                    raise SymmetryViolation(f"{name} not symmetric at [{r}][{a}][{b}]")


def compose_connection(base, T, S) -> ConnectionField:
    """``L = base + T/2 + S/2``.

    Raises:
        SymmetryViolation: ``T`` not antisymmetric or ``S`` not symmetric in the lower pair.
    """
    check_antisymmetric(T)
    check_symmetric(S)
    B = base.L if isinstance(base, ConnectionField) else base
    return ConnectionField(array3(lambda r, a, b: add(B[r][a][b], mul(HALF, as_expr(T[r][a][b])),
                                                      mul(HALF, as_expr(S[r][a][b])))))


def decompose_connection(L: ConnectionField, g_ref: MetricField, cf: CoFrameField) -> tuple:
    """``(base, T, S)`` with ``L = base + T/2 + S/2``."""
    _require_coordinate(cf)
    return (levi_civita_connection(g_ref, cf), torsion_components(L), strain_definition(L, g_ref, cf))


def contorsion_for_torsion(T, g) -> tuple:
    """Contorsion of the metric-compatible connection with torsion ``T``.

    ``K_{s a b} = 1/2 (T_{s a b} + T_{b s a} - T_{a b s})``, raised with ``g``.
    Ring generic: ``g`` is ``(g_low, g_inv)``.
    """
    g_low, g_inv = g
    T_low = lower_first(T, g_low)
    K_low = array3(lambda s, a, b: _half(rsum([T_low[s][a][b], T_low[b][s][a], _neg(T_low[a][b][s])])))
    return raise_first(K_low, g_inv)


def lc_plus_contorsion(g: MetricField, cf: CoFrameField, K) -> ConnectionField:
    lc = levi_civita_connection(g, cf)
    return ConnectionField(array3(lambda r, a, b: add(lc.L[r][a][b], as_expr(K[r][a][b]))))


__all__ = [
    "ConnectionField", "FrameNotCoordinate", "SymmetryViolation", "compose_connection",
    "connection_one_forms", "contorsion", "contorsion_for_torsion", "contorsion_from_parts",
    "decompose_connection", "levi_civita_connection", "lc_plus_contorsion", "lower_first",
    "metric_compatibility_residual", "nonmetricity", "nonmetricity_from_strain", "raise_first",
    "rsum", "strain", "strain_definition", "strain_from_nonmetricity", "torsion_components",
]
