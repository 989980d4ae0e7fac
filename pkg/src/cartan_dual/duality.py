"""Hodge duals of torsion and curvature and the constraints they must meet.

Index layouts follow :mod:`cartan_dual.curvature`: curvature components are
``C[mu][rho][alpha][beta]`` for ``R_mu^rho_{alpha beta}`` and lowered ones are
``R_{mu nu alpha beta} = g_{nu rho} R_mu^rho_{alpha beta}``.

The Levi-Civita symbol carries ``eps_{0123} = o`` with ``o`` the orientation
sign, so that dual components agree with :func:`exterior.hodge_star` for
either orientation.  Every identity is returned as a list of terms whose sum
must vanish, then evaluated with :func:`residuals.residual`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import permutations, product

from . import exterior as X
from .connection import (
    ConnectionField,
    contorsion_for_torsion,
    levi_civita_connection,
)
from .curvature import (
    TRIPLES,
    Geometry,
    IndexedFormField,
    RouteMismatch,
    _cyclic,
    array4,
    covariant_derivative_curvature,
    covariant_derivative_torsion,
    ext_cov_derivative,
    form_components,
    lowered_curvature,
    two_form,
)
from .exterior import Multivector
from .residuals import HOLD_TOL, VIOLATE_TOL, Residual, residual, verdict
from .structure import MetricField, array2, array3, flatten
from .symexpr import ZERO, Expr, add, as_expr, const, mul, neg

R4 = range(4)
HALF = const(Fraction(1, 2))
SIXTH = const(Fraction(1, 6))
ROUTE_TOL = 1e-8
DUAL_PAIRS = ("second", "first")


class MissingCandidate(ValueError):
    """A candidate metric or connection needed by the check was not supplied."""


def _perm_sign(p) -> int:
    sign = 1
    p = list(p)
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def levi_civita_symbol(orientation: int = 1) -> dict:
    """Nonzero entries of ``eps_{a b c d}`` with ``eps_{0123} = orientation``."""
    return {p: orientation * _perm_sign(p) for p in permutations(range(4))}


def _sum(terms) -> Expr:
    terms = [t for t in terms if t is not ZERO]
    return add(*terms) if terms else ZERO


def _scaled(sign: int, e: Expr) -> Expr:
    return e if sign == 1 else neg(e)


def _raise_pair(Rl, ginv) -> tuple:
    """``R_{m r}^{k i} = g^{k a} g^{i b} R_{m r a b}``."""
    half = array4(lambda m, r, k, b: _sum(mul(ginv[k][a], Rl[m][r][a][b]) for a in R4
                                          if ginv[k][a] is not ZERO and Rl[m][r][a][b] is not ZERO))
    return array4(lambda m, r, k, i: _sum(mul(ginv[i][b], half[m][r][k][b]) for b in R4
                                          if ginv[i][b] is not ZERO and half[m][r][k][b] is not ZERO))


def _raise_first_pair(Rl, ginv) -> tuple:
    """``R^{k i}_{m r} = g^{k a} g^{i b} R_{a b m r}``."""
    half = array4(lambda k, b, m, r: _sum(mul(ginv[k][a], Rl[a][b][m][r]) for a in R4
                                          if ginv[k][a] is not ZERO and Rl[a][b][m][r] is not ZERO))
    return array4(lambda k, i, m, r: _sum(mul(ginv[i][b], half[k][b][m][r]) for b in R4
                                          if ginv[i][b] is not ZERO and half[k][b][m][r] is not ZERO))


def _epsilon_dual(up, orientation: int, first_pair: bool) -> tuple:
    """``1/2 eps_{k i l s} X^{k i}`` contracted on the chosen pair of ``up``."""
    eps = levi_civita_symbol(orientation)

    def comp(m, r, l, s):
        if l == s:
            return ZERO
        terms = []
        for k in R4:
            for i in R4:
                e = eps.get((k, i, l, s))
                if not e:
                    continue
                x = up[k][i][m][r] if first_pair else up[m][r][k][i]
                if x is not ZERO:
                    terms.append(_scaled(e, x))
        return mul(HALF, _sum(terms)) if terms else ZERO

    return array4(comp)


def _einstein_from_components(C, g_low, g_inv):
    """Ricci (``R_m^r_{r n}``), scalar and Einstein tensor of curvature-like components."""
    ric = array2(lambda m, n: _sum(C[m][r][r][n] for r in R4))
    scalar = _sum(mul(g_inv[m][n], ric[m][n]) for m in R4 for n in R4
                  if g_inv[m][n] is not ZERO and ric[m][n] is not ZERO)
    half_R = mul(HALF, scalar)
    ein = array2(lambda m, n: add(ric[m][n], neg(mul(g_low[m][n], half_R))))
    return ric, scalar, ein


def _mixed(t, g_inv) -> tuple:
    """``T_m^k = T_{m n} g^{n k}``."""
    return array2(lambda m, k: _sum(mul(t[m][n], g_inv[n][k]) for n in R4
                                    if t[m][n] is not ZERO and g_inv[n][k] is not ZERO))


def _one_forms(t) -> tuple:
    return tuple(Multivector({(n,): t[m][n] for n in R4 if t[m][n] is not ZERO}) for m in R4)


def _lower_index(arr, g_low) -> tuple:
    return array3(lambda r, a, b: _sum(mul(g_low[r][n], arr[n][a][b]) for n in R4
                                       if g_low[r][n] is not ZERO and arr[n][a][b] is not ZERO))


# -- dual objects -----------------------------------------------------------

@dataclass
class DualCurvature:
    """Duals of the torsion and curvature 2-forms of one geometry.

    Attributes:
        star_torsion: ``⋆T^a`` 2-forms.
        star_curvature: ``⋆R^r_m`` 2-forms, indexed ``[r][m]``.
        components: ``⋆R`` read back as curvature components ``[m][r][a][b]``.
        weighted: ``sqrt|g| * 1/2 eps R`` with both indices of the pair lowered.
        plain: the same without the ``sqrt|g|`` factor.
    """

    star_torsion: tuple
    star_curvature: tuple
    components: tuple
    torsion_components: tuple
    weighted: tuple
    plain: tuple
    dual_pair: str


def dual_curvature(geo: Geometry, dual_pair: str = "second") -> DualCurvature:
    if dual_pair not in DUAL_PAIRS:
        raise ValueError(f"dual_pair must be one of {DUAL_PAIRS}, got {dual_pair!r}")
    star = geo.star
    st = tuple(star(geo.torsion.forms[r]) for r in R4)
    sr = tuple(tuple(star(geo.curvature.forms[r][m]) for m in R4) for r in R4)
    comps = array4(lambda m, r, a, b: _pair_coeff(sr[r][m], a, b))
    tcomps = array3(lambda r, a, b: _pair_coeff(st[r], a, b))
    Rl = lowered_curvature(geo.curvature, geo.g)
    o = geo.orientation.sign
    if dual_pair == "second":
        plain = _epsilon_dual(_raise_pair(Rl, geo.g.inverse), o, first_pair=False)
    else:
        plain = _epsilon_dual(_raise_first_pair(Rl, geo.g.inverse), o, first_pair=True)
    sq = geo.g.sqrt_abs_det
    weighted = array4(lambda m, r, l, s: ZERO if plain[m][r][l][s] is ZERO else mul(sq, plain[m][r][l][s]))
    return DualCurvature(st, sr, comps, tcomps, weighted, plain, dual_pair)


def _pair_coeff(form: Multivector, a: int, b: int) -> Expr:
    if a == b:
        return ZERO
    c = form[(a, b)] if a < b else form[(b, a)]
    if X.is_zero(c):
        return ZERO
    c = as_expr(c)
    return c if a < b else neg(c)


def star_lowered_curvature(geo: Geometry) -> tuple:
    """``⋆R_{m r}`` with ``R_{m r} = 1/2 R_{m r a b} theta^a ^ theta^b``."""
    Rl = lowered_curvature(geo.curvature, geo.g)
    return tuple(tuple(geo.star(two_form(Rl[m][r])) for r in R4) for m in R4)


def dual_component_terms(geo: Geometry, dc: DualCurvature | None = None) -> list:
    """``⋆R_{m r}`` read componentwise minus ``weighted``: vanishes for ``dual_pair="second"``."""
    dc = dc or dual_curvature(geo)
    sl = star_lowered_curvature(geo)
    a, b = [], []
    for m, r in product(R4, R4):
        for (l, s) in [(l, s) for l in R4 for s in R4 if l < s]:
            a.append(_pair_coeff(sl[m][r], l, s))
            b.append(neg(dc.weighted[m][r][l][s]))
    return [a, b]


# -- dual Ricci and Einstein ------------------------------------------------

def _cyclic_blade_coeffs(W, m) -> list:
    """``-(W_{m a b c} + W_{m b c a} + W_{m c a b})`` on each 3-blade ``a<b<c``."""
    return [neg(_sum([W[m][a][b][c], W[m][b][c][a], W[m][c][a][b]])) for (a, b, c) in TRIPLES]


@dataclass
class DualRicci:
    """``⋆ℛ^a`` and the term lists comparing its constructions."""

    forms: tuple
    rii_terms: list
    expansion_terms: list

    def check(self, chart, points, tol: float = ROUTE_TOL) -> dict:
        out = {"rii": residual(chart, self.rii_terms, points),
               "cyclic-expansion": residual(chart, self.expansion_terms, points)}
        for name, res in out.items():
            if res.max_relative >= tol:
                raise RouteMismatch(f"dual Ricci ({name})", res.max_relative)
        return out


def dual_ricci(geo: Geometry, dc: DualCurvature | None = None) -> DualRicci:
    """``⋆ℛ^a`` three ways.

    Direct: ``⋆(R^a_n theta^n)`` with ``R_{m n} = R_m^r_{r n}``.
    Second: ``-⋆ℛ^a_b ^ theta^b`` with ``ℛ^a_b = g^{a m} g_{b n} R^n_m``.
    Third: the cyclic sum of ``weighted`` dual components on each 3-blade.
    """
    dc = dc or dual_curvature(geo)
    g_low, g_inv = geo.g.components, geo.g.inverse
    ric = geo.ricci("e4")
    direct = tuple(geo.star(f) for f in ric.ricci_forms)
    curv = geo.curvature.forms
    rii = []
    for a in R4:
        acc = Multivector()
        for b in R4:
            mixed = Multivector()
            for m in R4:
                if g_inv[a][m] is ZERO:
                    continue
                for n in R4:
                    if g_low[b][n] is ZERO or curv[n][m].is_zero():
                        continue
                    mixed = mixed + curv[n][m] * mul(g_inv[a][m], g_low[b][n])
            if not mixed.is_zero():
                acc = acc - X.wedge(geo.star(mixed), X.theta(b))
        rii.append(acc)
    lower_cyc = [_cyclic_blade_coeffs(dc.weighted, m) for m in R4]
    expansion = []
    for a in R4:
        expansion.append([_sum(mul(g_inv[a][m], lower_cyc[m][k]) for m in R4
                               if g_inv[a][m] is not ZERO and lower_cyc[m][k] is not ZERO)
                          for k in range(4)])
    d3 = [form_components(f, 3) for f in direct]
    rii3 = [form_components(f, 3) for f in rii]
    rii_terms = [flatten(d3), [neg(x) for x in flatten(rii3)]]
    exp_terms = [flatten(d3), [neg(x) for x in flatten(expansion)]]
    return DualRicci(direct, rii_terms, exp_terms)


@dataclass
class DualEinstein:
    """``⋆𝒢^r`` and the wedge construction it is compared with.

    ``forms`` packages the Einstein tensor as ``G^r_n theta^n``;
    ``transposed`` as ``G_n^r theta^n``.  The wedge construction matches
    ``transposed``; the two packagings coincide when Ricci is symmetric.
    """

    forms: tuple
    transposed: tuple
    eii_terms: list

    def check(self, chart, points, tol: float = ROUTE_TOL) -> Residual:
        res = residual(chart, self.eii_terms, points)
        if res.max_relative >= tol:
            raise RouteMismatch("dual Einstein", res.max_relative)
        return res


def dual_einstein(geo: Geometry) -> DualEinstein:
    """``⋆𝒢^r`` directly and as ``1/2 ℛ_{a b} ^ ⋆(theta^a ^ theta^b ^ theta^r)``.

    ``ℛ_{a b} = g_{b n} R^n_a``, the lowering under which the dual Ricci
    identity holds with ``ℛ^a_b = g^{a m} ℛ_{m b}``.
    """
    ric = geo.ricci("e4")
    g_inv = geo.g.inverse
    direct = tuple(geo.star(f) for f in ric.einstein_forms)
    ein_t = array2(lambda r, n: _sum(mul(g_inv[r][m], ric.einstein[n][m]) for m in R4
                                     if g_inv[r][m] is not ZERO and ric.einstein[n][m] is not ZERO))
    transposed = tuple(geo.star(f) for f in _one_forms(ein_t))
    Rl = lowered_curvature(geo.curvature, geo.g)
    low_forms = {(a, b): two_form(Rl[a][b]) for a in R4 for b in R4}
    stars = {}
    other = []
    for r in R4:
        acc = Multivector()
        for a in R4:
            for b in R4:
                if a == b or r in (a, b) or low_forms[a, b].is_zero():
                    continue
                key = (a, b, r)
                if key not in stars:
                    sign, blade = X._canon(key)
                    stars[key] = geo.star(X.blade(*blade, coeff=sign))
                acc = acc + X.wedge(low_forms[a, b], stars[key])
        other.append(acc * HALF)
    d = flatten([form_components(f, 3) for f in transposed])
    o = flatten([form_components(f, 3) for f in other])
    return DualEinstein(direct, transposed, [d, [neg(x) for x in o]])


# -- dual Einstein equation -------------------------------------------------

def dual_field_equation_terms(geo: Geometry, T=None, dual_pair: str = "second",
                              dc: DualCurvature | None = None) -> list:
    """Terms of ``cyc R*_{m(r l s)} + 1/2 R eps_{m r l s} - eps_{r l s k} T_m^k``.

    ``T`` is ``T_{m n}``; when omitted the Einstein tensor is used and the
    sum vanishes identically (for ``dual_pair="second"``).
    """
    dc = dc or dual_curvature(geo, dual_pair)
    ric = geo.ricci("e4")
    eps = levi_civita_symbol(geo.orientation.sign)
    if T is None:
        T = ric.einstein
    T = array2(lambda m, n: as_expr(T[m][n]))
    Tm = _mixed(T, geo.g.inverse)
    half_R = mul(HALF, ric.scalar)
    P = dc.plain
    cyc, scal, src = [], [], []
    for m in R4:
        for (r, l, s) in TRIPLES:
            cyc.append(_sum([P[m][r][l][s], P[m][l][s][r], P[m][s][r][l]]))
            e = eps.get((m, r, l, s), 0)
            scal.append(_scaled(e, half_R) if e else ZERO)
            src.append(neg(_sum(_scaled(eps[(r, l, s, k)], Tm[m][k]) for k in R4
                                if (r, l, s, k) in eps and Tm[m][k] is not ZERO)))
    return [cyc, scal, src]


def dual_einstein_equation_residual(geo: Geometry, points, T=None, dual_pair: str = "second") -> Residual:
    return residual(geo.chart, dual_field_equation_terms(geo, T, dual_pair), points)


# -- reconstruction ---------------------------------------------------------

def reconstruct_connection_from_torsion(g: MetricField, cf, Tprime) -> ConnectionField:
    """The metric-compatible connection whose torsion is ``Tprime``.

    ``Tprime`` is a ``[r][a][b]`` array or anything with ``.components``.
    Built as Levi-Civita plus the contorsion fixed by ``Tprime``.
    """
    comps = getattr(Tprime, "components", Tprime)
    comps = array3(lambda r, a, b: as_expr(comps[r][a][b]))
    lc = levi_civita_connection(g, cf)
    K = contorsion_for_torsion(comps, (g.components, g.inverse))
    return ConnectionField(array3(lambda r, a, b: add(lc.L[r][a][b], as_expr(K[r][a][b]))), label="D'")


# -- reports ----------------------------------------------------------------

@dataclass
class ReportItem:
    """One evaluated constraint."""

    name: str
    tag: str
    residual: Residual
    hold: float = HOLD_TOL
    violate: float = VIOLATE_TOL

    @property
    def verdict(self) -> str:
        return verdict(self.residual.relative, self.hold, self.violate)


@dataclass
class DualityReport:
    """Residuals of a group of constraints at the sample points.

    ``connection`` holds the reconstructed ``D'`` coefficients when one was built.
    """

    check: str
    points: list
    items: list = field(default_factory=list)
    connection: ConnectionField | None = None

    def add(self, name: str, tag: str, res: Residual, hold=HOLD_TOL, violate=VIOLATE_TOL) -> ReportItem:
        item = ReportItem(name, tag, res, hold, violate)
        self.items.append(item)
        return item

    def __getitem__(self, name: str) -> ReportItem:
        for it in self.items:
            if it.name == name:
                return it
        raise KeyError(name)

    def names(self) -> list:
        return [it.name for it in self.items]

    @property
    def verdict(self) -> str:
        vs = {it.verdict for it in self.items}
        if "FAIL" in vs:
            return "FAIL"
        if "INDETERMINATE" in vs:
            return "INDETERMINATE"
        return "PASS"

    def violated(self) -> list:
        return [it for it in self.items if it.verdict == "FAIL"]

    def witnesses(self) -> list:
        """Points where some item exceeds its hold tolerance, with the item names."""
        out = []
        for k, p in enumerate(self.points):
            bad = [it.name for it in self.items if it.residual.relative[k] >= it.hold]
            if bad:
                out.append((tuple(p), bad))
        return out


@dataclass
class CandidatePrime:
    """A proposed metric ``g'`` and connection ``D'``.

    With ``same_metric`` set the metric is taken from the structure and
    ``gprime`` must be absent.
    """

    gprime: MetricField | None = None
    Dprime: ConnectionField | None = None
    same_metric: bool = False

    def __post_init__(self):
        if self.same_metric and self.gprime is not None:
            raise ValueError("same_metric candidate must not carry its own metric")


# -- shared pieces of the duality programs ---------------------------------

class _Starred:
    """Starred objects of ``geo`` together with the candidate ``D'`` geometry."""

    def __init__(self, geo: Geometry, Dprime: ConnectionField, gprime: MetricField | None = None,
                 dual_pair: str = "second"):
        self.geo = geo
        self.gp = gprime or geo.g
        self.dc = dual_curvature(geo, dual_pair)
        self.prime = Geometry(geo.chart, geo.cf, self.gp, Dprime, geo.orientation.sign)
        self.prime.__dict__["sc"] = geo.sc
        self.prime.__dict__["calc"] = geo.calc

    def outer_star(self, form: Multivector) -> Multivector:
        return self.prime.star(form)

    @cached_property
    def star_einstein(self):
        """Ricci data of ``⋆R`` treated as curvature, contracted with ``g'``."""
        return _einstein_from_components(self.dc.components, self.gp.components, self.gp.inverse)

    def f4_terms(self) -> dict:
        """Residual terms of the three-line system that ``D'`` would satisfy."""
        _, _, ein_star = self.star_einstein
        ein_prime = self.prime.ricci("e4").einstein
        star_a = _one_forms(ein_star)
        star_b = _one_forms(ein_prime)
        a = flatten([form_components(self.outer_star(f), 3) for f in star_a])
        b = flatten([neg(x) for f in star_b for x in form_components(self.outer_star(f), 3)])

        st = IndexedFormField(1, 0, 2, {(r,): self.dc.star_torsion[r] for r in R4})
        Dst = ext_cov_derivative(st, self.prime.L, self.geo.cf, self.geo.calc)
        sr_theta = IndexedFormField(1, 0, 3, {
            (r,): _sum_mv(X.wedge(self.dc.star_curvature[r][b], X.theta(b)) for b in R4) for r in R4})
        sr = IndexedFormField(1, 1, 2, {(r, m): self.dc.star_curvature[r][m] for r in R4 for m in R4})
        Dsr = ext_cov_derivative(sr, self.prime.L, self.geo.cf, self.geo.calc)
        return {
            "einstein-dual-equation": [a, b],
            "torsion-dual-bianchi": [Dst.components(), [neg(x) for x in sr_theta.components()]],
            "curvature-dual-bianchi": [Dsr.components()],
        }


def _sum_mv(forms) -> Multivector:
    acc = Multivector()
    for f in forms:
        acc = acc + f
    return acc


def _bianchi_source_lowered(geo: Geometry, T, L: ConnectionField) -> tuple:
    """``sum_cyc(m a b) (D_m T_{r a b} - T^k_{m b} T_{r k a})`` keyed ``[r][triple]``.

    ``T`` is ``T^r_{a b}``; lowering uses ``geo.g`` (``D`` must be compatible with it).
    """
    DT = covariant_derivative_torsion(T, L, geo.cf)
    up = []
    for r in R4:
        row = []
        for (m, a, b) in TRIPLES:
            terms = []
            for (x, y, z) in _cyclic(m, a, b):
                terms.append(DT[x][r][y][z])
                terms += [neg(mul(T[k][x][z], T[r][k][y])) for k in R4
                          if T[k][x][z] is not ZERO and T[r][k][y] is not ZERO]
            row.append(_sum(terms))
        up.append(row)
    g_low = geo.g.components
    return [[_sum(mul(g_low[r][n], up[n][t]) for n in R4 if g_low[r][n] is not ZERO and up[n][t] is not ZERO)
             for t in range(4)] for r in R4]


def _eps_source(eps, sq, Tm, scalar, scalar_sign) -> list:
    """``sqrt|g| (eps_{m a b k} T_r^k + scalar_sign/2 * scalar * eps_{r m a b})`` keyed ``[r][triple]``."""
    half_s = mul(HALF, scalar)
    out = []
    for r in R4:
        row = []
        for (m, a, b) in TRIPLES:
            terms = [_scaled(eps[(m, a, b, k)], Tm[r][k]) for k in R4
                     if (m, a, b, k) in eps and Tm[r][k] is not ZERO]
            e = eps.get((r, m, a, b))
            if e:
                terms.append(_scaled(e * scalar_sign, half_s))
            row.append(mul(sq, _sum(terms)) if terms else ZERO)
        out.append(row)
    return out


def _trace(Tm) -> Expr:
    return _sum(Tm[k][k] for k in R4)


def _trace_condition_terms(eps, Tm) -> list:
    """``eps_{r l s k} T_m^k`` and ``1/2 trace(T) eps_{m r l s}``."""
    half_t = mul(HALF, _trace(Tm))
    a, b = [], []
    for m in R4:
        for (r, l, s) in TRIPLES:
            a.append(_sum(_scaled(eps[(r, l, s, k)], Tm[m][k]) for k in R4
                          if (r, l, s, k) in eps and Tm[m][k] is not ZERO))
            e = eps.get((m, r, l, s))
            b.append(_scaled(e, half_t) if e else ZERO)
    return [a, b]


def _second_bianchi_cyclic(C, L, cf) -> list:
    """``sum_cyc(m n r) D_m C_b^a_{n r}`` for every ``a, b`` and triple."""
    get = covariant_derivative_curvature(C, L, cf)
    out = []
    for b in R4:
        for a in R4:
            for (m, n, r) in TRIPLES:
                out.append(_sum(get(x, b, a, y, z) for (x, y, z) in _cyclic(m, n, r)))
    return out


# -- the three duality programs --------------------------------------------

def same_metric_duality_check(geo: Geometry, points, dual_pair: str = "second") -> DualityReport:
    """Can ``⋆T`` and ``⋆R`` be the torsion and curvature of a ``g``-compatible ``D'``?

    ``D'`` is the unique ``g``-compatible connection with torsion ``⋆T``; the
    report measures how far its curvature and the derived constraints are
    from what duality requires.
    """
    chart = geo.chart
    dc = dual_curvature(geo, dual_pair)
    Dp = reconstruct_connection_from_torsion(geo.g, geo.cf, dc.torsion_components)
    s = _Starred(geo, Dp, dual_pair=dual_pair)
    s.dc = dc
    rep = DualityReport("same-metric-duality", list(points), connection=Dp)

    curv_p = s.prime.curvature.components
    rep.add("curvature-match", "curvature-match",
            residual(chart, [flatten(curv_p), [neg(x) for x in flatten(dc.components)]], points))
    for name, terms in s.f4_terms().items():
        rep.add(name, "dual-system", residual(chart, terms, points))

    eps = levi_civita_symbol(geo.orientation.sign)
    sq = geo.g.sqrt_abs_det
    g_inv = geo.g.inverse
    ric = geo.ricci("e4")
    Tm = _mixed(ric.einstein, g_inv)
    rhs_a = _bianchi_source_lowered(geo, dc.torsion_components, Dp)
    lhs_a = _eps_source(eps, sq, Tm, ric.scalar, -1)
    rep.add("constraint-a", "starred-first-bianchi",
            residual(chart, [flatten(lhs_a), flatten(rhs_a)], points))

    _, star_scalar, star_ein = s.star_einstein
    Tpm = _mixed(star_ein, g_inv)
    lhs_b = _eps_source(eps, sq, Tpm, star_scalar, -1)
    rhs_b = _bianchi_source_lowered(geo, geo.torsion.components, geo.L)
    rep.add("constraint-b", "unstarred-first-bianchi",
            residual(chart, [flatten(lhs_b), [neg(x) for x in flatten(rhs_b)]], points))

    torsion_free = all(x is ZERO for x in flatten(geo.torsion.components))
    if torsion_free:
        rep.add("trace-condition", "lorentzian-trace",
                residual(chart, _trace_condition_terms(eps, Tm), points))
        rep.add("trace-condition-starred", "lorentzian-trace",
                residual(chart, _trace_condition_terms(eps, Tpm), points))
        lhs = _second_bianchi_cyclic(dc.components, Dp, geo.cf)
        rhs = _second_bianchi_cyclic(geo.curvature.components, geo.L, geo.cf)
        rep.add("second-bianchi-comparison", "lorentzian-second-bianchi",
                residual(chart, [lhs, [neg(x) for x in rhs]], points))
    return rep


def theta_tensor(geo: Geometry) -> tuple:
    """``Theta_r^l`` fitted to ``eps_{m a b l} Theta_r^l = B_{r; m a b}``.

    ``B`` is the cyclic torsion source of the first Bianchi identity.  The
    fit contracts with ``eps``: ``Theta_r^l = o/6 sum eps_{m a b l} B_{r; m a b}``,
    exact whenever ``B`` is totally antisymmetric in its triple.
    """
    eps = levi_civita_symbol(geo.orientation.sign)
    B = _bianchi_source_lowered(geo, geo.torsion.components, geo.L)
    o = geo.orientation.sign
    idx = {t: i for i, t in enumerate(TRIPLES)}

    def Bfull(r, m, a, b):
        key = tuple(sorted((m, a, b)))
        if len(set(key)) < 3:
            return ZERO
        sgn = _perm_sign([key.index(x) for x in (m, a, b)])
        v = B[r][idx[key]]
        return ZERO if v is ZERO else _scaled(sgn, v)

    def theta(r, l):
        terms = [_scaled(eps[(m, a, b, l)] * o, Bfull(r, m, a, b))
                 for m in R4 for a in R4 for b in R4 if (m, a, b, l) in eps]
        # eps_{mabl} eps_{mabl} = 6 o^2 in the Levi-Civita symbol
        return mul(SIXTH, _sum(terms))

    Th = array2(theta)
    return Th, B


def particular_case_check(geo: Geometry, points, dual_pair: str = "second") -> DualityReport:
    """The scheme where ``D'`` shares ``g`` and the duals satisfy the field equations.

    Items are named by the constraint they test.  The vanishing-scalar item
    carries the ``clearly-violated`` tag used by the text report.
    """
    chart = geo.chart
    eps = levi_civita_symbol(geo.orientation.sign)
    sq = geo.g.sqrt_abs_det
    g_low, g_inv = geo.g.components, geo.g.inverse
    dc = dual_curvature(geo, dual_pair)
    ric = geo.ricci("e4")
    _, star_scalar, star_ein = _einstein_from_components(dc.components, g_low, g_inv)
    Tm = _mixed(ric.einstein, g_inv)
    Tpm = _mixed(star_ein, g_inv)
    Th, B = theta_tensor(geo)
    rep = DualityReport("particular-case", list(points))

    rep.add("scalar-curvature", "clearly-violated", residual(chart, [[ric.scalar]], points))
    rep.add("star-scalar-curvature", "clearly-violated", residual(chart, [[star_scalar]], points))

    fit = []
    for r in R4:
        for t, (m, a, b) in enumerate(TRIPLES):
            fit.append(_sum(_scaled(eps[(m, a, b, l)], Th[r][l]) for l in R4
                            if (m, a, b, l) in eps and Th[r][l] is not ZERO))
    rep.add("theta-fit", "theta-extraction", residual(chart, [fit, [neg(x) for x in flatten(B)]], points))
    rep.add("einstein-trace", "trace-conditions", residual(chart, [[_trace(Tm)]], points))
    rep.add("theta-trace", "trace-conditions", residual(chart, [[_trace(Th)]], points))

    Rl = lowered_curvature(geo.curvature, geo.g)
    T = geo.torsion.components
    Tp = dc.torsion_components
    W = dc.weighted
    cyc, cyc_star = [], []
    for b in R4:
        for a in R4:
            for (m, n, r) in TRIPLES:
                t1, t2 = [], []
                for (x, y, z) in _cyclic(m, n, r):
                    t1 += [mul(T[k][y][x], Rl[b][a][k][z]) for k in R4
                           if T[k][y][x] is not ZERO and Rl[b][a][k][z] is not ZERO]
                    t2 += [mul(Tp[k][y][x], W[b][a][k][z]) for k in R4
                           if Tp[k][y][x] is not ZERO and W[b][a][k][z] is not ZERO]
                cyc.append(_sum(t1))
                cyc_star.append(_sum(t2))
    rep.add("torsion-curvature-cyclic", "cyclic-conditions", residual(chart, [cyc], points))
    rep.add("torsion-curvature-cyclic-starred", "cyclic-conditions", residual(chart, [cyc_star], points))

    Dp = reconstruct_connection_from_torsion(geo.g, geo.cf, Tp)
    rep.connection = Dp
    rhs = _bianchi_source_lowered(geo, Tp, Dp)
    src = _eps_source(eps, sq, Tm, ZERO, 0)
    rep.add("starred-torsion-source", "flat-dual-source",
            residual(chart, [flatten(rhs), flatten(src)], points))

    lhs = _eps_source(eps, sq, Tpm, _trace(Tpm), 1)
    theta_side = []
    for r in R4:
        for (m, a, b) in TRIPLES:
            theta_side.append(_sum(_scaled(eps[(m, a, b, k)], Th[r][k]) for k in R4
                                   if (m, a, b, k) in eps and Th[r][k] is not ZERO))
    rep.add("theta-source", "dual-theta-source",
            residual(chart, [flatten(lhs), [neg(x) for x in theta_side]], points))
    return rep


def gprime_residual_check(geo: Geometry, cand: CandidatePrime, points,
                          dual_pair: str = "second") -> DualityReport:
    """Residuals of the dual system for a supplied ``(g', D')``.

    Inner duals of ``T`` and ``R`` use ``g``; the outer dual of the Einstein
    difference and all contractions of ``⋆R`` use ``g'``.  Only residuals are
    reported; no claim is made about whether some other candidate exists.
    """
    if cand is None or cand.Dprime is None:
        raise MissingCandidate("gprime check needs a candidate connection D'")
    gp = geo.g if cand.same_metric else cand.gprime
    if gp is None:
        raise MissingCandidate("gprime check needs a candidate metric g' or same_metric")
    s = _Starred(geo, cand.Dprime, gp, dual_pair)
    rep = DualityReport("gprime", list(points), connection=cand.Dprime)
    for name, terms in s.f4_terms().items():
        rep.add(name, "dual-system", residual(geo.chart, terms, points))
    return rep


def nonduality_witness(geo: Geometry, points) -> tuple:
    """``(D⋆T^a - ⋆R^a_b ^ theta^b, D⋆R^a_b)`` residuals with ``D`` the structure's own connection."""
    s = _Starred(geo, geo.L)
    terms = s.f4_terms()
    return (residual(geo.chart, terms["torsion-dual-bianchi"], points),
            residual(geo.chart, terms["curvature-dual-bianchi"], points))


__all__ = [
    "CandidatePrime", "DualCurvature", "DualEinstein", "DualRicci", "DualityReport", "MissingCandidate",
    "ReportItem", "dual_component_terms", "dual_curvature", "dual_einstein",
    "dual_einstein_equation_residual", "dual_field_equation_terms", "dual_ricci", "gprime_residual_check",
    "levi_civita_symbol", "nonduality_witness", "particular_case_check",
    "reconstruct_connection_from_torsion", "same_metric_duality_check", "theta_tensor",
]
