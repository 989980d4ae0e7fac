"""Torsion and curvature, Ricci data, exterior covariant derivative, Bianchi residuals.

Curvature components are stored as ``R[mu][rho][alpha][beta]`` for
``R_mu^rho_{alpha beta}``, the transported index first.  The curvature
2-forms are ``R^rho_mu = 1/2 R_mu^rho_{alpha beta} theta^alpha ^ theta^beta``.

Every quantity is produced by two independent routes where possible:
componentwise formulas, and wedge products of forms with ``d`` taken
through the coordinate basis.  The routes are compared numerically.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product

from . import exterior as X
from .connection import (
    ConnectionField,
    FrameNotCoordinate,
    connection_one_forms,
    levi_civita_connection,
    torsion_components,
)
from .exterior import BLADES, Multivector
from .residuals import Residual, residual
from .structure import (
    CoFrameField,
    FrameCalculus,
    MetricField,
    StructureCoefficients,
    array2,
    array3,
)
from .symexpr import ZERO, Chart, Expr, add, const, mul, neg

R4 = range(4)
HALF = const(Fraction(1, 2))
PAIRS = [(a, b) for a in R4 for b in R4 if a < b]
ROUTE_TOL_TORSION = 1e-9
ROUTE_TOL_CURVATURE = 1e-8


class RouteMismatch(ArithmeticError):
    """Two constructions of the same object disagree beyond tolerance."""

    def __init__(self, what: str, rel: float, point=None):
        self.what = what
        self.relative = rel
        self.point = point
        super().__init__(f"{what}: routes disagree, relative residual {rel:.3e} at {point}")


class DegreeOverflow(ValueError):
    """The exterior covariant derivative of a 4-form was requested."""


def array4(fn) -> tuple:
    return tuple(tuple(tuple(tuple(fn(i, j, k, l) for l in R4) for k in R4) for j in R4) for i in R4)


def two_form(components) -> Multivector:
    """``1/2 C_{a b} theta^a ^ theta^b`` from an antisymmetric 4x4 array."""
    return Multivector({(a, b): components[a][b] for a, b in PAIRS if components[a][b] is not ZERO})


def form_components(form: Multivector, grade: int) -> list:
    """Coefficients of ``form`` on the grade-``grade`` basis blades, in basis order."""
    return [form.c[k] if not X.is_zero(form.c[k]) else ZERO
            for k, b in enumerate(BLADES) if len(b) == grade]


def _mv_terms(*forms, grade: int):
    return [form_components(f, grade) for f in forms]


def _sum_forms(forms) -> Multivector:
    acc = Multivector()
    for f in forms:
        acc = acc + f
    return acc


# -- geometry bundle --------------------------------------------------------

class Geometry:
    """Chart, coframe, metric and connection with lazily derived objects."""

    def __init__(self, chart: Chart, cf: CoFrameField, g: MetricField, L: ConnectionField,
                 orientation: int = 1):
        self.chart = chart
        self.cf = cf
        self.g = g
        self.L = L
        self.orientation = X.Orientation(orientation)

    @cached_property
    def sc(self) -> StructureCoefficients:
        from .structure import structure_coefficients

        return structure_coefficients(self.cf)

    @cached_property
    def calc(self) -> FrameCalculus:
        return FrameCalculus(self.cf, self.sc)

    @cached_property
    def omega(self) -> tuple:
        return connection_one_forms(self.L, self.cf)

    @cached_property
    def torsion(self) -> "TorsionField":
        return torsion(self.L, self.cf, self.sc, self.calc)

    @cached_property
    def curvature(self) -> "CurvatureField":
        return curvature(self.L, self.cf, self.chart, self.sc, self.calc, g=self.g)

    def ricci(self, convention: str = "e4") -> "RicciData":
        return ricci_einstein(self.curvature, self.g, convention, self.cf)

    @cached_property
    def theta(self) -> tuple:
        return tuple(X.theta(i) for i in R4)

    @cached_property
    def fibre(self) -> X.FibreMetric:
        return self.g.fibre

    def star(self, form: Multivector) -> Multivector:
        return X.hodge_star(form, self.fibre, self.orientation)

    def with_connection(self, L: ConnectionField) -> "Geometry":
        geo = Geometry(self.chart, self.cf, self.g, L, self.orientation.sign)
        geo.__dict__["sc"] = self.sc
        geo.__dict__["calc"] = self.calc
        return geo


# -- torsion ----------------------------------------------------------------

@dataclass
class TorsionField:
    """Torsion components ``T[rho][alpha][beta]`` and 2-forms from both routes."""

    components: tuple
    forms: tuple
    forms_structure: tuple

    def route_residual(self, chart: Chart, points) -> Residual:
        terms = [[], []]
        for r in R4:
            a, b = _mv_terms(self.forms[r], -self.forms_structure[r], grade=2)
            terms[0] += a
            terms[1] += b
        return residual(chart, terms, points)


def torsion(L: ConnectionField, cf: CoFrameField, sc: StructureCoefficients | None = None,
            calc: FrameCalculus | None = None, points=None) -> TorsionField:
    """Torsion components and 2-forms.

    Components: ``T^r_{a b} = L^r_{a b} - L^r_{b a} - c^r_{a b}``.
    Forms: ``T^r = d theta^r + omega^r_b ^ theta^b`` with ``d`` through coordinates.
    When ``points`` are given the two are compared and :class:`RouteMismatch`
    is raised on disagreement.
    """
    if calc is None:
        calc = FrameCalculus(cf, sc)
    sc = calc.sc
    comps = torsion_components(L, sc)
    forms = tuple(two_form(comps[r]) for r in R4)
    omega = connection_one_forms(L, cf)
    structural = []
    for r in R4:
        acc = calc.d_coordinate_route(X.theta(r).map(lambda c: c if isinstance(c, Expr) else const(c)))
        for b in R4:
            acc = acc + X.wedge(omega[r][b], X.theta(b))
        structural.append(acc)
    tf = TorsionField(comps, forms, tuple(structural))
    if points is not None:
        res = tf.route_residual(cf.chart, points)
        if res.max_relative >= ROUTE_TOL_TORSION:
            raise RouteMismatch("torsion", res.max_relative)
    return tf


# -- curvature --------------------------------------------------------------

@dataclass
class CurvatureField:
    """Curvature components ``R[mu][rho][alpha][beta]`` and 2-forms ``forms[rho][mu]``."""

    components: tuple
    forms: tuple
    forms_structure: tuple
    lowered: tuple | None = None

    def route_residual(self, chart: Chart, points) -> Residual:
        terms = [[], []]
        for r in R4:
            for m in R4:
                a, b = _mv_terms(self.forms[r][m], -self.forms_structure[r][m], grade=2)
                terms[0] += a
                terms[1] += b
        return residual(chart, terms, points)


def curvature_components(L: ConnectionField, cf: CoFrameField, sc: StructureCoefficients) -> tuple:
    """``R_m^r_{a b} = e_a(L^r_{b m}) - e_b(L^r_{a m}) + L^r_{a s} L^s_{b m}
    - L^r_{b s} L^s_{a m} - c^s_{a b} L^r_{s m}``."""
    LL = L.L
    coordinate = cf.is_coordinate

    def comp(m, r, a, b):
        if a == b:
            return ZERO
        if a > b:
            return None
        terms = [cf.frame_derivative(LL[r][b][m], a), neg(cf.frame_derivative(LL[r][a][m], b))]
        for s in R4:
            if LL[r][a][s] is not ZERO and LL[s][b][m] is not ZERO:
                terms.append(mul(LL[r][a][s], LL[s][b][m]))
            if LL[r][b][s] is not ZERO and LL[s][a][m] is not ZERO:
                terms.append(neg(mul(LL[r][b][s], LL[s][a][m])))
            if not coordinate and sc.c[s][a][b] is not ZERO and LL[r][s][m] is not ZERO:
                terms.append(neg(mul(sc.c[s][a][b], LL[r][s][m])))
        return add(*terms)

    upper = {(m, r, a, b): comp(m, r, a, b) for m in R4 for r in R4 for a, b in PAIRS}
    return array4(lambda m, r, a, b: ZERO if a == b else (
        upper[m, r, a, b] if a < b else neg(upper[m, r, b, a])))


def curvature(L: ConnectionField, cf: CoFrameField, chart: Chart | None = None,
              sc: StructureCoefficients | None = None, calc: FrameCalculus | None = None,
              points=None, g: MetricField | None = None) -> CurvatureField:
    """Curvature components and 2-forms by both routes.

    Forms route: ``R^r_m = d omega^r_m + omega^r_b ^ omega^b_m``.
    """
    if calc is None:
        calc = FrameCalculus(cf, sc)
    sc = calc.sc
    comps = curvature_components(L, cf, sc)
    forms = tuple(tuple(two_form(comps[m][r]) for m in R4) for r in R4)
    omega = connection_one_forms(L, cf)
    structural = []
    for r in R4:
        row = []
        for m in R4:
            acc = calc.d_coordinate_route(omega[r][m])
            for b in R4:
                acc = acc + X.wedge(omega[r][b], omega[b][m])
            row.append(acc)
        structural.append(tuple(row))
    lowered = None
    if g is not None:
        G = g.components
        lowered = array4(lambda m, n, a, b: add(*(mul(G[n][r], comps[m][r][a][b]) for r in R4
                                                    if G[n][r] is not ZERO and comps[m][r][a][b] is not ZERO)))
    cfield = CurvatureField(comps, forms, tuple(structural), lowered)
    if points is not None:
        res = cfield.route_residual(chart or cf.chart, points)
        if res.max_relative >= ROUTE_TOL_CURVATURE:
            raise RouteMismatch("curvature", res.max_relative)
    return cfield


def lowered_curvature(curv: CurvatureField, g: MetricField) -> tuple:
    """``R_{m n a b} = g_{n r} R_m^r_{a b}``."""
    if curv.lowered is not None:
        return curv.lowered
    G = g.components
    comps = curv.components
    return array4(lambda m, n, a, b: add(*(mul(G[n][r], comps[m][r][a][b]) for r in R4
                                           if G[n][r] is not ZERO and comps[m][r][a][b] is not ZERO)))


# -- Ricci and Einstein -----------------------------------------------------

@dataclass
class RicciData:
    """Ricci tensor, scalar, Einstein tensor and their 1-form packagings.

    ``ricci_forms[m] = R^m_n theta^n`` and ``einstein_forms[m] = G^m_n theta^n``;
    the energy-momentum 1-forms are identified with the Einstein 1-forms.
    """

    ricci: tuple
    scalar: Expr
    einstein: tuple
    ricci_mixed: tuple
    einstein_mixed: tuple
    ricci_forms: tuple
    einstein_forms: tuple
    convention: str

    @property
    def energy_momentum_forms(self) -> tuple:
        return self.einstein_forms


def ricci_einstein(curv: CurvatureField, g: MetricField, convention: str = "e4",
                   cf: CoFrameField | None = None) -> RicciData:
    """Contract curvature to Ricci data.

    ``convention="e4"``: ``R_{m n} = R_m^r_{r n}``.
    ``convention="appendixB"``: ``R_{m n} = R_m^r_{n r}`` (opposite sign).
    """
    if convention not in ("e4", "appendixB"):
        raise ValueError(f"unknown Ricci convention {convention!r}")
    C = curv.components
    if convention == "e4":
        ric = array2(lambda m, n: add(*(C[m][r][r][n] for r in R4)))
    else:
        ric = array2(lambda m, n: add(*(C[m][r][n][r] for r in R4)))
    Gi, G = g.inverse, g.components
    scalar = add(*(mul(Gi[m][n], ric[m][n]) for m in R4 for n in R4
                   if Gi[m][n] is not ZERO and ric[m][n] is not ZERO))
    half_R = mul(HALF, scalar)
    ein = array2(lambda m, n: add(ric[m][n], neg(mul(G[m][n], half_R))))
    raise2 = lambda t: array2(lambda m, n: add(*(mul(Gi[m][a], t[a][n]) for a in R4
                                               if Gi[m][a] is not ZERO and t[a][n] is not ZERO)))
    ric_mixed = raise2(ric)
    ein_mixed = raise2(ein)
    as_forms = lambda t: tuple(Multivector({(n,): t[m][n] for n in R4 if t[m][n] is not ZERO}) for m in R4)
    return RicciData(ric, scalar, ein, ric_mixed, ein_mixed, as_forms(ric_mixed), as_forms(ein_mixed),
                     convention)


# -- indexed forms and the exterior covariant derivative --------------------

class IndexedFormField:
    """Family of forms ``X^{up...}_{down...}`` of a single grade.

    ``forms`` maps index tuples ``up + down`` (length ``n_up + n_down``) to
    :class:`Multivector` values with symbolic coefficients.
    """

    def __init__(self, n_up: int, n_down: int, grade: int, forms: dict):
        self.n_up = n_up
        self.n_down = n_down
        self.grade = grade
        full = {}
        for idx in product(R4, repeat=n_up + n_down):
            f = forms.get(idx, Multivector())
            if not f.is_zero() and f.grades() != {grade}:
                raise ValueError(f"component {idx} is not a {grade}-form")
            full[idx] = f
        self.forms = full

    def __getitem__(self, idx):
        if isinstance(idx, int):
            idx = (idx,)
        return self.forms[tuple(idx)]

    def keys(self):
        return self.forms.keys()

    def __add__(self, other):
        self._same_shape(other)
        return IndexedFormField(self.n_up, self.n_down, self.grade,
                                {k: self.forms[k] + other.forms[k] for k in self.forms})

    def __sub__(self, other):
        self._same_shape(other)
        return IndexedFormField(self.n_up, self.n_down, self.grade,
                                {k: self.forms[k] - other.forms[k] for k in self.forms})

    def _same_shape(self, other):
        if (self.n_up, self.n_down) != (other.n_up, other.n_down):
            raise ValueError("indexed forms have different index structure")

    def components(self) -> list:
        """Flat list of all coefficients (basis order, index order)."""
        out = []
        for k in sorted(self.forms):
            out += form_components(self.forms[k], self.grade)
        return out


def indexed_wedge(x: IndexedFormField, y: IndexedFormField) -> IndexedFormField:
    """``(X ^ Y)^{I J}_{K L} = X^I_K ^ Y^J_L``; index order is ``up(X) up(Y) down(X) down(Y)``."""
    out = {}
    for ix in x.keys():
        for iy in y.keys():
            up = ix[:x.n_up] + iy[:y.n_up]
            down = ix[x.n_up:] + iy[y.n_up:]
            out[up + down] = X.wedge(x.forms[ix], y.forms[iy])
    return IndexedFormField(x.n_up + y.n_up, x.n_down + y.n_down, x.grade + y.grade, out)


def ext_cov_derivative(field: IndexedFormField, L: ConnectionField, cf: CoFrameField,
                       calc: FrameCalculus | None = None) -> IndexedFormField:
    """``DX = dX + omega^m_s ^ X^{..s..} - omega^s_n ^ X_{..s..}``, one term per index.

    Raises:
        DegreeOverflow: for 4-form input.
    """
    if field.grade >= 4:
        raise DegreeOverflow("the exterior covariant derivative of a 4-form is not defined here")
    if calc is None:
        calc = FrameCalculus(cf)
    omega = connection_one_forms(L, cf)
    out = {}
    p = field.n_up
    for idx, f in field.forms.items():
        acc = calc.d(f)
        for pos in range(p + field.n_down):
            for s in R4:
                swapped = idx[:pos] + (s,) + idx[pos + 1:]
                xs = field.forms[swapped]
                if xs.is_zero():
                    continue
                if pos < p:
                    w = omega[idx[pos]][s]
                    acc = acc + X.wedge(w, xs)
                else:
                    w = omega[s][idx[pos]]
                    acc = acc - X.wedge(w, xs)
        out[idx] = acc
    return IndexedFormField(field.n_up, field.n_down, field.grade + 1, out)


def curvature_action(field: IndexedFormField, curv: CurvatureField) -> IndexedFormField:
    """``R^m_s ^ X^{..s..} - R^s_n ^ X_{..s..}``: what ``DD`` must equal."""
    out = {}
    p = field.n_up
    for idx in field.forms:
        acc = Multivector()
        for pos in range(p + field.n_down):
            for s in R4:
                swapped = idx[:pos] + (s,) + idx[pos + 1:]
                xs = field.forms[swapped]
                if xs.is_zero():
                    continue
                if pos < p:
                    acc = acc + X.wedge(curv.forms[idx[pos]][s], xs)
                else:
                    acc = acc - X.wedge(curv.forms[s][idx[pos]], xs)
        out[idx] = acc
    return IndexedFormField(field.n_up, field.n_down, field.grade + 2, out)


def metric_as_indexed(g: MetricField) -> IndexedFormField:
    return IndexedFormField(0, 2, 0, {(m, n): Multivector.scalar(g.components[m][n])
                                      for m in R4 for n in R4 if g.components[m][n] is not ZERO})


# -- Bianchi identities -----------------------------------------------------

def _cyclic(a, b, c):
    return ((a, b, c), (b, c, a), (c, a, b))


def covariant_derivative_torsion(T, L: ConnectionField, cf: CoFrameField) -> tuple:
    """``D_m T^r_{a b}`` as ``[m][r][a][b]``."""
    LL = L.L

    def comp(m, r, a, b):
        terms = [cf.frame_derivative(T[r][a][b], m)]
        for s in R4:
            if LL[r][m][s] is not ZERO and T[s][a][b] is not ZERO:
                terms.append(mul(LL[r][m][s], T[s][a][b]))
            if LL[s][m][a] is not ZERO and T[r][s][b] is not ZERO:
                terms.append(neg(mul(LL[s][m][a], T[r][s][b])))
            if LL[s][m][b] is not ZERO and T[r][a][s] is not ZERO:
                terms.append(neg(mul(LL[s][m][b], T[r][a][s])))
        return add(*terms)

    return array4(comp)


def covariant_derivative_curvature(C, L: ConnectionField, cf: CoFrameField) -> dict:
    """``D_m R_b^a_{n r}`` keyed by ``(m, b, a, n, r)``, computed lazily per key."""
    LL = L.L
    cache = {}

    def get(m, b, a, n, r):
        key = (m, b, a, n, r)
        if key in cache:
            return cache[key]
        terms = [cf.frame_derivative(C[b][a][n][r], m)]
        for s in R4:
            if LL[a][m][s] is not ZERO and C[b][s][n][r] is not ZERO:
                terms.append(mul(LL[a][m][s], C[b][s][n][r]))
            if LL[s][m][b] is not ZERO and C[s][a][n][r] is not ZERO:
                terms.append(neg(mul(LL[s][m][b], C[s][a][n][r])))
            if LL[s][m][n] is not ZERO and C[b][a][s][r] is not ZERO:
                terms.append(neg(mul(LL[s][m][n], C[b][a][s][r])))
            if LL[s][m][r] is not ZERO and C[b][a][n][s] is not ZERO:
                terms.append(neg(mul(LL[s][m][r], C[b][a][n][s])))
        cache[key] = v = add(*terms)
        return v

    return get


TRIPLES = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]


def bianchi_first_terms(geo: Geometry) -> dict:
    """Term lists for the first Bianchi identity in form and component versions."""
    T = geo.torsion
    C = geo.curvature.components
    DT = covariant_derivative_torsion(T.components, geo.L, geo.cf)
    TT = T.components
    comp_terms = [[], [], []]
    for r in R4:
        for (m, a, b) in TRIPLES:
            rs, ds, tts = [], [], []
            for (x, y, z) in _cyclic(m, a, b):
                rs.append(C[x][r][y][z])
                ds.append(neg(DT[x][r][y][z]))
                tts.append(add(*(mul(TT[k][x][z], TT[r][k][y]) for k in R4
                                 if TT[k][x][z] is not ZERO and TT[r][k][y] is not ZERO)))
            comp_terms[0].append(add(*rs))
            comp_terms[1].append(add(*ds))
            comp_terms[2].append(add(*tts))
    form_terms = [[], [], []]
    omega = geo.omega
    for r in R4:
        dT = geo.calc.d_coordinate_route(T.forms[r])
        wT = _sum_forms(X.wedge(omega[r][b], T.forms[b]) for b in R4)
        Rt = _sum_forms(X.wedge(geo.curvature.forms[r][b], X.theta(b)) for b in R4)
        for lst, f in zip(form_terms, (dT, wT, -Rt)):
            lst += form_components(f, 3)
    return {"components": comp_terms, "forms": form_terms}


def bianchi_first_residual(geo: Geometry, points) -> dict:
    """Residuals of ``DT^r - R^r_b ^ theta^b`` and of its component form."""
    t = bianchi_first_terms(geo)
    return {"forms": residual(geo.chart, t["forms"], points),
            "components": residual(geo.chart, t["components"], points)}


def bianchi_second_terms(geo: Geometry) -> dict:
    C = geo.curvature.components
    TT = geo.torsion.components
    DR = covariant_derivative_curvature(C, geo.L, geo.cf)
    comp_terms = [[], []]
    for b in R4:
        for a in R4:
            for (m, n, r) in TRIPLES:
                ds, ts = [], []
                for (x, y, z) in _cyclic(m, n, r):
                    ds.append(DR(x, b, a, y, z))
                    ts.append(neg(add(*(mul(TT[k][y][x], C[b][a][k][z]) for k in R4
                                        if TT[k][y][x] is not ZERO and C[b][a][k][z] is not ZERO))))
                comp_terms[0].append(add(*ds))
                comp_terms[1].append(add(*ts))
    form_terms = [[], [], []]
    omega = geo.omega
    Rf = geo.curvature.forms
    for r in R4:
        for m in R4:
            dR = geo.calc.d_coordinate_route(Rf[r][m])
            w1 = _sum_forms(X.wedge(omega[r][b], Rf[b][m]) for b in R4)
            w2 = _sum_forms(X.wedge(omega[b][m], Rf[r][b]) for b in R4)
            for lst, f in zip(form_terms, (dR, w1, -w2)):
                lst += form_components(f, 3)
    return {"components": comp_terms, "forms": form_terms}


def bianchi_second_residual(geo: Geometry, points) -> dict:
    """Residuals of ``DR^r_m`` and of the cyclic component identity."""
    t = bianchi_second_terms(geo)
    return {"forms": residual(geo.chart, t["forms"], points),
            "components": residual(geo.chart, t["components"], points)}


def lorentzian_first_bianchi_terms(geo: Geometry) -> list:
    """``R^r_b ^ theta^b`` (vanishes for torsion-free connections)."""
    out = []
    for r in R4:
        f = _sum_forms(X.wedge(geo.curvature.forms[r][b], X.theta(b)) for b in R4)
        out += form_components(f, 3)
    return [out]


# -- symmetries -------------------------------------------------------------

def pair_antisymmetry_terms(geo: Geometry) -> list:
    """``R_{m n a b} + R_{n m a b}``: zero for metric-compatible connections."""
    Rl = lowered_curvature(geo.curvature, geo.g)
    a_terms, b_terms = [], []
    for m, n, a, b in product(R4, R4, R4, R4):
        a_terms.append(Rl[m][n][a][b])
        b_terms.append(Rl[n][m][a][b])
    return [a_terms, b_terms]


def pair_symmetry_terms(geo: Geometry) -> list:
    """``R_{m n a b} - R_{a b m n}``: zero for torsion-free metric connections."""
    Rl = lowered_curvature(geo.curvature, geo.g)
    a_terms, b_terms = [], []
    for m, n, a, b in product(R4, R4, R4, R4):
        a_terms.append(Rl[m][n][a][b])
        b_terms.append(neg(Rl[a][b][m][n]))
    return [a_terms, b_terms]


def naive_omega_terms(geo: Geometry) -> list:
    """Difference between ``d omega + omega^omega - omega^omega`` (index pattern of
    a (1,1) tensor-valued form) and the curvature 2-forms."""
    omega = geo.omega
    naive_minus_curv = []
    curv = []
    for m in R4:
        for n in R4:
            naive = geo.calc.d(omega[m][n])
            for a in R4:
                naive = naive + X.wedge(omega[m][a], omega[a][n]) - X.wedge(omega[a][n], omega[m][a])
            naive_minus_curv += form_components(naive - geo.curvature.forms[m][n], 2)
            curv += form_components(geo.curvature.forms[m][n], 2)
    return [naive_minus_curv], curv


# -- decomposition relative to a reference Levi-Civita connection -----------

@dataclass
class RiemannDecomposition:
    """Pieces of ``R = R_ref + J_[ab]`` and the Ricci split."""

    contorsion: tuple
    reference_curvature: tuple
    J: tuple
    J_alt: tuple
    terms_curvature: list
    terms_J_routes: list
    terms_ricci_antisym: list
    terms_ricci_sym: list


def riemann_decomposition(geo: Geometry, g_ref: MetricField | None = None) -> RiemannDecomposition:
    """Split the curvature of ``geo.L`` against the Levi-Civita connection of ``g_ref``.

    ``J_m^r_{a b} = Dref_a K^r_{b m} - K^r_{b s} K^s_{a m}``, also computed as
    ``D_a K^r_{b m} - K^r_{a s} K^s_{b m} + K^s_{a b} K^r_{s m}``.
    Ricci contraction here is ``R_{m a} = R_m^r_{a r}``.

    Raises:
        FrameNotCoordinate: for anholonomic coframes.
    """
    if not geo.cf.is_coordinate:
        raise FrameNotCoordinate("curvature decomposition requires a coordinate coframe")
    g_ref = g_ref or geo.g
    cf = geo.cf
    lc = levi_civita_connection(g_ref, cf)
    ref_geo = geo.with_connection(lc)
    Rref = ref_geo.curvature.components
    LL, G0 = geo.L.L, lc.L
    K = array3(lambda r, a, b: add(LL[r][a][b], neg(G0[r][a][b])))

    def cov(Lc, r, a, b, m):
        # D_a K^r_{b m} for connection coefficients Lc
        terms = [cf.frame_derivative(K[r][b][m], a)]
        for s in R4:
            if Lc[r][a][s] is not ZERO and K[s][b][m] is not ZERO:
                terms.append(mul(Lc[r][a][s], K[s][b][m]))
            if Lc[s][a][b] is not ZERO and K[r][s][m] is not ZERO:
                terms.append(neg(mul(Lc[s][a][b], K[r][s][m])))
            if Lc[s][a][m] is not ZERO and K[r][b][s] is not ZERO:
                terms.append(neg(mul(Lc[s][a][m], K[r][b][s])))
        return add(*terms)

    def kk(r, x, y, m):
        return add(*(mul(K[r][x][s], K[s][y][m]) for s in R4
                     if K[r][x][s] is not ZERO and K[s][y][m] is not ZERO))

    J = array4(lambda m, r, a, b: add(cov(G0, r, a, b, m), neg(kk(r, b, a, m))))
    J_alt = array4(lambda m, r, a, b: add(
        cov(LL, r, a, b, m), neg(kk(r, a, b, m)),
        add(*(mul(K[s][a][b], K[r][s][m]) for s in R4 if K[s][a][b] is not ZERO and K[r][s][m] is not ZERO))))
    C = geo.curvature.components
    t_curv = [[], [], [], []]
    t_routes = [[], []]
    for m, r, a, b in product(R4, R4, R4, R4):
        t_curv[0].append(C[m][r][a][b])
        t_curv[1].append(neg(Rref[m][r][a][b]))
        t_curv[2].append(neg(J[m][r][a][b]))
        t_curv[3].append(J[m][r][b][a])
        t_routes[0].append(J[m][r][a][b])
        t_routes[1].append(neg(J_alt[m][r][a][b]))
    ric = array2(lambda m, a: add(*(C[m][r][a][r] for r in R4)))
    ric_ref = array2(lambda m, a: add(*(Rref[m][r][a][r] for r in R4)))
    jric = array2(lambda m, a: add(*(add(J[m][r][a][r], neg(J[m][r][r][a])) for r in R4)))
    anti = [[], []]
    sym = [[], [], []]
    for m, a in product(R4, R4):
        anti[0].append(mul(HALF, add(ric[m][a], neg(ric[a][m]))))
        anti[1].append(neg(mul(HALF, add(jric[m][a], neg(jric[a][m])))))
        sym[0].append(mul(HALF, add(ric[m][a], ric[a][m])))
        sym[1].append(neg(mul(HALF, add(ric_ref[m][a], ric_ref[a][m]))))
        sym[2].append(neg(mul(HALF, add(jric[m][a], jric[a][m]))))
    return RiemannDecomposition(K, Rref, J, J_alt, t_curv, t_routes, anti, sym)


__all__ = [
    "CurvatureField", "DegreeOverflow", "Geometry", "IndexedFormField", "RicciData",
    "RiemannDecomposition", "RouteMismatch", "TorsionField", "array4", "bianchi_first_residual",
    "bianchi_second_residual", "curvature", "curvature_action", "curvature_components",
    "ext_cov_derivative", "form_components", "indexed_wedge", "lowered_curvature",
    "metric_as_indexed", "naive_omega_terms", "pair_antisymmetry_terms", "pair_symmetry_terms",
    "ricci_einstein", "riemann_decomposition", "torsion", "two_form",
]
