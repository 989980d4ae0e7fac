"""The check catalogue run by ``cartan-dual check``.

Each check returns named items, each item one residual over the sample
points.  A check's verdict is the worst verdict among its items.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import exterior as X
from ..connection import metric_compatibility_residual
from ..curvature import (
    bianchi_first_residual,
    bianchi_second_residual,
    ext_cov_derivative,
    metric_as_indexed,
    riemann_decomposition,
)
from ..duality import (
    DualityReport,
    MissingCandidate,
    dual_component_terms,
    dual_curvature,
    dual_einstein,
    dual_field_equation_terms,
    dual_ricci,
    gprime_residual_check,
    nonduality_witness,
    particular_case_check,
    same_metric_duality_check,
)
from ..exterior import BLADES, FibreMetric
from ..residuals import Residual, evaluate_points, residual, residual_from_values, verdict
from ..structure import flatten
from ..symexpr import DomainError
from .spec import Structure

TAGS = {
    "exterior-identities": "exterior-algebra-identities",
    "cartan-routes": "structure-equations",
    "bianchi-1": "first-bianchi",
    "bianchi-2": "second-bianchi",
    "metric-compat": "metric-compatibility",
    "decomposition": "contorsion-decomposition",
    "dual-ricci": "dual-ricci",
    "dual-einstein": "dual-einstein",
    "dual-field-eq": "dual-einstein-equation",
    "nonduality": "bianchi-non-implication",
    "same-metric-duality": "same-metric-duality",
    "particular-case": "particular-case",
    "gprime": "second-metric-duality",
}


class CheckError(RuntimeError):
    """A domain error raised while running one check."""

    def __init__(self, check: str, cause: Exception):
        self.check = check
        self.cause = cause
        super().__init__(f"check {check}: {type(cause).__name__}: {cause}")


@dataclass
class Item:
    name: str
    tag: str
    residual: Residual


@dataclass
class CheckResult:
    name: str
    items: list
    hold: float
    violate: float
    points: list
    connection: list | None = None
    tag: str = field(default="")

    def __post_init__(self):
        self.tag = self.tag or TAGS[self.name]

    def item_verdict(self, item: Item) -> str:
        return verdict(item.residual.relative, self.hold, self.violate)

    @property
    def per_point(self) -> np.ndarray:
        if not self.items:
            return np.zeros(len(self.points))
        return np.max(np.vstack([it.residual.relative for it in self.items]), axis=0)

    @property
    def verdict(self) -> str:
        return verdict(self.per_point, self.hold, self.violate)

    def witnesses(self) -> list:
        out = []
        for k, p in enumerate(self.points):
            bad = [it.name for it in self.items if it.residual.relative[k] >= self.hold]
            if bad:
                out.append((tuple(p), bad))
        return out


# -- individual checks ------------------------------------------------------

def _numeric_fibres(st: Structure) -> list:
    vals = evaluate_points(st.chart, flatten(st.g.components), st.points)
    return [FibreMetric(row.reshape(4, 4).tolist(), check_signature=False) for row in vals]


def _exterior(st: Structure) -> list:
    blades = [X.blade(*b, coeff=1.0) for b in BLADES]
    o = X.Orientation(st.orientation)
    inv_v, inv_t, def_v, def_t, adj_v, adj_t = [], [], [], [], [], []
    for m in _numeric_fibres(st):
        tau = o.volume(m)
        stars = [X.hodge_star(a, m, o) for a in blades]
        back = [X.hodge_inverse(s, m, o) for s in stars]
        inv_v.append([x - y for a, b in zip(back, blades) for x, y in zip(a.c, b.c)])
        inv_t.append([[x for b in back for x in b.c], [y for b in blades for y in b.c]])
        dv, dt0, dt1 = [], [], []
        for i, a in enumerate(blades):
            for j, b in enumerate(blades):
                if len(BLADES[i]) != len(BLADES[j]):
                    continue
                lhs = X.wedge(a, stars[j]).c[15]
                rhs = X.scalar_product(a, b, m) * tau.c[15]
                dv.append(lhs - rhs)
                dt0.append(lhs)
                dt1.append(rhs)
        def_v.append(dv)
        def_t.append([dt0, dt1])
        rev = [X.reverse(a) for a in blades]
        av, at0, at1 = [], [], []
        for i, a in enumerate(blades):
            for b in blades:
                lc = X.left_contract(a, b, m)
                rc = X.right_contract(b, a, m)
                for c in blades:
                    l1 = X.scalar_product(lc, c, m)
                    l2 = X.scalar_product(b, X.wedge(rev[i], c), m)
                    r1 = X.scalar_product(rc, c, m)
                    r2 = X.scalar_product(b, X.wedge(c, rev[i]), m)
                    av += [l1 - l2, r1 - r2]
                    at0 += [l1, r1]
                    at1 += [l2, r2]
        adj_v.append(av)
        adj_t.append([at0, at1])
    return [
        Item("hodge-inverse", "hodge-inversion", residual_from_values(np.array(inv_v), np.array(inv_t))),
        Item("hodge-definition", "hodge-definition", residual_from_values(np.array(def_v), np.array(def_t))),
        Item("contraction-adjoint", "contraction-adjointness",
             residual_from_values(np.array(adj_v), np.array(adj_t))),
    ]


def _routes(st: Structure) -> list:
    geo = st.geo
    return [Item("torsion-routes", "torsion-structure-equation", geo.torsion.route_residual(st.chart, st.points)),
            Item("curvature-routes", "curvature-structure-equation",
                 geo.curvature.route_residual(st.chart, st.points))]


def _bianchi(which: int):
    def run(st: Structure) -> list:
        fn = bianchi_first_residual if which == 1 else bianchi_second_residual
        res = fn(st.geo, st.points)
        prefix = "first" if which == 1 else "second"
        return [Item(f"{prefix}-bianchi-{k}", f"{prefix}-bianchi-{k}", res[k]) for k in sorted(res)]
    return run


def _metric_compat(st: Structure) -> list:
    geo = st.geo
    comp = flatten(metric_compatibility_residual(geo.L, geo.g, geo.cf))
    Dg = ext_cov_derivative(metric_as_indexed(geo.g), geo.L, geo.cf, geo.calc)
    return [Item("compatibility-components", "metric-compatibility", residual(st.chart, [comp], st.points)),
            Item("dg-forms", "metric-compatibility", residual(st.chart, [Dg.components()], st.points))]


def _decomposition(st: Structure) -> list:
    dec = riemann_decomposition(st.geo)
    ch, pts = st.chart, st.points
    return [Item("curvature-split", "contorsion-decomposition", residual(ch, dec.terms_curvature, pts)),
            Item("j-routes", "contorsion-decomposition", residual(ch, dec.terms_J_routes, pts)),
            Item("ricci-antisymmetric", "ricci-split", residual(ch, dec.terms_ricci_antisym, pts)),
            Item("ricci-symmetric", "ricci-split", residual(ch, dec.terms_ricci_sym, pts))]


def _dual_ricci(st: Structure) -> list:
    dc = dual_curvature(st.geo, st.dual_pair)
    dr = dual_ricci(st.geo, dual_curvature(st.geo, "second"))
    items = [Item("ricci-dual", "dual-ricci", residual(st.chart, dr.rii_terms, st.points)),
             Item("cyclic-expansion", "dual-ricci-expansion", residual(st.chart, dr.expansion_terms, st.points))]
    if st.dual_pair == "second":
        items.insert(0, Item("dual-components", "dual-components",
                             residual(st.chart, dual_component_terms(st.geo, dc), st.points)))
    return items


def _dual_einstein(st: Structure) -> list:
    de = dual_einstein(st.geo)
    return [Item("einstein-dual", "dual-einstein", residual(st.chart, de.eii_terms, st.points))]


def _dual_field_eq(st: Structure) -> list:
    terms = dual_field_equation_terms(st.geo, None, st.dual_pair)
    return [Item("dual-field-equation", "dual-einstein-equation", residual(st.chart, terms, st.points))]


def _nonduality(st: Structure) -> list:
    a, b = nonduality_witness(st.geo, st.points)
    return [Item("torsion-dual-bianchi", "dual-first-bianchi", a),
            Item("curvature-dual-bianchi", "dual-second-bianchi", b)]


def _from_report(rep: DualityReport) -> list:
    return [Item(it.name, it.tag, it.residual) for it in rep.items]


def _connection_entries(L) -> list:
    out = []
    for r in range(4):
        for a in range(4):
            for b in range(4):
                e = L.L[r][a][b]
                if not X.is_zero(e):
                    out.append({"index": [r, a, b], "value": str(e)})
    return out


def _same_metric(st: Structure):
    rep = same_metric_duality_check(st.geo, st.points, st.dual_pair)
    return _from_report(rep), _connection_entries(rep.connection)


def _particular(st: Structure) -> list:
    return _from_report(particular_case_check(st.geo, st.points, st.dual_pair))


def _gprime(st: Structure):
    cand = st.candidate()
    if cand is None:
        raise MissingCandidate("the gprime check needs a candidate block")
    rep = gprime_residual_check(st.geo, cand, st.points, st.dual_pair)
    return _from_report(rep), _connection_entries(rep.connection)


RUNNERS = {
    "exterior-identities": _exterior,
    "cartan-routes": _routes,
    "bianchi-1": _bianchi(1),
    "bianchi-2": _bianchi(2),
    "metric-compat": _metric_compat,
    "decomposition": _decomposition,
    "dual-ricci": _dual_ricci,
    "dual-einstein": _dual_einstein,
    "dual-field-eq": _dual_field_eq,
    "nonduality": _nonduality,
    "same-metric-duality": _same_metric,
    "particular-case": _particular,
    "gprime": _gprime,
}


def run_check(st: Structure, name: str, hold: float | None = None) -> CheckResult:
    hold = st.hold if hold is None else hold
    violate = max(st.violate, hold)
    try:
        out = RUNNERS[name](st)
    except (DomainError, ArithmeticError, MissingCandidate, ValueError) as e:
        raise CheckError(name, e) from e
    conn = None
    if isinstance(out, tuple):
        out, conn = out
    return CheckResult(name, out, hold, violate, list(st.points), conn)


def run_checks(st: Structure, only=None, hold: float | None = None) -> list:
    """Run the requested checks in catalogue order."""
    names = list(st.checks)
    if only:
        unknown = [n for n in only if n not in RUNNERS]
        if unknown:
            raise KeyError(f"unknown checks: {', '.join(unknown)}")
        names = [n for n in RUNNERS if n in only]
    order = list(RUNNERS)
    names.sort(key=order.index)
    return [run_check(st, n, hold) for n in names]
