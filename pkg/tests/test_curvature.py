import random

import numpy as np
import pytest

from cartan_dual import exterior as X
from cartan_dual.connection import ConnectionField, FrameNotCoordinate, lc_plus_contorsion, levi_civita_connection
from cartan_dual.curvature import (
    DegreeOverflow, Geometry, IndexedFormField, RouteMismatch, bianchi_first_residual, bianchi_second_residual,
    curvature, curvature_action, ext_cov_derivative, indexed_wedge, lorentzian_first_bianchi_terms,
    lowered_curvature, metric_as_indexed, naive_omega_terms, pair_antisymmetry_terms, pair_symmetry_terms,
    riemann_decomposition, torsion,
)
from cartan_dual.residuals import residual
from cartan_dual.structure import (
    CoFrameField, FrameCalculus, MetricField, StructureCoefficients, evaluate_at, flatten, structure_coefficients,
)
from cartan_dual.symexpr import Chart, add, as_expr, const, neg, parse_expr

from conftest import FIXTURES, structure
from factories import CART, COORDS, SAMPLE_POINTS, random_torsionful_geometry
from oracles import schwarzschild_oracle

IDENTITY_TOL = 1e-8
SCHW = Chart(("t", "r", "th", "ph"), (("M", 1.0),))
VACUUM_POINTS = [(0.0, 3.0, 1.0, 0.3), (0.5, 4.0, 0.7, 1.0), (1.0, 10.0, 2.0, 2.0)]


def matrix(rows, chart):
    return [[parse_expr(x, chart) for x in row] for row in rows]


def diag(*entries):
    return [[entries[i] if i == j else "0" for j in range(4)] for i in range(4)]


def schwarzschild_geometry(cf=None):
    g = MetricField(SCHW, matrix(diag("1 - 2*M/r", "-1/(1 - 2*M/r)", "-r^2", "-r^2*sin(th)^2"), SCHW))
    cf = cf or CoFrameField(SCHW)
    return Geometry(SCHW, cf, g, levi_civita_connection(g, cf))


def zero_residual(chart, lhs, rhs, points):
    a = [as_expr(x) for x in lhs]
    b = [neg(as_expr(x)) for x in rhs]
    return residual(chart, [a, b], points)


def random_indexed(rng, n_up, n_down, grade):
    blades = [b for b in X.BLADES if len(b) == grade]
    forms = {}
    for idx in __import__("itertools").product(range(4), repeat=n_up + n_down):
        if rng.random() < 0.6:
            coeffs = {}
            for b in rng.sample(blades, min(2, len(blades))):
                c, v = rng.choice(COORDS), rng.choice(COORDS)
                coeffs[b] = parse_expr(f"({rng.randint(-3, 3)}/4)*{c}*{v} + ({rng.randint(-3, 3)}/5)*sin({c})", CART)
            forms[idx] = X.Multivector(coeffs)
    return IndexedFormField(n_up, n_down, grade, forms)


# -- Schwarzschild against an independent oracle ----------------------------

def test_schwarzschild_riemann_and_ricci_against_oracle():
    xs, M, _, _, riem, ric = schwarzschild_oracle()
    geo = schwarzschild_geometry()
    comps = evaluate_at(SCHW, flatten(geo.curvature.components), VACUUM_POINTS).reshape(-1, 4, 4, 4, 4)
    for k, p in enumerate(VACUUM_POINTS):
        subs = dict(zip(xs, p)) | {M: 1}
        want = np.array([[[[float(riem[m][r][a][b].subs(subs)) for b in range(4)] for a in range(4)]
                          for r in range(4)] for m in range(4)])
        np.testing.assert_allclose(comps[k], want, rtol=1e-11, atol=1e-13)
        assert all(abs(float(ric[m][n].subs(subs))) < 1e-12 for m in range(4) for n in range(4))
    # R_t^r_{tr} is nonzero
    assert abs(comps[1][0][1][0][1]) > 1e-3


@pytest.mark.parametrize("r", [3.0, 4.0, 10.0])
def test_schwarzschild_is_vacuum(r):
    geo = schwarzschild_geometry()
    rd = geo.ricci()
    pts = [(0.0, r, 0.9, 0.2)]
    ric = evaluate_at(SCHW, [rd.ricci[m][n] for m in range(4) for n in range(m, 4)], pts)
    assert ric.shape == (1, 10)
    assert np.max(np.abs(ric)) < 1e-8
    rest = evaluate_at(SCHW, [rd.scalar] + flatten(rd.einstein), pts)
    assert np.max(np.abs(rest)) < 1e-8


def test_static_de_sitter_is_einstein():
    ch = Chart(("t", "r", "th", "ph"), (("a", 2.0),))
    f = "(1 - r^2/a^2)"
    g = MetricField(ch, matrix(diag(f, f"-1/{f}", "-r^2", "-r^2*sin(th)^2"), ch))
    cf = CoFrameField(ch)
    geo = Geometry(ch, cf, g, levi_civita_connection(g, cf))
    rd = geo.ricci()
    pts = [(0.0, 0.5, 1.0, 0.0), (1.0, 1.2, 2.0, 1.0)]
    ric = evaluate_at(ch, flatten(rd.ricci), pts).reshape(-1, 4, 4)
    gv = evaluate_at(ch, flatten(g.components), pts).reshape(-1, 4, 4)
    ratios = [ric[k][i][i] / gv[k][i][i] for k in range(2) for i in range(4)]
    np.testing.assert_allclose(ratios, ratios[0], rtol=1e-12)
    assert abs(ratios[0]) > 0.1  # 3/a^2 up to the contraction sign
    np.testing.assert_allclose(ric - ratios[0] * gv, 0, atol=1e-12)
    R = evaluate_at(ch, [rd.scalar], pts)[:, 0]
    assert np.all(np.abs(R) > 1e-3)


@pytest.mark.parametrize("name", FIXTURES)
def test_trace_identities(name):
    st = structure(name)
    rd = st.geo.ricci()
    trace_G = add(*(rd.einstein_mixed[m][m] for m in range(4)))
    trace_R = add(*(rd.ricci_mixed[m][m] for m in range(4)))
    assert residual(st.chart, [[trace_G], [rd.scalar]], st.points).max_relative < IDENTITY_TOL
    assert residual(st.chart, [[trace_R], [neg(rd.scalar)]], st.points).max_relative < IDENTITY_TOL
    assert rd.energy_momentum_forms is rd.einstein_forms


def test_minkowski_curvature_vanishes():
    st = structure("minkowski")
    rd = st.geo.ricci()
    assert all(X.is_zero(x) for x in flatten(st.geo.curvature.components) + flatten(rd.ricci) + [rd.scalar])


# -- torsion and route agreement --------------------------------------------

def test_constant_contorsion_torsion():
    g = MetricField(CART, matrix(diag("1", "-1", "-1", "-1"), CART))
    cf = CoFrameField(CART)
    rng = random.Random(3)
    K = [[[const(rng.randint(-3, 3)) for _ in range(4)] for _ in range(4)] for _ in range(4)]
    tf = torsion(lc_plus_contorsion(g, cf, K), cf)
    for r in range(4):
        for a in range(4):
            for b in range(4):
                assert tf.components[r][a][b].value == K[r][a][b].value - K[r][b][a].value


def test_symmetric_coordinate_connection_is_torsion_free():
    L = ConnectionField([[[parse_expr(f"{r + 1}*t*({a} + {b})", CART) for b in range(4)] for a in range(4)]
                         for r in range(4)])
    tf = torsion(L, CoFrameField(CART), points=SAMPLE_POINTS)
    assert all(X.is_zero(x) for x in flatten(tf.components))


@pytest.mark.parametrize("name", FIXTURES)
def test_route_agreement_on_fixtures(name):
    st = structure(name)
    assert len(st.points) >= 5
    assert st.geo.torsion.route_residual(st.chart, st.points).max_relative < IDENTITY_TOL
    assert st.geo.curvature.route_residual(st.chart, st.points).max_relative < IDENTITY_TOL


def test_route_agreement_on_anholonomic_frames():
    rows = diag("1", "exp(t)", "1", "1")
    cf = CoFrameField(CART, matrix(rows, CART))
    g = MetricField(CART, matrix(diag("1", "-1", "-1", "-1"), CART))
    L = levi_civita_connection(g, cf)
    torsion(L, cf, points=SAMPLE_POINTS)
    curvature(L, cf, CART, points=SAMPLE_POINTS)
    ortho = diag("sqrt(1 - 2*M/r)", "1/sqrt(1 - 2*M/r)", "r", "r*sin(th)")
    geo = schwarzschild_geometry(CoFrameField(SCHW, matrix(ortho, SCHW)))
    geo = Geometry(SCHW, geo.cf, MetricField(SCHW, matrix(diag("1", "-1", "-1", "-1"), SCHW)),
                   levi_civita_connection(MetricField(SCHW, matrix(diag("1", "-1", "-1", "-1"), SCHW)), geo.cf))
    curvature(geo.L, geo.cf, SCHW, points=VACUUM_POINTS)
    rd = geo.ricci()
    assert np.max(np.abs(evaluate_at(SCHW, flatten(rd.ricci), VACUUM_POINTS))) < 1e-8


def test_route_mismatch_is_loud():
    cf = CoFrameField(CART, matrix(diag("1", "exp(t)", "1", "1"), CART))
    g = MetricField(CART, matrix(diag("1", "-1", "-1", "-1"), CART))
    L = levi_civita_connection(g, cf)
    true_sc = structure_coefficients(cf)
    wrong = StructureCoefficients(tuple(tuple(tuple(neg(x) for x in row) for row in blk) for blk in true_sc.c))
    with pytest.raises(RouteMismatch):
        torsion(L, cf, calc=FrameCalculus(cf, wrong), points=SAMPLE_POINTS)


@pytest.mark.parametrize("seed", range(4))
def test_route_agreement_random_anholonomic(seed):
    geo = random_torsionful_geometry(100 + seed, coordinate=False)
    assert geo.torsion.route_residual(CART, SAMPLE_POINTS).max_relative < IDENTITY_TOL
    assert geo.curvature.route_residual(CART, SAMPLE_POINTS).max_relative < IDENTITY_TOL


# -- Bianchi identities -----------------------------------------------------

@pytest.mark.parametrize("name", FIXTURES)
def test_bianchi_on_fixtures(name):
    st = structure(name)
    for res in (bianchi_first_residual(st.geo, st.points), bianchi_second_residual(st.geo, st.points)):
        assert set(res) == {"forms", "components"}
        assert all(r.max_relative < IDENTITY_TOL for r in res.values())


@pytest.mark.parametrize("seed", range(10))
def test_bianchi_on_random_torsionful_connections(seed):
    geo = random_torsionful_geometry(seed, coordinate=seed % 3 != 2)
    T = evaluate_at(CART, flatten(geo.torsion.components), SAMPLE_POINTS)
    assert np.max(np.abs(T)) > 1e-3
    for res in (bianchi_first_residual(geo, SAMPLE_POINTS), bianchi_second_residual(geo, SAMPLE_POINTS)):
        assert all(r.max_relative < IDENTITY_TOL for r in res.values())


@pytest.mark.parametrize("name", ["schwarzschild", "desitter"])
def test_lorentzian_first_bianchi(name):
    st = structure(name)
    terms = lorentzian_first_bianchi_terms(st.geo)
    assert residual(st.chart, terms, st.points).max_relative < IDENTITY_TOL


# -- symmetries --------------------------------------------------------------

@pytest.mark.parametrize("name", FIXTURES)
def test_pair_antisymmetry(name):
    st = structure(name)
    assert residual(st.chart, pair_antisymmetry_terms(st.geo), st.points).max_relative < 1e-9


@pytest.mark.parametrize("name", ["schwarzschild", "desitter", "minkowski"])
def test_pair_symmetry_without_torsion(name):
    st = structure(name)
    assert residual(st.chart, pair_symmetry_terms(st.geo), st.points).max_relative < IDENTITY_TOL


def test_pair_symmetry_fails_with_torsion():
    st = structure("torsionful-minkowski")
    assert residual(st.chart, pair_symmetry_terms(st.geo), st.points).max_relative > 1e-3


def test_lowered_curvature_convention(schwarzschild):
    geo = schwarzschild.geo
    Rl = lowered_curvature(geo.curvature, geo.g)
    G, C = geo.g.components, geo.curvature.components
    pts = schwarzschild.points[:2]
    a = evaluate_at(geo.chart, [Rl[0][1][0][1]], pts)
    b = evaluate_at(geo.chart, [C[0][1][0][1]], pts) * evaluate_at(geo.chart, [G[1][1]], pts)
    np.testing.assert_allclose(a, b, rtol=1e-13)


# -- exterior covariant derivative -------------------------------------------

def test_zero_connection_reduces_to_d():
    rng = random.Random(5)
    field = random_indexed(rng, 1, 1, 1)
    calc = FrameCalculus(CoFrameField(CART))
    D = ext_cov_derivative(field, ConnectionField.zero(), CoFrameField(CART))
    for k in field.keys():
        assert D[k] == calc.d(field[k])


@pytest.mark.parametrize("name", FIXTURES)
def test_metric_is_parallel(name):
    st = structure(name)
    Dg = ext_cov_derivative(metric_as_indexed(st.g), st.geo.L, st.cf, st.geo.calc)
    assert residual(st.chart, [Dg.components()], st.points).max_relative < 1e-9


@pytest.mark.parametrize("seed, shape", [(0, (1, 0, 1)), (1, (1, 1, 1)), (2, (0, 1, 2)), (3, (1, 0, 0)),
                                         (4, (2, 0, 1))])
def test_second_covariant_derivative_is_curvature(seed, shape):
    geo = random_torsionful_geometry(seed, coordinate=seed != 1)
    field = random_indexed(random.Random(seed), *shape)
    DD = ext_cov_derivative(ext_cov_derivative(field, geo.L, geo.cf, geo.calc), geo.L, geo.cf, geo.calc)
    want = curvature_action(field, geo.curvature)
    assert zero_residual(CART, DD.components(), want.components(), SAMPLE_POINTS).max_relative < IDENTITY_TOL


@pytest.mark.parametrize("seed, sx, sy", [(0, (1, 0, 1), (0, 1, 1)), (1, (1, 0, 2), (1, 0, 1)),
                                          (2, (0, 1, 0), (1, 0, 2)), (3, (0, 0, 3), (0, 0, 0))])
def test_graded_leibniz(seed, sx, sy):
    geo = random_torsionful_geometry(seed + 20, coordinate=seed % 2 == 0)
    rng = random.Random(seed)
    x, y = random_indexed(rng, *sx), random_indexed(rng, *sy)
    D = lambda f: ext_cov_derivative(f, geo.L, geo.cf, geo.calc)
    lhs = D(indexed_wedge(x, y))
    r = x.grade
    a = indexed_wedge(D(x), y).components()
    b = indexed_wedge(x, D(y)).components()
    rhs = [X._radd(u, v if r % 2 == 0 else neg(as_expr(v))) for u, v in zip(a, b)]
    assert zero_residual(CART, lhs.components(), rhs, SAMPLE_POINTS).max_relative < 1e-9


def test_degree_overflow():
    field = IndexedFormField(1, 0, 4, {(0,): X.blade(0, 1, 2, 3, coeff=const(1))})
    with pytest.raises(DegreeOverflow):
        ext_cov_derivative(field, ConnectionField.zero(), CoFrameField(CART))


def test_indexed_form_rejects_mixed_grade():
    with pytest.raises(ValueError):
        IndexedFormField(1, 0, 1, {(0,): X.theta(0) + X.blade(0, 1)})


def test_naive_connection_pattern_is_wrong(schwarzschild):
    terms, _ = naive_omega_terms(schwarzschild.geo)
    assert residual(schwarzschild.chart, terms, schwarzschild.points).max_relative > 1e-3


# -- decomposition ------------------------------------------------------------

def _decomposition_residuals(geo, pts):
    dec = riemann_decomposition(geo)
    ch = geo.chart
    return dec, [residual(ch, t, pts).max_relative
                 for t in (dec.terms_curvature, dec.terms_J_routes, dec.terms_ricci_antisym, dec.terms_ricci_sym)]


@pytest.mark.parametrize("name", FIXTURES)
def test_decomposition_on_fixtures(name):
    st = structure(name)
    _, res = _decomposition_residuals(st.geo, st.points)
    assert max(res) < IDENTITY_TOL


@pytest.mark.parametrize("seed", range(3))
def test_decomposition_on_random_connections(seed):
    _, res = _decomposition_residuals(random_torsionful_geometry(seed), SAMPLE_POINTS)
    assert max(res) < IDENTITY_TOL


def test_levi_civita_has_trivial_decomposition(schwarzschild):
    dec = riemann_decomposition(schwarzschild.geo)
    assert all(X.is_zero(x) for x in flatten(dec.contorsion) + flatten(dec.J))


def test_constant_contorsion_curvature_pattern():
    g = MetricField(CART, matrix(diag("1", "-1", "-1", "-1"), CART))
    cf = CoFrameField(CART)
    rng = random.Random(11)
    Kv = np.array([[[rng.randint(-2, 2) for _ in range(4)] for _ in range(4)] for _ in range(4)], dtype=float)
    K = [[[const(int(Kv[r, a, b])) for b in range(4)] for a in range(4)] for r in range(4)]
    geo = Geometry(CART, cf, g, lc_plus_contorsion(g, cf, K))
    dec = riemann_decomposition(geo)
    assert all(X.is_zero(x) for x in flatten(dec.reference_curvature))
    C = np.array([[[[float(as_expr(x).value) for x in row] for row in blk] for blk in m]
                  for m in geo.curvature.components])
    want = np.einsum("ras,sbm->mrab", Kv, Kv) - np.einsum("rbs,sam->mrab", Kv, Kv)
    np.testing.assert_array_equal(C, want)


def test_schwarzschild_with_contorsion_split():
    geo = schwarzschild_geometry()
    K = [[[parse_expr(f"({r - a}/7)*M/r^2" if b == (r + a) % 4 else "0", SCHW) for b in range(4)]
          for a in range(4)] for r in range(4)]
    geo = geo.with_connection(lc_plus_contorsion(geo.g, geo.cf, K))
    _, res = _decomposition_residuals(geo, VACUUM_POINTS)
    assert max(res) < IDENTITY_TOL


def test_decomposition_needs_coordinate_frame():
    with pytest.raises(FrameNotCoordinate):
        riemann_decomposition(random_torsionful_geometry(0, coordinate=False))


def test_alternate_ricci_convention_flips_sign(schwarzschild):
    st = structure("desitter")
    a = evaluate_at(st.chart, flatten(st.geo.ricci("e4").ricci), st.points)
    b = evaluate_at(st.chart, flatten(st.geo.ricci("appendixB").ricci), st.points)
    np.testing.assert_allclose(a, -b, atol=1e-14)
    with pytest.raises(ValueError):
        st.geo.ricci("other")
