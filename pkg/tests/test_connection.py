import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from cartan_dual.connection import (
    ConnectionField, FrameNotCoordinate, SymmetryViolation, compose_connection, connection_one_forms,
    contorsion, contorsion_for_torsion, decompose_connection, levi_civita_connection,
    lower_first, metric_compatibility_residual, nonmetricity, nonmetricity_from_strain, strain,
    strain_definition, strain_from_nonmetricity, torsion_components,
)
from cartan_dual.exterior import is_zero
from cartan_dual.structure import CoFrameField, MetricField, evaluate_at, flatten, structure_coefficients
from cartan_dual.symexpr import Chart, ZERO, parse_expr

from factories import CART, SAMPLE_POINTS, random_torsionful_geometry
from oracles import schwarzschild_oracle

SCHW = Chart(("t", "r", "th", "ph"), (("M", 1.0),))
SCHW_PTS = [(0.0, 3.0, 1.0, 0.3), (0.0, 4.0, 0.7, 1.0), (1.0, 10.0, 2.0, 2.0)]


def matrix(rows, chart):
    return [[parse_expr(x, chart) for x in row] for row in rows]


def diag(*entries):
    return [[entries[i] if i == j else "0" for j in range(4)] for i in range(4)]


ETA = diag("1", "-1", "-1", "-1")
SCHW_G = diag("1 - 2*M/r", "-1/(1 - 2*M/r)", "-r^2", "-r^2*sin(th)^2")
ORTHO = diag("sqrt(1 - 2*M/r)", "1/sqrt(1 - 2*M/r)", "r", "r*sin(th)")


def values(chart, arr, pts):
    return evaluate_at(chart, flatten(arr), pts).reshape(len(pts), *np.shape(np.empty((4,) * _rank(arr))))


def _rank(arr):
    r = 0
    while isinstance(arr, (tuple, list)):
        arr, r = arr[0], r + 1
    return r


def test_zero_connection_has_zero_forms():
    assert all(w.is_zero() for row in connection_one_forms(ConnectionField.zero()) for w in row)


def test_minkowski_levi_civita_vanishes():
    g = MetricField(CART, matrix(ETA, CART))
    L = levi_civita_connection(g, CoFrameField(CART))
    assert all(x is ZERO for x in flatten(L.L))
    assert all(w.is_zero() for row in connection_one_forms(L) for w in row)


def test_schwarzschild_christoffels_match_oracle():
    xs, M, g_s, gam, _, _ = schwarzschild_oracle()
    g = MetricField(SCHW, matrix(SCHW_G, SCHW))
    L = levi_civita_connection(g, CoFrameField(SCHW))
    got = values(SCHW, L.L, SCHW_PTS)
    for k, p in enumerate(SCHW_PTS):
        subs = dict(zip(xs, p)) | {M: 1}
        want = np.array([[[float(gam[r][a][b].subs(subs)) for b in range(4)] for a in range(4)] for r in range(4)])
        np.testing.assert_allclose(got[k], want, rtol=1e-12, atol=1e-14)
    # Gamma^r_tt = M (r - 2M) / r^3
    r = 4.0
    assert math.isclose(got[1][1][0][0], (r - 2) / r ** 3, rel_tol=1e-14)


def test_spherical_minkowski_christoffel():
    ch = Chart(("t", "r", "th", "ph"))
    g = MetricField(ch, matrix(diag("1", "-1", "-r^2", "-r^2*sin(th)^2"), ch))
    L = levi_civita_connection(g, CoFrameField(ch))
    assert L[2, 1, 2] is parse_expr("1/r", ch)
    assert L[2, 2, 1] is parse_expr("1/r", ch)


def test_orthonormal_schwarzschild_connection_forms():
    """Frame coefficients from the coordinate Christoffels:
    ``L^r_{ab} = A^r_m (E_a^n d_n E_b^m + Gamma^m_{nl} E_a^n E_b^l)``."""
    xs, M, g_s, gam, _, _ = schwarzschild_oracle()
    f = 1 - 2 * M / xs[1]
    A = sp.diag(sp.sqrt(f), 1 / sp.sqrt(f), xs[1], xs[1] * sp.sin(xs[2]))
    E = A.inv().T
    cf = CoFrameField(SCHW, matrix(ORTHO, SCHW))
    L = levi_civita_connection(MetricField(SCHW, matrix(ETA, SCHW)), cf)
    got = values(SCHW, L.L, SCHW_PTS)
    for k, p in enumerate(SCHW_PTS):
        subs = dict(zip(xs, p)) | {M: 1}
        for r in range(4):
            for a in range(4):
                for b in range(4):
                    e = sum(A[r, m] * (sum(E[a, n] * sp.diff(E[b, m], xs[n]) for n in range(4))
                                       + sum(gam[m][n][l] * E[a, n] * E[b, l] for n in range(4) for l in range(4)))
                            for m in range(4))
                    assert math.isclose(got[k][r][a][b], float(e.subs(subs)), rel_tol=1e-11, abs_tol=1e-13)
    w = connection_one_forms(L, cf)
    p = (0.0, 4.0, 0.7, 1.0)
    val = evaluate_at(SCHW, [w[0][1].c[1]], [p])[0, 0]
    assert math.isclose(val, (1 / 16) / math.sqrt(0.5), rel_tol=1e-13)


@pytest.mark.parametrize("frame", ["coordinate", "orthonormal"])
def test_levi_civita_is_torsion_free_and_compatible(frame):
    if frame == "coordinate":
        cf, g = CoFrameField(SCHW), MetricField(SCHW, matrix(SCHW_G, SCHW))
    else:
        cf, g = CoFrameField(SCHW, matrix(ORTHO, SCHW)), MetricField(SCHW, matrix(ETA, SCHW))
    L = levi_civita_connection(g, cf)
    T = torsion_components(L, structure_coefficients(cf))
    assert np.max(np.abs(values(SCHW, T, SCHW_PTS))) < 1e-9
    assert np.max(np.abs(values(SCHW, metric_compatibility_residual(L, g, cf), SCHW_PTS))) < 1e-9


@pytest.mark.parametrize("seed", range(3))
def test_levi_civita_random_anholonomic(seed):
    geo = random_torsionful_geometry(seed, coordinate=False)
    L = levi_civita_connection(geo.g, geo.cf)
    T = torsion_components(L, structure_coefficients(geo.cf))
    assert np.max(np.abs(values(CART, T, SAMPLE_POINTS))) < 1e-9
    assert np.max(np.abs(values(CART, metric_compatibility_residual(L, geo.g, geo.cf), SAMPLE_POINTS))) < 1e-9
    # the torsionful connection is compatible as well, and really has torsion
    assert np.max(np.abs(values(CART, metric_compatibility_residual(geo.L, geo.g, geo.cf), SAMPLE_POINTS))) < 1e-9
    Tt = torsion_components(geo.L, structure_coefficients(geo.cf))
    assert np.max(np.abs(values(CART, Tt, SAMPLE_POINTS))) > 1e-3


def test_zero_connection_compatibility_is_metric_derivative():
    g = MetricField(SCHW, matrix(SCHW_G, SCHW))
    res = metric_compatibility_residual(ConnectionField.zero(), g, CoFrameField(SCHW))
    assert res[1][2][2] is parse_expr("-2*r", SCHW)
    assert res[0][1][1] is ZERO


def test_nonmetricity_vanishes_for_compatible_connection():
    g = MetricField(SCHW, matrix(SCHW_G, SCHW))
    Q = nonmetricity(levi_civita_connection(g, CoFrameField(SCHW)), g, CoFrameField(SCHW))
    assert np.max(np.abs(values(SCHW, Q, SCHW_PTS))) < 1e-12
    Q0 = nonmetricity(ConnectionField.zero(), MetricField(CART, matrix(ETA, CART)), CoFrameField(CART))
    assert all(x is ZERO for x in flatten(Q0))


def test_conformal_nonmetricity():
    """``Q_{a b s} = -d_a(e^{2 lam}) g_{b s}`` when D is Levi-Civita of g and the reference is e^{2 lam} g."""
    lam = "(t*x + y/3)/5"
    cf = CoFrameField(CART)
    g = MetricField(CART, matrix(ETA, CART))
    conf = MetricField(CART, matrix([[f"exp(2*{lam})*({x})" for x in row] for row in ETA], CART))
    Q = values(CART, nonmetricity(levi_civita_connection(g, cf), conf, cf), SAMPLE_POINTS)
    for k, (t, x, y, z) in enumerate(SAMPLE_POINTS):
        l = (t * x + y / 3) / 5
        dl = np.array([x, t, 1 / 3, 0]) / 5
        want = -2 * np.exp(2 * l) * np.einsum("a,bs->abs", dl, np.diag([1, -1, -1, -1]))
        np.testing.assert_allclose(Q[k], want, rtol=1e-12, atol=1e-14)


@pytest.mark.parametrize("seed", range(4))
def test_decomposition_of_torsionful_connection(seed):
    geo = random_torsionful_geometry(seed)
    cf, g, L = geo.cf, geo.g, geo.L
    T = torsion_components(L)
    S = strain(L, g, cf)
    S_def = strain_definition(L, g, cf)
    pts = SAMPLE_POINTS
    Sv = values(CART, S, pts)
    np.testing.assert_allclose(Sv, values(CART, S_def, pts), atol=1e-12)
    np.testing.assert_allclose(Sv, Sv.transpose(0, 1, 3, 2), atol=1e-12)
    # compatible case: S^r_{ab} = -g^{rs}(g_{bm} T^m_{as} + g_{am} T^m_{bs})
    Tv, gv = values(CART, T, pts), values(CART, g.components, pts)
    for k in range(len(pts)):
        gi = np.linalg.inv(gv[k])
        want = -np.einsum("rs,bm,mas->rab", gi, gv[k], Tv[k]) - np.einsum("rs,am,mbs->rab", gi, gv[k], Tv[k])
        np.testing.assert_allclose(Sv[k], want, atol=1e-12)
    K = contorsion(L, g, cf)
    np.testing.assert_allclose(values(CART, K, pts), 0.5 * (Tv + Sv), atol=1e-12)
    base, T2, S2 = decompose_connection(L, g, cf)
    rebuilt = compose_connection(base, T2, S2)
    np.testing.assert_allclose(values(CART, rebuilt.L, pts), values(CART, L.L, pts), atol=1e-12)


def test_strain_and_nonmetricity_cyclic_sums_agree():
    geo = random_torsionful_geometry(7)
    cf = geo.cf
    ref = MetricField(CART, matrix(diag("1 + x^2/10", "-1", "-1 - t*y/7", "-1"), CART))
    L = geo.L
    Q = values(CART, nonmetricity(L, ref, cf), SAMPLE_POINTS)
    S = values(CART, strain(L, ref, cf), SAMPLE_POINTS)
    gv = values(CART, ref.components, SAMPLE_POINTS)
    for k in range(len(SAMPLE_POINTS)):
        S_low = np.einsum("rs,rab->abs", gv[k], S[k])  # S_{a b s} = g_{r s} S^r_{a b}
        cq = Q[k] + Q[k].transpose(2, 0, 1) + Q[k].transpose(1, 2, 0)
        cs = S_low + S_low.transpose(2, 0, 1) + S_low.transpose(1, 2, 0)
        np.testing.assert_allclose(cq, cs, atol=1e-12)


def test_constant_totally_antisymmetric_torsion():
    g = MetricField(CART, matrix(ETA, CART))
    cf = CoFrameField(CART)
    eta = np.diag([1, -1, -1, -1])
    import itertools

    eps = np.zeros((4, 4, 4))
    for i, j, k in itertools.permutations(range(3), 3):
        eps[i, j, k] = np.linalg.det(np.eye(3)[[i, j, k]])
    T_low = 2 * eps  # T_{r a b} totally antisymmetric
    T_up = np.einsum("rs,sab->rab", eta, T_low)
    Tq = [[[Fraction(int(T_up[r, a, b])) for b in range(4)] for a in range(4)] for r in range(4)]
    L = compose_connection(levi_civita_connection(g, cf), Tq, [[[0] * 4 for _ in range(4)] for _ in range(4)])
    assert all(is_zero(x) for x in flatten(strain(L, g, cf)))
    K = values(CART, contorsion(L, g, cf), SAMPLE_POINTS[:1])[0]
    np.testing.assert_array_equal(K, 0.5 * T_up)


def test_compose_examples():
    g = MetricField(CART, matrix(ETA, CART))
    base = levi_civita_connection(g, CoFrameField(CART))
    zero = [[[0] * 4 for _ in range(4)] for _ in range(4)]
    assert all(x is ZERO for x in flatten(compose_connection(base, zero, zero).L))
    T = [[[Fraction(a - b, 3) * (r + 1) for b in range(4)] for a in range(4)] for r in range(4)]
    L = compose_connection(ConnectionField.zero(), T, zero)
    assert L[2, 3, 1].value == Fraction(2 * 3, 2 * 3) * 3 / 3


def test_compose_rejects_bad_symmetry():
    zero = [[[0] * 4 for _ in range(4)] for _ in range(4)]
    bad = [[[1 if (a, b) == (0, 1) else 0 for b in range(4)] for a in range(4)] for _ in range(4)]
    with pytest.raises(SymmetryViolation):
        compose_connection(ConnectionField.zero(), bad, zero)
    with pytest.raises(SymmetryViolation):
        compose_connection(ConnectionField.zero(), zero, bad)


def test_coordinate_only_operations_reject_frames():
    geo = random_torsionful_geometry(1, coordinate=False)
    for fn in (strain, contorsion, strain_definition, decompose_connection):
        with pytest.raises(FrameNotCoordinate):
            fn(geo.L, geo.g, geo.cf)


rationals = st.fractions(-4, 4, max_denominator=5)


@st.composite
def rational_metrics(draw):
    while True:
        Lm = sp.Matrix(4, 4, lambda i, j: draw(st.integers(-2, 2)) + (3 if i == j else 0))
        if Lm.det() != 0:
            break
    g = Lm.T * sp.diag(1, -1, -1, -1) * Lm
    gi = g.inv()
    conv = lambda m: [[Fraction(int(m[i, j].p), int(m[i, j].q)) for j in range(4)] for i in range(4)]
    return conv(g), conv(gi)


@st.composite
def antisymmetric(draw):
    T = [[[Fraction(0)] * 4 for _ in range(4)] for _ in range(4)]
    for r in range(4):
        for a in range(4):
            for b in range(a + 1, 4):
                v = draw(rationals)
                T[r][a][b], T[r][b][a] = v, -v
    return T


@st.composite
def symmetric(draw):
    S = [[[Fraction(0)] * 4 for _ in range(4)] for _ in range(4)]
    for r in range(4):
        for a in range(4):
            for b in range(a, 4):
                S[r][a][b] = S[r][b][a] = draw(rationals)
    return S


@given(rational_metrics(), antisymmetric(), symmetric())
def test_strain_nonmetricity_round_trip_exact(gm, T, S):
    g, gi = gm
    Q = nonmetricity_from_strain(T, S, g)
    back = strain_from_nonmetricity(Q, T, g, gi)
    assert [[[back[r][a][b] for b in range(4)] for a in range(4)] for r in range(4)] == S
    for a in range(4):
        for b in range(4):
            for s in range(4):
                assert Q[a][b][s] == Q[a][s][b]


@given(rational_metrics(), antisymmetric())
def test_contorsion_for_torsion_reproduces_torsion_exactly(gm, T):
    g, gi = gm
    K = contorsion_for_torsion(T, (g, gi))
    K_low = lower_first(K, g)
    for r in range(4):
        for a in range(4):
            for b in range(4):
                assert K[r][a][b] - K[r][b][a] == T[r][a][b]
                assert K_low[r][a][b] == -K_low[b][a][r]


@given(antisymmetric(), symmetric())
def test_compose_decompose_round_trip_exact(T, S):
    L = compose_connection(ConnectionField.zero(), T, S)
    T2 = torsion_components(L)
    for r in range(4):
        for a in range(4):
            for b in range(4):
                assert T2[r][a][b].value == T[r][a][b]
                sym = L.L[r][a][b].value + L.L[r][b][a].value
                assert sym == S[r][a][b]
