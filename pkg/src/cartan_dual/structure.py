"""Metric and coframe fields over a chart, structure coefficients, exterior derivative.

Conventions.  A coframe is ``theta^rho = A[rho][mu] dx^mu``.  The dual frame
is ``e_alpha = E[alpha][mu] d/dx^mu`` with ``E`` the transposed inverse of
``A``.  Structure coefficients follow ``[e_alpha, e_beta] = c^rho_{alpha beta} e_rho``,
equivalently ``d theta^rho = -1/2 c^rho_{alpha beta} theta^alpha ^ theta^beta``.
Arrays of rank three are nested tuples indexed ``[rho][alpha][beta]``.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np

from . import exterior as X
from .exterior import BLADES, INDEX, FibreMetric, Multivector, Orientation, SingularMetric
from .symexpr import Chart, Expr, ONE, ZERO, add, differentiate, mul, neg
from .symexpr.evaluate import DomainError

R4 = range(4)


class DegenerateCoframe(ArithmeticError):
    """The coframe matrix is singular at a point.

    Attributes:
        point: the offending coordinates.
        det: determinant value there.
    """

    def __init__(self, point, det):
        self.point = tuple(point)
        self.det = det
        super().__init__(f"coframe degenerate at {self.point}: det = {det!r}")


def array3(fn) -> tuple:
    """Nested tuple ``a[i][j][k] = fn(i, j, k)`` over 0..3."""
    return tuple(tuple(tuple(fn(i, j, k) for k in R4) for j in R4) for i in R4)


def array2(fn) -> tuple:
    return tuple(tuple(fn(i, j) for j in R4) for i in R4)


def flatten(arr) -> list:
    """Flatten nested tuples of expressions in row-major order."""
    out = []
    stack = [arr]
    while stack:
        a = stack.pop()
        if isinstance(a, (tuple, list)):
            stack.extend(reversed(a))
        else:
            out.append(a)
    return out


def _as_expr_matrix(m) -> tuple:
    from .symexpr import as_expr

    return tuple(tuple(as_expr(x) for x in row) for row in m)


class CoFrameField:
    """Four 1-forms ``theta^rho = A[rho][mu] dx^mu``."""

    def __init__(self, chart: Chart, matrix=None):
        self.chart = chart
        if matrix is None:
            matrix = [[ONE if i == j else ZERO for j in R4] for i in R4]
        self.matrix = _as_expr_matrix(matrix)
        self.is_coordinate = all(
            self.matrix[i][j] is (ONE if i == j else ZERO) for i in R4 for j in R4)

    @classmethod
    def coordinate(cls, chart: Chart) -> "CoFrameField":
        return cls(chart)

    @cached_property
    def _inverse(self):
        if self.is_coordinate:
            return self.matrix, ONE
        inv, det = X.invert_matrix(self.matrix)
        return _as_expr_matrix(inv), det

    @property
    def det(self) -> Expr:
        return self._inverse[1]

    @cached_property
    def frame(self) -> tuple:
        """``E[alpha][mu]``: components of ``e_alpha`` along ``d/dx^mu``."""
        inv = self._inverse[0]  # inv[mu][rho] = (A^-1)^mu_rho
        return array2(lambda a, m: inv[m][a])

    def frame_derivative(self, f: Expr, alpha: int) -> Expr:
        """``e_alpha(f) = E[alpha][mu] * d f / d x^mu``."""
        coords = self.chart.coords
        if self.is_coordinate:
            return differentiate(f, coords[alpha])
        return add(*(mul(self.frame[alpha][m], differentiate(f, coords[m]))
                     for m in R4 if self.frame[alpha][m] is not ZERO))

    def check_points(self, points) -> None:
        if self.is_coordinate:
            return
        vals = evaluate_at(self.chart, [self.det], points)
        for p, v in zip(points, vals[:, 0]):
            if abs(v) < 1e-12:
                raise DegenerateCoframe(p, float(v))

    def one_form(self, rho: int) -> Multivector:
        """``theta^rho`` expanded in the coordinate basis."""
        return Multivector({(m,): self.matrix[rho][m] for m in R4 if self.matrix[rho][m] is not ZERO})


class StructureCoefficients:
    """``c^rho_{alpha beta}``, antisymmetric in the lower pair."""

    def __init__(self, c):
        self.c = c

    def __getitem__(self, idx):
        r, a, b = idx
        return self.c[r][a][b]

    @cached_property
    def d_theta(self) -> tuple:
        """``d theta^rho`` as frame 2-forms."""
        return tuple(Multivector({(a, b): neg(self.c[r][a][b]) for a in R4 for b in R4 if a < b})
                     for r in R4)


def structure_coefficients(cf: CoFrameField, chart: Chart | None = None) -> StructureCoefficients:
    """Commutation coefficients of the frame dual to ``cf``.

    ``c^rho_{alpha beta} = -(d_mu A^rho_nu - d_nu A^rho_mu) E_alpha^mu E_beta^nu``.
    """
    if cf.is_coordinate:
        return StructureCoefficients(array3(lambda r, a, b: ZERO))
    coords = cf.chart.coords
    E = cf.frame
    curl = array3(lambda r, m, n: add(differentiate(cf.matrix[r][n], coords[m]),
                                      neg(differentiate(cf.matrix[r][m], coords[n]))))

    def upper(r, a, b):
        return neg(add(*(mul(curl[r][m][n], E[a][m], E[b][n])
                         for m in R4 for n in R4 if m != n and curl[r][m][n] is not ZERO
                         and E[a][m] is not ZERO and E[b][n] is not ZERO)))

    half = {(r, a, b): upper(r, a, b) for r in R4 for a in R4 for b in R4 if a < b}
    return StructureCoefficients(array3(lambda r, a, b: ZERO if a == b else (
        half[r, a, b] if a < b else neg(half[r, b, a]))))


class MetricField:
    """Symmetric metric components ``g_{alpha beta}`` in a declared coframe."""

    def __init__(self, chart: Chart, components):
        self.chart = chart
        comps = _as_expr_matrix(components)
        for i in R4:
            for j in range(i + 1, 4):
                if comps[i][j] is not comps[j][i]:
                    raise ValueError(f"metric component g{i}{j} differs from g{j}{i}")
        self.components = comps

    def __getitem__(self, idx):
        return self.components[idx[0]][idx[1]]

    @cached_property
    def _inv(self):
        inv, det = X.invert_matrix(self.components)
        return _as_expr_matrix(inv), det

    @property
    def inverse(self) -> tuple:
        return self._inv[0]

    @property
    def det(self) -> Expr:
        return self._inv[1]

    @cached_property
    def fibre(self) -> FibreMetric:
        """Symbolic :class:`FibreMetric` sharing the cached inverse."""
        return FibreMetric(self.components, ginv=self.inverse, det=self.det, check_signature=False)

    @property
    def sqrt_abs_det(self) -> Expr:
        return self.fibre.sqrt_abs_det

    def check_points(self, points) -> None:
        """Raise unless the metric is finite, nondegenerate and Lorentzian at every point."""
        vals = evaluate_at(self.chart, flatten(self.components), points)
        for p, row in zip(points, vals):
            try:
                X.check_lorentzian(row.reshape(4, 4))
            except SingularMetric:
                raise SingularMetric(f"metric degenerate at {tuple(p)}") from None


def metric_inverse(g: MetricField) -> tuple:
    """``g^{mu nu}`` as a 4x4 nested tuple of expressions."""
    return g.inverse


def metric_in_coordinates(g: MetricField, cf: CoFrameField) -> tuple:
    """``g_{mu nu} = A^alpha_mu A^beta_nu g_{alpha beta}``."""
    A = cf.matrix
    return array2(lambda m, n: add(*(mul(A[a][m], A[b][n], g.components[a][b])
                                     for a in R4 for b in R4
                                     if g.components[a][b] is not ZERO)))


def volume_form(g: MetricField, cf: CoFrameField, orientation=1) -> Multivector:
    """``tau = o sqrt|det g| theta^0123`` in the frame basis."""
    o = orientation if isinstance(orientation, Orientation) else Orientation(orientation)
    return o.volume(g.fibre)


# -- exterior derivative --------------------------------------------------

class FrameCalculus:
    """Exterior derivative of frame-expanded forms for one coframe."""

    def __init__(self, cf: CoFrameField, sc: StructureCoefficients | None = None):
        self.cf = cf
        self.sc = sc if sc is not None else structure_coefficients(cf)

    @cached_property
    def d_blades(self) -> tuple:
        """``d theta^I`` for every basis blade, by the Leibniz rule."""
        out = []
        dth = self.sc.d_theta
        for b in BLADES:
            acc = Multivector()
            for pos, i in enumerate(b):
                left = X.blade(*b[:pos]) if pos else Multivector.scalar(ONE)
                right = X.blade(*b[pos + 1:]) if pos + 1 < len(b) else Multivector.scalar(ONE)
                term = X.wedge(X.wedge(left, dth[i]), right)
                acc = acc + (term if pos % 2 == 0 else -term)
            out.append(acc)
        return tuple(out)

    def d(self, form: Multivector) -> Multivector:
        """``d(f theta^I) = e_beta(f) theta^beta ^ theta^I + f d theta^I``."""
        out = [ZERO] * 16
        for k, f in enumerate(form.c):
            if X.is_zero(f):
                continue
            b = BLADES[k]
            for beta in R4:
                if beta in b:
                    continue
                df = self.cf.frame_derivative(f, beta)
                if df is ZERO:
                    continue
                sign, nb = X._canon((beta,) + b)
                j = INDEX[nb]
                out[j] = add(out[j], df if sign == 1 else neg(df))
            if not self.cf.is_coordinate:
                for j, c in enumerate(self.d_blades[k].c):
                    if not X.is_zero(c):
                        out[j] = add(out[j], mul(f, c))
        return Multivector(tuple(out))

    def to_coordinates(self, form: Multivector) -> Multivector:
        """Re-expand a frame form in the coordinate basis ``dx^I``."""
        if self.cf.is_coordinate:
            return form
        thetas = [self.cf.one_form(r) for r in R4]
        acc = Multivector()
        for b, f in form.items():
            piece = Multivector.scalar(f)
            for i in b:
                piece = X.wedge(piece, thetas[i])
            acc = acc + piece
        return acc

    def from_coordinates(self, form: Multivector) -> Multivector:
        """Re-expand a coordinate-basis form in the frame basis."""
        if self.cf.is_coordinate:
            return form
        E = self.cf.frame
        dxs = [Multivector({(a,): E[a][m] for a in R4 if E[a][m] is not ZERO}) for m in R4]
        acc = Multivector()
        for b, f in form.items():
            piece = Multivector.scalar(f)
            for m in b:
                piece = X.wedge(piece, dxs[m])
            acc = acc + piece
        return acc

    def d_coordinate_route(self, form: Multivector) -> Multivector:
        """Exterior derivative computed through the coordinate basis."""
        coords = self.cf.chart.coords
        cform = self.to_coordinates(form)
        out = [ZERO] * 16
        for b, f in cform.items():
            for m in R4:
                if m in b:
                    continue
                df = differentiate(f, coords[m])
                if df is ZERO:
                    continue
                sign, nb = X._canon((m,) + b)
                j = INDEX[nb]
                out[j] = add(out[j], df if sign == 1 else neg(df))
        return self.from_coordinates(Multivector(tuple(out)))


def frame_derivative(cf: CoFrameField, f: Expr, alpha: int) -> Expr:
    return cf.frame_derivative(f, alpha)


# -- numeric evaluation ---------------------------------------------------

def evaluate_at(chart: Chart, exprs, points) -> np.ndarray:
    """Evaluate expressions at each point; returns shape ``(npoints, nexprs)``."""
    from .residuals import evaluate_points

    return evaluate_points(chart, exprs, points)


__all__ = [
    "CoFrameField", "DegenerateCoframe", "DomainError", "FrameCalculus", "MetricField",
    "SingularMetric", "StructureCoefficients", "array2", "array3", "evaluate_at", "flatten",
    "frame_derivative", "metric_in_coordinates", "metric_inverse", "structure_coefficients",
    "volume_form",
]
