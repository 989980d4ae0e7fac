"""Loading and validating structure specifications.

A specification is a JSON document checked against
``schemas/structure-spec.schema.json`` and then semantically: every
expression must parse against the chart, the metric must be symmetric, and
every sample point must avoid singular loci of the metric and coframe.
All problems are collected before anything is raised.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np

from ..connection import ConnectionField, levi_civita_connection, lc_plus_contorsion
from ..curvature import Geometry
from ..duality import CandidatePrime, reconstruct_connection_from_torsion, dual_curvature
from ..exterior import SignatureError, SingularMetric, check_lorentzian
from ..residuals import HOLD_TOL, VIOLATE_TOL, evaluate_points
from ..structure import CoFrameField, MetricField, array3, flatten
from ..symexpr import Chart, ChartError, DomainError, ExprSyntaxError, UnknownSymbol, parse_expr

SPEC_VERSION = 1
CHECKS = (
    "exterior-identities", "cartan-routes", "bianchi-1", "bianchi-2", "metric-compat",
    "decomposition", "dual-ricci", "dual-einstein", "dual-field-eq", "nonduality",
    "same-metric-duality", "particular-case", "gprime",
)
METRIC_KEYS = tuple(f"g{i}{j}" for i in range(4) for j in range(4))


@dataclass(frozen=True)
class Violation:
    pointer: str
    message: str

    def __str__(self):
        return f"{self.pointer or '/'}: {self.message}"


class SpecError(Exception):
    """A specification could not be loaded; ``violations`` lists every problem."""

    def __init__(self, violations):
        self.violations = sorted(violations, key=lambda v: (v.pointer, v.message))
        super().__init__("\n".join(str(v) for v in self.violations))


class SchemaError(SpecError):
    """The document does not match the published schema."""


class SpecSyntaxError(SpecError, SyntaxError):
    """Malformed JSON or expression text."""


class SpecValidationError(SpecError, ValueError):
    """Well-formed but semantically invalid (asymmetric metric, singular sample point, ...)."""


@lru_cache(maxsize=None)
def load_schema(name: str = "structure-spec") -> dict:
    text = resources.files("cartan_dual.cli").joinpath("schemas", f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)


def _pointer(path) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in path)


def schema_violations(doc, name: str = "structure-spec") -> list:
    validator = jsonschema.Draft202012Validator(load_schema(name))
    out = []
    for err in validator.iter_errors(doc):
        # oneOf failures are more useful reported through their best sub-error
        best = jsonschema.exceptions.best_match([err]) if err.context else err
        out.append(Violation(_pointer(best.absolute_path), best.message))
    return sorted(set(out), key=lambda v: (v.pointer, v.message))


@dataclass
class Structure:
    """A validated specification turned into geometry objects."""

    name: str
    doc: dict
    chart: Chart
    cf: CoFrameField
    g: MetricField
    L: ConnectionField
    orientation: int
    points: list
    checks: tuple
    hold: float = HOLD_TOL
    violate: float = VIOLATE_TOL
    ricci_convention: str = "e4"
    dual_pair: str = "second"
    candidate_doc: dict | None = None
    explicit_checks: bool = False
    _geo: Geometry | None = field(default=None, repr=False)

    @property
    def geo(self) -> Geometry:
        if self._geo is None:
            self._geo = Geometry(self.chart, self.cf, self.g, self.L, self.orientation)
        return self._geo

    def candidate(self) -> CandidatePrime | None:
        """Build the candidate ``(g', D')`` described by the input document, if any."""
        doc = self.candidate_doc
        if doc is None:
            return None
        same = bool(doc.get("same_metric", "metric" not in doc))
        gp = None if same else MetricField(self.chart, _metric_exprs(doc["metric"], self.chart, "/candidate/metric", []))
        conn = doc.get("connection", "levi-civita")
        base_g = self.g if same else gp
        if conn == "levi-civita":
            Dp = levi_civita_connection(base_g, self.cf)
        elif conn == "reconstructed":
            Dp = reconstruct_connection_from_torsion(self.g, self.cf, dual_curvature(self.geo, self.dual_pair)
                                                     .torsion_components)
        else:
            Dp = _connection(conn, self.chart, base_g, self.cf, "/candidate/connection", [])
        return CandidatePrime(gprime=gp, Dprime=Dp, same_metric=same)


def _parse(text, chart, pointer, errors):
    try:
        return parse_expr(text, chart)
    except ExprSyntaxError as e:
        errors.append(("syntax", Violation(pointer, str(e))))
    except UnknownSymbol as e:
        errors.append(("syntax", Violation(pointer, str(e))))
    return None


def _metric_exprs(mdoc, chart, base, errors):
    comps = [[None] * 4 for _ in range(4)]
    for i in range(4):
        for j in range(i, 4):
            comps[i][j] = comps[j][i] = _parse(mdoc[f"g{i}{j}"], chart, f"{base}/g{i}{j}", errors)
    for i in range(4):
        for j in range(i + 1, 4):
            low = f"g{j}{i}"
            if low in mdoc:
                other = _parse(mdoc[low], chart, f"{base}/{low}", errors)
                if other is not None and comps[i][j] is not None and other is not comps[i][j]:
                    errors.append(("value", Violation(f"{base}/g{i}{j}",
                                                      f"g{i}{j} = {mdoc[f'g{i}{j}']!r} differs from "
                                                      f"g{j}{i} = {mdoc[low]!r}")))
    return comps


def _nested(arr, chart, base, errors, depth):
    if depth == 0:
        return _parse(arr, chart, base, errors)
    return [_nested(x, chart, f"{base}/{k}", errors, depth - 1) for k, x in enumerate(arr)]


def _connection(cdoc, chart, g, cf, base, errors):
    if cdoc == "levi-civita" or (isinstance(cdoc, dict) and cdoc.get("kind") == "levi-civita"):
        return None if g is None else levi_civita_connection(g, cf)
    if cdoc["kind"] == "explicit":
        arr = _nested(cdoc["coefficients"], chart, f"{base}/coefficients", errors, 3)
        if any(x is None for x in flatten(arr)) or g is None:
            return None
        return ConnectionField(array3(lambda r, a, b: arr[r][a][b]), label="explicit")
    arr = _nested(cdoc["contorsion"], chart, f"{base}/contorsion", errors, 3)
    if any(x is None for x in flatten(arr)) or g is None:
        return None
    return lc_plus_contorsion(g, cf, arr)


def _check_points(chart, comps, points, base, what, errors, cf=None):
    """Evaluate the metric (and coframe determinant) at each sample point."""
    exprs = flatten(comps)
    if cf is not None and not cf.is_coordinate:
        exprs = exprs + [cf.det]
    for k, p in enumerate(points):
        ptr = f"/sample_points/{k}"
        try:
            vals = evaluate_points(chart, exprs, [p])[0]
        except DomainError as e:
            errors.append(("value", Violation(ptr, f"singular locus of the {what}: {e}")))
            continue
        if not np.all(np.isfinite(vals)):
            errors.append(("value", Violation(ptr, f"singular locus of the {what}: non-finite value")))
            continue
        try:
            check_lorentzian(vals[:16].reshape(4, 4))
        except SingularMetric:
            errors.append(("value", Violation(ptr, f"singular locus of the {what}: det g = 0")))
        except SignatureError as e:
            errors.append(("value", Violation(ptr, f"{what} is not Lorentzian here: {e}")))
        if len(vals) > 16 and abs(vals[16]) < 1e-12:
            errors.append(("value", Violation(ptr, "singular locus of the coframe: det A = 0")))


def _expression_violations(doc) -> list:
    """Best-effort expression diagnostics for a document that failed the schema."""
    try:
        chart_doc = doc["chart"]
        chart = Chart(tuple(chart_doc["coords"]), tuple(chart_doc.get("params", {}).items()))
    except (KeyError, TypeError, AttributeError, ChartError):
        return []
    errors: list = []
    metric = doc.get("metric")
    if isinstance(metric, dict):
        for key in METRIC_KEYS:
            if isinstance(metric.get(key), str):
                _parse(metric[key], chart, f"/metric/{key}", errors)
    return [v for _, v in errors]


def build_structure(doc: dict, name: str = "") -> Structure:
    """Validate a parsed specification document and build its geometry.

    Raises:
        SchemaError, SpecSyntaxError, SpecValidationError: with every violation found.
    """
    viol = schema_violations(doc)
    if viol:
        raise SchemaError(viol + _expression_violations(doc))
    errors: list = []
    try:
        chart = Chart(tuple(doc["chart"]["coords"]), tuple(doc["chart"].get("params", {}).items()))
    except ChartError as e:
        raise SpecValidationError([Violation("/chart", str(e))]) from None
    comps = _metric_exprs(doc["metric"], chart, "/metric", errors)
    cf = CoFrameField(chart)
    if "coframe" in doc:
        A = _nested(doc["coframe"], chart, "/coframe", errors, 2)
        if not any(x is None for row in A for x in row):
            cf = CoFrameField(chart, A)
    g = None
    if not any(x is None for x in flatten(comps)):
        g = MetricField(chart, comps)
    conn = _connection(doc.get("connection", "levi-civita"), chart, g, cf, "/connection", errors)
    points = [tuple(float(x) for x in p) for p in doc["sample_points"]]
    for k, p in enumerate(points):
        if not all(math.isfinite(x) for x in p):
            errors.append(("value", Violation(f"/sample_points/{k}", "coordinates must be finite")))
    if g is not None:
        _check_points(chart, g.components, points, "/metric", "metric", errors, cf)
    cand = doc.get("candidate")
    if cand is not None:
        if cand.get("same_metric") and "metric" in cand:
            errors.append(("value", Violation("/candidate/metric", "same_metric candidate must not carry a metric")))
        elif "metric" in cand:
            cm = _metric_exprs(cand["metric"], chart, "/candidate/metric", errors)
            if not any(x is None for x in flatten(cm)):
                _check_points(chart, cm, points, "/candidate/metric", "candidate metric", errors)
    requested = doc.get("checks")
    explicit = requested is not None
    checks = tuple(requested) if explicit else tuple(c for c in CHECKS if c != "gprime" or cand is not None)
    for k, c in enumerate(checks):
        if c == "gprime" and cand is None:
            errors.append(("value", Violation(f"/checks/{k}", "gprime needs a candidate block")))
        if c == "decomposition" and not cf.is_coordinate:
            errors.append(("value", Violation(f"/checks/{k}", "decomposition needs a coordinate coframe")))
    tol = doc.get("tolerances", {})
    hold = float(tol.get("hold", HOLD_TOL))
    violate = float(tol.get("violate", VIOLATE_TOL))
    if violate < hold:
        errors.append(("value", Violation("/tolerances/violate", "violate tolerance must be >= hold tolerance")))
    if errors:
        if any(kind == "syntax" for kind, _ in errors):
            raise SpecSyntaxError([v for _, v in errors])
        raise SpecValidationError([v for _, v in errors])
    conv = doc.get("conventions", {})
    return Structure(
        name=doc.get("name", name), doc=doc, chart=chart, cf=cf, g=g, L=conn,
        orientation=int(doc.get("orientation", 1)), points=points, checks=checks,
        hold=hold, violate=violate, ricci_convention=conv.get("ricci_convention", "e4"),
        dual_pair=conv.get("dual_pair", "second"), candidate_doc=cand, explicit_checks=explicit)


def parse_document(text: str) -> dict:
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecSyntaxError([Violation("", f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")]) from None


def load_spec(path) -> Structure:
    """Read, validate and build a specification file."""
    from pathlib import Path

    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise SpecSyntaxError([Violation("", f"not UTF-8: {e}")]) from None
    return build_structure(parse_document(text), name=p.stem)
