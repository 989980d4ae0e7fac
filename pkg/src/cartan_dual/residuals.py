"""Numeric residual evaluation shared by the identity checks.

An identity is given as a list of *terms*: equally long lists of
expressions whose componentwise sum should vanish.  Terms are evaluated
separately so the residual can be scaled by the largest term, making
tolerances independent of the overall magnitude of the fields.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .symexpr import Chart, as_expr, compile_tape

HOLD_TOL = 1e-6
VIOLATE_TOL = 1e-3


def thread_cap() -> int:
    try:
        n = int(os.environ.get("CARTAN_DUAL_THREADS", "1"))
    except ValueError:
        n = 1
    return max(1, n)


def evaluate_points(chart: Chart, exprs, points) -> np.ndarray:
    """Evaluate ``exprs`` at every point; shape ``(npoints, nexprs)``.

    Rows are split across at most ``CARTAN_DUAL_THREADS`` workers; results
    are reassembled in point order so output does not depend on scheduling.
    """
    exprs = [as_expr(e) for e in exprs]
    names = tuple(chart.coords) + tuple(n for n, _ in chart.params)
    pvals = [float(v) for _, v in chart.params]
    rows = np.asarray([[float(x) for x in p] + pvals for p in points], dtype=np.float64)
    rows = rows.reshape(len(points), len(names))
    if not exprs:
        return np.zeros((len(rows), 0))
    tape = compile_tape(exprs, names)
    workers = min(thread_cap(), len(rows))
    if workers <= 1:
        return tape.run(rows)
    chunks = np.array_split(rows, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(tape.run, chunks))
    return np.vstack(parts)


@dataclass
class Residual:
    """Per-point relative and absolute residuals of one identity.

    Attributes:
        relative: ``max|sum of terms| / (1 + max|term|)`` at each point.
        absolute: ``max|sum of terms|`` at each point.
        worst_component: flat index of the largest residual at each point.
    """

    relative: np.ndarray
    absolute: np.ndarray
    worst_component: list = field(default_factory=list)
    values: np.ndarray | None = None

    @property
    def max_relative(self) -> float:
        return float(np.max(self.relative)) if len(self.relative) else 0.0

    @property
    def max_absolute(self) -> float:
        return float(np.max(self.absolute)) if len(self.absolute) else 0.0


def residual(chart: Chart, terms, points) -> Residual:
    """Evaluate ``sum(terms)`` at the points with a relative scale."""
    terms = [list(t) for t in terms]
    if not terms or not terms[0]:
        z = np.zeros(len(points))
        return Residual(z, z.copy(), [0] * len(points), np.zeros((len(points), 0)))
    n = len(terms[0])
    if any(len(t) != n for t in terms):
        raise ValueError("residual terms have different lengths")
    flat = [e for t in terms for e in t]
    vals = evaluate_points(chart, flat, points).reshape(len(points), len(terms), n)
    total = vals.sum(axis=1)
    absres = np.abs(total)
    scale = 1.0 + np.max(np.abs(vals).reshape(len(points), -1), axis=1)
    worst = [int(i) for i in np.argmax(absres, axis=1)]
    amax = np.max(absres, axis=1)
    return Residual(amax / scale, amax, worst, total)


def residual_from_values(values: np.ndarray, terms: np.ndarray | None = None) -> Residual:
    """Residual of precomputed numeric arrays with shape ``(npoints, ncomp)``.

    ``terms`` (shape ``(npoints, nterms, ncomp)``) sets the scale when given.
    """
    values = np.asarray(values, dtype=float)
    npts = values.shape[0]
    flat = values.reshape(npts, -1)
    absres = np.abs(flat)
    amax = np.max(absres, axis=1) if flat.shape[1] else np.zeros(npts)
    if terms is None:
        scale = 1.0 + amax
    else:
        scale = 1.0 + np.max(np.abs(np.asarray(terms)).reshape(npts, -1), axis=1)
    worst = [int(i) for i in np.argmax(absres, axis=1)] if flat.shape[1] else [0] * npts
    return Residual(amax / scale, amax, worst, flat)


def verdict(rel_per_point, hold: float = HOLD_TOL, violate: float = VIOLATE_TOL) -> str:
    """``PASS`` when every point is below ``hold``, ``FAIL`` when any exceeds
    ``violate``, otherwise ``INDETERMINATE``."""
    arr = np.asarray(rel_per_point, dtype=float)
    if arr.size == 0 or np.all(arr < hold):
        return "PASS"
    if np.any(arr > violate):
        return "FAIL"
    return "INDETERMINATE"
