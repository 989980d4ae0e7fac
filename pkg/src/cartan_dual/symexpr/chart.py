"""Coordinate charts and sample points."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .expr import FUNCTIONS


class ChartError(ValueError):
    """Malformed chart declaration."""


@dataclass(frozen=True)
class Chart:
    """Four coordinate names plus numeric parameter bindings.

    Example:
        >>> Chart(("t", "r", "th", "ph"), (("M", 1.0),)).symbols
        frozenset({'M', 'ph', 'r', 't', 'th'})
    """

    coords: tuple
    params: tuple = ()
    symbols: frozenset = field(init=False, repr=False, compare=False)
    param_values: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        coords = tuple(self.coords)
        params = tuple((str(n), v) for n, v in (
            self.params.items() if isinstance(self.params, dict) else self.params))
        if len(coords) != 4:
            raise ChartError(f"a chart needs exactly 4 coordinates, got {len(coords)}")
        if len(set(coords)) != 4:
            raise ChartError("coordinate names must be distinct")
        names = [n for n, _ in params]
        if len(set(names)) != len(names):
            raise ChartError("parameter names must be distinct")
        clash = set(coords) & set(names)
        if clash:
            raise ChartError(f"names used as both coordinate and parameter: {sorted(clash)}")
        for n in coords + tuple(names):
            if not isinstance(n, str) or not n.isidentifier():
                raise ChartError(f"invalid symbol name {n!r}")
            if n in FUNCTIONS:
                raise ChartError(f"{n!r} is reserved for a function")
        for n, v in params:
            if isinstance(v, bool) or not isinstance(v, (int, float, Fraction)):
                raise ChartError(f"parameter {n} must be a real number")
            if not math.isfinite(float(v)):
                raise ChartError(f"parameter {n} must be finite")
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "symbols", frozenset(coords) | frozenset(names))
        object.__setattr__(self, "param_values", dict(params))

    def index(self, coord: str) -> int:
        try:
            return self.coords.index(coord)
        except ValueError:
            from .parser import UnknownSymbol

            raise UnknownSymbol(coord) from None

    def point(self, values) -> "Point":
        return Point(tuple(values))


@dataclass(frozen=True)
class Point:
    """Four finite coordinate values in chart order."""

    values: tuple

    def __post_init__(self):
        vals = tuple(self.values)
        if len(vals) != 4:
            raise ValueError(f"a point needs 4 coordinates, got {len(vals)}")
        for v in vals:
            if isinstance(v, bool) or not isinstance(v, (int, float, Fraction)):
                raise ValueError(f"coordinate value {v!r} is not a real number")
            if not math.isfinite(float(v)):
                raise ValueError("coordinate values must be finite")
        object.__setattr__(self, "values", vals)

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return 4

    def __getitem__(self, i):
        return self.values[i]
