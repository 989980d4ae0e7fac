"""Compiled tape kernel versus the pure-Python fallback.

Compiles every Schwarzschild curvature and second-Bianchi expression into
one tape and times both backends on the same batch of points.

    python3 benchmarks/bench_tape.py [--points N] [--repeat K]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from cartan_dual.connection import levi_civita_connection
from cartan_dual.curvature import Geometry, bianchi_second_terms
from cartan_dual.structure import CoFrameField, MetricField, flatten
from cartan_dual.symexpr import BACKEND, Chart, compile_tape, parse_expr


def schwarzschild_exprs() -> tuple:
    chart = Chart(("t", "r", "th", "ph"), (("M", 1.0),))
    p = lambda s: parse_expr(s, chart)
    g = MetricField(chart, [[p("1-2*M/r"), 0, 0, 0], [0, p("-1/(1-2*M/r)"), 0, 0],
                            [0, 0, p("-r^2"), 0], [0, 0, 0, p("-r^2*sin(th)^2")]])
    cf = CoFrameField(chart)
    geo = Geometry(chart, cf, g, levi_civita_connection(g, cf))
    exprs = flatten(geo.curvature.components)
    for terms in bianchi_second_terms(geo).values():
        for t in terms:
            exprs += list(t)
    return chart, exprs


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, default=2000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    chart, exprs = schwarzschild_exprs()
    names = chart.coords + tuple(n for n, _ in chart.params)
    tape = compile_tape(exprs, names)
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(-5, 5, args.points), rng.uniform(3, 20, args.points),
                           rng.uniform(0.2, 2.9, args.points), rng.uniform(0, 6.2, args.points),
                           np.ones(args.points)])
    print(f"tape: {len(tape)} instructions, {len(exprs)} outputs, {args.points} points")
    print(f"default backend: {BACKEND}")
    py_small = pts[: max(1, args.points // 20)]
    t_py = best_of(lambda: tape.run(py_small, backend="python"), args.repeat) * len(pts) / len(py_small)
    print(f"python    {t_py:9.4f} s (extrapolated from {len(py_small)} points)")
    if BACKEND == "compiled":
        t_c = best_of(lambda: tape.run(pts, backend="compiled"), args.repeat)
        print(f"compiled  {t_c:9.4f} s")
        print(f"speedup   {t_py / t_c:9.1f}x")
        diff = np.max(np.abs(tape.run(py_small, backend="compiled") - tape.run(py_small, backend="python")))
        print(f"max |compiled - python| = {diff:.3e}")
    else:
        print("compiled kernel not built; reinstall without CARTAN_DUAL_NO_EXT to compare")


if __name__ == "__main__":
    main()
