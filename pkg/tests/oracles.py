"""Independent reference computations built on sympy.

Nothing here imports the geometry modules under test; expressions cross
over only as printed text.
"""
from __future__ import annotations

from functools import lru_cache

import sympy as sp


def to_sympy(text: str, names) -> sp.Expr:
    local = {n: sp.Symbol(n) for n in names}
    local.update({"ln": sp.log, "sqrt": sp.sqrt, "exp": sp.exp, "sin": sp.sin, "cos": sp.cos, "tan": sp.tan})
    return sp.sympify(text.replace("^", "**"), locals=local)


def christoffel(g: sp.Matrix, xs) -> list:
    """``Gamma[r][a][b] = 1/2 g^{r s} (d_a g_{s b} + d_b g_{s a} - d_s g_{a b})``."""
    gi = g.inv()
    n = len(xs)
    return [[[sp.simplify(sum(gi[r, s] * (sp.diff(g[s, b], xs[a]) + sp.diff(g[s, a], xs[b])
                                          - sp.diff(g[a, b], xs[s])) for s in range(n)) / 2)
              for b in range(n)] for a in range(n)] for r in range(n)]


def riemann(gam, xs) -> list:
    """``R^r_{m a b} = d_a G^r_{b m} - d_b G^r_{a m} + G^r_{a s} G^s_{b m} - G^r_{b s} G^s_{a m}``, stored [m][r][a][b]."""
    n = len(xs)
    return [[[[sp.diff(gam[r][b][m], xs[a]) - sp.diff(gam[r][a][m], xs[b])
               + sum(gam[r][a][s] * gam[s][b][m] - gam[r][b][s] * gam[s][a][m] for s in range(n))
               for b in range(n)] for a in range(n)] for r in range(n)] for m in range(n)]


def ricci(riem) -> list:
    n = len(riem)
    return [[sum(riem[m][r][r][v] for r in range(n)) for v in range(n)] for m in range(n)]


@lru_cache(maxsize=None)
def schwarzschild_oracle():
    t, r, th, ph, M = sp.symbols("t r th ph M")
    f = 1 - 2 * M / r
    g = sp.diag(f, -1 / f, -r ** 2, -r ** 2 * sp.sin(th) ** 2)
    xs = (t, r, th, ph)
    gam = christoffel(g, xs)
    riem = riemann(gam, xs)
    return xs, M, g, gam, riem, ricci(riem)


def numeric(e, subs) -> float:
    return float(sp.N(e.subs(subs) if hasattr(e, "subs") else e))
