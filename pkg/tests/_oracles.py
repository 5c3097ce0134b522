"""Independent oracle for Euler-Lagrange expressions.

The gradient of a discrete action (midpoint rule on the cells around one
node, complex-step derivative in the node value) approaches the
Euler-Lagrange expression at that node as h -> 0, with O(h^2) error.
Nothing here uses the total-derivative machinery under test.
"""
from __future__ import annotations

import itertools

import numpy as np
import sympy as sp

from fieldtriple.expr import lambdify
from fieldtriple.lagrangian import euler_lagrange_expressions


def action_gradient(model, fields, x0, h: float = 1e-4, fiber: int = 1, eps: float = 1e-30) -> complex:
    """(1/h^m) dS/d(phi_fiber at x0) for sympy field expressions ``fields``."""
    c = model.charts
    m = c.m
    xs = sp.symbols(list(c.base))
    funcs = [sp.lambdify(xs, f, "numpy") for f in fields]
    names = list(c.J1E) + list(model.parameter_names)
    ell = lambdify(model.lagrangian, names)
    values = model.parameter_values
    params = [float(values.get(k, 0)) for k in model.parameter_names]
    x0 = np.asarray(x0, dtype=float)

    nodes = {}
    for off in itertools.product((-1, 0, 1), repeat=m):
        pt = x0 + np.asarray(off) * h
        nodes[off] = [complex(f(*pt)) for f in funcs]
    centre = (0,) * m
    nodes[centre][fiber - 1] += 1j * eps

    total = 0j
    for corner in itertools.product((-1, 0), repeat=m):
        verts = [tuple(cv + d for cv, d in zip(corner, bits)) for bits in itertools.product((0, 1), repeat=m)]
        mid = x0 + (np.asarray(corner) + 0.5) * h
        env = {c.x(i): mid[i - 1] for i in c.J}
        for a in c.A:
            vals = [nodes[v][a - 1] for v in verts]
            env[c.y(a)] = sum(vals) / len(vals)
            for j in c.J:
                hi = sum(nodes[v][a - 1] for v in verts if v[j - 1] == corner[j - 1] + 1)
                lo = sum(nodes[v][a - 1] for v in verts if v[j - 1] == corner[j - 1])
                env[c.jet(a, j)] = (hi - lo) / (2 ** (m - 1) * h)
        args = [env[s] for s in c.J1E] + params
        total += ell(*args) * h**m
    return total.imag / eps / h**m


def exact_el(model, fields, x0, fiber: int = 1) -> float:
    """Euler-Lagrange expression (no sources) evaluated on the 2-jet of ``fields``."""
    c = model.charts
    xs = sp.symbols(list(c.base))
    point = dict(zip(xs, x0))
    env = {c.x(i): float(x0[i - 1]) for i in c.J}
    for a in c.A:
        f = fields[a - 1]
        env[c.y(a)] = float(f.subs(point))
        for j in c.J:
            env[c.jet(a, j)] = float(sp.diff(f, xs[j - 1]).subs(point))
            for k in c.J:
                if j <= k:
                    env[c.jet2(a, j, k)] = float(sp.diff(f, xs[j - 1], xs[k - 1]).subs(point))
    env.update({k: float(v) for k, v in model.parameter_values.items()})
    expr = euler_lagrange_expressions(model, with_sources=False)[fiber - 1]
    names = sorted(env)
    return float(lambdify(expr, names)(*[env[s] for s in names]))
