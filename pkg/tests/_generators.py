"""Random model generators shared by the test modules."""
from __future__ import annotations

import random
from fractions import Fraction

from fieldtriple.charts import FieldModel, build_charts
from fieldtriple.expr import ZERO, Const, Symbol, normalize
from fieldtriple.lagrangian import total_derivative


def names(m: int, n: int) -> tuple:
    return [f"x{i}" for i in range(1, m + 1)], [f"y{a}" for a in range(1, n + 1)]


def rational(rng: random.Random, lo: int = -5, hi: int = 5, den: int = 4) -> Fraction:
    return Fraction(rng.randint(lo, hi), rng.randint(1, den))


def random_polynomial(rng: random.Random, symbols, degree: int, terms: int = 4):
    out = ZERO
    for _ in range(terms):
        mono = Const(rational(rng))
        for _ in range(rng.randint(0, degree)):
            mono = mono * Symbol(rng.choice(symbols))
        out = out + mono
    return normalize(out)


def random_poly_model(rng: random.Random, m: int, n: int, degree: int = 3) -> FieldModel:
    base, fibers = names(m, n)
    charts = build_charts(base, fibers)
    return FieldModel(base, fibers, random_polynomial(rng, list(charts.J1E), degree, terms=5))


def random_spd_model(rng: random.Random, m: int, n: int) -> FieldModel:
    """l = 1/2 v.A.v + b.v + c with A symmetric positive definite and constant,
    b and c polynomial in (x, y)."""
    base, fibers = names(m, n)
    c = build_charts(base, fibers)
    jets = list(c.jets)
    size = len(jets)
    low = [[Fraction(rng.randint(-2, 2)) if k < i else Fraction(0) for k in range(size)] for i in range(size)]
    for i in range(size):
        low[i][i] = Fraction(rng.randint(1, 3))
    mat = [[sum(low[i][t] * low[k][t] for t in range(size)) for k in range(size)] for i in range(size)]
    quad = ZERO
    for i in range(size):
        for k in range(size):
            if mat[i][k]:
                quad = quad + Const(mat[i][k] / 2) * Symbol(jets[i]) * Symbol(jets[k])
    lin = ZERO
    base_syms = list(c.E)
    for s in jets:
        lin = lin + random_polynomial(rng, base_syms, 2, terms=2) * Symbol(s)
    ell = quad + lin + random_polynomial(rng, base_syms, 3, terms=3)
    return FieldModel(base, fibers, ell)


def random_null_model(rng: random.Random, m: int, n: int) -> FieldModel:
    """l = sum_j D_j f_j(x, y): a total divergence."""
    base, fibers = names(m, n)
    c = build_charts(base, fibers)
    ell = ZERO
    for j in c.J:
        f = random_polynomial(rng, list(c.E), 3, terms=3)
        ell = ell + total_derivative(c, f, j)
    return FieldModel(base, fibers, normalize(ell))
