"""Lagrangian side: vertical differential, alpha, phase dynamics, Euler-Lagrange."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .charts import ChartSet, FieldModel, _check_keys
from .errors import OrderOverflow
from .expr import (
    ZERO,
    Expr,
    Symbol,
    as_expr,
    diff,
    free_symbols,
    from_poly,
    leading_coefficient,
    normalize,
    to_poly,
    to_text,
)


class EquationClass(str, Enum):
    MOMENTUM_DEF = "MomentumDef"
    MOMENTUM_DEF_INVERSE = "MomentumDef-inverse"
    DIVERGENCE_LAW = "DivergenceLaw"
    EULER_LAGRANGE = "EulerLagrange"
    CONSTRAINT = "Constraint"
    HAMILTONIAN = "Hamiltonian"


@dataclass(frozen=True)
class Equation:
    lhs: Expr
    rhs: Expr
    kind: EquationClass
    fiber: int = 0
    index: int = 0

    @property
    def residual(self) -> Expr:
        return normalize(self.lhs - self.rhs)

    @property
    def text(self) -> str:
        return f"{to_text(self.lhs)} = {to_text(self.rhs)}"

    def to_dict(self) -> dict:
        return {
            "class": self.kind.value,
            "lhs": to_text(self.lhs),
            "rhs": to_text(self.rhs),
            "text": self.text,
        }


@dataclass(frozen=True)
class DynamicsSystem:
    chart: str
    equations: tuple

    def __iter__(self):
        return iter(self.equations)

    def __len__(self):
        return len(self.equations)

    def of_kind(self, kind: EquationClass) -> list:
        return [eq for eq in self.equations if eq.kind == kind]


@dataclass(frozen=True)
class VerticalCovector:
    """Coefficients of ``dy^a`` (``e[a]``) and ``dy^a_j`` (``p[a][j]``), times eta."""

    e: tuple
    p: tuple


@dataclass(frozen=True)
class CovectorPoint:
    """A point of V*J1E (x) Omega^m: base (x, y, y_j) plus covector slots."""

    base: dict
    e: tuple
    p: tuple

    def pair(self, charts: ChartSet, w: Mapping):
        """Evaluate on a VJ1E point sharing the same J1E projection."""
        total = 0
        for a in charts.A:
            total = total + self.e[a - 1] * w[charts.dy(a)]
            for j in charts.J:
                total = total + self.p[a - 1][j - 1] * w[charts.djet(a, j)]
        return total


def vertical_differential(model: FieldModel) -> VerticalCovector:
    c, ell = model.charts, model.lagrangian
    return VerticalCovector(
        e=tuple(diff(ell, c.y(a)) for a in c.A),
        p=tuple(tuple(diff(ell, c.jet(a, j)) for j in c.J) for a in c.A),
    )


def alpha_map(charts: ChartSet, u: Mapping) -> CovectorPoint:
    """The Lagrangian morphism J1P -> V*J1E (x) Omega^m.

    The dy^a slot receives the trace sum_l dp_a_l_l; off-trace momentum
    derivatives are dropped.
    """
    _check_keys(u, charts.J1P, "J1P")
    return CovectorPoint(
        base={s: u[s] for s in charts.J1E},
        e=tuple(sum((u[charts.dp(a, l, l)] for l in charts.J), 0) for a in charts.A),
        p=tuple(tuple(u[charts.p(a, j)] for j in charts.J) for a in charts.A),
    )


def symbolic_point(symbols) -> dict:
    return {s: Symbol(s) for s in symbols}


def _momentum_class(charts: ChartSet, rhs: Expr) -> EquationClass:
    # a momentum definition free of jets constrains the phase space itself
    if free_symbols(rhs) & set(charts.jets):
        return EquationClass.MOMENTUM_DEF
    return EquationClass.CONSTRAINT


def phase_dynamics(model: FieldModel, with_sources: bool = True) -> DynamicsSystem:
    """alpha^{-1}(dL(J1E)) written as equations on J1P.

    No regularity of the Lagrangian is assumed.
    """
    c = model.charts
    dl = vertical_differential(model)
    eqs = []
    for a in c.A:
        for j in c.J:
            rhs = dl.p[a - 1][j - 1]
            eqs.append(Equation(Symbol(c.p(a, j)), rhs, _momentum_class(c, rhs), a, j))
        div = normalize(sum((Symbol(c.dp(a, j, j)) for j in c.J), ZERO))
        rhs = dl.e[a - 1]
        if with_sources:
            rhs = normalize(rhs + model.source(a))
        eqs.append(Equation(div, rhs, EquationClass.DIVERGENCE_LAW, a))
    return DynamicsSystem("J1P", tuple(eqs))


def total_derivative(charts: ChartSet, e, j: int) -> Expr:
    """Formal total derivative D_j on J^0/J^1 (also acting on variations).

    D_j e = de/dx_j + sum_a y_a_j de/dy_a + sum_{a,i} y_a_(i,j) de/dy_a_i
            + sum_a dy_a_j de/d(dy_a)
    """
    e = normalize(as_expr(e))
    syms = free_symbols(e)
    if syms & (set(charts.jets2) | set(charts.jet_variations)):
        raise OrderOverflow("total derivative would leave the second jet bundle")
    out = diff(e, charts.x(j)) if charts.x(j) in syms else ZERO
    terms = [out]
    for a in charts.A:
        if charts.y(a) in syms:
            terms.append(Symbol(charts.jet(a, j)) * diff(e, charts.y(a)))
        for i in charts.J:
            if charts.jet(a, i) in syms:
                terms.append(Symbol(charts.jet2(a, i, j)) * diff(e, charts.jet(a, i)))
        if charts.dy(a) in syms:
            terms.append(Symbol(charts.djet(a, j)) * diff(e, charts.dy(a)))
    return normalize(_sum(terms))


def _sum(terms) -> Expr:
    out: Expr = ZERO
    for t in terms:
        out = out + t
    return out


def ep_split(charts: ChartSet, mu: VerticalCovector) -> tuple:
    """Split a vertical covector into its Euler-Lagrange part (on J2E) and
    boundary part: E_a = mu.e_a - sum_j D_j(mu.p_a_j), P_a_j = mu.p_a_j."""
    e_part = tuple(
        normalize(mu.e[a - 1] - _sum(total_derivative(charts, mu.p[a - 1][j - 1], j) for j in charts.J))
        for a in charts.A
    )
    return e_part, mu.p


def _display(charts: ChartSet, expr: Expr) -> tuple:
    """Arrange ``expr = 0`` as highest-order terms = remainder."""
    poly = to_poly(expr)
    high = set(charts.jets2)
    lead = {m: c for m, c in poly.items() if any(isinstance(a, Symbol) and a.name in high for a, _ in m)}
    if not lead:
        return expr, ZERO
    rest = {m: -c for m, c in poly.items() if m not in lead}
    lhs, rhs = from_poly(lead), from_poly(rest)
    if leading_coefficient(lhs) < 0:
        lhs, rhs = normalize(-lhs), normalize(-rhs)
    return lhs, rhs


def euler_lagrange_expressions(model: FieldModel, with_sources: bool = True) -> tuple:
    """dl/dy_a - sum_j D_j(dl/dy_a_j) + rho_a, one per fiber."""
    e_part, _ = ep_split(model.charts, vertical_differential(model))
    if not with_sources:
        return e_part
    return tuple(normalize(e + model.source(a)) for a, e in zip(model.charts.A, e_part))


def euler_lagrange(model: FieldModel, with_sources: bool = True) -> DynamicsSystem:
    c = model.charts
    eqs = []
    for a, expr in zip(c.A, euler_lagrange_expressions(model, with_sources)):
        lhs, rhs = _display(c, expr)
        eqs.append(Equation(lhs, rhs, EquationClass.EULER_LAGRANGE, a))
    return DynamicsSystem("J2E", tuple(eqs))


def legendre_map(model: FieldModel) -> dict:
    """Momentum symbol -> dl/dy_a_j as a function on J1E."""
    c = model.charts
    return {c.p(a, j): diff(model.lagrangian, c.jet(a, j)) for a in c.A for j in c.J}
