"""Hamiltonian side: Legendre transform, beta, Hamiltonian phase dynamics.

Sign convention: beta puts ``-sum_k dp_a_k_k`` in the xi slot and the
differential of a Hamiltonian section has ``xi_a = +dh/dy_a``.  With this
pair, beta pulls the PJdE form back to minus the J1P form, beta = R o alpha,
and beta^{-1}(dH(P)) gives  y_a_j = dh/dp_a_j,  sum_k dp_a_k_k = -dh/dy_a.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional

from .charts import ChartSet, FieldModel, TwoForm, _check_keys, canonical_forms
from .errors import NonQuadratic, SingularLagrangian
from .expr import (
    ONE,
    ZERO,
    Const,
    Expr,
    Symbol,
    as_expr,
    atoms,
    diff,
    eval_at,
    free_symbols,
    normalize,
    subs,
    to_poly,
    to_text,
)
from .lagrangian import CovectorPoint, DynamicsSystem, Equation, EquationClass, alpha_map, symbolic_point


@dataclass(frozen=True)
class HamiltonianSection:
    h: Expr
    provenance: str = "user-supplied"  # or "legendre-derived"


@dataclass(frozen=True)
class PJdEPoint:
    base: dict  # x, y, p
    xi: tuple
    v: tuple  # [a][j]

    def as_dict(self, charts: ChartSet) -> dict:
        out = dict(self.base)
        for a in charts.A:
            out[charts.xi(a)] = self.xi[a - 1]
            for j in charts.J:
                out[charts.v(a, j)] = self.v[a - 1][j - 1]
        return out


# -- Legendre transform -------------------------------------------------------------

def _det_fraction(mat: list) -> Fraction:
    a = [row[:] for row in mat]
    n, det = len(a), Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if a[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            det = -det
        det *= a[col][col]
        for r in range(col + 1, n):
            f = a[r][col] / a[col][col]
            if f:
                for c in range(col, n):
                    a[r][c] -= f * a[col][c]
    return det


def _inverse_fraction(mat: list) -> list:
    n = len(mat)
    a = [row[:] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(mat)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[pivot] = a[pivot], a[col]
        piv = a[col][col]
        a[col] = [x / piv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col]:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]


def _null_space_fraction(mat: list) -> list:
    n = len(mat)
    a = [row[:] for row in mat]
    pivots, r = [], 0
    for col in range(n):
        pivot = next((i for i in range(r, n) if a[i][col] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        piv = a[r][col]
        a[r] = [x / piv for x in a[r]]
        for i in range(n):
            if i != r and a[i][col]:
                f = a[i][col]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(col)
        r += 1
    basis = []
    for free in (c for c in range(n) if c not in pivots):
        vec = [Fraction(0)] * n
        vec[free] = Fraction(1)
        for row, pc in enumerate(pivots):
            vec[pc] = -a[row][free]
        basis.append(vec)
    return basis


class _Minors:
    """Memoised Laplace expansion for symbolic matrices (small sizes only)."""

    def __init__(self, mat):
        self.mat = mat
        self.memo: dict = {}

    def det(self, rows: tuple, cols: tuple) -> Expr:
        if not rows:
            return ONE
        key = (rows, cols)
        if key not in self.memo:
            r0, total = rows[0], ZERO
            for k, c in enumerate(cols):
                entry = self.mat[r0][c]
                if entry == ZERO:
                    continue
                minor = self.det(rows[1:], cols[:k] + cols[k + 1:])
                term = entry * minor
                total = total + (term if k % 2 == 0 else -term)
            self.memo[key] = normalize(total)
        return self.memo[key]


def _quadratic_parts(model: FieldModel):
    c = model.charts
    jets = list(c.jets)
    jet_set = set(jets)
    ell = model.lagrangian
    for atom in atoms(ell):
        if not isinstance(atom, Symbol) and free_symbols(atom) & jet_set:
            raise NonQuadratic(f"jets appear inside {to_text(atom)}; symbolic inversion refused")
    for mono in to_poly(ell):
        degree = sum(k for a, k in mono if isinstance(a, Symbol) and a.name in jet_set)
        if degree > 2 or any(k < 0 for a, k in mono if isinstance(a, Symbol) and a.name in jet_set):
            raise NonQuadratic("lagrangian is not quadratic in the jet coordinates")
    zero = {s: ZERO for s in jets}
    grad = [diff(ell, s) for s in jets]
    hess = [[diff(g, s) for s in jets] for g in grad]
    lin = [subs(g, zero) for g in grad]
    const = subs(ell, zero)
    return jets, hess, lin, const


def legendre_transform(model: FieldModel) -> HamiltonianSection:
    """h = sum p_a_j v_a_j - l(v), with v solving p = dl/dy_j.

    Only Lagrangians quadratic in the jets are inverted.  Writing
    l = 1/2 v.A.v + b.v + c, the result is h = 1/2 (p-b).A^{-1}.(p-b) - c.
    """
    c = model.charts
    jets, hess, lin, const = _quadratic_parts(model)
    size = len(jets)
    shifted = [normalize(Symbol(c.momenta[i]) - lin[i]) for i in range(size)]
    if all(isinstance(e, Const) for row in hess for e in row):
        mat = [[e.value for e in row] for row in hess]
        if _det_fraction(mat) == 0:
            raise SingularLagrangian(
                "momentum map is not invertible", _directions(jets, _null_space_fraction(mat))
            )
        inv = _inverse_fraction(mat)
        quad = ZERO
        for i in range(size):
            for k in range(size):
                if inv[i][k]:
                    quad = quad + Const(inv[i][k]) * shifted[i] * shifted[k]
        h = normalize(Const(Fraction(1, 2)) * quad - const)
        return HamiltonianSection(h, "legendre-derived")
    minors = _Minors(hess)
    idx = tuple(range(size))
    det = minors.det(idx, idx)
    if det == ZERO:
        raise SingularLagrangian("momentum map is not invertible", _generic_directions(model, jets, hess))
    quad = ZERO
    for i in range(size):
        for k in range(size):
            # adj[i][k] = (-1)^(i+k) * minor(row k, col i)
            cof = minors.det(idx[:k] + idx[k + 1:], idx[:i] + idx[i + 1:])
            if cof != ZERO:
                term = cof * shifted[i] * shifted[k]
                quad = quad + (term if (i + k) % 2 == 0 else -term)
    h = normalize(Const(Fraction(1, 2)) * quad / det - const)
    return HamiltonianSection(h, "legendre-derived")


def _directions(jets, basis) -> list:
    return [{jets[i]: str(x) for i, x in enumerate(vec) if x} for vec in basis]


def _generic_directions(model, jets, hess) -> list:
    # null space at a generic rational point of the (x, y, parameter) space
    rng = random.Random(0)
    names = set(model.charts.E) | set(model.parameter_names)
    point = {s: Fraction(rng.randint(-97, 97), 13) for s in names}
    point.update(model.parameter_values)
    try:
        mat = [[Fraction(eval_at(e, point)) for e in row] for row in hess]
    except Exception:
        return []
    return _directions(jets, _null_space_fraction(mat))


# -- maps ----------------------------------------------------------------------------

def section_differential(charts: ChartSet, section: HamiltonianSection) -> PJdEPoint:
    """dH(P): xi_a = dh/dy_a, v_a_j = dh/dp_a_j over the symbolic P chart."""
    h = section.h
    return PJdEPoint(
        base={s: Symbol(s) for s in charts.P},
        xi=tuple(diff(h, charts.y(a)) for a in charts.A),
        v=tuple(tuple(diff(h, charts.p(a, j)) for j in charts.J) for a in charts.A),
    )


def beta_map(charts: ChartSet, u: Mapping, xi_sign: int = -1) -> PJdEPoint:
    """The Hamiltonian morphism J1P -> PJdE.

    ``xi_sign=+1`` gives the variant with an unsigned trace in the xi slot;
    it is kept for negative-control checks only.
    """
    _check_keys(u, charts.J1P, "J1P")
    return PJdEPoint(
        base={s: u[s] for s in charts.P},
        xi=tuple(xi_sign * sum((u[charts.dp(a, k, k)] for k in charts.J), 0) for a in charts.A),
        v=tuple(tuple(u[charts.jet(a, j)] for j in charts.J) for a in charts.A),
    )


def r_map(charts: ChartSet, point: CovectorPoint) -> PJdEPoint:
    """V*J1E (x) Omega^m -> PJdE: (y_j; e, p) -> (p := p, xi := -e, v := y_j)."""
    base = {s: point.base[s] for s in charts.E}
    for a in charts.A:
        for j in charts.J:
            base[charts.p(a, j)] = point.p[a - 1][j - 1]
    return PJdEPoint(
        base={s: base[s] for s in charts.P},
        xi=tuple(-1 * e for e in point.e),
        v=tuple(tuple(point.base[charts.jet(a, j)] for j in charts.J) for a in charts.A),
    )


def add_source(charts: ChartSet, u: Mapping, rho: tuple) -> dict:
    """Add a source covector (one value per fiber) to a J1P point; only the
    trace of the momentum jet changes."""
    out = dict(u)
    for a in charts.A:
        key = charts.dp(a, 1, 1)
        out[key] = normalize(as_expr(out[key]) + as_expr(rho[a - 1]))
    return out


def hamiltonian_dynamics(
    model: FieldModel, section: Optional[HamiltonianSection] = None, with_sources: bool = True
) -> DynamicsSystem:
    """beta^{-1}(dH(P)) as equations on J1P.

    Sources are added to the momentum jet with the same convention as on the
    Lagrangian side, so both sides generate the same divergence law.
    """
    c = model.charts
    if section is None:
        if model.hamiltonian is None:
            section = legendre_transform(model)
        else:
            section = HamiltonianSection(model.hamiltonian)
    u = symbolic_point(c.J1P)
    if with_sources:
        u = add_source(c, u, tuple(normalize(-model.source(a)) for a in c.A))
    b = beta_map(c, u)
    dh = section_differential(c, section)
    eqs = []
    for a in c.A:
        for j in c.J:
            # v slot: y_a_j = dh/dp_a_j
            eqs.append(Equation(b.v[a - 1][j - 1], dh.v[a - 1][j - 1], EquationClass.MOMENTUM_DEF_INVERSE, a, j))
        # xi slot: -(trace + shift) = dh/dy_a, solved for the trace
        trace = normalize(sum((Symbol(c.dp(a, k, k)) for k in c.J), ZERO))
        rhs = normalize(trace + b.xi[a - 1] - dh.xi[a - 1])
        eqs.append(Equation(trace, rhs, EquationClass.DIVERGENCE_LAW, a))
    return DynamicsSystem("J1P", tuple(eqs))


# -- symplectic pullback -------------------------------------------------------------

@dataclass
class PullbackReport:
    status: str  # "proved" | "failed"
    differences: list = field(default_factory=list)  # (s, t, got, expected)

    @property
    def proved(self) -> bool:
        return self.status == "proved"


def pullback_symplectic_check(
    charts: ChartSet, beta: Optional[Callable[[ChartSet, Mapping], PJdEPoint]] = None
) -> PullbackReport:
    """Check beta^* omega_PJdE == -omega_J1P component by component."""
    beta = beta or beta_map
    forms = canonical_forms(charts)
    image = beta(charts, symbolic_point(charts.J1P)).as_dict(charts)
    pulled = forms.omega_PJdE.pullback(image, charts.J1P)
    expected = forms.omega_J1P.scaled(-1)
    diffs = []
    keys = set(pulled.upper()) | set(expected.upper())
    order = {s: i for i, s in enumerate(charts.J1P)}
    for s, t in sorted(keys, key=lambda k: (order[k[0]], order[k[1]])):
        if order[s] > order[t]:
            continue
        got, want = pulled[s, t], expected[s, t]
        if normalize(got - want) != ZERO:
            diffs.append((s, t, to_text(got), to_text(want)))
    return PullbackReport("failed" if diffs else "proved", diffs)
