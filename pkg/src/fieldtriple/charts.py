"""Adapted coordinate charts for every space of the triple.

All form values are coefficients relative to the coordinate volume
``eta = dx1 ^ ... ^ dxm`` (and ``eta_i`` = contraction of ``eta`` with
``d/dx_i``), so every density is a scalar expression.

Symbol naming, for base names ``x1..xm`` and fiber names ``y1..yn``
(indices are 1-based, ``a`` = fiber, ``j, k`` = base direction)::

    y1_2        first jet  dy^1/dx^2
    y1_1_2      second jet, stored only for j <= k
    dy1, dy1_2  vertical variations of y1 and y1_2
    p1_2        momentum p^2_1 conjugate to y1_2
    dp1_2_3     d p^2_1 / d x^3
    r           affine fibre coordinate of the affine dual
    xi1, v1_2   slots of the affine phase bundle
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Optional

from .errors import BaseMismatch, ChartMismatch, NameCollision, UnknownSymbol
from .expr import ZERO, Const, Expr, Symbol, as_expr, diff, free_symbols, normalize

_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9]*\Z")
_RESERVED = {"sin", "cos", "exp", "log", "sqrt"}

CHART_NAMES = ("E", "J1E", "J2E", "VE", "VJ1E", "J1VE", "P", "J1P", "JdE", "PJdE")


@dataclass(frozen=True)
class ChartSet:
    """Ordered symbol lists for one fibration (m base, n fiber dimensions)."""

    base: tuple
    fibers: tuple

    @property
    def m(self) -> int:
        return len(self.base)

    @property
    def n(self) -> int:
        return len(self.fibers)

    # -- symbol names (a, j, k are 1-based) ---------------------------------
    def x(self, i: int) -> str:
        return self.base[i - 1]

    def y(self, a: int) -> str:
        return self.fibers[a - 1]

    def jet(self, a: int, j: int) -> str:
        return f"{self.fibers[a - 1]}_{j}"

    def jet2(self, a: int, j: int, k: int) -> str:
        j, k = min(j, k), max(j, k)
        return f"{self.fibers[a - 1]}_{j}_{k}"

    def dy(self, a: int) -> str:
        return f"d{self.fibers[a - 1]}"

    def djet(self, a: int, j: int) -> str:
        return f"d{self.fibers[a - 1]}_{j}"

    def p(self, a: int, j: int) -> str:
        return f"p{a}_{j}"

    def dp(self, a: int, j: int, k: int) -> str:
        return f"dp{a}_{j}_{k}"

    def xi(self, a: int) -> str:
        return f"xi{a}"

    def v(self, a: int, j: int) -> str:
        return f"v{a}_{j}"

    r = "r"

    # -- index ranges ----------------------------------------------------------
    @property
    def A(self) -> range:
        return range(1, self.n + 1)

    @property
    def J(self) -> range:
        return range(1, self.m + 1)

    # -- role groups -------------------------------------------------------------
    @cached_property
    def jets(self) -> tuple:
        return tuple(self.jet(a, j) for a in self.A for j in self.J)

    @cached_property
    def jets2(self) -> tuple:
        return tuple(self.jet2(a, j, k) for a in self.A for j in self.J for k in self.J if j <= k)

    @cached_property
    def variations(self) -> tuple:
        return tuple(self.dy(a) for a in self.A)

    @cached_property
    def jet_variations(self) -> tuple:
        return tuple(self.djet(a, j) for a in self.A for j in self.J)

    @cached_property
    def momenta(self) -> tuple:
        return tuple(self.p(a, j) for a in self.A for j in self.J)

    @cached_property
    def momentum_jets(self) -> tuple:
        return tuple(self.dp(a, j, k) for a in self.A for j in self.J for k in self.J)

    # -- charts --------------------------------------------------------------------
    @cached_property
    def E(self) -> tuple:
        return self.base + self.fibers

    @cached_property
    def J1E(self) -> tuple:
        return self.E + self.jets

    @cached_property
    def J2E(self) -> tuple:
        return self.J1E + self.jets2

    @cached_property
    def VE(self) -> tuple:
        return self.E + self.variations

    @cached_property
    def VJ1E(self) -> tuple:
        return self.J1E + self.variations + self.jet_variations

    @cached_property
    def J1VE(self) -> tuple:
        return self.E + self.variations + self.jets + self.jet_variations

    @cached_property
    def P(self) -> tuple:
        return self.E + self.momenta

    @cached_property
    def J1P(self) -> tuple:
        return self.P + self.jets + self.momentum_jets

    @cached_property
    def JdE(self) -> tuple:
        return self.P + (self.r,)

    @cached_property
    def PJdE(self) -> tuple:
        return self.P + tuple(self.xi(a) for a in self.A) + tuple(self.v(a, j) for a in self.A for j in self.J)

    def chart(self, name: str) -> tuple:
        if name not in CHART_NAMES:
            raise ChartMismatch(f"unknown chart {name!r}")
        return getattr(self, name)

    @cached_property
    def generated(self) -> frozenset:
        """Every generated (non user-chosen) symbol across all charts."""
        names = set()
        for c in CHART_NAMES:
            names.update(self.chart(c))
        return frozenset(names - set(self.base) - set(self.fibers))


def build_charts(base, fibers, parameters=()) -> ChartSet:
    """Build the chart set, rejecting invalid or clashing names."""
    base, fibers = tuple(base), tuple(fibers)
    if not base or not fibers:
        raise ValueError("need at least one base and one fiber coordinate")
    user = list(base) + list(fibers) + list(parameters)
    for name in user:
        if not _IDENT.match(name) or name in _RESERVED:
            raise NameCollision(f"invalid symbol name {name!r}")
    dupes = sorted({s for s in user if user.count(s) > 1})
    if dupes:
        raise NameCollision(f"duplicate names: {', '.join(dupes)}")
    charts = ChartSet(base, fibers)
    clash = sorted(set(user) & charts.generated)
    if clash:
        raise NameCollision(f"names clash with generated coordinates: {', '.join(clash)}")
    for c in CHART_NAMES:
        symbols = charts.chart(c)
        if len(set(symbols)) != len(symbols):
            dup = sorted({s for s in symbols if symbols.count(s) > 1})
            raise NameCollision(f"chart {c} has colliding coordinates: {', '.join(dup)}")
    return charts


@dataclass(frozen=True)
class FieldModel:
    """A fibration in adapted coordinates plus its Lagrangian data.

    ``lagrangian`` is the coefficient of L relative to eta; ``sources`` are
    the coefficients of the source section (one per fiber); ``hamiltonian``
    an optional user-supplied Hamiltonian coefficient over the P chart.
    Expressions are stored in normal form.
    """

    base: tuple
    fibers: tuple
    lagrangian: Expr
    parameters: tuple = ()  # ((name, Fraction | None), ...)
    sources: Optional[tuple] = None
    hamiltonian: Optional[Expr] = None
    source_sign: int = 1
    name: str = field(default="", compare=False)

    def __post_init__(self):
        set_ = object.__setattr__
        set_(self, "base", tuple(self.base))
        set_(self, "fibers", tuple(self.fibers))
        set_(self, "parameters", tuple((k, None if v is None else Fraction(v)) for k, v in self.parameters))
        set_(self, "lagrangian", normalize(as_expr(self.lagrangian)))
        if self.sources is not None:
            set_(self, "sources", tuple(normalize(as_expr(s)) for s in self.sources))
            if len(self.sources) != len(self.fibers):
                raise ValueError(f"expected {len(self.fibers)} sources, got {len(self.sources)}")
        if self.hamiltonian is not None:
            set_(self, "hamiltonian", normalize(as_expr(self.hamiltonian)))
        if self.source_sign not in (1, -1):
            raise ValueError("source_sign must be +1 or -1")
        charts = self.charts
        params = set(self.parameter_names)
        _require(self.lagrangian, set(charts.J1E) | params, "lagrangian")
        for s in self.sources or ():
            _require(s, set(charts.E) | params, "source")
        if self.hamiltonian is not None:
            _require(self.hamiltonian, set(charts.P) | params, "hamiltonian")

    @property
    def m(self) -> int:
        return len(self.base)

    @property
    def n(self) -> int:
        return len(self.fibers)

    @property
    def parameter_names(self) -> tuple:
        return tuple(k for k, _ in self.parameters)

    @property
    def parameter_values(self) -> dict:
        return {k: v for k, v in self.parameters if v is not None}

    @cached_property
    def charts(self) -> ChartSet:
        return build_charts(self.base, self.fibers, self.parameter_names)

    def source(self, a: int) -> Expr:
        """Signed source coefficient entering the divergence law of fiber ``a``."""
        if self.sources is None:
            return ZERO
        return normalize(Const(Fraction(self.source_sign)) * self.sources[a - 1])


def _require(e: Expr, allowed: set, what: str) -> None:
    extra = free_symbols(e) - allowed
    if extra:
        raise UnknownSymbol(f"{what} uses unknown symbols: {', '.join(sorted(extra))}")


# -- canonical maps -------------------------------------------------------------

def _check_keys(point: Mapping, expected, chart: str) -> None:
    if set(point) != set(expected):
        missing = sorted(set(expected) - set(point))
        extra = sorted(set(point) - set(expected))
        raise ChartMismatch(f"point does not cover chart {chart}: missing {missing}, extra {extra}")


def kappa_flip(charts: ChartSet, point: Mapping) -> dict:
    """Canonical flip VJ1E -> J1VE.

    In adapted coordinates only the roles of the components change:
    (x, y, y_j, dy, dy_j) -> (x, y, dy, y_j, dy_j).
    """
    _check_keys(point, charts.VJ1E, "VJ1E")
    return {s: point[s] for s in charts.J1VE}


def kappa_unflip(charts: ChartSet, point: Mapping) -> dict:
    """Inverse of :func:`kappa_flip`."""
    _check_keys(point, charts.J1VE, "J1VE")
    return {s: point[s] for s in charts.VJ1E}


def jet_pairing(charts: ChartSet, u: Mapping, w: Mapping):
    """Evaluate a J1P point against a J1VE point (the differential of <p, dsigma>).

    Returns ``sum_a sum_l dp_a_l_l * dy_a + sum_a sum_j p_a_j * dy_a_j``.
    Values may be numbers or expressions.
    """
    _check_keys(u, charts.J1P, "J1P")
    _check_keys(w, charts.J1VE, "J1VE")
    for s in charts.J1E:
        if u[s] != w[s]:
            raise BaseMismatch(f"points disagree on {s}: {u[s]} vs {w[s]}")
    total = 0
    for a in charts.A:
        trace = sum((u[charts.dp(a, l, l)] for l in charts.J), 0)
        total = total + trace * w[charts.dy(a)]
        for j in charts.J:
            total = total + u[charts.p(a, j)] * w[charts.djet(a, j)]
    return total


# -- forms ---------------------------------------------------------------------

class TwoForm:
    """Antisymmetric coefficient table of a (eta-valued) 2-form.

    ``table[s, t]`` is the coefficient of ``ds ^ dt`` counted so that
    ``ds ^ dt`` contributes +c at (s, t) and -c at (t, s).
    """

    def __init__(self, symbols, entries=None):
        self.symbols = tuple(symbols)
        self._c: dict = {}
        for (s, t), c in (entries or {}).items():
            self.add(s, t, c)

    def add(self, s: str, t: str, c) -> None:
        """Accumulate ``c * ds ^ dt``."""
        if s == t:
            return
        for key, val in (((s, t), c), ((t, s), -as_expr(c))):
            new = normalize(self._c.get(key, ZERO) + val)
            if new == ZERO:
                self._c.pop(key, None)
            else:
                self._c[key] = new

    def __getitem__(self, key) -> Expr:
        return self._c.get(tuple(key), ZERO)

    def nonzero(self) -> dict:
        order = {s: i for i, s in enumerate(self.symbols)}
        items = sorted(self._c.items(), key=lambda kv: (order.get(kv[0][0], 1 << 30), order.get(kv[0][1], 1 << 30)))
        return dict(items)

    def upper(self) -> dict:
        """Entries with s before t in symbol order."""
        order = {s: i for i, s in enumerate(self.symbols)}
        return {k: v for k, v in self.nonzero().items() if order[k[0]] < order[k[1]]}

    def scaled(self, c) -> "TwoForm":
        out = TwoForm(self.symbols)
        out._c = {k: normalize(as_expr(c) * v) for k, v in self._c.items()}
        out._c = {k: v for k, v in out._c.items() if v != ZERO}
        return out

    def pullback(self, mapping: Mapping[str, Expr], source_symbols) -> "TwoForm":
        """Pull back through a coordinate map given as target symbol -> expression."""
        source_symbols = tuple(source_symbols)
        jac = {
            t: {u: d for u in source_symbols if (d := diff(mapping[t], u)) != ZERO}
            for t in self.symbols
        }
        out = TwoForm(source_symbols)
        for (s, t), c in self.upper().items():
            for u, ds in jac[s].items():
                for w, dt in jac[t].items():
                    out.add(u, w, c * ds * dt)
        return out

    def __eq__(self, other):
        return isinstance(other, TwoForm) and self._c == other._c

    def __repr__(self):
        body = ", ".join(f"d{s}^d{t}: {c}" for (s, t), c in self.upper().items())
        return f"TwoForm({body})"


@dataclass(frozen=True)
class CanonicalForms:
    theta_P: tuple  # [i][a] -> coefficient of dy^a (x) eta_i
    omega_J1P: TwoForm
    omega_PJdE: TwoForm


def canonical_forms(charts: ChartSet) -> CanonicalForms:
    """Liouville-type 1-form on P and the 2-forms on J1P and PJdE."""
    theta = tuple(tuple(Symbol(charts.p(a, i)) for a in charts.A) for i in charts.J)
    one = Const(Fraction(1))
    w_j1p = TwoForm(charts.J1P)
    for a in charts.A:
        for i in charts.J:
            w_j1p.add(charts.dp(a, i, i), charts.y(a), one)
        for j in charts.J:
            w_j1p.add(charts.p(a, j), charts.jet(a, j), one)
    w_pjde = TwoForm(charts.PJdE)
    for a in charts.A:
        w_pjde.add(charts.xi(a), charts.y(a), one)
        for k in charts.J:
            w_pjde.add(charts.v(a, k), charts.p(a, k), one)
    return CanonicalForms(theta, w_j1p, w_pjde)
