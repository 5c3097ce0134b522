"""Identity suite and Lagrangian/Hamiltonian consistency checks.

Every check returns a :class:`CheckResult` whose status is ``proved`` (exact
normal-form identity), ``probable`` (randomised agreement only) or ``failed``
(with a witness).
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Optional

from .charts import ChartSet, FieldModel, jet_pairing, kappa_flip, kappa_unflip
from .errors import NonQuadratic, SingularLagrangian
from .expr import ZERO, Symbol, equivalent, normalize, subs, to_text
from .hamiltonian import (
    HamiltonianSection,
    beta_map,
    hamiltonian_dynamics,
    legendre_transform,
    pullback_symplectic_check,
    r_map,
)
from .lagrangian import (
    EquationClass,
    alpha_map,
    ep_split,
    euler_lagrange_expressions,
    legendre_map,
    phase_dynamics,
    symbolic_point,
    total_derivative,
    vertical_differential,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str
    witness: Any = None

    @property
    def ok(self) -> bool:
        return self.status in ("proved", "probable")

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "witness": self.witness}


def _zero_verdict(name: str, expr, witness_label: str = "") -> CheckResult:
    """proved when ``expr`` normalises to 0, otherwise fall back to sampling."""
    expr = normalize(expr)
    if expr == ZERO:
        return CheckResult(name, "proved")
    eq = equivalent(expr, ZERO)
    witness = {"residual": to_text(expr)}
    if witness_label:
        witness["where"] = witness_label
    if eq.status == "probable":
        return CheckResult(name, "probable", witness)
    if eq.witness:
        witness["detail"] = eq.witness
    return CheckResult(name, "failed", witness)


def _rand_point(rng: random.Random, symbols) -> dict:
    return {s: Fraction(rng.randint(-60, 60), rng.randint(1, 12)) for s in symbols}


def _combine(name: str, results) -> CheckResult:
    results = list(results)
    bad = [r for r in results if r.status == "failed"]
    if bad:
        return CheckResult(name, "failed", bad[0].witness)
    if any(r.status == "probable" for r in results):
        return CheckResult(name, "probable", [r.witness for r in results if r.status == "probable"][0])
    return CheckResult(name, "proved")


# -- identities ----------------------------------------------------------------------

def check_duality(charts: ChartSet, trials: int = 100, seed: int = 0) -> CheckResult:
    """<alpha(u), w> == <<u, kappa(w)>> whenever u and w share (x, y, y_j)."""
    u = symbolic_point(charts.J1P)
    w = symbolic_point(charts.VJ1E)
    lhs = alpha_map(charts, u).pair(charts, w)
    rhs = jet_pairing(charts, u, kappa_flip(charts, w))
    symbolic = _zero_verdict("duality", lhs - rhs)
    if symbolic.status != "proved":
        return symbolic
    rng = random.Random(seed)
    shared = set(charts.J1E)
    for _ in range(trials):
        base = _rand_point(rng, charts.J1E)
        un = {**_rand_point(rng, [s for s in charts.J1P if s not in shared]), **base}
        wn = {**_rand_point(rng, [s for s in charts.VJ1E if s not in shared]), **base}
        left = alpha_map(charts, un).pair(charts, wn)
        right = jet_pairing(charts, un, kappa_flip(charts, wn))
        if left != right:
            return CheckResult("duality", "failed", {"u": {k: str(v) for k, v in un.items()}, "lhs": str(left), "rhs": str(right)})
    return CheckResult("duality", "proved", {"trials": trials})


def check_kappa_roundtrip(charts: ChartSet, trials: int = 100, seed: int = 0) -> CheckResult:
    rng = random.Random(seed)
    for _ in range(trials):
        w = _rand_point(rng, charts.VJ1E)
        flipped = kappa_flip(charts, w)
        if kappa_unflip(charts, flipped) != w or sorted(flipped.values()) != sorted(w.values()):
            return CheckResult("kappa-roundtrip", "failed", {k: str(v) for k, v in w.items()})
    return CheckResult("kappa-roundtrip", "proved", {"trials": trials})


def variational_identity(model: FieldModel) -> CheckResult:
    """dl(dy) == sum_a E_a dy_a + sum_j D_j(sum_a P_a_j dy_a) on J2E x variations."""
    c = model.charts
    mu = vertical_differential(model)
    e_part, p_part = ep_split(c, mu)
    lhs = ZERO
    for a in c.A:
        lhs = lhs + mu.e[a - 1] * Symbol(c.dy(a))
        for j in c.J:
            lhs = lhs + mu.p[a - 1][j - 1] * Symbol(c.djet(a, j))
    rhs = ZERO
    for a in c.A:
        rhs = rhs + e_part[a - 1] * Symbol(c.dy(a))
    for j in c.J:
        flux = ZERO
        for a in c.A:
            flux = flux + p_part[a - 1][j - 1] * Symbol(c.dy(a))
        rhs = rhs + total_derivative(c, flux, j)
    return _zero_verdict("variational-identity", lhs - rhs)


def check_beta_factorization(charts: ChartSet) -> CheckResult:
    """beta == R o alpha, slot by slot."""
    u = symbolic_point(charts.J1P)
    got = beta_map(charts, u).as_dict(charts)
    want = r_map(charts, alpha_map(charts, u)).as_dict(charts)
    return _combine(
        "beta-factorization",
        (_zero_verdict("beta-factorization", got[s] - want[s], s) for s in charts.PJdE),
    )


def check_pullback(charts: ChartSet) -> CheckResult:
    report = pullback_symplectic_check(charts)
    if report.proved:
        return CheckResult("symplectic-pullback", "proved")
    return CheckResult(
        "symplectic-pullback",
        "failed",
        [{"component": f"d{s}^d{t}", "got": g, "expected": e} for s, t, g, e in report.differences],
    )


def identity_suite(model: FieldModel, trials: int = 100, seed: int = 0) -> list:
    c = model.charts
    return [
        check_duality(c, trials, seed),
        variational_identity(model),
        check_beta_factorization(c),
        check_pullback(c),
        check_kappa_roundtrip(c, trials, seed),
    ]


# -- consistency ---------------------------------------------------------------------

def phase_el_consistency(model: FieldModel) -> CheckResult:
    """DivergenceLaw with p := lambda and dp_a_j_k := D_k(lambda_a_j) is -EL."""
    c = model.charts
    lam = legendre_map(model)
    mapping = dict(lam)
    for a in c.A:
        for j in c.J:
            for k in c.J:
                mapping[c.dp(a, j, k)] = total_derivative(c, lam[c.p(a, j)], k)
    el = euler_lagrange_expressions(model)
    laws = phase_dynamics(model).of_kind(EquationClass.DIVERGENCE_LAW)
    return _combine(
        "phase-el",
        (
            _zero_verdict("phase-el", subs(eq.residual, mapping) + el[eq.fiber - 1], f"fiber {eq.fiber}")
            for eq in laws
        ),
    )


def master_consistency(model: FieldModel, section: Optional[HamiltonianSection] = None) -> list:
    """Lagrangian and Hamiltonian phase dynamics cut out the same set.

    The momentum definitions p = lambda(y_j) and y_j = dh/dp must be mutually
    inverse, and the divergence laws must agree once either is substituted.
    """
    c = model.charts
    if section is None:
        if model.hamiltonian is not None:
            section = HamiltonianSection(model.hamiltonian)
        else:
            try:
                section = legendre_transform(model)
            except (SingularLagrangian, NonQuadratic) as exc:
                witness = {"error": type(exc).__name__, "message": str(exc)}
                if isinstance(exc, SingularLagrangian):
                    witness["directions"] = exc.directions
                return [CheckResult("legendre-transform", "failed", witness)]
    lag = phase_dynamics(model)
    ham = hamiltonian_dynamics(model, section)
    lam = legendre_map(model)
    inverse = {eq.lhs.name: eq.rhs for eq in ham.of_kind(EquationClass.MOMENTUM_DEF_INVERSE)}
    forward_defs = [eq for eq in lag if eq.kind in (EquationClass.MOMENTUM_DEF, EquationClass.CONSTRAINT)]
    results = [
        _combine(
            "momentum-inverse",
            (_zero_verdict("momentum-inverse", subs(eq.residual, lam), to_text(eq.lhs)) for eq in ham.of_kind(EquationClass.MOMENTUM_DEF_INVERSE)),
        ),
        _combine(
            "momentum-forward",
            (_zero_verdict("momentum-forward", subs(eq.residual, inverse), to_text(eq.lhs)) for eq in forward_defs),
        ),
    ]
    lag_laws = lag.of_kind(EquationClass.DIVERGENCE_LAW)
    ham_laws = ham.of_kind(EquationClass.DIVERGENCE_LAW)
    results.append(
        _combine(
            "divergence-law",
            (
                _zero_verdict("divergence-law", subs(l.residual, lam) - subs(h.residual, lam), f"fiber {l.fiber}")
                for l, h in zip(lag_laws, ham_laws)
            ),
        )
    )
    results.append(phase_el_consistency(model))
    return results
