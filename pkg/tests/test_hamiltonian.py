from __future__ import annotations

import random
from functools import partial

import pytest

from _generators import random_spd_model
from fieldtriple.charts import build_charts
from fieldtriple.checks import check_beta_factorization, master_consistency
from fieldtriple.errors import ChartMismatch, NonQuadratic, SingularLagrangian
from fieldtriple.expr import ZERO, Symbol, free_symbols, normalize, subs, to_text
from fieldtriple.hamiltonian import (
    HamiltonianSection,
    beta_map,
    hamiltonian_dynamics,
    legendre_transform,
    pullback_symplectic_check,
    section_differential,
)
from fieldtriple.lagrangian import legendre_map, symbolic_point
from fieldtriple.models import builtin, model_from_dict
from fieldtriple.parser import parse_expr


def model(lagrangian, m=1, n=1, **extra):
    doc = {"base": [f"x{i}" for i in range(1, m + 1)], "fibers": [f"y{a}" for a in range(1, n + 1)]}
    doc.update(lagrangian=lagrangian, **extra)
    return model_from_dict(doc)


def texts(system):
    return [eq.text for eq in system]


def test_legendre_transform_examples():
    h = legendre_transform(builtin("electrostatics3d"))
    assert h.provenance == "legendre-derived"
    assert h.h == normalize(parse_expr("(p1_1^2 + p1_2^2 + p1_3^2)/2"))
    assert legendre_transform(builtin("oscillator1d")).h == normalize(parse_expr("p1_1^2/2 + y1^2/2"))


def test_legendre_transform_with_linear_terms():
    # l = v^2/2 + x1*y1*v - y1^2: p = v + x1*y1, h = (p - x1*y1)^2/2 + y1^2
    h = legendre_transform(model("y1_1^2/2 + x1*y1*y1_1 - y1^2")).h
    assert h == normalize(parse_expr("(p1_1 - x1*y1)^2/2 + y1^2"))


def test_legendre_transform_with_field_dependent_metric():
    m = model("(1 + y1^2)*y1_1^2/2")
    h = legendre_transform(m).h
    assert to_text(h) == "1/2*p1_1^2*(y1^2 + 1)^-1"
    assert all(r.ok for r in master_consistency(m))


def test_singular_lagrangians():
    with pytest.raises(SingularLagrangian) as info:
        legendre_transform(model("y1_1"))
    assert info.value.directions == [{"y1_1": "1"}]
    with pytest.raises(SingularLagrangian):
        legendre_transform(model("0"))
    with pytest.raises(SingularLagrangian) as info:
        legendre_transform(model("(y1_1 + y1_2)^2/2", m=2))
    assert info.value.directions == [{"y1_1": "-1", "y1_2": "1"}]
    with pytest.raises(SingularLagrangian):
        legendre_transform(model("y1^2*(y1_1 + y1_2)^2/2", m=2))


@pytest.mark.parametrize("text", ["y1_1^4", "sin(y1_1)", "y1_1^3 + y1_1^2", "1/y1_1"])
def test_non_quadratic_lagrangians(text):
    with pytest.raises(NonQuadratic):
        legendre_transform(model(text))


def test_section_differential_examples():
    c = build_charts(["x1", "x2", "x3"], ["y1"])
    d = section_differential(c, legendre_transform(builtin("electrostatics3d")))
    assert d.xi == (ZERO,)
    assert [to_text(v) for v in d.v[0]] == ["p1_1", "p1_2", "p1_3"]
    c1 = build_charts(["x1"], ["y1"])
    d = section_differential(c1, HamiltonianSection(parse_expr("p1_1^2/2 + y1^2/2")))
    # xi carries +dh/dy under the pinned sign convention
    assert to_text(d.xi[0]) == "y1" and to_text(d.v[0][0]) == "p1_1"
    d = section_differential(c1, HamiltonianSection(ZERO))
    assert d.xi == (ZERO,) and d.v == ((ZERO,),)


def test_beta_examples():
    c = build_charts(["x1"], ["y1"])
    b = beta_map(c, {"x1": 0, "y1": 0, "p1_1": 2, "y1_1": 5, "dp1_1_1": 7})
    assert b.base["p1_1"] == 2 and b.xi == (-7,) and b.v == ((5,),)
    literal = beta_map(c, {"x1": 0, "y1": 0, "p1_1": 2, "y1_1": 5, "dp1_1_1": 7}, xi_sign=1)
    assert literal.xi == (7,)
    c2 = build_charts(["x1", "x2"], ["y1"])
    u = dict.fromkeys(c2.J1P, 0)
    u.update({"dp1_1_1": 3, "dp1_2_2": 4, "y1_1": 8, "y1_2": 9})
    b = beta_map(c2, u)
    assert b.xi == (-7,) and b.v == ((8, 9),)
    zero = beta_map(c2, dict.fromkeys(c2.J1P, 0))
    assert zero.xi == (0,) and zero.v == ((0, 0),)
    with pytest.raises(ChartMismatch):
        beta_map(c2, {"x1": 0})


def test_hamiltonian_dynamics_examples():
    assert texts(hamiltonian_dynamics(builtin("electrostatics3d"))) == [
        "y1_1 = p1_1",
        "y1_2 = p1_2",
        "y1_3 = p1_3",
        "dp1_1_1 + dp1_2_2 + dp1_3_3 = rho",
    ]
    assert texts(hamiltonian_dynamics(builtin("oscillator1d"))) == ["y1_1 = p1_1", "dp1_1_1 = -y1"]
    m = model("y1_1^2", m=2)
    assert texts(hamiltonian_dynamics(m, HamiltonianSection(ZERO))) == ["y1_1 = 0", "y1_2 = 0", "dp1_1_1 + dp1_2_2 = 0"]


def test_user_supplied_hamiltonian_is_used():
    m = model("y1_1^2/2", hamiltonian="p1_1^2/2 + y1^4")
    assert texts(hamiltonian_dynamics(m)) == ["y1_1 = p1_1", "dp1_1_1 = -4*y1^3"]


@pytest.mark.parametrize("m", [1, 2, 3, 4])
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_pullback_identity(m, n):
    c = build_charts([f"x{i}" for i in range(1, m + 1)], [f"y{a}" for a in range(1, n + 1)])
    assert pullback_symplectic_check(c).proved


def test_pullback_negative_control():
    c = build_charts(["x1", "x2"], ["y1", "y2"])
    report = pullback_symplectic_check(c, partial(beta_map, xi_sign=1))
    assert report.status == "failed"
    # every dy ^ d(dp_a_k_k) component comes out with the wrong sign
    assert len(report.differences) == 4
    assert {s for s, _, _, _ in report.differences} == {"y1", "y2"}


@pytest.mark.parametrize("m", [1, 2, 3])
@pytest.mark.parametrize("n", [1, 2])
def test_beta_factors_through_alpha(m, n):
    c = build_charts([f"x{i}" for i in range(1, m + 1)], [f"y{a}" for a in range(1, n + 1)])
    assert check_beta_factorization(c).status == "proved"


@pytest.mark.parametrize("name", ["electrostatics3d", "wave2d", "oscillator1d", "laplace2d"])
def test_master_consistency_builtins(name):
    assert [r.status for r in master_consistency(builtin(name))] == ["proved"] * 4


def test_master_consistency_random_spd():
    rng = random.Random(20)
    for _ in range(20):
        m = random_spd_model(rng, rng.randint(1, 3), rng.randint(1, 3))
        assert [r.status for r in master_consistency(m)] == ["proved"] * 4


def test_master_consistency_detects_wrong_hamiltonian():
    m = model("y1_1^2/2 - y1^2/2", hamiltonian="p1_1^2/2 - y1^2/2")
    statuses = {r.name: r.status for r in master_consistency(m)}
    assert statuses["divergence-law"] == "failed"
    assert statuses["momentum-inverse"] == "proved"


def test_master_consistency_singular():
    (result,) = master_consistency(model("y1_1"))
    assert result.status == "failed" and result.witness["error"] == "SingularLagrangian"


def test_velocity_slot_inverts_legendre_map():
    rng = random.Random(8)
    for _ in range(5):
        m = random_spd_model(rng, 2, 2)
        c = m.charts
        d = section_differential(c, legendre_transform(m))
        lam = legendre_map(m)
        for a in c.A:
            for j in c.J:
                assert subs(d.v[a - 1][j - 1], lam) == Symbol(c.jet(a, j))


def test_dynamics_symbols_stay_in_chart():
    m = builtin("electrostatics3d")
    allowed = set(m.charts.J1P) | {"rho"}
    for eq in hamiltonian_dynamics(m):
        assert free_symbols(eq.residual) <= allowed
    assert set(symbolic_point(m.charts.J1P)) == set(m.charts.J1P)
