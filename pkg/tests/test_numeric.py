from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fieldtriple.errors import ChartMismatch, GridTooSmall, MissingAssignment, MissingField, NoConvergence
from fieldtriple.hamiltonian import hamiltonian_dynamics
from fieldtriple.lagrangian import euler_lagrange, phase_dynamics
from fieldtriple.models import builtin, model_from_dict
from fieldtriple.numeric import (
    GridSection,
    dump_grid,
    fd_jets,
    grid_from_functions,
    jacobi_poisson,
    parse_grid,
    read_grid,
    residuals,
    write_grid,
)


def harmonic_grid(n=21):
    return grid_from_functions([-1] * 3, [1] * 3, [n] * 3, {"y1": lambda a, b, c: a**2 + b**2 - 2 * c**2}, {"rho": 0})


def test_constant_and_affine_fields_are_exact():
    g = grid_from_functions([0, 0], [1, 2], [5, 7], {"y1": lambda a, b: 3.0 + 0 * a, "y2": lambda a, b: a - 2 * b})
    jets = fd_jets(g, 2)
    for key in ("y1_1", "y1_2", "y1_1_1", "y1_1_2", "y1_2_2", "y2_1_1", "y2_2_2"):
        assert np.all(jets[key] == 0) or np.max(np.abs(jets[key])) < 1e-13
    assert np.max(np.abs(jets["y2_1"] - 1)) < 1e-13
    assert np.max(np.abs(jets["y2_2"] + 2)) < 1e-13
    assert jets["y1"].shape == (3, 5)


def test_quadratic_example():
    g = grid_from_functions([-1], [2], [31], {"y1": lambda x: x**2})
    jets = fd_jets(g, 2)
    assert np.max(np.abs(jets["y1_1"] - 2 * jets["x1"])) <= 1e-12
    assert np.max(np.abs(jets["y1_1_1"] - 2)) <= 1e-12


coef = st.fractions(min_value=-3, max_value=3, max_denominator=6).map(float)


@settings(max_examples=60, deadline=None)
@given(st.lists(coef, min_size=6, max_size=6), st.integers(5, 12), st.integers(5, 12))
def test_quadratics_are_differenced_exactly(c, n1, n2):
    def f(a, b):
        return c[0] + c[1] * a + c[2] * b + c[3] * a * a + c[4] * a * b + c[5] * b * b

    g = grid_from_functions([-1, 0], [1, 1.5], [n1, n2], {"y1": f})
    j = fd_jets(g, 2)
    a, b = j["x1"], j["x2"]
    assert np.max(np.abs(j["y1_1"] - (c[1] + 2 * c[3] * a + c[4] * b))) <= 1e-12
    assert np.max(np.abs(j["y1_2"] - (c[2] + c[4] * a + 2 * c[5] * b))) <= 1e-12
    assert np.max(np.abs(j["y1_1_1"] - 2 * c[3])) <= 1e-11
    assert np.max(np.abs(j["y1_1_2"] - c[4])) <= 1e-11
    assert np.max(np.abs(j["y1_2_2"] - 2 * c[5])) <= 1e-11


def test_grid_invariants():
    with pytest.raises(GridTooSmall):
        GridSection([0], [1], [2], {})
    with pytest.raises(ValueError):
        GridSection([1], [1], [4], {})
    with pytest.raises(ValueError):
        GridSection([0], [1], [4], {"y1": np.zeros(5)})


def test_harmonic_electrostatics_residual():
    m = builtin("electrostatics3d")
    g = harmonic_grid()
    for system in (euler_lagrange(m), phase_dynamics(m), hamiltonian_dynamics(m)):
        report = residuals(system, m, g, tol=1e-9)
        assert report.passed, report.to_dict()
        assert [e.equation for e in report.entries] == [eq.text for eq in system]


def test_residual_report_fields():
    m = builtin("laplace2d")
    g = grid_from_functions([0, 0], [1, 1], [11, 11], {"y1": lambda a, b: a**2})
    report = residuals(euler_lagrange(m), m, g)
    (entry,) = report.entries
    assert entry.points == 81
    assert entry.max_abs == pytest.approx(2.0)
    # L2 norm of the constant 2 over the interior cells
    assert entry.l2 == pytest.approx(2.0 * math.sqrt(81 * 0.01))
    assert report.passed is None
    assert residuals(euler_lagrange(m), m, g, tol=1.0).passed is False


def test_wave_residual_is_small():
    m = builtin("wave2d")
    g = grid_from_functions([0, 0], [2, 2], [101, 101], {"y1": lambda a, b: np.sin(a - b)})
    assert residuals(euler_lagrange(m), m, g).max_abs <= 5e-3


def test_second_order_convergence_on_stretched_grid():
    # with h1 != h2 the discrete wave operator no longer annihilates sin(x1 - x2)
    m = builtin("wave2d")
    errs = []
    for n in (21, 41, 81):
        g = grid_from_functions([0, 0], [2, 1], [n, n], {"y1": lambda a, b: np.sin(a - b)})
        errs.append(residuals(euler_lagrange(m), m, g).max_abs)
    for coarse, fine in zip(errs, errs[1:]):
        assert 3.5 <= coarse / fine <= 4.5


def _momentum_modes(phi, grads, n=41):
    m = builtin("electrostatics3d")
    fields = {"y1": phi, "p1_1": grads[0], "p1_2": grads[1], "p1_3": grads[2]}
    g = grid_from_functions([0] * 3, [1] * 3, [n] * 3, fields, {"rho": 0})
    system = phase_dynamics(m)
    return residuals(system, m, g, "from-legendre"), residuals(system, m, g, "supplied")


def test_legendre_and_supplied_momenta_agree():
    # constant Laplacian 6: both modes see the same violation everywhere
    derived, supplied = _momentum_modes(
        lambda a, b, c: a**2 + b**2 + c**2, [lambda a, b, c: 2 * a, lambda a, b, c: 2 * b, lambda a, b, c: 2 * c]
    )
    for d, s in zip(derived.entries, supplied.entries):
        assert abs(d.max_abs - s.max_abs) < 1e-9
    assert derived.entries[-1].max_abs == pytest.approx(6.0)
    # harmonic but not polynomial: both residuals are pure truncation error
    derived, supplied = _momentum_modes(
        lambda a, b, c: np.exp(a) * np.cos(b) + c,
        [lambda a, b, c: np.exp(a) * np.cos(b), lambda a, b, c: -np.exp(a) * np.sin(b), lambda a, b, c: 1 + 0 * c],
    )
    for d, s in zip(derived.entries, supplied.entries):
        assert d.max_abs < 5e-3 and s.max_abs < 5e-3


def test_singular_model_with_supplied_momenta():
    m = model_from_dict({"base": ["x1"], "fibers": ["y1"], "lagrangian": "y1_1"})
    good = grid_from_functions([0], [1], [11], {"y1": lambda x: x**2, "p1_1": lambda x: 1 + 0 * x})
    bad = grid_from_functions([0], [1], [11], {"y1": lambda x: x**2, "p1_1": lambda x: x})
    assert residuals(phase_dynamics(m), m, good, "supplied").max_abs < 1e-12
    assert residuals(phase_dynamics(m), m, bad, "supplied").max_abs > 0.5


def test_residual_errors():
    m = builtin("electrostatics3d")
    with pytest.raises(MissingField):
        residuals(euler_lagrange(m), m, grid_from_functions([0] * 3, [1] * 3, [5] * 3, {"u": lambda a, b, c: a}))
    with pytest.raises(ChartMismatch):
        residuals(euler_lagrange(m), m, grid_from_functions([0], [1], [5], {"y1": lambda a: a}))
    with pytest.raises(MissingField):
        residuals(phase_dynamics(m), m, harmonic_grid(5), "supplied")
    with pytest.raises(GridTooSmall):
        residuals(phase_dynamics(m), m, harmonic_grid(4))
    no_rho = grid_from_functions([0] * 3, [1] * 3, [5] * 3, {"y1": lambda a, b, c: a})
    with pytest.raises(MissingAssignment):
        residuals(euler_lagrange(m), m, no_rho)


def test_jacobi_zero_source():
    r = jacobi_poisson(np.zeros((9, 9, 9)), 0.125)
    assert r.converged and np.all(r.phi == 0)


def test_jacobi_manufactured_solution():
    n = 65
    x = np.linspace(0, 1, n)
    a, b = np.meshgrid(x, x, indexing="ij")
    exact = np.sin(np.pi * a) * np.sin(np.pi * b)
    r = jacobi_poisson(-2 * np.pi**2 * exact, 1 / (n - 1), tol=1e-9)
    assert r.converged
    assert np.max(np.abs(r.phi - exact)) <= 5e-3


def test_jacobi_cap():
    with pytest.raises(NoConvergence) as info:
        jacobi_poisson(np.ones((5, 5)), 0.25, iterations=1, tol=0)
    result = info.value.result
    assert result.iterations == 1 and not result.converged
    assert np.allclose(result.phi[1:-1, 1:-1], -0.25**2 / 4)


def test_grid_file_roundtrip(tmp_path):
    g = grid_from_functions([0, -1], [1, 1], [4, 3], {"y1": lambda a, b: a * b + 0.1, "p1_1": lambda a, b: a})
    path = tmp_path / "g.grid"
    write_grid(g, path)
    text = path.read_text()
    assert text.startswith("grid m=2 shape=4,3 min=0.0,-1.0 max=1.0,1.0 fields=y1,p1_1\n")
    back = read_grid(path)
    assert back.shape == g.shape and back.mins == g.mins and back.maxs == g.maxs
    for k in g.fields:
        assert np.array_equal(back.fields[k], g.fields[k])
    assert dump_grid(back) == text


@pytest.mark.parametrize(
    "text",
    [
        "",
        "grid m=1 shape=3 min=0 max=1\n1 2 3\n",
        "grid m=1 shape=3 min=0 max=1 fields=y1\n1 2\n",
        "grid m=2 shape=3 min=0 max=1 fields=y1\n1 2 3\n",
        "grid m=1 shape=3 min=0 max=1 fields=y1,y2\n1 2 3\n",
    ],
)
def test_bad_grid_files(text):
    with pytest.raises(ValueError):
        parse_grid(text)
