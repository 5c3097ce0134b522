"""Lagrangian and Hamiltonian first-order field theory in adapted coordinates."""
from __future__ import annotations

__version__ = "0.1.0"

from .charts import ChartSet, FieldModel, build_charts, canonical_forms, jet_pairing, kappa_flip, kappa_unflip
from .checks import CheckResult, identity_suite, master_consistency
from .errors import *  # noqa: F401,F403
from .expr import diff, equivalent, eval_at, lambdify, normalize, subs, to_text
from .hamiltonian import (
    HamiltonianSection,
    beta_map,
    hamiltonian_dynamics,
    legendre_transform,
    pullback_symplectic_check,
    r_map,
    section_differential,
)
from .lagrangian import (
    alpha_map,
    ep_split,
    euler_lagrange,
    legendre_map,
    phase_dynamics,
    total_derivative,
    vertical_differential,
)
from .models import builtin, dump_model, model_digest, parse_model, parse_model_text
from .numeric import GridSection, fd_jets, grid_from_functions, jacobi_poisson, read_grid, residuals, write_grid
from .parser import parse_expr
