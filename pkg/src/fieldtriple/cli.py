"""Command line front end.

Every command that touches a model prints a report (JSON by default, aligned
text with ``--format text``).  Exit codes: 0 success, 2 failed checks or
residuals over tolerance, 1 usage and input errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .checks import CheckResult, identity_suite, master_consistency
from .charts import FieldModel
from .errors import FieldTripleError, NonQuadratic, SingularLagrangian
from .expr import Symbol, free_symbols
from .hamiltonian import HamiltonianSection, hamiltonian_dynamics, legendre_transform
from .lagrangian import Equation, EquationClass, euler_lagrange, legendre_map, phase_dynamics
from .models import BUILTINS, builtin, dump_model, model_digest, parse_model
from .numeric import read_grid, residuals


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def load_model(ref: str) -> FieldModel:
    """A model file path, or the name of a built-in model."""
    path = Path(ref)
    if path.exists():
        return parse_model(path)
    if ref in BUILTINS:
        return builtin(ref)
    raise FileNotFoundError(f"no model file {ref!r} (built-ins: {', '.join(BUILTINS)})")


# -- reports -------------------------------------------------------------------------

def _equation_dict(eq: Equation) -> dict:
    d = eq.to_dict()
    d["fiber"] = eq.fiber
    return d


def make_report(command: str, model: Optional[FieldModel], equations=(), checks=(), residual_report=None) -> dict:
    checks = list(checks)
    failed = any(c.status == "failed" for c in checks)
    if residual_report is not None and residual_report.passed is False:
        failed = True
    return {
        "command": command,
        "model_digest": model_digest(model) if model is not None else None,
        "equations": [_equation_dict(e) for e in equations],
        "checks": [c.to_dict() for c in checks],
        "residuals": residual_report.to_dict() if residual_report is not None else None,
        "status": "failed" if failed else "ok",
    }


def render_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _witness_text(w) -> str:
    if w is None:
        return ""
    return json.dumps(w, sort_keys=True)


def render_text(report: dict) -> str:
    lines = [
        f"command  {report['command']}",
        f"model    {report['model_digest']}",
        f"status   {report['status']}",
    ]
    if report["equations"]:
        lines.append("")
        lines.append("equations")
        width = max(len(e["class"]) for e in report["equations"])
        for e in report["equations"]:
            lines.append(f"  {e['class']:<{width}}  {e['text']}")
    if report["checks"]:
        lines.append("")
        lines.append("checks")
        width = max(len(c["name"]) for c in report["checks"])
        for c in report["checks"]:
            lines.append(f"  {c['status']:<8}  {c['name']:<{width}}  {_witness_text(c['witness'])}".rstrip())
    res = report["residuals"]
    if res:
        lines.append("")
        lines.append(f"residuals (tol {res['tol']})")
        width = max(len(e["equation"]) for e in res["equations"])
        lines.append(f"  {'equation':<{width}}  {'max':>12}  {'l2':>12}  {'points':>8}")
        for e in res["equations"]:
            lines.append(f"  {e['equation']:<{width}}  {e['max']:>12.4e}  {e['l2']:>12.4e}  {e['points']:>8d}")
    return "\n".join(lines) + "\n"


# -- commands ------------------------------------------------------------------------

def _singular_check(exc: Exception, name: str = "legendre-transform", status: str = "failed") -> CheckResult:
    witness = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, SingularLagrangian):
        witness["directions"] = exc.directions
    return CheckResult(name, status, witness)


def _section(model: FieldModel) -> HamiltonianSection:
    if model.hamiltonian is not None:
        return HamiltonianSection(model.hamiltonian)
    return legendre_transform(model)


def cmd_derive(args, model: FieldModel) -> dict:
    sources = not args.no_sources
    command = f"derive {args.system}"
    if args.system == "el":
        return make_report(command, model, euler_lagrange(model, sources))
    if args.system == "phase":
        return make_report(command, model, phase_dynamics(model, sources))
    try:
        section = _section(model)
    except (SingularLagrangian, NonQuadratic) as exc:
        return make_report(command, model, checks=[_singular_check(exc)])
    return make_report(command, model, hamiltonian_dynamics(model, section, sources))


def cmd_legendre(args, model: FieldModel) -> dict:
    c = model.charts
    eqs = []
    for name, rhs in legendre_map(model).items():
        kind = EquationClass.MOMENTUM_DEF if set(c.jets) & free_symbols(rhs) else EquationClass.CONSTRAINT
        eqs.append(Equation(Symbol(name), rhs, kind, _fiber_of(c, name)))
    checks = []
    try:
        legendre_transform(model)
        checks.append(CheckResult("regularity", "proved"))
    except (SingularLagrangian, NonQuadratic) as exc:
        # lambda itself is fine; only its inversion is unavailable
        checks.append(_singular_check(exc, "regularity", "singular"))
    return make_report("legendre", model, eqs, checks)


def _fiber_of(c, momentum: str) -> int:
    for a in c.A:
        for j in c.J:
            if c.p(a, j) == momentum:
                return a
    return 0


def cmd_hamiltonize(args, model: FieldModel) -> dict:
    try:
        section = legendre_transform(model)
    except (SingularLagrangian, NonQuadratic) as exc:
        return make_report("hamiltonize", model, checks=[_singular_check(exc)])
    eq = Equation(Symbol("h"), section.h, EquationClass.HAMILTONIAN)
    return make_report("hamiltonize", model, [eq])


def cmd_check(args, model: FieldModel) -> dict:
    if args.suite == "identities":
        results = identity_suite(model, args.trials, args.seed)
    else:
        results = master_consistency(model)
    return make_report(f"check {args.suite}", model, checks=results)


def _parse_param(text: str) -> tuple:
    name, sep, value = text.partition("=")
    if not sep or not name:
        raise UsageError(f"--param expects NAME=VALUE, got {text!r}")
    try:
        return name, Fraction(value)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"--param {name}: {value!r} is not a number") from None


def cmd_verify(args, model: FieldModel) -> dict:
    grid = read_grid(args.grid)
    grid.parameters.update(dict(_parse_param(p) for p in args.param))
    if args.system == "el":
        system = euler_lagrange(model)
    elif args.system == "phase":
        system = phase_dynamics(model)
    else:
        try:
            system = hamiltonian_dynamics(model, _section(model))
        except (SingularLagrangian, NonQuadratic) as exc:
            return make_report("verify", model, checks=[_singular_check(exc)])
    report = residuals(system, model, grid, args.momenta, args.tol)
    return make_report("verify", model, system, residual_report=report)


def cmd_examples(args) -> int:
    names = [args.name] if args.name else list(BUILTINS)
    if args.name and args.name not in BUILTINS:
        raise UsageError(f"no built-in model {args.name!r}; choose from {', '.join(BUILTINS)}")
    if args.out is None and args.name:
        sys.stdout.write(dump_model(builtin(args.name)))
        return 0
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    for name in names:
        path = out / f"{name}.json"
        path.write_text(dump_model(builtin(name)), encoding="utf-8")
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fieldtriple", description="Derive and check first-order field dynamics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--format", choices=("json", "text"), default="json", help="report format (default json)")
    parser.add_argument("--output", "-o", help="also write the JSON report to this file")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("derive", help="derive a dynamics system")
    p.add_argument("system", choices=("el", "phase", "hamilton-phase"))
    p.add_argument("model", help="model JSON file or built-in name")
    p.add_argument("--no-sources", action="store_true", help="drop the source terms")

    p = sub.add_parser("legendre", help="momentum map p = dl/dy_j")
    p.add_argument("model")

    p = sub.add_parser("hamiltonize", help="Legendre transform to a Hamiltonian")
    p.add_argument("model")

    p = sub.add_parser("check", help="run the identity or consistency checks")
    p.add_argument("suite", choices=("identities", "consistency"))
    p.add_argument("model")
    p.add_argument("--trials", type=int, default=100, help="random points per sampled identity")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("verify", help="finite-difference residuals on a grid file")
    p.add_argument("model")
    p.add_argument("--grid", required=True, help="grid file")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--system", choices=("el", "phase", "hamilton-phase"), default="el")
    p.add_argument("--momenta", choices=("from-legendre", "supplied"), default="from-legendre")
    p.add_argument("--param", action="append", default=[], metavar="NAME=VALUE", help="parameter value")

    p = sub.add_parser("examples", help="write the built-in models")
    p.add_argument("name", nargs="?", help="one of: " + ", ".join(BUILTINS))
    p.add_argument("--out", help="directory to write <name>.json files into")
    return parser


_COMMANDS = {
    "derive": cmd_derive,
    "legendre": cmd_legendre,
    "hamiltonize": cmd_hamiltonize,
    "check": cmd_check,
    "verify": cmd_verify,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "examples":
            return cmd_examples(args)
        model = load_model(args.model)
        report = _COMMANDS[args.command](args, model)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (FieldTripleError, OSError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if args.output:
        Path(args.output).write_text(render_json(report), encoding="utf-8")
    sys.stdout.write(render_text(report) if args.format == "text" else render_json(report))
    return 2 if report["status"] == "failed" else 0


if __name__ == "__main__":
    sys.exit(main())
