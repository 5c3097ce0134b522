"""Model files (JSON) and the built-in example models."""
from __future__ import annotations

import hashlib
import json
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Union

from .charts import FieldModel, build_charts
from .errors import ExprSyntaxError, ModelError
from .expr import to_text
from .parser import parse_expr

KEYS = ("base", "fibers", "parameters", "lagrangian", "sources", "hamiltonian", "source_sign")


def _rational(name, value):
    if value is None:
        return None
    if isinstance(value, bool):
        raise ModelError(f"parameter {name!r}: expected a number, got {value!r}")
    try:
        return Fraction(value) if not isinstance(value, Decimal) else Fraction(str(value))
    except (ValueError, TypeError, ZeroDivisionError):
        raise ModelError(f"parameter {name!r}: {value!r} is not a rational number") from None


def _names(doc, key) -> list:
    value = doc.get(key)
    if not isinstance(value, list) or not value or not all(isinstance(s, str) for s in value):
        raise ModelError(f"{key!r} must be a non-empty list of names")
    return value


def _expr(text, symbols, key):
    if not isinstance(text, str):
        raise ModelError(f"{key!r} must be expression text")
    try:
        return parse_expr(text, symbols)
    except ExprSyntaxError as exc:
        raise ExprSyntaxError(f"{key}: {exc.msg}", exc.line, exc.column, exc.text) from None
    except (ValueError, KeyError) as exc:
        raise type(exc)(f"{key}: {exc}") from None


def model_from_dict(doc: dict, name: str = "") -> FieldModel:
    if not isinstance(doc, dict):
        raise ModelError("model file must contain a JSON object")
    unknown = sorted(set(doc) - set(KEYS))
    if unknown:
        raise ModelError(f"unknown keys: {', '.join(unknown)}")
    if "lagrangian" not in doc:
        raise ModelError("model needs a 'lagrangian'")
    base, fibers = _names(doc, "base"), _names(doc, "fibers")
    params = doc.get("parameters") or {}
    if not isinstance(params, dict):
        raise ModelError("'parameters' must map names to rationals or null")
    parameters = tuple((k, _rational(k, v)) for k, v in params.items())
    charts = build_charts(base, fibers, [k for k, _ in parameters])
    pnames = set(params)
    lagrangian = _expr(doc["lagrangian"], set(charts.J1E) | pnames, "lagrangian")
    sources = doc.get("sources")
    if sources is not None:
        if not isinstance(sources, list) or len(sources) != len(fibers):
            raise ModelError(f"'sources' must list one expression per fiber ({len(fibers)})")
        sources = tuple(_expr(s, set(charts.E) | pnames, "sources") for s in sources)
    hamiltonian = doc.get("hamiltonian")
    if hamiltonian is not None:
        hamiltonian = _expr(hamiltonian, set(charts.P) | pnames, "hamiltonian")
    sign = doc.get("source_sign", 1)
    if sign not in (1, -1) or isinstance(sign, bool):
        raise ModelError("'source_sign' must be 1 or -1")
    return FieldModel(base, fibers, lagrangian, parameters, sources, hamiltonian, int(sign), name)


def parse_model_text(text: str, name: str = "") -> FieldModel:
    try:
        doc = json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise ModelError(f"invalid JSON: {exc}") from None
    return model_from_dict(doc, name)


def parse_model(path: Union[str, Path]) -> FieldModel:
    path = Path(path)
    return parse_model_text(path.read_text(encoding="utf-8"), path.stem)


def _fmt_rational(v: Fraction) -> str:
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def model_to_dict(model: FieldModel) -> dict:
    doc = {
        "base": list(model.base),
        "fibers": list(model.fibers),
        "parameters": {k: None if v is None else _fmt_rational(v) for k, v in model.parameters},
        "lagrangian": to_text(model.lagrangian),
    }
    if model.sources is not None:
        doc["sources"] = [to_text(s) for s in model.sources]
    if model.hamiltonian is not None:
        doc["hamiltonian"] = to_text(model.hamiltonian)
    doc["source_sign"] = model.source_sign
    return doc


def dump_model(model: FieldModel) -> str:
    """Canonical serialisation; ``parse_model_text`` inverts it exactly."""
    return json.dumps(model_to_dict(model), indent=2) + "\n"


def model_digest(model: FieldModel) -> str:
    canonical = json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


BUILTINS = {
    "electrostatics3d": {
        "base": ["x1", "x2", "x3"],
        "fibers": ["y1"],
        "parameters": {"rho": None},
        "lagrangian": "(y1_1^2 + y1_2^2 + y1_3^2)/2",
        "sources": ["rho"],
    },
    "wave2d": {
        "base": ["x1", "x2"],
        "fibers": ["y1"],
        "parameters": {},
        "lagrangian": "(y1_1^2 - y1_2^2)/2",
    },
    "oscillator1d": {
        "base": ["x1"],
        "fibers": ["y1"],
        "parameters": {},
        "lagrangian": "y1_1^2/2 - y1^2/2",
    },
    "laplace2d": {
        "base": ["x1", "x2"],
        "fibers": ["y1"],
        "parameters": {},
        "lagrangian": "(y1_1^2 + y1_2^2)/2",
    },
}


def builtin(name: str) -> FieldModel:
    try:
        doc = BUILTINS[name]
    except KeyError:
        raise ModelError(f"no built-in model {name!r}; choose from {', '.join(BUILTINS)}") from None
    return model_from_dict(doc, name)
