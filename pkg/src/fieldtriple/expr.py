"""Small computer-algebra kernel.

Expressions are immutable trees.  The canonical form is an expanded
(Laurent) polynomial with rational coefficients; ``sin``, ``cos``, ``exp``,
``log``, ``sqrt`` applications and reciprocals of multi-term polynomials are
kept as opaque atoms whose arguments are themselves normalized.
"""
from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, NamedTuple, Union

from .errors import DivisionByZero, EvalDomain, MissingAssignment

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")

Number = Union[int, Fraction, float]


class Expr:
    __slots__ = ()

    def __add__(self, other):
        return Add((self, as_expr(other)))

    def __radd__(self, other):
        return Add((as_expr(other), self))

    def __sub__(self, other):
        return Add((self, -as_expr(other)))

    def __rsub__(self, other):
        return Add((as_expr(other), -self))

    def __mul__(self, other):
        return Mul((self, as_expr(other)))

    def __rmul__(self, other):
        return Mul((as_expr(other), self))

    def __truediv__(self, other):
        return Mul((self, Pow(as_expr(other), -1)))

    def __rtruediv__(self, other):
        return Mul((as_expr(other), Pow(self, -1)))

    def __neg__(self):
        return Mul((Const(Fraction(-1)), self))

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("only integer powers are supported")
        return Pow(self, n)

    def __str__(self):
        return to_text(self)


@dataclass(frozen=True, slots=True)
class Const(Expr):
    value: Fraction


@dataclass(frozen=True, slots=True)
class Symbol(Expr):
    name: str


@dataclass(frozen=True, slots=True)
class Add(Expr):
    terms: tuple


@dataclass(frozen=True, slots=True)
class Mul(Expr):
    factors: tuple


@dataclass(frozen=True, slots=True)
class Pow(Expr):
    base: Expr
    exp: int


@dataclass(frozen=True, slots=True)
class Func(Expr):
    name: str
    arg: Expr


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not an expression")
    if isinstance(x, (int, Fraction)):
        return Const(Fraction(x))
    if isinstance(x, float):
        return Const(Fraction(repr(x)))
    if isinstance(x, str):
        return Symbol(x)
    raise TypeError(f"cannot convert {type(x).__name__} to Expr")


def sym(name: str) -> Symbol:
    return Symbol(name)


def func(name: str, arg) -> Func:
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    return Func(name, as_expr(arg))


def sin(x):
    return func("sin", x)


def cos(x):
    return func("cos", x)


def exp(x):
    return func("exp", x)


def log(x):
    return func("log", x)


def sqrt(x):
    return func("sqrt", x)


# -- ordering ---------------------------------------------------------------

_CHUNK = re.compile(r"\d+|\D+")


def symbol_key(name: str) -> tuple:
    """Natural sort key: ``y1_2 < y1_10 < y2``."""
    return tuple((0, int(c), "") if c.isdigit() else (1, 0, c) for c in _CHUNK.findall(name))


def sort_key(e: Expr) -> tuple:
    if isinstance(e, Const):
        return (0, e.value.numerator, e.value.denominator)
    if isinstance(e, Symbol):
        return (1, symbol_key(e.name))
    if isinstance(e, Func):
        return (2, e.name, sort_key(e.arg))
    if isinstance(e, Pow):
        return (3, sort_key(e.base), e.exp)
    if isinstance(e, Mul):
        return (4, tuple(sort_key(f) for f in e.factors))
    return (5, tuple(sort_key(t) for t in e.terms))


# -- polynomial representation ----------------------------------------------
# A monomial is a tuple of (atom, exponent) pairs sorted by atom key; a poly
# maps monomials to nonzero Fractions.  Atoms are Symbol, Func (normalized
# argument) or Pow(monic multi-term normal form, -1).

Monomial = tuple
Poly = dict


def _mono_key(mono: Monomial) -> tuple:
    return tuple((sort_key(a), k) for a, k in mono)


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    exps = dict(m1)
    for a, k in m2:
        exps[a] = exps.get(a, 0) + k
    return tuple(sorted(((a, k) for a, k in exps.items() if k), key=lambda t: sort_key(t[0])))


def _poly_add(p: Poly, q: Poly, scale: Fraction = Fraction(1)) -> Poly:
    out = dict(p)
    for m, c in q.items():
        v = out.get(m, 0) + scale * c
        if v:
            out[m] = v
        else:
            out.pop(m, None)
    return out


def _poly_mul(p: Poly, q: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = _mono_mul(m1, m2)
            v = out.get(m, 0) + c1 * c2
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return out


def _poly_pow(p: Poly, n: int) -> Poly:
    result: Poly = {(): Fraction(1)}
    base = p
    while n:
        if n & 1:
            result = _poly_mul(result, base)
        n >>= 1
        if n:
            base = _poly_mul(base, base)
    return result


def _poly_const(c: Fraction) -> Poly:
    return {(): Fraction(c)} if c else {}


def _poly_atom(a: Expr, k: int = 1) -> Poly:
    return {((a, k),): Fraction(1)}


def _ordered_terms(p: Poly) -> list:
    def key(item):
        mono = item[0]
        return (-sum(k for _, k in mono), _mono_key(mono))

    return sorted(p.items(), key=key)


def _reciprocal(p: Poly, n: int) -> Poly:
    """p**(-n) for n >= 1."""
    if not p:
        raise DivisionByZero("division by the zero polynomial")
    if len(p) == 1:
        (mono, c), = p.items()
        out: Poly = {(): 1 / c**n}
        for a, k in mono:
            if _is_reciprocal(a):
                # (1/q)^(-kn) = q^(kn), expanded
                out = _poly_mul(out, _poly_pow(to_poly(a.base), k * n))
            else:
                out = _poly_mul(out, {((a, -k * n),): Fraction(1)})
        return out
    (_, lead), = _ordered_terms(p)[:1]
    monic = {m: c / lead for m, c in p.items()}
    atom = Pow(from_poly(monic), -1)
    return {((atom, n),): 1 / lead**n}


def _is_reciprocal(a: Expr) -> bool:
    return isinstance(a, Pow)


def to_poly(e: Expr) -> Poly:
    if isinstance(e, Const):
        return _poly_const(e.value)
    if isinstance(e, Symbol):
        return _poly_atom(e)
    if isinstance(e, Add):
        out: Poly = {}
        for t in e.terms:
            out = _poly_add(out, to_poly(t))
        return out
    if isinstance(e, Mul):
        out = {(): Fraction(1)}
        for f in e.factors:
            out = _poly_mul(out, to_poly(f))
            if not out:
                break
        return out
    if isinstance(e, Pow):
        base = to_poly(e.base)
        if e.exp >= 0:
            return _poly_pow(base, e.exp)
        return _reciprocal(base, -e.exp)
    if isinstance(e, Func):
        return _poly_atom(Func(e.name, normalize(e.arg)))
    raise TypeError(f"not an expression: {e!r}")


def from_poly(p: Poly) -> Expr:
    terms = []
    for mono, c in _ordered_terms(p):
        factors = [
            Pow(a.base, -k) if _is_reciprocal(a) else (a if k == 1 else Pow(a, k))
            for a, k in mono
        ]
        if c != 1 or not factors:
            factors.insert(0, Const(c))
        terms.append(factors[0] if len(factors) == 1 else Mul(tuple(factors)))
    if not terms:
        return ZERO
    if len(terms) == 1:
        return terms[0]
    return Add(tuple(terms))


def leading_coefficient(e) -> Fraction:
    """Coefficient of the first term of the normal form (0 for zero)."""
    terms = _ordered_terms(to_poly(as_expr(e)))
    return terms[0][1] if terms else Fraction(0)


def normalize(e) -> Expr:
    return from_poly(to_poly(as_expr(e)))


def is_zero(e) -> bool:
    return not to_poly(as_expr(e))


def atoms(e: Expr) -> set:
    """Atoms of the normal form (symbols, function applications, reciprocals)."""
    out = set()
    for mono in to_poly(as_expr(e)):
        out.update(a for a, _ in mono)
    return out


def is_polynomial(e) -> bool:
    """True when the normal form has no opaque (non-symbol) atoms."""
    return all(isinstance(a, Symbol) for a in atoms(e))


def free_symbols(e) -> set:
    e = as_expr(e)
    if isinstance(e, Symbol):
        return {e.name}
    if isinstance(e, Const):
        return set()
    if isinstance(e, Add):
        return set().union(*(free_symbols(t) for t in e.terms))
    if isinstance(e, Mul):
        return set().union(*(free_symbols(f) for f in e.factors))
    if isinstance(e, Pow):
        return free_symbols(e.base)
    return free_symbols(e.arg)


# -- differentiation --------------------------------------------------------

def _func_derivative(name: str, arg: Expr) -> Expr:
    if name == "sin":
        return Func("cos", arg)
    if name == "cos":
        return -Func("sin", arg)
    if name == "exp":
        return Func("exp", arg)
    if name == "log":
        return Pow(arg, -1)
    return Const(Fraction(1, 2)) * Pow(Func("sqrt", arg), -1)


def _atom_diff(a: Expr, s: str) -> Poly:
    if isinstance(a, Symbol):
        return {(): Fraction(1)} if a.name == s else {}
    if s not in free_symbols(a):
        return {}
    if isinstance(a, Func):
        inner = _poly_diff(to_poly(a.arg), s)
        if not inner:
            return {}
        return _poly_mul(to_poly(_func_derivative(a.name, a.arg)), inner)
    # reciprocal atom 1/q: d = -(1/q)^2 dq
    inner = _poly_diff(to_poly(a.base), s)
    return _poly_mul({((a, 2),): Fraction(-1)}, inner)


def _poly_diff(p: Poly, s: str) -> Poly:
    out: Poly = {}
    cache: dict = {}
    for mono, c in p.items():
        for i, (a, k) in enumerate(mono):
            if a not in cache:
                cache[a] = _atom_diff(a, s)
            da = cache[a]
            if not da:
                continue
            rest = mono[:i] + ((a, k - 1),) + mono[i + 1:] if k != 1 else mono[:i] + mono[i + 1:]
            rest = tuple(t for t in rest if t[1])
            out = _poly_add(out, _poly_mul({rest: c * k}, da))
    return out


def diff(e, s) -> Expr:
    """Partial derivative of ``e`` with respect to the symbol ``s``."""
    name = s.name if isinstance(s, Symbol) else s
    return from_poly(_poly_diff(to_poly(as_expr(e)), name))


# -- substitution -----------------------------------------------------------

def _replace(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    if isinstance(e, Symbol):
        return mapping.get(e.name, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, Add):
        return Add(tuple(_replace(t, mapping) for t in e.terms))
    if isinstance(e, Mul):
        return Mul(tuple(_replace(f, mapping) for f in e.factors))
    if isinstance(e, Pow):
        return Pow(_replace(e.base, mapping), e.exp)
    return Func(e.name, _replace(e.arg, mapping))


def subs(e, mapping: Mapping) -> Expr:
    """Simultaneous substitution of symbols (by name) followed by normalize."""
    m = {(k.name if isinstance(k, Symbol) else k): as_expr(v) for k, v in mapping.items()}
    return normalize(_replace(as_expr(e), m))


# -- evaluation -------------------------------------------------------------

def _lookup(assignment: Mapping, name: str):
    try:
        v = assignment[name]
    except KeyError:
        raise MissingAssignment(f"no value for symbol {name!r}") from None
    if isinstance(v, int) and not isinstance(v, bool):
        return Fraction(v)
    return v


def eval_at(e, assignment: Mapping) -> Union[Fraction, float]:
    """Evaluate exactly (Fraction) when possible, otherwise as float."""
    env = {(k.name if isinstance(k, Symbol) else k): v for k, v in assignment.items()}
    return _eval(as_expr(e), env)


def _eval(e: Expr, env: Mapping):
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Symbol):
        return _lookup(env, e.name)
    if isinstance(e, Add):
        total = Fraction(0)
        for t in e.terms:
            total = total + _eval(t, env)
        return total
    if isinstance(e, Mul):
        prod = Fraction(1)
        for f in e.factors:
            prod = prod * _eval(f, env)
        return prod
    if isinstance(e, Pow):
        b = _eval(e.base, env)
        if e.exp < 0 and b == 0:
            raise DivisionByZero("division by zero during evaluation")
        return b**e.exp
    x = float(_eval(e.arg, env))
    if e.name == "log" and x <= 0:
        raise EvalDomain(f"log of non-positive value {x}")
    if e.name == "sqrt" and x < 0:
        raise EvalDomain(f"sqrt of negative value {x}")
    try:
        return getattr(math, e.name)(x)
    except OverflowError as exc:
        raise EvalDomain(f"{e.name}({x}) overflows") from exc


def lambdify(e, names: Iterable[str]) -> Callable:
    """Compile ``e`` into a numpy-vectorised function of the given symbols."""
    import numpy as np

    e = as_expr(e)
    names = list(names)
    missing = free_symbols(e) - set(names)
    if missing:
        raise MissingAssignment(f"no value for symbols {sorted(missing)}")

    def walk(node, env):
        if isinstance(node, Const):
            return float(node.value)
        if isinstance(node, Symbol):
            return env[node.name]
        if isinstance(node, Add):
            total = 0.0
            for t in node.terms:
                total = total + walk(t, env)
            return total
        if isinstance(node, Mul):
            prod = 1.0
            for f in node.factors:
                prod = prod * walk(f, env)
            return prod
        if isinstance(node, Pow):
            b = walk(node.base, env)
            return b**node.exp if node.exp >= 0 else 1.0 / b ** (-node.exp)
        return getattr(np, node.name)(walk(node.arg, env))

    def fn(*args):
        return walk(e, dict(zip(names, args)))

    return fn


# -- equality ---------------------------------------------------------------

class Equivalence(NamedTuple):
    equal: bool
    status: str  # "proved" | "probable" | "failed"
    witness: str = ""

    def __bool__(self):
        return self.equal


def equivalent(e1, e2, trials: int = 64, seed: int = 0) -> Equivalence:
    """Decide e1 == e2.

    Exact on the polynomial fragment.  With opaque atoms present, a nonzero
    normal form is tested at ``trials`` random rational points in [-10, 10];
    agreement everywhere yields status ``"probable"``.
    """
    d = normalize(as_expr(e1) - as_expr(e2))
    if d == ZERO:
        return Equivalence(True, "proved")
    if is_polynomial(d):
        return Equivalence(False, "failed", f"difference {to_text(d)}")
    rng = random.Random(seed)
    names = sorted(free_symbols(d), key=symbol_key)
    a1, a2 = as_expr(e1), as_expr(e2)
    hits = attempts = 0
    while hits < trials:
        attempts += 1
        if attempts > 50 * trials:
            return Equivalence(False, "failed", "too few points in the evaluation domain")
        point = {s: Fraction(rng.randint(-1000, 1000), 100) for s in names}
        try:
            v1, v2 = float(_eval(a1, point)), float(_eval(a2, point))
        except (EvalDomain, DivisionByZero, MissingAssignment):
            continue
        if abs(v1 - v2) > 1e-9 * max(1.0, abs(v1), abs(v2)):
            where = ", ".join(f"{k}={v}" for k, v in point.items())
            return Equivalence(False, "failed", f"differ at {where}: {v1!r} vs {v2!r}")
        hits += 1
    return Equivalence(True, "probable", f"agreed at {trials} random points")


# -- printing ---------------------------------------------------------------

def _fmt_const(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _atomic(e: Expr) -> str:
    """Render as something usable as the base of ``^``."""
    if isinstance(e, Symbol):
        return e.name
    if isinstance(e, Func):
        return f"{e.name}({to_text(e.arg)})"
    if isinstance(e, Const) and e.value >= 0 and e.value.denominator == 1:
        return _fmt_const(e.value)
    return f"({to_text(e)})"


def _factor_text(e: Expr) -> str:
    if isinstance(e, Pow):
        return f"{_atomic(e.base)}^{e.exp}"
    if isinstance(e, Add):
        return f"({to_text(e)})"
    if isinstance(e, Const):
        return _fmt_const(e.value) if e.value >= 0 else f"({_fmt_const(e.value)})"
    if isinstance(e, Mul):
        return f"({to_text(e)})"
    return _atomic(e)


def _split_sign(e: Expr) -> tuple[bool, Expr]:
    if isinstance(e, Const) and e.value < 0:
        return True, Const(-e.value)
    if isinstance(e, Mul) and e.factors and isinstance(e.factors[0], Const) and e.factors[0].value < 0:
        c = -e.factors[0].value
        rest = e.factors[1:]
        if c == 1:
            return True, rest[0] if len(rest) == 1 else Mul(rest)
        return True, Mul((Const(c),) + rest)
    return False, e


def _term_text(e: Expr) -> str:
    if isinstance(e, Mul):
        return "*".join(_factor_text(f) for f in e.factors)
    if isinstance(e, Const):
        return _fmt_const(e.value)
    return _factor_text(e)


def to_text(e) -> str:
    """Render in the expression grammar accepted by :mod:`fieldtriple.parser`."""
    e = as_expr(e)
    if isinstance(e, Add):
        parts = []
        for i, t in enumerate(e.terms):
            neg, body = _split_sign(t)
            txt = _term_text(body)
            if i == 0:
                parts.append(f"-{txt}" if neg else txt)
            else:
                parts.append(f" - {txt}" if neg else f" + {txt}")
        return "".join(parts)
    neg, body = _split_sign(e)
    txt = _term_text(body)
    return f"-{txt}" if neg else txt
