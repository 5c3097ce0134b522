"""Finite-difference residuals of derived dynamics on gridded sections."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from .charts import ChartSet, FieldModel, build_charts
from .errors import ChartMismatch, GridTooSmall, MissingAssignment, MissingField, NoConvergence
from .expr import free_symbols, lambdify
from .lagrangian import DynamicsSystem, legendre_map


@dataclass
class GridSection:
    """Samples of fields on a uniform rectangular patch of the base."""

    mins: tuple
    maxs: tuple
    shape: tuple
    fields: dict  # name -> ndarray of ``shape``
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        self.mins = tuple(float(v) for v in self.mins)
        self.maxs = tuple(float(v) for v in self.maxs)
        self.shape = tuple(int(n) for n in self.shape)
        if not (len(self.mins) == len(self.maxs) == len(self.shape)):
            raise ValueError("mins, maxs and shape must have one entry per axis")
        for n in self.shape:
            if n < 3:
                raise GridTooSmall(f"need at least 3 points per axis, got {n}")
        for lo, hi in zip(self.mins, self.maxs):
            if not hi > lo:
                raise ValueError(f"empty axis [{lo}, {hi}]")
        fields = {}
        for name, arr in self.fields.items():
            arr = np.asarray(arr, dtype=float)
            if arr.shape != self.shape:
                raise ValueError(f"field {name!r} has shape {arr.shape}, expected {self.shape}")
            fields[name] = arr
        self.fields = fields

    @property
    def m(self) -> int:
        return len(self.shape)

    @property
    def h(self) -> tuple:
        return tuple((hi - lo) / (n - 1) for lo, hi, n in zip(self.mins, self.maxs, self.shape))

    def axes(self) -> list:
        return [np.linspace(lo, hi, n) for lo, hi, n in zip(self.mins, self.maxs, self.shape)]

    def coords(self) -> list:
        return np.meshgrid(*self.axes(), indexing="ij")


def grid_from_functions(mins, maxs, shape, fields: Mapping[str, Callable], parameters=None) -> GridSection:
    """Sample callables ``f(x1, ..., xm)`` on a uniform grid."""
    probe = GridSection(mins, maxs, shape, {})
    xs = probe.coords()
    data = {name: np.broadcast_to(np.asarray(f(*xs), dtype=float), probe.shape) for name, f in fields.items()}
    return GridSection(mins, maxs, shape, data, dict(parameters or {}))


# -- differencing --------------------------------------------------------------------

def _inner(arr: np.ndarray, width: int = 1) -> np.ndarray:
    return arr[tuple(slice(width, n - width) for n in arr.shape)]


def _shifted(arr: np.ndarray, shifts: Mapping[int, int]) -> np.ndarray:
    """Interior view of ``arr`` offset by ``shifts[axis]`` points."""
    idx = []
    for ax, n in enumerate(arr.shape):
        s = shifts.get(ax, 0)
        idx.append(slice(1 + s, n - 1 + s))
    return arr[tuple(idx)]


def _d1(arr: np.ndarray, ax: int, h: float) -> np.ndarray:
    return (_shifted(arr, {ax: 1}) - _shifted(arr, {ax: -1})) / (2 * h)


def _d2(arr: np.ndarray, ax: int, bx: int, h: tuple) -> np.ndarray:
    if ax == bx:
        return (_shifted(arr, {ax: 1}) - 2 * _inner(arr) + _shifted(arr, {ax: -1})) / h[ax] ** 2
    pp = _shifted(arr, {ax: 1, bx: 1})
    pm = _shifted(arr, {ax: 1, bx: -1})
    mp = _shifted(arr, {ax: -1, bx: 1})
    mm = _shifted(arr, {ax: -1, bx: -1})
    return (pp - pm - mp + mm) / (4 * h[ax] * h[bx])


def _default_charts(g: GridSection, fibers: Sequence[str]) -> ChartSet:
    return build_charts([f"x{i}" for i in range(1, g.m + 1)], list(fibers))


def fd_jets(g: GridSection, order: int = 1, charts: Optional[ChartSet] = None) -> dict:
    """Central-difference jets on interior points.

    Returns a map from chart symbol to array over the interior (one boundary
    layer removed): base coordinates, field values, first jets and, for
    ``order=2``, second jets.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if any(n < 3 for n in g.shape):
        raise GridTooSmall("need at least 3 points per axis")
    charts = charts or _default_charts(g, list(g.fields))
    if charts.m != g.m:
        raise ChartMismatch(f"grid has {g.m} axes, model base has {charts.m}")
    out = {}
    for i, xs in enumerate(g.coords(), start=1):
        out[charts.x(i)] = _inner(xs)
    for a in charts.A:
        name = charts.y(a)
        if name not in g.fields:
            raise MissingField(f"grid has no samples for {name!r}")
        arr = g.fields[name]
        out[name] = _inner(arr)
        for j in charts.J:
            out[charts.jet(a, j)] = _d1(arr, j - 1, g.h[j - 1])
        if order == 2:
            for j in charts.J:
                for k in charts.J:
                    if j <= k:
                        out[charts.jet2(a, j, k)] = _d2(arr, j - 1, k - 1, g.h)
    return out


# -- residuals -----------------------------------------------------------------------

@dataclass(frozen=True)
class EquationResidual:
    equation: str
    kind: str
    max_abs: float
    l2: float
    points: int

    def to_dict(self) -> dict:
        return {
            "equation": self.equation,
            "class": self.kind,
            "max": self.max_abs,
            "l2": self.l2,
            "points": self.points,
        }


@dataclass(frozen=True)
class ResidualReport:
    entries: tuple
    tol: Optional[float] = None

    @property
    def max_abs(self) -> float:
        return max((e.max_abs for e in self.entries), default=0.0)

    @property
    def passed(self) -> Optional[bool]:
        if self.tol is None:
            return None
        return all(e.max_abs <= self.tol for e in self.entries)

    def to_dict(self) -> dict:
        return {
            "equations": [e.to_dict() for e in self.entries],
            "max": self.max_abs,
            "tol": self.tol,
            "passed": self.passed,
        }


def _crop(arr: np.ndarray, target: tuple) -> np.ndarray:
    # trim equally from both ends down to ``target``
    idx = tuple(slice((n - t) // 2, (n - t) // 2 + t) for n, t in zip(arr.shape, target))
    return arr[idx]


def _values(model: FieldModel, g: GridSection) -> dict:
    env = {k: float(v) for k, v in model.parameter_values.items()}
    env.update({k: float(v) for k, v in g.parameters.items()})
    return env


def _evaluate(expr, env: Mapping, shape: tuple) -> np.ndarray:
    names = sorted(free_symbols(expr))
    missing = [s for s in names if s not in env]
    if missing:
        raise MissingAssignment(f"no value for {', '.join(missing)}")
    out = lambdify(expr, names)(*[env[s] for s in names])
    return np.broadcast_to(np.asarray(out, dtype=float), shape)


def _momentum_env(model: FieldModel, g: GridSection, momenta: str) -> dict:
    c = model.charts
    params = _values(model, g)
    if momenta == "from-legendre":
        if any(n < 5 for n in g.shape):
            raise GridTooSmall("momentum jets from Legendre momenta need at least 5 points per axis")
        jets = fd_jets(g, 1, c)
        inner_shape = next(iter(jets.values())).shape
        env1 = {**params, **jets}
        p = {name: _evaluate(e, env1, inner_shape) for name, e in legendre_map(model).items()}
        h = g.h
        target = tuple(n - 4 for n in g.shape)
        env = {**params}
        env.update({k: _crop(v, target) for k, v in jets.items()})
        env.update({k: _crop(v, target) for k, v in p.items()})
        for a in c.A:
            for j in c.J:
                for k in c.J:
                    env[c.dp(a, j, k)] = _d1(p[c.p(a, j)], k - 1, h[k - 1])
        return env
    if momenta == "supplied":
        missing = [s for s in c.momenta if s not in g.fields]
        if missing:
            raise MissingField(f"grid has no samples for {', '.join(missing)}")
        env = {**params, **fd_jets(g, 1, c)}
        for a in c.A:
            for j in c.J:
                arr = g.fields[c.p(a, j)]
                env[c.p(a, j)] = _inner(arr)
                for k in c.J:
                    env[c.dp(a, j, k)] = _d1(arr, k - 1, g.h[k - 1])
        return env
    raise ValueError(f"momenta must be 'from-legendre' or 'supplied', not {momenta!r}")


def residuals(
    dynamics: DynamicsSystem,
    model: FieldModel,
    g: GridSection,
    momenta: str = "from-legendre",
    tol: Optional[float] = None,
) -> ResidualReport:
    """Evaluate every equation of ``dynamics`` at the interior grid points."""
    c = model.charts
    if c.m != g.m:
        raise ChartMismatch(f"grid has {g.m} axes, model base has {c.m}")
    if dynamics.chart == "J2E":
        env = {**_values(model, g), **fd_jets(g, 2, c)}
    elif dynamics.chart == "J1P":
        env = _momentum_env(model, g, momenta)
    else:
        raise ChartMismatch(f"cannot evaluate dynamics on chart {dynamics.chart}")
    shape = env[c.y(1)].shape
    cell = math.prod(g.h)
    entries = []
    for eq in dynamics:
        r = _evaluate(eq.residual, env, shape)
        entries.append(
            EquationResidual(
                eq.text,
                eq.kind.value,
                float(np.max(np.abs(r))),
                float(np.sqrt(np.sum(r * r) * cell)),
                int(r.size),
            )
        )
    return ResidualReport(tuple(entries), tol)


# -- Poisson demo --------------------------------------------------------------------

@dataclass
class PoissonResult:
    phi: np.ndarray
    iterations: int
    update: float
    converged: bool


def jacobi_poisson(
    rho: np.ndarray, h: Union[float, Sequence[float]], iterations: int = 20000, tol: float = 1e-10
) -> PoissonResult:
    """Solve  sum_j d^2 phi/dx_j^2 = rho  with phi = 0 on the boundary.

    Raises NoConvergence (carrying the partial result) when the iteration cap
    is reached before the max update drops below ``tol``.
    """
    rho = np.asarray(rho, dtype=float)
    if rho.ndim not in (2, 3):
        raise ValueError("jacobi_poisson handles 2- and 3-dimensional grids")
    if any(n < 3 for n in rho.shape):
        raise GridTooSmall("need at least 3 points per axis")
    hs = (float(h),) * rho.ndim if np.isscalar(h) else tuple(float(v) for v in h)
    weights = [1.0 / hj**2 for hj in hs]
    diag = 2.0 * sum(weights)
    phi = np.zeros_like(rho)
    src = _inner(rho)
    update, it = math.inf, 0
    while it < iterations:
        acc = -src
        for ax, w in enumerate(weights):
            acc = acc + w * (_shifted(phi, {ax: 1}) + _shifted(phi, {ax: -1}))
        new = acc / diag
        update = float(np.max(np.abs(new - _inner(phi))))
        _inner(phi)[...] = new
        it += 1
        if update < tol:
            return PoissonResult(phi, it, update, True)
    result = PoissonResult(phi, it, update, False)
    raise NoConvergence(f"no convergence after {it} iterations (last update {update:.3g})", result)


# -- grid files ----------------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def dump_grid(g: GridSection) -> str:
    head = (
        f"grid m={g.m} shape={','.join(map(str, g.shape))} "
        f"min={','.join(map(_fmt, g.mins))} max={','.join(map(_fmt, g.maxs))} "
        f"fields={','.join(g.fields)}"
    )
    blocks = [" ".join(_fmt(v) for v in arr.ravel()) for arr in g.fields.values()]
    return head + "\n" + "\n\n".join(blocks) + "\n"


def write_grid(g: GridSection, path) -> None:
    Path(path).write_text(dump_grid(g), encoding="utf-8")


def parse_grid(text: str) -> GridSection:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("grid"):
        raise ValueError("grid file must start with a 'grid' header line")
    header = {}
    for tok in lines[0].split()[1:]:
        key, sep, value = tok.partition("=")
        if not sep:
            raise ValueError(f"malformed header token {tok!r}")
        header[key] = value
    for key in ("m", "shape", "min", "max", "fields"):
        if key not in header:
            raise ValueError(f"grid header lacks {key!r}")
    m = int(header["m"])
    shape = tuple(int(v) for v in header["shape"].split(","))
    mins = tuple(float(v) for v in header["min"].split(","))
    maxs = tuple(float(v) for v in header["max"].split(","))
    names = [v for v in header["fields"].split(",") if v]
    if not (len(shape) == len(mins) == len(maxs) == m):
        raise ValueError("grid header dimensions disagree with m")
    blocks, current = [], []
    for line in lines[1:]:
        if line.strip():
            current.extend(line.split())
        elif current:
            blocks.append(current)
            current = []
    if current:
        blocks.append(current)
    if len(blocks) != len(names):
        raise ValueError(f"expected {len(names)} field blocks, found {len(blocks)}")
    size = math.prod(shape)
    fields = {}
    for name, block in zip(names, blocks):
        if len(block) != size:
            raise ValueError(f"field {name!r} has {len(block)} samples, expected {size}")
        fields[name] = np.array([float(v) for v in block]).reshape(shape)
    return GridSection(mins, maxs, shape, fields)


def read_grid(path) -> GridSection:
    return parse_grid(Path(path).read_text(encoding="utf-8"))

