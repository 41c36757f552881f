"""Oscillating diffusion coefficient and its cell harmonic means.

The coefficient b(x, y) is positive, Y-periodic in the fast variable, and
comes in three flavors: a constant, a separable product a(x)*p(y) built from
a registry of named expressions, or a tabulated periodic sampler on a micro
grid.  The scaled field b_{eps,delta} equals delta*b_eps on inclusion nodes
and b_eps outside; every upscaled problem in this package takes its
effective coefficient from the harmonic cell mean M_Y(1/b) computed here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .geometry import InclusionGeometry, Shape, fractional_part
from .pde_core import Grid


class CoefficientError(ValueError):
    pass


# Registry of named built-in expressions.  Each entry maps coordinate arrays
# (one per axis, broadcastable) to values; 'y' entries are 1-periodic.
EXPRESSIONS: dict[str, Callable[..., np.ndarray]] = {
    "one": lambda *c: np.ones(np.broadcast(*c).shape) if c else np.array(1.0),
    "sin_y1": lambda *c: 2.0 + np.sin(2 * np.pi * np.asarray(c[0])),
    "cos_y1": lambda *c: 2.0 + np.cos(2 * np.pi * np.asarray(c[0])),
    "piecewise_halves": lambda *c: np.where(fractional_part(np.asarray(c[0])) < 0, 1.0, 4.0),
    "cos_x1": lambda *c: 1.0 + 0.5 * np.cos(np.pi * np.asarray(c[0])),
    "linear_x1": lambda *c: 1.0 + 0.5 * np.asarray(c[0]),
}


def register_expression(name: str, fn: Callable[..., np.ndarray]) -> None:
    EXPRESSIONS[name] = fn


def _lookup(name: str) -> Callable[..., np.ndarray]:
    try:
        return EXPRESSIONS[name]
    except KeyError:
        raise CoefficientError(f"unknown expression {name!r}; registered: {sorted(EXPRESSIONS)}")


@dataclass(frozen=True)
class CoefficientSpec:
    """b(x, y) with a declared positive lower bound.

    kind:       'constant' | 'separable' | 'tabulated'
    value:      the constant, for kind='constant'
    a, p:       expression ids for the slow/fast factors, kind='separable'
    table:      periodic nodal values on a uniform Y-grid, kind='tabulated'
                (value j sits at y = -1/2 + j/m, nearest-node sampling)
    lower_bound: C > 0 enforced on every sampled value
    """

    kind: str = "constant"
    value: float = 1.0
    a: str = "one"
    p: str = "one"
    table: np.ndarray | None = None
    lower_bound: float = 1e-8
    upper_bound: float = np.inf

    def __post_init__(self):
        if self.kind not in ("constant", "separable", "tabulated"):
            raise CoefficientError(f"unknown coefficient kind {self.kind!r}")
        if not self.lower_bound > 0:
            raise CoefficientError("lower bound must be positive")
        if self.kind == "constant" and not self.value >= self.lower_bound:
            raise CoefficientError("constant coefficient below its lower bound")
        if self.kind == "tabulated":
            if self.table is None or np.asarray(self.table).ndim < 1:
                raise CoefficientError("tabulated coefficient needs a table")

    def evaluate(self, x: list[np.ndarray], y: list[np.ndarray]) -> np.ndarray:
        if self.kind == "constant":
            return np.full(np.broadcast(*(x + y)).shape if (x or y) else (), self.value)
        if self.kind == "separable":
            vals = _lookup(self.a)(*x) * _lookup(self.p)(*y)
        else:
            vals = self._sample_table(y)
        self._check(vals)
        return vals

    def _sample_table(self, y: list[np.ndarray]) -> np.ndarray:
        tab = np.asarray(self.table, dtype=float)
        idx = []
        for a in range(tab.ndim):
            m = tab.shape[a]
            j = np.rint((np.asarray(y[a]) + 0.5) * m).astype(int) % m
            idx.append(j)
        return tab[tuple(idx)]

    def _check(self, vals: np.ndarray) -> None:
        lo = float(np.min(vals))
        if lo < self.lower_bound - 1e-14:
            raise CoefficientError(
                f"coefficient value {lo:.3g} violates lower bound {self.lower_bound:.3g}"
            )
        if np.max(vals) > self.upper_bound + 1e-14:
            raise CoefficientError("coefficient exceeds declared upper bound")


@dataclass
class ScaledCoefficientField:
    """Nodal b_{eps,delta}: delta*b_eps inside inclusions, b_eps outside."""

    values: np.ndarray
    b_eps: np.ndarray
    delta: float
    geom: InclusionGeometry

    def __post_init__(self):
        if not 0 < self.delta <= 1:
            raise CoefficientError("delta must lie in (0, 1]")
        if np.min(self.values) <= 0:
            raise CoefficientError("scaled coefficient must stay positive")

    @property
    def contrast(self) -> float:
        return float(np.max(self.values) / np.min(self.values))


def evaluate_b_eps(spec: CoefficientSpec, grid: Grid, eps: float) -> np.ndarray:
    """b_eps(x) = b(x, x/eps) on the nodes, fast variable reduced periodically."""
    mesh = grid.meshgrid()
    y = [fractional_part(m / eps) for m in mesh]
    return spec.evaluate(mesh, y)


def assemble_coefficient(
    geom: InclusionGeometry, spec: CoefficientSpec, eps: float, delta: float
) -> ScaledCoefficientField:
    if not 0 < delta <= 1:
        raise CoefficientError("delta must lie in (0, 1]; the delta=0 limit is a solver, not a field")
    b_eps = evaluate_b_eps(spec, geom.grid, eps)
    vals = np.where(geom.inclusion_mask, delta * b_eps, b_eps)
    return ScaledCoefficientField(values=vals, b_eps=b_eps, delta=delta, geom=geom)


# ---------------------------------------------------------------------------
# harmonic cell means

def _midpoints(order: int) -> np.ndarray:
    return -0.5 + (np.arange(order) + 0.5) / order


def _micro_grid(ndim: int, order: int) -> list[np.ndarray]:
    pts = _midpoints(order)
    return list(np.meshgrid(*([pts] * ndim), indexing="ij"))


def harmonic_cell_mean(
    spec: CoefficientSpec,
    x: tuple[float, ...] = (),
    quadrature_order: int = 64,
    ndim: int | None = None,
) -> float:
    """M_Y(1/b)(x) by a tensor midpoint rule; its reciprocal is the effective
    diffusivity of every upscaled problem."""
    if spec.kind == "constant":
        return 1.0 / spec.value
    if spec.kind == "tabulated":
        return float(np.mean(1.0 / np.asarray(spec.table, dtype=float)))
    nd = ndim if ndim is not None else (len(x) if x else 1)
    y = _micro_grid(nd, quadrature_order)
    xs = [np.full_like(y[0], x[a]) if x else np.zeros_like(y[0]) for a in range(nd)]
    vals = spec.evaluate(xs, y)
    return float(np.mean(1.0 / vals))


def harmonic_cell_mean_delta(
    spec: CoefficientSpec,
    x: tuple[float, ...],
    delta: float,
    shape: Shape,
    quadrature_order: int = 64,
    ndim: int | None = None,
) -> float:
    """M_Y(1/b_delta)(x) = (1/delta) * int_B 1/b + int_{Y\\B} 1/b (eta = 1).

    When the shape has an analytic volume the in/out parts are rescaled so
    the split is exact even at modest quadrature order.
    """
    if not 0 < delta <= 1:
        raise CoefficientError("delta must lie in (0, 1]")
    nd = ndim if ndim is not None else (len(x) if x else 3)
    y = _micro_grid(nd, quadrature_order)
    xs = [np.full_like(y[0], x[a]) if x else np.zeros_like(y[0]) for a in range(nd)]
    recip = 1.0 / spec.evaluate(xs, y)
    inside = shape.contains(y)
    w = 1.0 / quadrature_order**nd
    vol_quad = float(inside.sum()) * w
    s_in = float(recip[inside].sum()) * w
    s_out = float(recip[~inside].sum()) * w
    try:
        vol_exact = shape.volume(nd)
    except Exception:
        vol_exact = None
    if vol_exact is not None and 0 < vol_quad < 1:
        s_in *= vol_exact / vol_quad
        s_out *= (1.0 - vol_exact) / (1.0 - vol_quad)
    return s_in / delta + s_out


def harmonic_mean_field(
    spec: CoefficientSpec, grid: Grid, quadrature_order: int = 64
) -> np.ndarray:
    """Nodal field of M_Y(1/b)(x); cheap for the separable/constant kinds."""
    if spec.kind == "constant":
        return np.full(grid.shape, 1.0 / spec.value)
    if spec.kind == "tabulated":
        return np.full(grid.shape, float(np.mean(1.0 / np.asarray(spec.table, dtype=float))))
    pts = _midpoints(quadrature_order)
    y = list(np.meshgrid(*([pts] * grid.ndim), indexing="ij"))
    p_mean = float(np.mean(1.0 / _lookup(spec.p)(*y)))
    mesh = grid.meshgrid()
    a_vals = _lookup(spec.a)(*mesh) + np.zeros(grid.shape)
    if np.min(a_vals) <= 0:
        raise CoefficientError("slow factor must stay positive")
    return p_mean / a_vals


def harmonic_mean_delta_field(
    spec: CoefficientSpec,
    grid: Grid,
    delta: float,
    shape: Shape,
    quadrature_order: int = 64,
) -> np.ndarray:
    """Nodal field of M_Y(1/b_delta)(x) for the eta = 1 homogenized problem."""
    if spec.kind in ("constant", "tabulated"):
        val = harmonic_cell_mean_delta(
            spec, (), delta, shape, quadrature_order, ndim=grid.ndim
        )
        return np.full(grid.shape, val)
    pts = _midpoints(quadrature_order)
    y = list(np.meshgrid(*([pts] * grid.ndim), indexing="ij"))
    recip_p = 1.0 / _lookup(spec.p)(*y)
    inside = shape.contains(y)
    w = 1.0 / quadrature_order**grid.ndim
    vol_quad = float(inside.sum()) * w
    s_in = float(recip_p[inside].sum()) * w
    s_out = float(recip_p[~inside].sum()) * w
    try:
        vol_exact = shape.volume(grid.ndim)
    except Exception:
        vol_exact = None
    if vol_exact is not None and 0 < vol_quad < 1:
        s_in *= vol_exact / vol_quad
        s_out *= (1.0 - vol_exact) / (1.0 - vol_quad)
    mesh = grid.meshgrid()
    a_vals = _lookup(spec.a)(*mesh) + np.zeros(grid.shape)
    return (s_in / delta + s_out) / a_vals
