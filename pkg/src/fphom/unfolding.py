"""Discrete periodic unfolding operators and their algebraic identities.

The micro grid of an unfolded field is the restriction of the macro grid to
one lattice cell (no resampling), which is what makes the product rule, the
average identity and the gradient identity hold exactly at the discrete
level instead of approximately.  Fields are zero-extended outside the
cell-covered region; nodes on shared cell faces belong to the upper cell,
matching the half-open integer-part convention of the geometry module.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import GeometryError, _check_grid_alignment
from .pde_core import Grid


@dataclass
class UnfoldedField:
    """Samples T(w)(cell, micro...); values outside the covered region are 0.

    For eta = 1 the micro variable is y in Y = (-1/2,1/2)^n; for eta < 1 it
    is the zoomed z = y/eta in (1/(2 eta)) * Y, sampled on the same nodes.
    """

    grid: Grid
    eps: float
    eta: float
    n_axis_cells: tuple[int, ...]
    values: np.ndarray  # shape (n_cells_total, p+1, ..., p+1)
    zero_extended: bool = True

    @property
    def p(self) -> int:
        return self.values.shape[1] - 1

    def micro_coords(self, axis: int) -> np.ndarray:
        y = np.arange(self.p + 1) / self.p - 0.5
        return y / self.eta

    def micro_trapezoid_weights(self) -> np.ndarray:
        """Weights integrating over the micro cell in its own variable."""
        spacing = self.grid.spacing / (self.eps * self.eta)
        w1 = np.full(self.p + 1, spacing)
        w1[0] *= 0.5
        w1[-1] *= 0.5
        nd = self.grid.ndim
        w = np.ones((self.p + 1,) * nd)
        for a in range(nd):
            sl = [None] * nd
            sl[a] = slice(None)
            w = w * w1[tuple(sl)]
        return w

    def integral_abs(self) -> float:
        """Discrete int over Omega x micro-domain of |T(w)|."""
        wm = self.micro_trapezoid_weights()
        per_cell = np.sum(np.abs(self.values) * wm, axis=tuple(range(1, self.values.ndim)))
        return float(np.sum(per_cell)) * self.eps**self.grid.ndim


def _cells_and_blocks(grid: Grid, eps: float):
    p = _check_grid_alignment(grid, eps)
    nd = grid.ndim
    n_cells = []
    for a in range(nd):
        extent = (grid.shape[a] - 1) * grid.spacing
        n_cells.append(int(np.floor(extent / eps + 1e-9)))
    if any(k < 1 for k in n_cells):
        raise GeometryError("domain holds no full cell at this eps")
    return p, tuple(n_cells)


def _extract_blocks(grid: Grid, w: np.ndarray, eps: float) -> tuple[np.ndarray, tuple[int, ...], int]:
    if w.shape != grid.shape:
        raise GeometryError("field shape does not match grid (misaligned grid)")
    p, n_cells = _cells_and_blocks(grid, eps)
    nd = grid.ndim
    blocks = np.empty((int(np.prod(n_cells)),) + (p + 1,) * nd)
    for flat, cell in enumerate(np.ndindex(*n_cells)):
        sl = tuple(slice(cell[a] * p, cell[a] * p + p + 1) for a in range(nd))
        blocks[flat] = w[sl]
    return blocks, n_cells, p


def unfold(grid: Grid, w: np.ndarray, eps: float) -> UnfoldedField:
    """T_eps(w): per-cell restriction of w to the cell's own node block."""
    blocks, n_cells, _ = _extract_blocks(grid, w, eps)
    return UnfoldedField(grid=grid, eps=eps, eta=1.0, n_axis_cells=n_cells, values=blocks)


def unfold_small_holes(grid: Grid, w: np.ndarray, eps: float, eta: float) -> UnfoldedField:
    """T_{eps,eta}(w)(x,t,z) = T_eps(w)(x,t,eta z): same samples, zoomed variable."""
    if not 0 < eta <= 1:
        raise GeometryError("eta must lie in (0, 1]")
    blocks, n_cells, _ = _extract_blocks(grid, w, eps)
    return UnfoldedField(grid=grid, eps=eps, eta=eta, n_axis_cells=n_cells, values=blocks)


def cell_average(grid: Grid, w: np.ndarray, eps: float) -> np.ndarray:
    """M_eps(w) as a nodal field: per-cell trapezoid mean broadcast to the
    cell's nodes, zero on nodes outside the covered region.

    Satisfies M_eps(w) = int_Y T_eps(w) dy exactly (same quadrature on both
    sides).
    """
    uf = unfold(grid, w, eps)
    means = cell_means(uf)
    return broadcast_cell_values(grid, eps, uf.n_axis_cells, means)


def cell_means(uf: UnfoldedField) -> np.ndarray:
    """int over the micro variable of T(w), per cell, times eta^n (so that
    for eta = 1 this is exactly the cell mean)."""
    wm = uf.micro_trapezoid_weights() * uf.eta**uf.grid.ndim
    return np.sum(uf.values * wm, axis=tuple(range(1, uf.values.ndim)))


def oscillation(uf: UnfoldedField) -> np.ndarray:
    """Z_eps(w) = T_eps(w) - M_eps(w): per-cell mean removed; the micro mean
    of the result vanishes exactly."""
    means = cell_means(uf)
    return uf.values - means.reshape((-1,) + (1,) * uf.grid.ndim)


def broadcast_cell_values(
    grid: Grid, eps: float, n_cells: tuple[int, ...], per_cell: np.ndarray
) -> np.ndarray:
    """Spread per-cell scalars to nodes (upper-cell convention on faces)."""
    p = _check_grid_alignment(grid, eps)
    nd = grid.ndim
    out = np.zeros(grid.shape)
    idx = []
    covered = []
    for a in range(nd):
        i = np.arange(grid.shape[a])
        c = i // p
        inside = c <= n_cells[a] - 1
        idx.append(np.where(inside, np.minimum(c, n_cells[a] - 1), 0))
        covered.append(inside)
    mesh_idx = np.meshgrid(*idx, indexing="ij")
    inside_all = np.ones(grid.shape, dtype=bool)
    for a in range(nd):
        sl = [None] * nd
        sl[a] = slice(None)
        inside_all &= covered[a][tuple(sl)]
    flat = np.zeros(grid.shape, dtype=int)
    stride = 1
    for a in reversed(range(nd)):
        flat += mesh_idx[a] * stride
        stride *= n_cells[a]
    out[inside_all] = per_cell[flat[inside_all]]
    return out


def grad_faces(grid: Grid, w: np.ndarray) -> list[np.ndarray]:
    """Forward-difference gradient living on grid edges, one array per axis."""
    return [np.diff(w, axis=a) / grid.spacing for a in range(grid.ndim)]


def unfold_faces(grid: Grid, faces: list[np.ndarray], eps: float) -> list[np.ndarray]:
    """Unfold an edge field: per cell, the p in-cell edges along each axis."""
    p, n_cells = _cells_and_blocks(grid, eps)
    nd = grid.ndim
    out = []
    for a in range(nd):
        shape = tuple(p + (0 if b == a else 1) for b in range(nd))
        blocks = np.empty((int(np.prod(n_cells)),) + shape)
        for flat, cell in enumerate(np.ndindex(*n_cells)):
            sl = tuple(
                slice(cell[b] * p, cell[b] * p + p + (0 if b == a else 1))
                for b in range(nd)
            )
            blocks[flat] = faces[a][sl]
        out.append(blocks)
    return out


def micro_gradient(uf: UnfoldedField) -> list[np.ndarray]:
    """(1/(eps*eta)) grad_z of the unfolded block, on the in-cell edges.

    Discretely identical to unfolding the macro edge gradient (the operator
    identity T_{eps,eta}(grad w) = (1/(eps eta)) grad_z T_{eps,eta}(w)).
    """
    dz = uf.grid.spacing / (uf.eps * uf.eta)
    return [
        np.diff(uf.values, axis=1 + a) / dz / (uf.eps * uf.eta)
        for a in range(uf.grid.ndim)
    ]
