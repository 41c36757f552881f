"""Periodic tiling, inclusion lattice, and scaling-regime classification.

The domain box is tiled by cells of side eps anchored at the domain corner,
so inclusion centers sit at corner + eps*(j + 1/2) and a unit box with
integer 1/eps holds exactly (1/eps)^n interior cells.  Micro coordinates
inside a cell live in the centered reference cell Y = (-1/2, 1/2)^n, where
the integer/fractional part convention is the nearest-integer one:
[r] = k iff r in [k - 1/2, k + 1/2).

A grid node belongs to an inclusion iff its micro coordinate lies in the
closed scaled shape eta*B (staircase rule).  The grid must align with the
lattice: eps/h an even integer, so cell centers and cell faces are nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .pde_core import Grid


class GeometryError(ValueError):
    pass


def integer_part(r):
    """Nearest-integer part: [r] = k iff r in [k - 1/2, k + 1/2)."""
    return np.floor(np.asarray(r) + 0.5).astype(int)


def fractional_part(r):
    """{r} = r - [r], always in [-1/2, 1/2)."""
    r = np.asarray(r, dtype=float)
    return r - integer_part(r)


@dataclass(frozen=True)
class LatticeIndexing:
    """Cell indexing of R^n by boxes eps*(xi + Y), Y = (-1/2, 1/2)^n."""

    cell_size: float
    dimension: int

    def __post_init__(self):
        if not self.cell_size > 0:
            raise GeometryError("cell size must be positive")
        if self.dimension not in (1, 2, 3):
            raise GeometryError("dimension must be 1, 2 or 3")

    def cell_of(self, x: np.ndarray) -> np.ndarray:
        return integer_part(np.asarray(x) / self.cell_size)

    def micro_of(self, x: np.ndarray) -> np.ndarray:
        return fractional_part(np.asarray(x) / self.cell_size)


# ---------------------------------------------------------------------------
# reference shapes

@dataclass(frozen=True)
class Ball:
    rho: float

    def __post_init__(self):
        if not 0 < self.rho < 0.5:
            raise GeometryError("ball radius must lie in (0, 1/2)")

    @property
    def circumradius(self) -> float:
        return self.rho

    def volume(self, ndim: int) -> float:
        if ndim == 1:
            return 2 * self.rho
        if ndim == 2:
            return math.pi * self.rho**2
        return 4.0 / 3.0 * math.pi * self.rho**3

    def contains(self, micro: Sequence[np.ndarray]) -> np.ndarray:
        r2 = sum(np.asarray(m) ** 2 for m in micro)
        return r2 <= self.rho**2 + 1e-14


@dataclass(frozen=True)
class BoxShape:
    half_width: tuple[float, ...]

    def __post_init__(self):
        if any(not 0 < w < 0.5 for w in self.half_width):
            raise GeometryError("box half-widths must lie in (0, 1/2)")

    @property
    def circumradius(self) -> float:
        return math.sqrt(sum(w * w for w in self.half_width))

    def volume(self, ndim: int) -> float:
        if len(self.half_width) != ndim:
            raise GeometryError("box half-width dimension mismatch")
        v = 1.0
        for w in self.half_width:
            v *= 2 * w
        return v

    def contains(self, micro: Sequence[np.ndarray]) -> np.ndarray:
        inside = np.ones(np.broadcast(*[np.asarray(m) for m in micro]).shape, dtype=bool)
        for m, w in zip(micro, self.half_width):
            inside &= np.abs(np.asarray(m)) <= w + 1e-14
        return inside


@dataclass(frozen=True)
class ImplicitShape:
    """Shape given by a signed-distance-like sampler: fn(micro...) <= 0 inside."""

    fn: Callable[..., np.ndarray]
    circumradius: float
    shape_volume: float | None = None

    def volume(self, ndim: int) -> float:
        if self.shape_volume is None:
            raise GeometryError("implicit shape has no analytic volume")
        return self.shape_volume

    def contains(self, micro: Sequence[np.ndarray]) -> np.ndarray:
        return np.asarray(self.fn(*micro)) <= 0.0


Shape = Ball | BoxShape | ImplicitShape


# ---------------------------------------------------------------------------
# scaling regimes

SUBCRITICAL = "Subcritical"
CRITICAL = "Critical"
SUPERCRITICAL = "Supercritical"
CONSTANT_ETA = "ConstantEta"


@dataclass(frozen=True)
class EtaRule:
    """Power-law inclusion size eta(eps) = c * eps**p (p = 0: constant eta)."""

    c: float
    p: float = 0.0

    def __post_init__(self):
        if not self.c > 0:
            raise GeometryError("eta rule needs c > 0")
        if self.p < 0:
            raise GeometryError("eta rule needs p >= 0")

    def __call__(self, eps: float) -> float:
        return self.c * eps**self.p


@dataclass(frozen=True)
class ScalingRegime:
    tag: str
    k: float | None = None        # finite positive only for Critical
    eta_const: float | None = None

    def __post_init__(self):
        if self.tag == CRITICAL and not (self.k is not None and 0 < self.k < math.inf):
            raise GeometryError("critical regime requires finite positive k")


def classify_regime(eta_rule: EtaRule, n: int) -> ScalingRegime:
    """Compare eta^{n/2-1}/eps as eps -> 0 for a power-law eta rule.

    With eta = c*eps^p the quantity is c^{n/2-1} * eps^{p(n/2-1)-1}; the sign
    of the exponent decides the regime, and the critical limit is c^{n/2-1}.
    """
    if eta_rule.p == 0:
        if not 0 < eta_rule.c <= 1:
            raise GeometryError("constant eta must lie in (0, 1]")
        return ScalingRegime(CONSTANT_ETA, eta_const=eta_rule.c)
    if n < 3:
        raise GeometryError("regime classification requires n >= 3 for eps-dependent eta")
    expo = eta_rule.p * (n / 2.0 - 1.0)
    if abs(expo - 1.0) < 1e-12:
        return ScalingRegime(CRITICAL, k=eta_rule.c ** (n / 2.0 - 1.0))
    if expo > 1.0:
        return ScalingRegime(SUBCRITICAL, k=0.0)
    return ScalingRegime(SUPERCRITICAL, k=math.inf)


# ---------------------------------------------------------------------------
# inclusion geometry

@dataclass
class InclusionGeometry:
    """Masks and lattice data for the eps-periodic array of scaled inclusions."""

    grid: Grid
    eps: float
    eta: float
    reference_shape: Shape
    lattice: np.ndarray              # interior cell indices, shape (n_cells, ndim)
    inclusion_mask: np.ndarray       # bool per node
    outer_mask: np.ndarray           # complement
    interface_faces: list[np.ndarray]  # per axis: bool array over grid edges
    inclusion_volume: float          # node-count measure of the inclusion set
    hat_volume: float                # measure of the cell-covered region
    dropped_cells: int = 0           # sub-resolution inclusions removed

    @property
    def n_axis_cells(self) -> tuple[int, ...]:
        ext = [(self.grid.shape[a] - 1) * self.grid.spacing for a in range(self.grid.ndim)]
        return tuple(int(math.floor(e / self.eps + 1e-9)) for e in ext)

    def interface_face_count(self) -> int:
        return int(sum(f.sum() for f in self.interface_faces))

    def masks_as_flat(self) -> tuple[np.ndarray, np.ndarray]:
        """Row-major 0/1 arrays for export."""
        return (
            self.inclusion_mask.astype(np.uint8).ravel(order="C"),
            self.outer_mask.astype(np.uint8).ravel(order="C"),
        )


def _check_grid_alignment(grid: Grid, eps: float) -> int:
    ratio = eps / grid.spacing
    p = round(ratio)
    if abs(ratio - p) > 1e-9 or p < 2 or p % 2 != 0:
        raise GeometryError(
            f"eps/h = {ratio:.6g} must be an even integer (cell centers on nodes)"
        )
    return p


def build_inclusions(
    grid: Grid,
    eps: float,
    eta: float,
    shape: Shape,
    on_unresolved: str = "error",
) -> InclusionGeometry:
    """Construct masks for the inclusion array on a lattice-aligned grid.

    A node is an inclusion node iff its centered micro coordinate lies in the
    closed scaled shape (staircase rule).  Inclusions whose circumscribed
    radius eta*eps*rad(B) falls below one grid spacing are unresolvable; they
    raise by default, or are removed with on_unresolved="drop".
    """
    if not 0 < eta <= 1:
        raise GeometryError("eta must lie in (0, 1]")
    if eta * shape.circumradius >= 0.5:
        raise GeometryError("scaled inclusion not compactly contained in the cell")
    extents = [(grid.shape[a] - 1) * grid.spacing for a in range(grid.ndim)]
    if any(eps > e + 1e-12 for e in extents):
        raise GeometryError("eps exceeds the domain side")
    _check_grid_alignment(grid, eps)
    if on_unresolved not in ("error", "drop"):
        raise GeometryError("on_unresolved must be 'error' or 'drop'")

    nd = grid.ndim
    n_cells_axis = [int(math.floor(e / eps + 1e-9)) for e in extents]

    # per-axis cell index and centered micro coordinate of every node
    cell_ax, micro_ax, interior_ax = [], [], []
    for a in range(nd):
        y = (grid.axis_coords(a) - grid.origin[a]) / eps - 0.5
        c = integer_part(y)
        cell_ax.append(c)
        micro_ax.append(y - c)
        interior_ax.append((c >= 0) & (c <= n_cells_axis[a] - 1))

    bshape = [grid.shape[a] for a in range(nd)]
    micro_full = []
    interior = np.ones(bshape, dtype=bool)
    for a in range(nd):
        sl = [None] * nd
        sl[a] = slice(None)
        micro_full.append(micro_ax[a][tuple(sl)] + np.zeros(bshape))
        interior &= interior_ax[a][tuple(sl)]

    resolved = eta * eps * shape.circumradius >= grid.spacing - 1e-12
    dropped = 0
    if not resolved:
        n_cells_total = int(np.prod(n_cells_axis)) if all(n > 0 for n in n_cells_axis) else 0
        if on_unresolved == "error":
            raise GeometryError(
                "resolution too coarse: scaled inclusion radius "
                f"{eta * eps * shape.circumradius:.3g} < spacing {grid.spacing:.3g}"
            )
        inclusion = np.zeros(bshape, dtype=bool)
        dropped = n_cells_total
    else:
        inclusion = interior & shape.contains([m / eta for m in micro_full])
        if not inclusion.any():
            raise GeometryError("resolution too coarse: no node falls inside any inclusion")

    outer = ~inclusion

    faces = []
    for a in range(nd):
        lo = [slice(None)] * nd
        hi = [slice(None)] * nd
        lo[a], hi[a] = slice(0, -1), slice(1, None)
        faces.append(inclusion[tuple(lo)] != inclusion[tuple(hi)])

    if all(n > 0 for n in n_cells_axis):
        lattice = np.stack(
            np.meshgrid(*[np.arange(n) for n in n_cells_axis], indexing="ij"), axis=-1
        ).reshape(-1, nd)
    else:
        lattice = np.zeros((0, nd), dtype=int)

    hvol = float(np.prod([n * eps for n in n_cells_axis]))
    return InclusionGeometry(
        grid=grid,
        eps=eps,
        eta=eta,
        reference_shape=shape,
        lattice=lattice,
        inclusion_mask=inclusion,
        outer_mask=outer,
        interface_faces=faces,
        inclusion_volume=float(inclusion.sum()) * grid.spacing**nd,
        hat_volume=hvol,
        dropped_cells=dropped,
    )


def distance_to_interface(geom: InclusionGeometry) -> np.ndarray:
    """dist(x, Gamma) for inclusion nodes; analytic for balls, erosion otherwise.

    Returns +inf on outer nodes.
    """
    grid = geom.grid
    nd = grid.ndim
    out = np.full(grid.shape, np.inf)
    if isinstance(geom.reference_shape, Ball):
        r_phys = geom.eta * geom.eps * geom.reference_shape.rho
        mesh = grid.meshgrid()
        centers = [
            (np.floor((mesh[a] - grid.origin[a]) / geom.eps) + 0.5) * geom.eps
            + grid.origin[a]
            for a in range(nd)
        ]
        dist_c = np.sqrt(sum((mesh[a] - centers[a]) ** 2 for a in range(nd)))
        out[geom.inclusion_mask] = r_phys - dist_c[geom.inclusion_mask]
        return out
    # mask erosion: distance in units of h, peeling one layer at a time
    mask = geom.inclusion_mask.copy()
    depth = np.zeros(grid.shape)
    layer = 0
    while mask.any():
        eroded = mask.copy()
        for a in range(nd):
            shp = [slice(None)] * nd
            shm = [slice(None)] * nd
            shp[a], shm[a] = slice(0, -1), slice(1, None)
            core = np.ones_like(mask)
            core[tuple(shp)] &= mask[tuple(shm)]
            core[tuple(shm)] &= mask[tuple(shp)]
            eroded &= core
        boundary_layer = mask & ~eroded
        depth[boundary_layer] = layer + 0.5
        mask = eroded
        layer += 1
    out[geom.inclusion_mask] = depth[geom.inclusion_mask] * grid.spacing
    return out
