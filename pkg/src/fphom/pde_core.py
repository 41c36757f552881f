"""Structured-grid discrete operators and the implicit time stepper.

Everything in this package that evolves or inverts a Laplacian goes through
this module: a uniform vertex-centered grid, the second-order 7/5/3-point
negative Laplacian with mirror (zero-flux) closure on the outer boundary and
optional Dirichlet pinning on marked nodes, a conjugate-gradient solver for
the symmetric positive definite systems that backward Euler produces, and the
backward-Euler driver itself.

Discrete conventions, used consistently by every caller:

* Nodes sit at ``origin + i*h`` (vertices, not cell centers).  Integrals are
  trapezoid node sums, i.e. plain sums against the tensor-product weight
  field ``W`` which is h**n in the interior and halved on each boundary face.
* ``neg_laplacian`` applies the raw stencil (-Δ_h with mirror ghosts).  It is
  self-adjoint with respect to the W-weighted inner product; the weighted
  form ``W * neg_laplacian(w)`` is symmetric in the plain sense and positive
  semidefinite, with zero column sums.  That single identity is what makes
  the discrete mass balance of the solvers exact.
* Backward Euler solves ``(W*m/dt + W*(-Δ_h) + W*lam) v_new = W*(m*v/dt + f)``
  with ``m`` a positive diagonal mass field and ``lam >= 0`` an optional
  zeroth-order term; the matrix is an M-matrix, which is where the discrete
  maximum principle and positivity preservation come from.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class SolverError(RuntimeError):
    """Linear solver failed; carries the final relative residual."""

    def __init__(self, message: str, relres: float | None = None):
        super().__init__(message)
        self.relres = relres


@dataclass(frozen=True)
class Grid:
    """Uniform vertex-centered grid on a box.

    shape   -- nodes per axis (each >= 4)
    spacing -- common node spacing h
    origin  -- coordinate of node (0, ..., 0)
    """

    shape: tuple[int, ...]
    spacing: float
    origin: tuple[float, ...] = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.origin is None:
            object.__setattr__(self, "origin", (0.0,) * len(self.shape))
        if len(self.origin) != len(self.shape):
            raise ValueError("origin/shape dimension mismatch")
        if any(n < 4 for n in self.shape):
            raise ValueError("need at least 4 nodes per axis")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")

    @property
    def ndim(self) -> int:
        return len(self.shape)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    def axis_coords(self, axis: int) -> np.ndarray:
        return self.origin[axis] + self.spacing * np.arange(self.shape[axis])

    def meshgrid(self) -> list[np.ndarray]:
        """Full coordinate arrays, one per axis, each of shape ``self.shape``."""
        axes = [self.axis_coords(a) for a in range(self.ndim)]
        return list(np.meshgrid(*axes, indexing="ij"))

    def node_weights(self) -> np.ndarray:
        """Trapezoid quadrature weights; sums against them are integrals."""
        w = np.ones(self.shape)
        for a in range(self.ndim):
            wa = np.full(self.shape[a], self.spacing)
            wa[0] *= 0.5
            wa[-1] *= 0.5
            sl = [None] * self.ndim
            sl[a] = slice(None)
            w = w * wa[tuple(sl)]
        return w

    def integrate(self, f: np.ndarray) -> float:
        return float(np.sum(self.node_weights() * f))

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(np.sum(self.node_weights() * f * g))

    def norm_l2(self, f: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(f, f), 0.0)))


def neg_laplacian(grid: Grid, w: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Apply -Δ_h with mirror (homogeneous Neumann) closure on the box boundary.

    Second order in the interior; the mirror ghost w[-1] = w[1] keeps second
    order for fields with zero normal derivative and makes constants exact
    kernel elements.
    """
    if w.shape != grid.shape:
        raise ValueError(f"field shape {w.shape} does not match grid {grid.shape}")
    h2 = grid.spacing * grid.spacing
    if out is None:
        out = np.zeros_like(w)
    else:
        out.fill(0.0)
    nd = grid.ndim
    for a in range(nd):
        lo = [slice(None)] * nd
        hi = [slice(None)] * nd
        mid = [slice(None)] * nd
        lo[a], mid[a], hi[a] = slice(0, -2), slice(1, -1), slice(2, None)
        out[tuple(mid)] += 2.0 * w[tuple(mid)] - w[tuple(lo)] - w[tuple(hi)]
        first, second = [slice(None)] * nd, [slice(None)] * nd
        first[a], second[a] = 0, 1
        out[tuple(first)] += 2.0 * (w[tuple(first)] - w[tuple(second)])
        last, penu = [slice(None)] * nd, [slice(None)] * nd
        last[a], penu[a] = -1, -2
        out[tuple(last)] += 2.0 * (w[tuple(last)] - w[tuple(penu)])
    out /= h2
    return out


def gradient_energy(grid: Grid, w: np.ndarray) -> float:
    """Face-summed squared-gradient integral sum_faces |∇_h w|² h^n.

    Forward differences on grid edges; this is the Dirichlet form whose
    first variation is ``W * neg_laplacian``.
    """
    h = grid.spacing
    total = 0.0
    nd = grid.ndim
    for a in range(nd):
        d = np.diff(w, axis=a) / h
        # transverse trapezoid weights; along-axis edges carry full weight h
        wgt = np.ones(d.shape)
        for b in range(nd):
            if b == a:
                continue
            wb = np.ones(grid.shape[b])
            wb[0] = wb[-1] = 0.5
            sl = [None] * nd
            sl[b] = slice(None)
            wgt = wgt * wb[tuple(sl)]
        total += float(np.sum(d * d * wgt)) * h**nd
    return total


@dataclass
class LinearOperator:
    """W-weighted negative Laplacian plus diagonal terms, with Dirichlet pins.

    Represents A v = W*diag_field*v + W*(-Δ_h v~) where v~ is v with pinned
    entries zeroed, and rows at pinned nodes replaced by the identity.  The
    result is symmetric positive (semi)definite: definite as soon as
    diag_field > 0 somewhere on every connected component or pins exist.
    """

    grid: Grid
    diag_field: np.ndarray | float = 0.0
    pinned: np.ndarray | None = None  # bool mask of Dirichlet nodes
    _scratch: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]
    _weights: np.ndarray = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self):
        if self.pinned is not None and self.pinned.shape != self.grid.shape:
            raise ValueError("pinned mask shape mismatch")
        self._scratch = np.empty(self.grid.shape)
        self._weights = self.grid.node_weights()

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    def apply(self, v: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            out = np.empty_like(v)
        if self.pinned is not None:
            vv = np.where(self.pinned, 0.0, v)
        else:
            vv = v
        neg_laplacian(self.grid, vv, self._scratch)
        np.multiply(self._scratch, self._weights, out)
        out += self._weights * (self.diag_field * vv)
        if self.pinned is not None:
            out[self.pinned] = v[self.pinned]
        return out

    def jacobi_diagonal(self) -> np.ndarray:
        d = self._weights * (self.diag_field + 2.0 * self.grid.ndim / self.grid.spacing**2)
        d = np.asarray(d, dtype=float).copy()
        if self.pinned is not None:
            d[self.pinned] = 1.0
        return d

    def is_definite(self) -> bool:
        if self.pinned is not None and bool(np.any(self.pinned)):
            return True
        return bool(np.min(np.asarray(self.diag_field) + np.zeros(1)) > 0.0)


def solve_spd(
    op: LinearOperator,
    rhs: np.ndarray,
    x0: np.ndarray | None = None,
    tol: float = 1e-10,
    maxiter: int | None = None,
    jacobi: bool = True,
) -> tuple[np.ndarray, int]:
    """Conjugate gradients on the weighted SPD system.

    Relative-residual stopping: ||rhs - A x|| <= tol * ||rhs||.  Iteration cap
    defaults to 20 * (nodes per axis)**2.  Raises SolverError on stagnation or
    a singular pure-Neumann system.
    """
    if not op.is_definite():
        raise SolverError("singular system: pure Neumann closure with zero diagonal shift")
    if maxiter is None:
        maxiter = 20 * max(op.grid.shape) ** 2
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm == 0.0:
        return np.zeros_like(rhs), 0
    x = np.zeros_like(rhs) if x0 is None else x0.copy()
    r = rhs - op.apply(x)
    if float(np.linalg.norm(r)) <= tol * rhs_norm:
        return x, 0
    dinv = 1.0 / op.jacobi_diagonal() if jacobi else None
    z = r * dinv if jacobi else r.copy()
    p = z.copy()
    rz = float(np.sum(r * z))
    Ap = np.empty_like(rhs)
    for it in range(1, maxiter + 1):
        op.apply(p, Ap)
        pAp = float(np.sum(p * Ap))
        if pAp <= 0.0:
            raise SolverError("operator not positive definite in CG", relres=np.linalg.norm(r) / rhs_norm)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        res = float(np.linalg.norm(r))
        if res <= tol * rhs_norm:
            return x, it
        z = r * dinv if jacobi else r
        rz_new = float(np.sum(r * z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise SolverError(
        f"CG did not converge in {maxiter} iterations",
        relres=float(np.linalg.norm(r)) / rhs_norm,
    )


@dataclass
class EvolveResult:
    times: np.ndarray            # stored times, always including t=0 and T
    snapshots: list[np.ndarray]  # stored v fields at those times
    store_index: np.ndarray      # time-step index of each stored snapshot


def backward_euler(
    grid: Grid,
    mass: np.ndarray | float,
    v0: np.ndarray,
    dt: float,
    n_steps: int,
    source: Callable[[float], np.ndarray | float] | np.ndarray | float | None = None,
    lam: np.ndarray | float = 0.0,
    pinned: np.ndarray | None = None,
    pin_value: float = 0.0,
    tol: float = 1e-10,
    jacobi: bool = True,
    store_every: int = 1,
    step_hooks: Sequence[Callable[[int, float, np.ndarray], None]] = (),
) -> EvolveResult:
    """March ``mass * dv/dt - Δ_h v + lam v = f`` with zero-flux outer closure.

    Dirichlet pins hold ``v = pin_value`` on the masked nodes for all time
    (the mask also overrides v0 there).  The source is sampled at t_{m+1},
    fully implicit.  ``step_hooks`` run after every accepted step (not only
    stored ones) with (step index, time, v); they are how callers accumulate
    time integrals without storing dense history.
    """
    if dt <= 0 or n_steps < 1:
        raise ValueError("need dt > 0 and n_steps >= 1")
    mass_arr = np.broadcast_to(np.asarray(mass, dtype=float), grid.shape)
    if np.min(mass_arr) <= 0:
        raise ValueError("mass field must be strictly positive")
    op = LinearOperator(grid, diag_field=mass_arr / dt + lam, pinned=pinned)
    W = op.weights

    v = v0.astype(float).copy()
    if pinned is not None:
        v[pinned] = pin_value

    pin_rhs_fix = None
    if pinned is not None and pin_value != 0.0:
        g = np.where(pinned, pin_value, 0.0)
        pin_rhs_fix = -W * neg_laplacian(grid, g)

    def source_at(t: float):
        if source is None:
            return None
        f = source(t) if callable(source) else source
        return f

    result = EvolveResult(times=None, snapshots=[], store_index=None)  # type: ignore[arg-type]
    stored_t, stored_i = [0.0], [0]
    result.snapshots.append(v.copy())
    for hook in step_hooks:
        hook(0, 0.0, v)

    rhs = np.empty(grid.shape)
    for m in range(1, n_steps + 1):
        t_new = m * dt
        np.multiply(v, mass_arr, rhs)
        rhs /= dt
        f = source_at(t_new)
        if f is not None:
            rhs += f
        rhs *= W
        if pin_rhs_fix is not None:
            rhs += pin_rhs_fix
        if pinned is not None:
            rhs[pinned] = pin_value
        v, _ = solve_spd(op, rhs, x0=v, tol=tol, jacobi=jacobi)
        for hook in step_hooks:
            hook(m, t_new, v)
        if m % store_every == 0 or m == n_steps:
            stored_t.append(t_new)
            stored_i.append(m)
            result.snapshots.append(v.copy())

    result.times = np.array(stored_t)
    result.store_index = np.array(stored_i)
    return result
