"""Exterior capacitary cell problem: theta = 1 on B, harmonic outside,
Dirichlet energy Theta = capacity of B.

The exterior problem on R^3 \\ B is truncated to the box [-R, R]^3 with
theta = 0 on the outer boundary.  Extension by zero makes every truncated
minimizer admissible at larger R, so Theta_R decreases monotonically to the
true capacity; for a ball the exact tail is Theta_R = 4*pi*rho / (1 - rho/R),
which is what motivates the 1/R extrapolation model.  The staircase
realization of B carries an O(h) error on top, removed in capacity_study by
an additive (1/R, h) fit.  A radial two-point solver provides an
independent high-accuracy oracle for ball inclusions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Ball, ScalingRegime, Shape, CRITICAL
from .pde_core import Grid, LinearOperator, gradient_energy, neg_laplacian, solve_spd


class CellProblemError(ValueError):
    pass


@dataclass
class CellProblemResult:
    radii: list[float]
    capacities: list[float]          # Theta_R per truncation radius
    spacings: list[float]
    theta: float = np.nan            # extrapolated capacity
    error_estimate: float = np.nan
    monotone: bool = True
    potential: np.ndarray | None = field(default=None, repr=False)
    potential_grid: Grid | None = None

    def rows(self):
        for R, h, th in zip(self.radii, self.spacings, self.capacities):
            yield R, h, th


def solve_capacitary(
    shape: Shape, R: float, h: float, tol: float = 1e-10
) -> tuple[np.ndarray, float, Grid]:
    """Solve the truncated capacitary problem on [-R, R]^3 at spacing h.

    Returns (theta field, Theta_R, grid).  theta = 1 on the staircase B,
    theta = 0 on the outer box; Theta_R is the face-summed Dirichlet energy.
    """
    if R < 4.0 * shape.circumradius:
        raise CellProblemError("truncation radius too small: need R >= 4 rad(B)")
    if shape.circumradius < h:
        raise CellProblemError("B unresolved: inclusion smaller than one grid spacing")
    n_half = round(R / h)
    if abs(n_half * h - R) > 1e-9:
        raise CellProblemError("h must divide R")
    n = 2 * n_half + 1
    grid = Grid(shape=(n,) * 3, spacing=h, origin=(-R, -R, -R))

    mesh = grid.meshgrid()
    inside = shape.contains(mesh)
    if not inside.any():
        raise CellProblemError("B unresolved: no grid node falls inside the inclusion")
    boundary = np.zeros(grid.shape, dtype=bool)
    for a in range(3):
        sl0, sl1 = [slice(None)] * 3, [slice(None)] * 3
        sl0[a], sl1[a] = 0, -1
        boundary[tuple(sl0)] = True
        boundary[tuple(sl1)] = True
    if (inside & boundary).any():
        raise CellProblemError("inclusion touches the truncation boundary")

    pins = inside | boundary
    g = np.where(inside, 1.0, 0.0)
    op = LinearOperator(grid, diag_field=0.0, pinned=pins)
    rhs = -op.weights * neg_laplacian(grid, g)
    rhs[pins] = g[pins]
    theta, _ = solve_spd(op, rhs, x0=g.copy(), tol=tol)
    return theta, gradient_energy(grid, theta), grid


def solve_capacitary_octant(
    shape: Shape, R: float, h: float, tol: float = 1e-10
) -> tuple[np.ndarray, float, Grid]:
    """Capacitary solve on the symmetry octant [0, R]^3 for centered shapes.

    The mirror Neumann closure on the coordinate planes is exactly the
    reflection symmetry of the full problem, so 8x the octant energy equals
    the full-box Theta_R at an eighth of the unknowns.  Only valid for
    shapes symmetric under coordinate reflections (balls, centered boxes).
    """
    if not isinstance(shape, (Ball,)):
        raise CellProblemError("octant fast path requires a reflection-symmetric shape")
    if R < 4.0 * shape.circumradius:
        raise CellProblemError("truncation radius too small: need R >= 4 rad(B)")
    n_half = round(R / h)
    if abs(n_half * h - R) > 1e-9:
        raise CellProblemError("h must divide R")
    grid = Grid(shape=(n_half + 1,) * 3, spacing=h, origin=(0.0, 0.0, 0.0))
    mesh = grid.meshgrid()
    inside = shape.contains(mesh)
    if not inside.any():
        raise CellProblemError("B unresolved: no grid node falls inside the inclusion")
    outer = np.zeros(grid.shape, dtype=bool)
    for a in range(3):
        sl = [slice(None)] * 3
        sl[a] = -1
        outer[tuple(sl)] = True
    if (inside & outer).any():
        raise CellProblemError("inclusion touches the truncation boundary")
    pins = inside | outer
    g = np.where(inside, 1.0, 0.0)
    op = LinearOperator(grid, diag_field=0.0, pinned=pins)
    rhs = -op.weights * neg_laplacian(grid, g)
    rhs[pins] = g[pins]
    theta, _ = solve_spd(op, rhs, x0=g.copy(), tol=tol)
    return theta, 8.0 * gradient_energy(grid, theta), grid


def extrapolate_capacity(
    radii: list[float], capacities: list[float], spacings: list[float] | None = None
) -> CellProblemResult:
    """Fit Theta_R = Theta - a/R over >= 3 radii in geometric progression.

    The fitted intercept removes the leading truncation error; the rms fit
    residual is reported as the error estimate.  A non-monotone sequence is
    reported through the result flag.
    """
    if len(radii) < 3:
        raise CellProblemError("need at least 3 truncation radii")
    ratios = [radii[i + 1] / radii[i] for i in range(len(radii) - 1)]
    if max(ratios) - min(ratios) > 1e-9 * max(ratios):
        raise CellProblemError("radii must be in geometric progression")
    x = 1.0 / np.asarray(radii, dtype=float)
    y = np.asarray(capacities, dtype=float)
    A = np.stack([np.ones_like(x), x], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    diffs = np.diff(y)
    monotone = bool(np.all(diffs <= 1e-12 * np.abs(y[0]))) or bool(
        np.all(diffs >= -1e-12 * np.abs(y[0]))
    )
    return CellProblemResult(
        radii=list(radii),
        capacities=list(capacities),
        spacings=list(spacings) if spacings is not None else [np.nan] * len(radii),
        theta=float(coef[0]),
        error_estimate=float(np.sqrt(np.mean(resid**2))),
        monotone=monotone,
    )


def capacity_study(
    shape: Shape,
    pairs: list[tuple[float, float]] | None = None,
    tol: float = 1e-7,
) -> CellProblemResult:
    """Remove truncation and staircase errors together.

    Solves the truncated problem at (R, h) pairs and fits the additive
    leading-error model Theta(R, h) = Theta + a/R + b*h + c*h^2 by least
    squares.  The default design spans R in {2, 4} and three spacings at the
    smaller box, all within a 97^3 finest grid via the symmetry octant.
    """
    if pairs is None:
        pairs = [(2.0, 1 / 12), (2.0, 1 / 24), (2.0, 1 / 48), (4.0, 1 / 12), (4.0, 1 / 24)]
    if len(pairs) < 4:
        raise CellProblemError("need at least 4 (R, h) pairs for the additive model")
    octant = isinstance(shape, Ball)
    caps = []
    for R, h in pairs:
        if octant:
            _, cap, _ = solve_capacitary_octant(shape, R, h, tol=tol)
        else:
            _, cap, _ = solve_capacitary(shape, R, h, tol=tol)
        caps.append(cap)
    A = np.array([[1.0, 1.0 / R, h, h * h] for R, h in pairs])
    y = np.asarray(caps)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    # error estimate: fit residual plus the next-order truncation term
    r_big = max(R for R, _ in pairs)
    est = float(np.sqrt(np.mean(resid**2)) + abs(coef[1]) / r_big**2)
    return CellProblemResult(
        radii=[R for R, _ in pairs],
        capacities=caps,
        spacings=[h for _, h in pairs],
        theta=float(coef[0]),
        error_estimate=est,
    )


def radial_capacity_oracle(
    rho: float, radii: list[float] | None = None, n_points: int = 20000
) -> float:
    """Ball capacity from the radial two-point problem -(r^2 theta')' = 0.

    Independent of the 3D grid path: solves the 1D conservative-form system
    on [rho, R] per truncation radius, integrates the radial energy, and
    extrapolates with the same 1/R model.
    """
    if radii is None:
        radii = [8.0, 16.0, 32.0]
    caps = []
    for R in radii:
        r = np.linspace(rho, R, n_points + 1)
        dr = r[1] - r[0]
        rf = 0.5 * (r[:-1] + r[1:])  # face radii
        w2 = rf**2
        # Thomas solve of the tridiagonal conservative-form system
        n_int = n_points - 1
        lower = w2[1:n_int + 1].copy()
        upper = w2[1:n_int + 1].copy()
        diag = -(w2[:n_int] + w2[1:n_int + 1])
        rhs = np.zeros(n_int)
        rhs[0] -= w2[0] * 1.0  # theta(rho) = 1
        cp = np.zeros(n_int)
        dp = np.zeros(n_int)
        cp[0] = upper[0] / diag[0]
        dp[0] = rhs[0] / diag[0]
        for i in range(1, n_int):
            m = diag[i] - lower[i - 1] * cp[i - 1]
            cp[i] = upper[i] / m if i < n_int - 1 else 0.0
            dp[i] = (rhs[i] - lower[i - 1] * dp[i - 1]) / m
        theta_int = np.zeros(n_int)
        theta_int[-1] = dp[-1]
        for i in range(n_int - 2, -1, -1):
            theta_int[i] = dp[i] - cp[i] * theta_int[i + 1]
        theta = np.concatenate([[1.0], theta_int, [0.0]])
        energy = 4.0 * math.pi * float(np.sum(w2 * (np.diff(theta) / dr) ** 2 * dr))
        caps.append(energy)
    fit = extrapolate_capacity(radii, caps)
    return fit.theta


def strange_term_coefficient(regime: ScalingRegime, theta: float) -> float:
    """k^2 * Theta, the zeroth-order coefficient of the critical limit problem."""
    if regime.tag != CRITICAL:
        raise CellProblemError(f"strange term defined only in the critical regime, got {regime.tag}")
    if not theta > 0:
        raise CellProblemError("capacity must be positive")
    return regime.k**2 * theta


def export_capacity_csv(result: CellProblemResult, path) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["R", "h", "Theta_R"])
        for R, h, th in result.rows():
            wr.writerow([f"{R:.12e}", f"{h:.12e}", f"{th:.12e}"])


def export_capacity_json(result: CellProblemResult, path) -> None:
    with open(path, "w") as fh:
        json.dump(
            {"theta": result.theta, "error_estimate": result.error_estimate},
            fh,
            indent=2,
        )
        fh.write("\n")
