"""The four upscaled problems: pure diffusion (PD), diffusion with mass
deposition (DMD), absence of diffusion (AD), and the delta-dependent PD
problem for eta = 1.

All diffusive variants run through one backward-Euler engine on the v-form

    M(x) dv/dt - Lap v + k2theta * v = f,    v(0) = u0 / M,    u = M v,

with M the harmonic cell mean M_Y(1/b) (or its delta version).  AD is pure
time integration, u = F.  The limiting-measure density of the critical
regime is m0 = u0 + (k2theta / M) * int_0^t u0, which exactly balances the
bulk decay: the deposited term keeps the total measure conserved.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fp_solver import SolutionField, SourceLike, _as_source_of_t
from .pde_core import Grid, backward_euler


@dataclass
class HomogenizedProblemSpec:
    """One upscaled problem, ready to solve.

    variant:   'PD' | 'DMD' | 'AD' | 'PD_delta'
    mean:      nodal M_Y(1/b) field (or M_Y(1/b_delta) for PD_delta)
    k2theta:   capacitary coefficient k^2 * Theta; required positive for DMD,
               absent (zero) otherwise
    """

    grid: Grid
    variant: str
    mean: np.ndarray | float = 1.0
    k2theta: float = 0.0
    u0: np.ndarray | float = 0.0
    f: SourceLike = None
    T: float = 0.25
    n_steps: int = 400

    def __post_init__(self):
        if self.variant not in ("PD", "DMD", "AD", "PD_delta"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.variant == "DMD" and not self.k2theta > 0:
            raise ValueError("DMD requires a positive capacitary coefficient")
        if self.variant in ("PD", "AD", "PD_delta") and self.k2theta != 0.0:
            raise ValueError(f"{self.variant} admits no capacitary term")
        if np.min(np.asarray(self.mean) + np.zeros(1)) <= 0:
            raise ValueError("effective mean must be strictly positive")

    def mean_field(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.mean, dtype=float), self.grid.shape)


def _run_v_form(spec: HomogenizedProblemSpec, store_every, tol) -> SolutionField:
    grid = spec.grid
    M = spec.mean_field()
    u0_arr = np.broadcast_to(np.asarray(spec.u0, dtype=float), grid.shape).astype(float)
    v0 = u0_arr / M
    dt = spec.T / spec.n_steps
    if store_every is None:
        store_every = max(1, spec.n_steps // 100)
    res = backward_euler(
        grid,
        mass=M,
        v0=v0,
        dt=dt,
        n_steps=spec.n_steps,
        source=_as_source_of_t(spec.f, grid),
        lam=spec.k2theta,
        tol=tol,
        store_every=store_every,
    )
    return SolutionField(
        grid=grid,
        times=res.times,
        u=[M * v for v in res.snapshots],
        b=1.0 / M,  # v = u / M
        meta={
            "variant": spec.variant,
            "k2theta": spec.k2theta,
            "dt": dt,
            "T": spec.T,
        },
    )


def solve_pd(
    spec: HomogenizedProblemSpec, store_every: int | None = None, tol: float = 1e-10
) -> SolutionField:
    """Pure diffusion: M dv/dt - Lap v = f, u0(.,0) = u0 by construction."""
    if spec.variant not in ("PD", "PD_delta"):
        raise ValueError("solve_pd expects a PD or PD_delta spec")
    return _run_v_form(spec, store_every, tol)


def solve_dmd(
    spec: HomogenizedProblemSpec, store_every: int | None = None, tol: float = 1e-10
) -> SolutionField:
    """Diffusion with mass deposition: adds the strange term k2theta * v."""
    if spec.variant != "DMD":
        raise ValueError("solve_dmd expects a DMD spec")
    return _run_v_form(spec, store_every, tol)


def ad_solution(
    grid: Grid,
    u0: np.ndarray | float,
    f: SourceLike = None,
    times: np.ndarray | None = None,
    T: float = 0.25,
    n_times: int = 101,
) -> SolutionField:
    """Absence of diffusion: F(x,t) = u0(x) + int_0^t f, trapezoid in time.

    Exact for sources linear in t; F(., 0) = u0 exactly.
    """
    if times is None:
        times = np.linspace(0.0, T, n_times)
    u0_arr = np.broadcast_to(np.asarray(u0, dtype=float), grid.shape).astype(float)
    src = _as_source_of_t(f, grid)
    snaps = [u0_arr.copy()]
    acc = np.zeros(grid.shape)
    for k in range(1, len(times)):
        dt = times[k] - times[k - 1]
        if src is not None:
            acc = acc + 0.5 * dt * (
                np.asarray(src(times[k - 1])) + np.asarray(src(times[k]))
            )
        snaps.append(u0_arr + acc)
    return SolutionField(
        grid=grid, times=np.asarray(times, dtype=float), u=snaps, b=1.0,
        meta={"variant": "AD", "T": float(times[-1])},
    )


def limiting_measure_density(
    sol: SolutionField, lam: np.ndarray | float, k: int | None = None
) -> np.ndarray | list[np.ndarray]:
    """m0(x,t) = u0(x,t) + lam(x) * int_0^t u0(x, tau) dtau (trapezoid).

    lam = k2theta / M_Y(1/b); with lam = 0 this is the bulk density itself.
    Pass k to get a single stored time, else the full stored series.
    """
    lam_arr = np.asarray(lam, dtype=float)
    out = []
    acc = np.zeros(sol.grid.shape)
    for j in range(len(sol.times)):
        if j > 0:
            dt = sol.times[j] - sol.times[j - 1]
            acc = acc + 0.5 * dt * (sol.u[j] + sol.u[j - 1])
        out.append(sol.u[j] + lam_arr * acc)
    if k is not None:
        return out[k]
    return out


def manufactured_source(
    grid: Grid,
    mean: np.ndarray | float,
    k2theta: float,
    v_star: Callable[[float], np.ndarray],
    dv_dt: Callable[[float], np.ndarray],
    neg_lap_v: Callable[[float], np.ndarray],
) -> Callable[[float], np.ndarray]:
    """f = M dv*/dt - Lap v* + k2theta v* for a smooth injected v*."""
    M = np.broadcast_to(np.asarray(mean, dtype=float), grid.shape)

    def f(t: float) -> np.ndarray:
        return M * dv_dt(t) + neg_lap_v(t) + k2theta * v_star(t)

    return f


def export_series_csv(sol: SolutionField, path, lam: np.ndarray | float | None = None) -> None:
    """Same schema as the fine-solver snapshot CSV, plus m0 when lam is given."""
    import csv

    grid = sol.grid
    mesh = grid.meshgrid()
    coords = [m.ravel(order="C") for m in mesh]
    b = np.broadcast_to(np.asarray(sol.b, dtype=float), grid.shape).ravel(order="C")
    m0_series = limiting_measure_density(sol, lam) if lam is not None else None
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        head = ["t", "node_index"] + [f"x{a + 1}" for a in range(grid.ndim)] + ["u", "v"]
        if m0_series is not None:
            head.append("m0")
        wr.writerow(head)
        for k, t in enumerate(sol.times):
            u = sol.u[k].ravel(order="C")
            m0 = m0_series[k].ravel(order="C") if m0_series is not None else None
            for i in range(u.size):
                row = (
                    [f"{t:.12e}", i]
                    + [f"{c[i]:.12e}" for c in coords]
                    + [f"{u[i]:.12e}", f"{u[i] * b[i]:.12e}"]
                )
                if m0 is not None:
                    row.append(f"{m0[i]:.12e}")
                wr.writerow(row)
