"""
Fine solver: conservation, positivity, and the contrast sup bound
=================================================================

Solve the inclusion problem at a fixed scale with a weakly diffusing ball
(delta = 0.01) and watch the built-in diagnostics: total mass is conserved
to solver tolerance, the density stays nonnegative, and the maximum never
exceeds the coefficient-contrast bound (sup b / inf b) * sup u0.
"""

import numpy as np

from fphom import Ball, CoefficientSpec, Grid, assemble_coefficient, build_inclusions
from fphom.fp_solver import energy_trace, mass_balance_residual, solve_fp

grid = Grid(shape=(33,) * 3, spacing=1.0 / 32)
geom = build_inclusions(grid, eps=0.5, eta=1.0, shape=Ball(0.25))
coeff = assemble_coefficient(geom, CoefficientSpec(kind="constant", value=1.0), eps=0.5, delta=0.01)

x = grid.meshgrid()[0]
u0 = 1.0 + 0.5 * np.cos(np.pi * x)

sol = solve_fp(coeff, u0=u0, T=0.1, n_steps=100)
d = sol.diagnostics

print(f"coefficient contrast sup b / inf b = {coeff.contrast:.0f}")
print(f"mass drift (f = 0):    {np.max(np.abs(mass_balance_residual(sol))):.2e}")
print(f"min of u over the run: {np.min(d.min_u):.2e}  (positivity)")
print(f"max of u over the run: {np.max(d.max_u):.4f}  vs sup bound {d.sup_bound_ref:.1f}")
print("energy monitors:", {k: f"{v:.4g}" for k, v in energy_trace(sol).items()})
