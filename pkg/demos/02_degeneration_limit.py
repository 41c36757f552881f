"""
The degeneration limit delta -> 0 and the interface mass deposit
================================================================

As the diffusivity inside a single centered ball vanishes, the fine
solution approaches the degenerate limit system: the outer problem with
b*u = 0 pinned on the interface, the inner ODE u = F, and a surface
measure collecting the mass that piles up against the inclusion boundary.
The strip mass of the fine solutions converges to that measure.
"""

import numpy as np

from fphom import Ball, CoefficientSpec, Grid, assemble_coefficient, build_inclusions
from fphom.degenerate import solve_degenerate, strip_mass, surface_flux_measure
from fphom.fp_solver import solve_fp

grid = Grid(shape=(33,) * 3, spacing=1.0 / 32)
geom = build_inclusions(grid, eps=1.0, eta=1.0, shape=Ball(0.25))
spec = CoefficientSpec(kind="constant", value=1.0)
T, steps = 0.2, 160

deg = solve_degenerate(geom, b_eps=1.0, u0=1.0, T=T, n_steps=steps)
mu_T = surface_flux_measure(deg, T, "one")
W = grid.node_weights()
outer_T = float(np.sum((W * deg.u[-1])[geom.outer_mask]))
inner_T = float(np.sum((W * deg.u[-1])[geom.inclusion_mask]))
print(f"degenerate limit at T={T}: outer {outer_T:.4f} + inner {inner_T:.4f} "
      f"+ deposit {mu_T:.4f} = {outer_T + inner_T + mu_T:.6f} (initial 1.0)")

print("\n delta   |u_fine - u_deg| outer   strip mass (sigma = delta^(1/8))")
for delta in (1e-1, 1e-2, 1e-3):
    coeff = assemble_coefficient(geom, spec, eps=1.0, delta=delta)
    fine = solve_fp(coeff, u0=1.0, T=T, n_steps=steps)
    diff = fine.final() - deg.u[-1]
    dist = float(np.sqrt(np.sum((W * diff * diff)[geom.outer_mask])))
    sm = strip_mass(fine.final(), geom, sigma=delta ** 0.125)
    print(f" {delta:5.0e}        {dist:.5f}              {sm:.5f}  (target {inner_T + mu_T:.5f})")
