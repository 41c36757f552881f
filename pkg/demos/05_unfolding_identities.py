"""
Discrete unfolding operators and their exact identities
=======================================================

Because the micro grid is the restriction of the macro grid to one cell,
the algebra of the unfolding operators holds exactly at the discrete level:
the product rule, the average identity, the zero cell-mean of the
oscillation part, and the gradient zoom identity for the small-holes
operator.
"""

import numpy as np

from fphom.pde_core import Grid
from fphom.unfolding import (
    cell_average,
    cell_means,
    grad_faces,
    micro_gradient,
    oscillation,
    unfold,
    unfold_faces,
    unfold_small_holes,
)

rng = np.random.default_rng(0)
grid = Grid(shape=(33,) * 2, spacing=1.0 / 32)
w1, w2 = rng.random(grid.shape), rng.random(grid.shape)
eps, eta = 0.25, 0.5

t1, t2 = unfold(grid, w1, eps), unfold(grid, w2, eps)
t12 = unfold(grid, w1 * w2, eps)
print("product rule  max |T(w1 w2) - T(w1) T(w2)| =",
      np.max(np.abs(t12.values - t1.values * t2.values)))

means = cell_means(t1)
nodal = cell_average(grid, w1, eps)
print("average identity: per-cell means reproduced on nodes:",
      np.allclose(nodal[8, 8], means[np.ravel_multi_index((1, 1), t1.n_axis_cells)]))

z = oscillation(t1)
wm = t1.micro_trapezoid_weights()
print("oscillation cell means:", np.max(np.abs(np.sum(z * wm, axis=(1, 2)))))

uf = unfold_small_holes(grid, w1, eps, eta)
lhs = unfold_faces(grid, grad_faces(grid, w1), eps)
rhs = micro_gradient(uf)
print("gradient zoom identity max dev:",
      max(np.max(np.abs(a - b)) for a, b in zip(lhs, rhs)))

print("L1 bound: int |T_eps_eta(w)| <= eta^-n int |w|:",
      uf.integral_abs() <= grid.integrate(np.abs(w1)) / eta**2 + 1e-12)
