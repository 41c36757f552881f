"""Fokker-Planck diffusion through periodic arrays of weakly diffusing
inclusions: fine solvers, degeneration and homogenization limit problems,
capacitary cell problems, unfolding diagnostics, and the 1D counterexample.
"""

from .cell import (
    capacity_study,
    extrapolate_capacity,
    radial_capacity_oracle,
    solve_capacitary,
    solve_capacitary_octant,
    strange_term_coefficient,
)
from .coefficients import (
    CoefficientSpec,
    assemble_coefficient,
    evaluate_b_eps,
    harmonic_cell_mean,
    harmonic_cell_mean_delta,
    harmonic_mean_field,
)
from .degenerate import (
    interior_convergence_error,
    solve_degenerate,
    strip_mass,
    surface_flux_measure,
)
from .fp_solver import SolutionField, energy_trace, mass_balance_residual, solve_fp
from .geometry import (
    Ball,
    BoxShape,
    EtaRule,
    InclusionGeometry,
    ScalingRegime,
    build_inclusions,
    classify_regime,
    fractional_part,
    integer_part,
)
from .harness import (
    ConvergenceReport,
    commutation_report,
    run_scheme_one,
    run_scheme_two,
)
from .homogenized import (
    HomogenizedProblemSpec,
    ad_solution,
    limiting_measure_density,
    solve_dmd,
    solve_pd,
)
from .oned import (
    TwoPhaseSpec,
    abel_identity_residual,
    explicit_interface_values,
    run_blowup,
    solve_two_phase_1d,
)
from .pde_core import Grid, backward_euler, neg_laplacian, solve_spd
from .scenario import ScenarioConfig, load_scenario, save_scenario
from .unfolding import cell_average, unfold, unfold_small_holes

__version__ = "0.1.0"
