"""Simulation and large-deviation numerics for the open symmetric exclusion
process with creation/annihilation dynamics."""

from .density_contraction import (
    ContractionResult,
    density_rate,
    solve_optimal_drift,
    suboptimality_audit,
)
from .empirical import (
    CylinderObservable,
    conservation_residual_micro,
    local_average,
    local_equilibrium_statistic,
    pair_Q_gradient,
    pair_Q_measure,
    pair_site_measure,
)
from .grids import FieldGrid, GridSpec, TrajectoryGrid
from .hydro_pde import (
    energy,
    energy_variational_bound,
    l1_contraction_check,
    solve_hydro,
    weak_residual,
)
from .rate_functional import (
    RateBreakdown,
    conservation_residual,
    convex_decomposition_check,
    evaluate_I0_explicit,
    evaluate_J_GH,
    evaluate_J_GH_raw,
    initial_cost,
    phi,
    phi_legendre_oracle,
    recover_drifts,
)
from .rates import (
    BUILTIN_RATES,
    CylinderRate,
    boundary_density,
    build_cylinder_rate,
    check_assumptions,
    conductivity,
    macroscopic_coefficients,
    macroscopic_rates,
)
from .simulator import (
    EventLog,
    LatticeState,
    SimParams,
    SimResult,
    exact_tilted_moment,
    jump_rates,
    log_radon_nikodym,
    run,
    sample_initial,
)

__version__ = "0.1.0"
