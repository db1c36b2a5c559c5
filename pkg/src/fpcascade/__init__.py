"""Perturbative solver for 1-D Fokker-Planck equations with constant diffusion.

The drift potential carries a small parameter; the density is obtained from an
action expansion solved order by order, cross-validated against closed forms,
a direct finite-difference integration and Euler-Maruyama sampling.
"""

from .analysis import field_distance, scaling_order_fit, slice_mass, slice_moments
from .errors import ConfigError, InvariantViolation, SolverError, TransformOverflowError
from .hierarchy import (
    advance_term,
    analytic_expansion,
    assemble_density,
    cascade_residual,
    cascade_source,
    s0_closed_form,
    solve_expansion,
)
from .model import (
    ActionExpansion,
    DensityField,
    DriftSpec,
    Grid,
    RunConfig,
    ScalarField,
    linear_time_modulated,
    quadratic_ou,
    validate_config,
    zero_drift,
)
from .oracles import (
    ModulationV,
    example1_density_exact,
    example1_s1,
    example1_s2,
    log_resummation_gap,
    ou_density_exact,
    ou_density_pert,
    ou_s1,
    ou_s2,
    w0_diffusion,
)
from .reference import SampleEnsemble, density_from_samples, em_simulate, fp_fd_solve
from .transform import (
    effective_potential,
    effective_potential_order,
    from_wavefunction,
    to_wavefunction,
)

__version__ = "0.1.0"
