"""Entropy-corrected DGSEM for Burgers' equation with SIAC-filter corrections."""

from .analysis import ConvergenceTable, ErrorReport, burgers_exact, convergence_order, error_norms, mass_energy
from .basis import NodalBasis, QuadratureRule, RuleKind, gl_rule, lgl_rule
from .correction import (
    LOCAL_AVG,
    CorrectionKind,
    CorrectionMode,
    CorrectionReport,
    DissipationParams,
    artificial_viscosity,
    compute_correction,
    global_correction,
    local_correction,
    ls_blend,
    phi_dissipation,
    subcell_entropy_metric,
)
from .dg import (
    ADVECTION,
    BURGERS,
    Equation,
    FluxKind,
    SolutionField,
    dg_residual,
    entropy_flux_residual,
    fv_reference,
    numerical_entropy_flux,
    numerical_flux,
)
from .mesh import GlobalLayout, Mesh1D, Mesh2D, build_layout
from .siac import (
    FilterOperator,
    KernelSpec,
    assemble_filter,
    assemble_filter_1d,
    assemble_lsiac_2d,
    bspline,
    conservation_correction,
    kernel_coefficients,
    kernel_fourier,
    local_average_filter,
)
from .solver import RunResult, SemiDiscretization, run_solver
from .timeint import FE, RK44, SSPRK22, SSPRK33, RKTableau, get_tableau, integrate, relaxation_gamma, rrk_step

__version__ = "0.1.0"
