"""Truss topology design under multi-harmonic loads by peak-power
minimization with a penalized semidefinite relaxation."""

from .analysis import (
    LoadNotCarried,
    SteadyState,
    eigenfrequencies,
    mass,
    mass_utilization,
    peak_power,
    peak_power_sampled,
    solve_equilibrium,
    trace_gap,
)
from .conic import ConicProblem, ConicProblemBuilder
from .fem import (
    ElementData,
    GroundStructure,
    TrussModel,
    assemble,
    dynamic_stiffness,
    element_matrices,
    grid_ground_structure,
    heidari_ground_structure,
)
from .loads import HarmonicLoad, harmonic_base, rotating_load, square_wave_load
from .pipeline import SolveOutcome, solve_problem
from .sdp_builder import (
    RelaxationSolution,
    build_compliance_sdp,
    build_F,
    build_penalized_relaxation,
    build_single_harmonic_sdp,
    c_selector_matrix,
    extract_relaxation,
    herm_to_real,
)
from .sensitivity import (
    GradientReport,
    finite_difference_grad,
    inner_value_grad,
    kkt_residual,
    peak_power_grad,
)
from .solver_backend import SolveOptions, SolveReport, solve
from .trigpoly import TrigPoly, certify_nonneg, gram_to_coeffs, lambda_matrix, sos_extract

__version__ = "0.1.0"
