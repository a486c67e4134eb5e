"""Extended-domain spectral collocation for 1D/2D elliptic problems and its stability diagnostics."""

from .geometry import (
    CollocationGrid,
    DomainError,
    ExtendedDomain,
    eigenvalue,
    eval_basis,
    eval_basis_derivative,
    make_grid,
)
from .linalg import SigmaExtremes, SingularMatrixError, invert, kron, norm, sigma_extremes, solve
from .operators import CollocationSystem, OperatorSpec, assemble, interp_basis_eval
from .solver import ConvergenceRecord, SpectralSolution, error_norms, evaluate_solution, solve_pde
from .stability import (
    BumpSpec,
    DecayFit,
    EvalGrid,
    StabilityReport,
    cardinal_decay_diagnostic,
    decay_profile,
    lagrange_values,
    lebesgue_constant,
    make_eval_grid,
    near_null_probe,
    peclet_sweep,
    physical_operator,
    stability_report,
    synthesis_sigma_min,
)

__version__ = "0.1.0"
