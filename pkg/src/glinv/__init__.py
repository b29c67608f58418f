"""Inverse eigenvalue problem for discrete Sturm-Liouville (Jacobi) operators.

The package reconstructs a symmetric tridiagonal operator with
nearest-neighbour coupling from its eigenvalues and spectral weight factors,
via weighted orthogonalization of the reference solutions (the lattice form
of the Gel'fand-Levitan procedure), and empirically verifies the continuum
limit of the construction: the merging of the diagonals into a local
potential, the factor-two diagonal-derivative formula, the characteristic
second-order relation for the kernel, and right-edge inversion by
reflection.
"""

from .errors import (
    ConvergenceError,
    DegenerateDataError,
    DegenerateSpectrumError,
    FormatError,
    GlinvError,
    InconsistentEigensystemError,
    NoninvertibleDataError,
    NonTridiagonalSynthesisError,
    RecursionDegenerateError,
    SingularEdgeError,
    SingularRecurrenceError,
)
from .operators import (
    Grid,
    JacobiOperator,
    assemble,
    free_well,
    load_operator,
    reflect,
    save_operator,
)
from .forward import (
    EigenSystem,
    RegularSolutionTable,
    SpectralData,
    eigensolve,
    extract_spectral_data,
    load_spectral_data,
    parseval_defect,
    regular_solution,
    regular_solutions,
    save_spectral_data,
)
from .inversion import (
    InversionProblem,
    QKernel,
    TransformKernel,
    build_q,
    dump_kernel_csv,
    gram_schmidt_oracle,
    k_cross_check,
    orthonormality_defect,
    renormalize_weights,
    solve_gl,
    transformed_solutions,
    truncate_kernel,
)
from .recovery import (
    RecoveredSystem,
    extend_solution_beyond_edge,
    recover_recursive,
    run_inversion,
    synthesize_operator,
)
from .continuum import (
    Perturbation,
    RefinementStudy,
    StudyResult,
    comparison_mesh,
    diagonal_derivative,
    effective_potential,
    free_well_problem,
    goursat_residual,
    invert_right_edge,
    run_refinement_study,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DegenerateDataError",
    "DegenerateSpectrumError",
    "EigenSystem",
    "FormatError",
    "GlinvError",
    "Grid",
    "InconsistentEigensystemError",
    "InversionProblem",
    "JacobiOperator",
    "NoninvertibleDataError",
    "NonTridiagonalSynthesisError",
    "Perturbation",
    "QKernel",
    "RecoveredSystem",
    "RecursionDegenerateError",
    "RefinementStudy",
    "RegularSolutionTable",
    "SingularEdgeError",
    "SingularRecurrenceError",
    "SpectralData",
    "StudyResult",
    "TransformKernel",
    "assemble",
    "build_q",
    "comparison_mesh",
    "diagonal_derivative",
    "dump_kernel_csv",
    "effective_potential",
    "eigensolve",
    "extend_solution_beyond_edge",
    "extract_spectral_data",
    "free_well",
    "free_well_problem",
    "goursat_residual",
    "gram_schmidt_oracle",
    "invert_right_edge",
    "k_cross_check",
    "load_operator",
    "load_spectral_data",
    "orthonormality_defect",
    "parseval_defect",
    "recover_recursive",
    "reflect",
    "regular_solution",
    "regular_solutions",
    "renormalize_weights",
    "run_inversion",
    "run_refinement_study",
    "save_operator",
    "save_spectral_data",
    "solve_gl",
    "synthesize_operator",
    "transformed_solutions",
    "truncate_kernel",
]
