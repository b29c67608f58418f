"""Central table of default numerical tolerances.

Every threshold used by the library lives here so that runs are reproducible
and the CLI can report which defaults were overridden.
"""

# Eigensolver: residual ||H psi - E psi|| per pair, relative to ||H||.
EIGEN_RESIDUAL = 1e-10

# Step-weighted Gram matrix of an eigensystem must match identity this well.
EIGEN_GRAM = 1e-10

# Relative gap under which two levels are treated as degenerate (input error).
DEGENERATE_GAP = 1e-12

# Weighted sum rule for spectral weights, relative.
WEIGHT_SUM_RULE = 1e-8

# Symmetry of the driving kernel, relative to its largest entry.
Q_SYMMETRY = 1e-12

# Per-row residual of the inversion linear systems, times (1 + max|Q|).
GL_ROW_RESIDUAL = 1e-10

# 1-norm condition number above which a row system is rejected.
GL_CONDITION_MAX = 1e12

# Entrywise agreement between the linear-solve and orthogonalization routes,
# times (1 + max|K|).
ORACLE_AGREEMENT = 1e-8

# Orthonormality defect of the transformed solutions (includes the diagonal).
ORTHONORMALITY_DEFECT = 1e-6

# Off-band leakage of the synthesized operator, relative to ||H||.
SYNTHESIS_LEAKAGE = 1e-6

# Default round-trip comparison tolerance for recovered coefficients.
ROUNDTRIP = 1e-5

# Smallest allowed |1 - step^2 * u| in recurrence denominators.
RECURRENCE_DENOMINATOR = 1e-10

# 2x2 recursion subsystem determinant guard, relative to its row scale.
RECURSION_DET_GUARD = 1e-10

# Mirror (left vs reflected-right) agreement.
MIRROR = 1e-6

DEFAULTS = {
    "eigen_residual": EIGEN_RESIDUAL,
    "eigen_gram": EIGEN_GRAM,
    "degenerate_gap": DEGENERATE_GAP,
    "weight_sum_rule": WEIGHT_SUM_RULE,
    "q_symmetry": Q_SYMMETRY,
    "gl_row_residual": GL_ROW_RESIDUAL,
    "gl_condition_max": GL_CONDITION_MAX,
    "oracle_agreement": ORACLE_AGREEMENT,
    "orthonormality_defect": ORTHONORMALITY_DEFECT,
    "synthesis_leakage": SYNTHESIS_LEAKAGE,
    "roundtrip": ROUNDTRIP,
    "recurrence_denominator": RECURRENCE_DENOMINATOR,
    "recursion_det_guard": RECURSION_DET_GUARD,
    "mirror": MIRROR,
}
