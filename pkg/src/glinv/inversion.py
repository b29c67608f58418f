"""Gel'fand-Levitan style inversion on the lattice.

Two independent routes produce the triangular transform kernel:

* ``solve_gl`` assembles the driving kernel difference and solves one small
  linear system per node row;
* ``gram_schmidt_oracle`` orthogonalizes the reference solutions, node by
  node, in the inner product weighted by the new spectral measure.

Both must agree; the linear route is the workhorse, the orthogonalization is
the uniqueness statement made executable.

Normalization.  The row systems fix the leading coefficient of every
transform row to one.  At finite step the true solutions of the recovered
operator are proportional, not equal, to these unit-leading combinations:
stepping the recurrence across node j multiplies the leading coefficient by
(1 - step^2 u(x_j)) / (1 - step^2 u_ref(x_j)), so each row carries an
accumulated scale that tends to one only in the continuum limit.  The scale
is fixed by the weighted normalization of the row (its squared norm in the
new measure must be 1/step) and is stored per row in ``row_scales``;
consumers that need genuine solutions (synthesis, cross checks, edge
continuation) apply it, while the recovery relations and the continuum-limit
formulas consume the unit-leading entries directly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import tolerances as tol
from .errors import DegenerateDataError, NoninvertibleDataError
from .forward import RegularSolutionTable, SpectralData, regular_solutions
from .operators import Grid, JacobiOperator


@dataclass(frozen=True)
class QKernel:
    """Difference of weighted bilinear sums of reference solutions.

    ``q[m-1, n-1]`` holds the value at nodes (x_m, x_n); ``q_edge[n-1]`` is
    the continuation to (x_{N+1}, x_n), needed to extend the kernel past the
    last interior node.
    """

    grid: Grid
    q: np.ndarray
    q_edge: np.ndarray

    def __post_init__(self):
        n = self.grid.n_interior
        if self.q.shape != (n, n) or self.q_edge.shape != (n,):
            raise ValueError("driving kernel has wrong shape")
        scale = max(float(np.max(np.abs(self.q))), 1e-300)
        asym = float(np.max(np.abs(self.q - self.q.T)))
        if asym > tol.Q_SYMMETRY * scale:
            raise ValueError(f"driving kernel asymmetric: {asym:.3e} vs scale {scale:.3e}")
        self.q.flags.writeable = False
        self.q_edge.flags.writeable = False

    @property
    def max_abs(self) -> float:
        return float(np.max(np.abs(self.q)))


@dataclass(frozen=True)
class TransformKernel:
    """Strictly lower-triangular transform coefficients plus conventions.

    ``k_lower[m-1, n-1]`` is the unit-leading coefficient at (x_m, x_n) for
    n < m; the array is zero on and above the diagonal.  ``k_diag`` carries
    the formal diagonal extension (nearest-subdiagonal copy by default).
    ``row_scales`` holds the per-row solution scale (see module docstring),
    with one extra entry for the boundary continuation row.  ``k_edge_row``
    stores the weighted cross sums of the continued solutions with the
    reference ones at (x_{N+1}, x_n); its last two entries feed the boundary
    step of the coefficient recovery.
    """

    grid: Grid
    k_lower: np.ndarray
    k_diag: np.ndarray
    k_edge_row: np.ndarray
    row_scales: np.ndarray

    def __post_init__(self):
        for arr in (self.k_lower, self.k_diag, self.k_edge_row, self.row_scales):
            arr.flags.writeable = False

    @property
    def n(self) -> int:
        return self.grid.n_interior

    @property
    def max_abs(self) -> float:
        parts = [np.abs(self.k_lower).max(), np.abs(self.k_diag).max(),
                 np.abs(self.k_edge_row).max()]
        return float(max(parts))

    def entry(self, m: int, n: int) -> float:
        """Kernel value at 1-based node pair (m, n), n <= m <= N+1."""
        if not 1 <= n <= m <= self.n + 1:
            raise IndexError(f"kernel entry ({m}, {n}) out of range")
        if m == self.n + 1:
            return float(self.k_edge_row[n - 1])
        if m == n:
            return float(self.k_diag[n - 1])
        return float(self.k_lower[m - 1, n - 1])

    def edge_row_unit(self) -> np.ndarray:
        """Boundary continuation row in the unit-leading normalization."""
        return self.k_edge_row / self.row_scales[-1]

    def full(self) -> np.ndarray:
        """Dense N x N array with the diagonal convention filled in."""
        return self.k_lower + np.diag(self.k_diag)


@dataclass(frozen=True)
class InversionProblem:
    """A known reference system plus the spectral data to move to."""

    reference: JacobiOperator
    reference_data: SpectralData
    target_data: SpectralData

    def __post_init__(self):
        n = self.reference.n
        if self.reference_data.n != n or self.target_data.n != n:
            raise ValueError("reference and target data must share the grid size")
        if self.reference_data.orientation != self.target_data.orientation:
            raise ValueError("reference and target data must share the orientation")

    @property
    def grid(self) -> Grid:
        return self.reference.grid

    @property
    def orientation(self) -> str:
        return self.target_data.orientation

    def require_left(self) -> None:
        if self.orientation != "left":
            raise ValueError(
                "direct inversion works on left-oriented data; "
                "right-oriented problems go through the reflection front end"
            )


def _diagonal_extension(k_lower: np.ndarray, k_edge_unit: np.ndarray, mode: str) -> np.ndarray:
    """Formal diagonal values K(x_n, x_n).

    "copy" takes the nearest subdiagonal entry, which keeps the diagonal
    first difference an O(step) object and the continuum diagonal derivative
    a plain forward difference.  "extrapolate" continues linearly toward the
    diagonal instead, for sensitivity studies.
    """
    n = k_lower.shape[0]
    diag = np.zeros(n)
    if n == 1:
        diag[0] = k_edge_unit[0]
        return diag
    if mode == "copy":
        for i in range(n - 1):
            diag[i] = k_lower[i + 1, i]
        diag[n - 1] = k_lower[n - 1, n - 2]
    elif mode == "extrapolate":
        for i in range(n - 1):
            below = k_lower[i + 2, i] if i + 2 < n else k_edge_unit[i]
            diag[i] = 2.0 * k_lower[i + 1, i] - below
        if n >= 3:
            diag[n - 1] = 2.0 * k_lower[n - 1, n - 2] - k_lower[n - 1, n - 3]
        else:
            diag[n - 1] = k_lower[n - 1, n - 2]
    else:
        raise ValueError(f"unknown diagonal mode {mode!r}")
    return diag


def build_q(problem: InversionProblem) -> QKernel:
    """Driving kernel from reference solutions at both level sets.

    Entry (m, n) is the weighted sum of reference-solution products over the
    target levels minus the same sum over the reference levels.  Rows extend
    to the boundary node so that the kernel's continuation row can be solved
    for.
    """
    problem.require_left()
    ref = problem.reference
    target = problem.target_data
    base = problem.reference_data
    phi_t = regular_solutions(ref, target.levels).values[:, 1:]    # x_1 .. x_{N+1}
    phi_r = regular_solutions(ref, base.levels).values[:, 1:]
    wt = target.weights ** 2
    wr = base.weights ** 2
    full = (phi_t.T * wt) @ phi_t[:, :-1] - (phi_r.T * wr) @ phi_r[:, :-1]
    return QKernel(problem.grid, q=np.ascontiguousarray(full[:-1]), q_edge=full[-1])


def _row_scale_from_norm(norm_sq_step: float, row: int) -> float:
    # norm_sq_step = step * <row, row> in the new measure; must be positive.
    if norm_sq_step <= 0.0 or not np.isfinite(norm_sq_step):
        raise DegenerateDataError(
            f"transform row {row} has nonpositive weighted norm {norm_sq_step!r}; "
            "spectral data is not realizable"
        )
    return 1.0 / np.sqrt(norm_sq_step)


def solve_gl(q: QKernel, diag_mode: str = "copy", info: dict | None = None) -> TransformKernel:
    """Transform kernel from the row-by-row linear systems.

    Row m solves (I + step * Q_sub) k = -q_row over the leading (m-1) nodes;
    the residual of every row must stay below GL_ROW_RESIDUAL * (1 + max|Q|),
    and a 1-norm condition number above GL_CONDITION_MAX raises
    NoninvertibleDataError naming the row.  Row scales come from the same
    data: step * <row, row> = 1 + step * (q_mm + step * sum_p k_p q_pm).
    ``info``, when given, receives the worst condition number and row
    residual seen.
    """
    n = q.grid.n_interior
    step = q.grid.step
    qmat = q.q
    scale = 1.0 + q.max_abs
    k_lower = np.zeros((n, n))
    edge_unit = np.zeros(n)
    row_scales = np.ones(n + 1)
    max_condition = 1.0
    max_residual = 0.0
    for m in range(2, n + 2):
        size = m - 1
        a = np.eye(size) + step * qmat[:size, :size]
        rhs = -(q.q_edge[:size] if m == n + 1 else qmat[m - 1, :size])
        try:
            condition = float(np.linalg.cond(a, 1))
        except np.linalg.LinAlgError:
            condition = float("inf")
        if not np.isfinite(condition) or condition > tol.GL_CONDITION_MAX:
            raise NoninvertibleDataError(m, condition)
        row = np.linalg.solve(a, rhs)
        residual = float(np.max(np.abs(a @ row - rhs)))
        if residual > tol.GL_ROW_RESIDUAL * scale:
            raise NoninvertibleDataError(m, condition)
        max_condition = max(max_condition, condition)
        max_residual = max(max_residual, residual)
        if m == n + 1:
            edge_unit = row
        else:
            k_lower[m - 1, :size] = row
            norm_sq = 1.0 + step * (
                qmat[m - 1, m - 1] + step * float(row @ qmat[:size, m - 1])
            )
            row_scales[m - 1] = _row_scale_from_norm(norm_sq, m)
    # The continued row vanishes at the target levels, so its own norm is
    # zero; its scale is inherited from the last interior row because the
    # outer coupling is pinned to the reference one.
    row_scales[n] = row_scales[n - 1]
    k_diag = _diagonal_extension(k_lower, edge_unit, diag_mode)
    if info is not None:
        info["max_condition"] = max_condition
        info["max_row_residual"] = max_residual
    return TransformKernel(q.grid, k_lower, k_diag, row_scales[n] * edge_unit, row_scales)


def gram_schmidt_oracle(
    problem: InversionProblem,
    diag_mode: str = "copy",
    rows: int | None = None,
) -> TransformKernel:
    """Transform kernel by direct orthogonalization in the new measure.

    Node vectors are the reference solutions sampled over the target levels;
    the inner product weighs components by the squared target weights.  Each
    new vector keeps a unit leading coefficient and is made orthogonal to
    all previous ones; the expansion coefficients over the original vectors,
    divided by the step, are the kernel row, and the row scale is read off
    the vector's weighted norm.  ``rows`` limits how many nodes are
    orthogonalized (the remaining rows stay zero), which realizes the
    intermediate block transformation.
    """
    problem.require_left()
    ref = problem.reference
    n = problem.grid.n_interior
    step = problem.grid.step
    limit = n if rows is None else min(rows, n)
    phi = regular_solutions(ref, problem.target_data.levels).values[:, 1:].T
    # phi[m] is the node-(m+1) vector over the target-level index; the last
    # row is the boundary continuation.
    weight = problem.target_data.weights ** 2

    def inner(a, b):
        return float(np.sum(weight * a * b))

    coeff = np.zeros((n + 1, n))
    basis = np.zeros((n + 1, n))
    norms = np.zeros(n + 1)
    k_lower = np.zeros((n, n))
    edge_unit = np.zeros(n)
    row_scales = np.ones(n + 1)
    n_rows = limit + 1 if limit == n else limit
    for m in range(n_rows):
        vec = phi[m].copy()
        crow = np.zeros(n)
        for j in range(min(m, n)):
            beta = inner(vec, basis[j]) / norms[j]
            vec -= beta * basis[j]
            crow -= beta * coeff[j]
            crow[j] -= beta                 # unit leading coefficient of basis[j]
        basis[m] = vec
        norms[m] = inner(vec, vec)
        coeff[m] = crow
        if m < n:
            if norms[m] <= 1e-13 * max(inner(phi[m], phi[m]), 1e-300):
                raise DegenerateDataError(
                    f"orthogonalized vector at node {m + 1} has numerically zero norm"
                )
            k_lower[m, :m] = crow[:m] / step
            row_scales[m] = _row_scale_from_norm(step * norms[m], m + 1)
        else:
            edge_unit = crow / step
    if limit == n:
        row_scales[n] = row_scales[n - 1]
    k_diag = _diagonal_extension(k_lower, edge_unit, diag_mode)
    return TransformKernel(
        problem.grid, k_lower, k_diag, row_scales[n] * edge_unit, row_scales
    )


def transformed_solutions(
    kernel: TransformKernel, ref: JacobiOperator, energies
) -> RegularSolutionTable:
    """New regular solutions at the requested energies.

    Row m scales the reference solution at x_m plus the kernel-weighted
    combination of reference solutions at earlier nodes; the initial values
    0 and step are untouched (the first row scale is one).  The boundary
    value at x_{N+1} comes from the continuation row, so at the target
    levels it vanishes to numerical precision.
    """
    energies = np.atleast_1d(np.asarray(energies, float))
    base = regular_solutions(ref, energies)
    n = ref.n
    step = ref.grid.step
    phi0 = base.values[:, 1:n + 1]                          # x_1 .. x_N, (n_e, n)
    values = base.values.copy()
    scales = kernel.row_scales
    values[:, 1:n + 1] = scales[:n] * (
        phi0 + step * (phi0 @ kernel.k_lower.T)
    )
    values[:, n + 1] = scales[n] * base.values[:, n + 1] + step * (
        phi0 @ kernel.k_edge_row
    )
    return RegularSolutionTable(ref.grid, energies, values)


def k_cross_check(kernel: TransformKernel, problem: InversionProblem) -> float:
    """Largest deviation of the kernel from its cross-sum representation.

    The identity writes each transform coefficient as minus the weighted sum
    of products of new solutions (at target levels) with reference solutions,
    plus the same sum over the reference levels.  The sums involve genuine
    solutions, so they reproduce the kernel rows in the solution
    normalization; the return value is the max absolute deviation over n < m.
    """
    problem.require_left()
    ref = problem.reference
    n = problem.grid.n_interior
    new_t = transformed_solutions(kernel, ref, problem.target_data.levels).interior
    new_r = transformed_solutions(kernel, ref, problem.reference_data.levels).interior
    ref_t = regular_solutions(ref, problem.target_data.levels).interior
    ref_r = regular_solutions(ref, problem.reference_data.levels).interior
    wt = problem.target_data.weights ** 2
    wr = problem.reference_data.weights ** 2
    cross = -(new_t.T * wt) @ ref_t + (new_r.T * wr) @ ref_r
    scaled = kernel.row_scales[:n, None] * kernel.k_lower
    rows, cols = np.tril_indices(n, k=-1)
    if rows.size == 0:
        return 0.0
    return float(np.max(np.abs(scaled[rows, cols] - cross[rows, cols])))


def orthonormality_defect(kernel: TransformKernel, problem: InversionProblem) -> float:
    """Defect of the restored weighted orthonormality of the new solutions.

    Off-diagonal entries vanish by construction; the diagonal entries encode
    the row normalization, so together this measures how well the data is
    realized by an actual solution set.
    """
    problem.require_left()
    phi = transformed_solutions(
        kernel, problem.reference, problem.target_data.levels
    ).interior
    w2 = problem.target_data.weights ** 2
    gram = problem.grid.step * (phi.T * w2) @ phi
    return float(np.max(np.abs(gram - np.eye(problem.grid.n_interior))))


def truncate_kernel(kernel: TransformKernel, rows: int) -> TransformKernel:
    """Kernel of the intermediate transformation that stops after ``rows`` nodes.

    Rows above the cutoff vanish, including the continuation row: past the
    cutoff the system is still the reference one.
    """
    n = kernel.n
    if not 1 <= rows <= n:
        raise ValueError(f"rows must be in 1..{n}")
    k_lower = kernel.k_lower.copy()
    k_lower[rows:, :] = 0.0
    scales = kernel.row_scales.copy()
    scales[rows:] = 1.0
    k_edge = np.zeros(n)
    k_diag = _diagonal_extension(k_lower, k_edge, "copy")
    return TransformKernel(kernel.grid, k_lower, k_diag, k_edge, scales)


def renormalize_weights(
    weights: np.ndarray, step: float, fixed: set[int] | None = None
) -> np.ndarray:
    """Scale the non-fixed weights by one positive factor to restore the sum rule.

    ``fixed`` holds 1-based indices whose values must stay exactly as given
    (the explicitly perturbed ones).  If every weight is fixed, all of them
    are rescaled uniformly instead.
    """
    weights = np.asarray(weights, float).copy()
    fixed = fixed or set()
    mask = np.ones(weights.size, bool)
    for idx in fixed:
        mask[idx - 1] = False
    target = 1.0 / step ** 3
    held = float(np.sum(weights[~mask] ** 2))
    free = float(np.sum(weights[mask] ** 2))
    if free <= 0.0:
        weights *= np.sqrt(target / float(np.sum(weights ** 2)))
        return weights
    remainder = target - held
    if remainder <= 0.0:
        raise ValueError(
            "fixed weights already exceed the sum rule; cannot renormalize the rest"
        )
    weights[mask] *= np.sqrt(remainder / free)
    return weights


def dump_kernel_csv(kernel: TransformKernel, path) -> None:
    """Write rows "m,n,K" for n <= m with 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "n", "K"])
        for m in range(1, kernel.n + 1):
            for n in range(1, m + 1):
                writer.writerow([m, n, f"{kernel.entry(m, n):.17g}"])
