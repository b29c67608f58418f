"""Step-refinement studies of the continuum-limit claims.

As the step shrinks, the three diagonals merge into one local potential
V + 2u, the kernel's diagonal derivative reproduces the potential change
with a factor of two, the kernel satisfies a characteristic (Goursat-type)
second-order relation to O(step), and right-edge data can be inverted by
reflection.  Nothing here assumes a closed-form limit; convergence is
measured between successive refinements on a fixed comparison mesh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GlinvError
from .forward import SpectralData, eigensolve, extract_spectral_data
from .inversion import InversionProblem, TransformKernel, renormalize_weights
from .operators import Grid, JacobiOperator, free_well, reflect
from .recovery import RecoveredSystem, run_inversion

COMPARISON_MESH_POINTS = 32


def effective_potential(op: JacobiOperator) -> np.ndarray:
    """Local potential the diagonals merge into: v + 2u, edge value at x_N."""
    coupling = np.append(op.u, op.u_edge)
    return op.v + 2.0 * coupling


def diagonal_derivative(kernel: TransformKernel) -> np.ndarray:
    """Twice the forward difference of the kernel diagonal, per node x_1..x_{N-1}."""
    step = kernel.grid.step
    return 2.0 * np.diff(kernel.k_diag) / step


def goursat_residual(
    kernel: TransformKernel, recovered: JacobiOperator, ref: JacobiOperator
) -> float:
    """Discrete residual of the characteristic relation for the kernel.

    At interior lattice pairs the difference of the two effective potentials
    times the kernel should match the difference of the second differences
    of the kernel in its two arguments; the kernel is extended by zero at
    the left corner (the anchor value).  Pairs are kept three or more
    columns below the diagonal so that every stencil entry is a genuine
    strictly-lower value: the formal diagonal extension is consistent for
    first differences only, and the first two subdiagonals carry lattice
    structure with no pointwise continuum meaning.  Needs at least 6
    interior nodes.  Returns the largest absolute residual divided by
    (1 + max|K|).
    """
    n = kernel.n
    if n < 6:
        raise ValueError("need at least 6 interior nodes for the interior residual")
    step = kernel.grid.step
    v_new = effective_potential(recovered)
    v_ref = effective_potential(ref)
    kf = kernel.full()

    def kv(i, j):
        if j < 1 or i < 1 or i > n or j > i:
            return 0.0
        return kf[i - 1, j - 1]

    worst = 0.0
    inv_step2 = 1.0 / step ** 2
    for m in range(5, n):
        for col in range(2, m - 2):
            d2x = (kv(m + 1, col) - 2.0 * kv(m, col) + kv(m - 1, col)) * inv_step2
            d2y = (kv(m, col + 1) - 2.0 * kv(m, col) + kv(m, col - 1)) * inv_step2
            res = (v_new[m - 1] - v_ref[col - 1]) * kv(m, col) - (d2x - d2y)
            worst = max(worst, abs(res))
    return worst / (1.0 + kernel.max_abs)


@dataclass(frozen=True)
class Perturbation:
    """Continuum-anchored change of spectral data.

    ``level_shifts`` maps 1-based mode indices to absolute shifts added to
    the discrete level of the same index; ``weight_factors`` maps indices to
    multiplicative factors on the weights.  The untouched weights are then
    rescaled by one common factor to restore the sum rule, so the same
    physical perturbation applies at every grid size.
    """

    level_shifts: dict = field(default_factory=dict)
    weight_factors: dict = field(default_factory=dict)

    def __post_init__(self):
        for mapping, kind in ((self.level_shifts, "level"), (self.weight_factors, "weight")):
            for idx, value in mapping.items():
                if not isinstance(idx, int) or idx < 1:
                    raise ValueError(f"{kind} index {idx!r} must be a positive integer")
                if not math.isfinite(float(value)):
                    raise ValueError(f"{kind} value for index {idx} must be finite")
        for idx, factor in self.weight_factors.items():
            if float(factor) <= 0.0:
                raise ValueError(f"weight factor for index {idx} must be positive")

    @property
    def max_mode(self) -> int:
        indices = list(self.level_shifts) + list(self.weight_factors)
        return max(indices) if indices else 0

    @property
    def is_trivial(self) -> bool:
        return not self.level_shifts and not self.weight_factors

    def apply(self, data: SpectralData) -> SpectralData:
        """Perturbed data on the same grid; level order is restored by sorting
        the (level, weight) pairs, which every spectral sum is blind to."""
        if self.max_mode > data.n:
            raise ValueError(
                f"perturbation touches mode {self.max_mode} but data has {data.n}"
            )
        levels = np.array(data.levels, float)
        weights = np.array(data.weights, float)
        for idx, shift in self.level_shifts.items():
            levels[idx - 1] += float(shift)
        fixed = set()
        for idx, factor in self.weight_factors.items():
            weights[idx - 1] *= float(factor)
            fixed.add(idx)
        weights = renormalize_weights(weights, data.grid.step, fixed)
        order = np.argsort(levels, kind="stable")
        return SpectralData(data.grid, levels[order], weights[order], data.orientation)

    def preserves_order(self, data: SpectralData) -> bool:
        levels = np.array(data.levels, float)
        for idx, shift in self.level_shifts.items():
            levels[idx - 1] += float(shift)
        return bool(np.all(np.diff(levels) > 0))


def free_well_problem(n: int, perturbation: Perturbation) -> InversionProblem:
    """Free-well reference with its own spectral data perturbed as the target."""
    ref = free_well(n)
    base = extract_spectral_data(eigensolve(ref), ref.grid)
    return InversionProblem(ref, base, perturbation.apply(base))


def comparison_mesh() -> np.ndarray:
    """The fixed mesh of 32 interior points of [0, pi] used across sizes.

    The mesh is inset by an eighth of the interval on each side: the pinned
    outer coupling leaves a boundary layer a few lattice nodes wide in the
    recovered coefficients, and a mesh point inside that layer at coarse
    sizes would poison the Cauchy convergence metrics with the layer's own
    (non-converging) values.
    """
    return np.linspace(math.pi / 8.0, 7.0 * math.pi / 8.0, COMPARISON_MESH_POINTS)


@dataclass(frozen=True)
class RefinementStudy:
    """A perturbation run over an ascending family of grid sizes."""

    sizes: tuple
    perturbation: Perturbation

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        if not sizes:
            raise ValueError("study needs at least one size")
        if any(s < 8 for s in sizes):
            raise ValueError("study sizes must be at least 8")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError("study sizes must be strictly increasing")
        cap = min(sizes) // 4
        if self.perturbation.max_mode > cap:
            raise ValueError(
                f"perturbed mode {self.perturbation.max_mode} exceeds the lowest "
                f"quarter of the spectrum (limit {cap} at size {min(sizes)}); higher "
                "discrete modes have no continuum counterpart"
            )


@dataclass(frozen=True)
class SizeResult:
    n: int
    delta: float
    profile: np.ndarray | None
    node_positions: np.ndarray | None
    node_effective: np.ndarray | None
    node_derivative: np.ndarray | None = None
    factor2_gap: float = float("nan")
    goursat: float = float("nan")
    error: str | None = None


@dataclass(frozen=True)
class StudyResult:
    study: RefinementStudy
    per_size: tuple
    cauchy_diffs: tuple
    orders: tuple

    def rows(self):
        """Flat records for the report table, one per size."""
        out = []
        for i, res in enumerate(self.per_size):
            out.append(
                {
                    "N": res.n,
                    "delta": res.delta,
                    "max_factor2_gap": res.factor2_gap,
                    "goursat_residual": res.goursat,
                    "cauchy_diff": self.cauchy_diffs[i],
                    "est_order": self.orders[i],
                    "error": res.error or "",
                }
            )
        return out


def _study_single_size(n: int, perturbation: Perturbation) -> SizeResult:
    grid = Grid(n)
    problem = free_well_problem(n, perturbation)
    recovered = run_inversion(problem, method="synthesis")
    nodes = grid.interior_nodes
    veff_rec = effective_potential(recovered.operator)
    veff_ref = effective_potential(problem.reference)
    change = veff_rec - veff_ref
    deriv = diagonal_derivative(recovered.kernel)
    mesh = comparison_mesh()
    # The last interior node is excluded from the lattice-to-mesh maps: the
    # outer coupling stays at its reference value there, so that node sits in
    # a boundary layer outside the converging family.  This also matches the
    # range of the diagonal derivative (one forward difference per node).
    keep = nodes[: n - 1]
    gap = np.interp(mesh, keep, change[: n - 1]) - np.interp(mesh, keep, deriv)
    return SizeResult(
        n=n,
        delta=grid.step,
        profile=np.interp(mesh, keep, veff_rec[: n - 1]),
        node_positions=nodes,
        node_effective=veff_rec,
        node_derivative=deriv,
        factor2_gap=float(np.max(np.abs(gap))),
        goursat=goursat_residual(recovered.kernel, recovered.operator, problem.reference),
    )


def run_refinement_study(study: RefinementStudy) -> StudyResult:
    """Invert the same perturbation at every size and measure convergence.

    Per-size failures are recorded and the remaining sizes still run.
    Cauchy differences compare successive effective-potential profiles on
    the fixed mesh; estimated orders are base-2 logs of their ratios and are
    only defined from the third successful size on.
    """
    results = []
    for n in study.sizes:
        try:
            results.append(_study_single_size(n, study.perturbation))
        except GlinvError as exc:
            results.append(
                SizeResult(n=n, delta=Grid(n).step, profile=None,
                           node_positions=None, node_effective=None,
                           error=f"{type(exc).__name__}: {exc}")
            )
    cauchy = [float("nan")] * len(results)
    orders = [float("nan")] * len(results)
    for i in range(1, len(results)):
        a, b = results[i - 1], results[i]
        if a.profile is not None and b.profile is not None:
            cauchy[i] = float(np.max(np.abs(b.profile - a.profile)))
    for i in range(2, len(results)):
        if cauchy[i - 1] > 0 and cauchy[i] > 0:
            orders[i] = math.log2(cauchy[i - 1] / cauchy[i])
    return StudyResult(study, tuple(results), tuple(cauchy), tuple(orders))


def invert_right_edge(problem: InversionProblem, method: str = "both") -> RecoveredSystem:
    """Inversion of right-oriented data by coordinate reversal.

    Right weights describe the eigenfunctions' behaviour at the far edge, so
    under x -> pi - x they become left weights of the reflected reference.
    The left pipeline runs on the reflected problem and the recovered
    operator is reflected back, its outer coefficient pinned to the original
    reference edge value.  The kernel and solutions in the result live in
    the reflected frame.
    """
    if problem.orientation != "right":
        raise ValueError("invert_right_edge expects right-oriented data")
    grid = problem.grid
    reflected_ref = reflect(problem.reference, u_edge=0.0)
    ref_data = SpectralData(
        grid, problem.reference_data.levels, problem.reference_data.weights, "left"
    )
    target_data = SpectralData(
        grid, problem.target_data.levels, problem.target_data.weights, "left"
    )
    reflected = run_inversion(
        InversionProblem(reflected_ref, ref_data, target_data), method=method
    )
    operator = reflect(reflected.operator, u_edge=problem.reference.u_edge)
    diagnostics = dict(reflected.diagnostics)
    diagnostics["frame"] = "reflected"
    return RecoveredSystem(
        operator, reflected.kernel, reflected.solutions, diagnostics, reflected.method
    )
