"""Forward spectral problem: eigenpairs, regular solutions, spectral data.

The eigensolver is bisection on Sturm sign counts followed by inverse
iteration.  For a tridiagonal matrix with nonzero off-diagonals the spectrum
is simple, so each eigenvalue can be bracketed independently and the
iteration converges in a couple of steps.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from . import tolerances as tol
from .errors import (
    ConvergenceError,
    DegenerateSpectrumError,
    FormatError,
    InconsistentEigensystemError,
    SingularRecurrenceError,
)
from .operators import Grid, JacobiOperator, tridiagonal_bands


@dataclass(frozen=True)
class EigenSystem:
    """All N eigenpairs of an operator.

    ``vectors[i]`` is the i-th eigenvector sampled on the interior nodes,
    normalized so that step * sum_n vectors[i, n] * vectors[j, n] = delta_ij,
    with the sign fixed by vectors[i, 0] > 0.  ``levels`` is ascending.
    """

    grid: Grid
    levels: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        for arr in (self.levels, self.vectors):
            arr.flags.writeable = False

    @property
    def n(self) -> int:
        return self.grid.n_interior


@dataclass(frozen=True)
class SpectralData:
    """Levels plus positive spectral weight factors, with an edge orientation.

    Left-oriented weights are the ratios eigenvector(x_1)/step; right-oriented
    ones use x_N instead.  Valid data satisfies step^3 * sum(weights^2) = 1.
    """

    grid: Grid
    levels: np.ndarray
    weights: np.ndarray
    orientation: str = "left"

    def __post_init__(self):
        levels = np.asarray(self.levels, float).copy()
        weights = np.asarray(self.weights, float).copy()
        n = self.grid.n_interior
        if levels.shape != (n,) or weights.shape != (n,):
            raise ValueError(f"levels and weights must have length {n}")
        if self.orientation not in ("left", "right"):
            raise ValueError(f"orientation must be 'left' or 'right', got {self.orientation!r}")
        if np.any(np.diff(levels) <= 0):
            raise ValueError("levels must be strictly ascending")
        if np.any(weights <= 0):
            raise ValueError("weights must be strictly positive")
        total = self.grid.step ** 3 * float(np.sum(weights ** 2))
        if abs(total - 1.0) > tol.WEIGHT_SUM_RULE:
            raise ValueError(
                f"step^3 * sum(weights^2) = {total!r} violates the sum rule "
                f"beyond {tol.WEIGHT_SUM_RULE:g}"
            )
        levels.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return self.grid.n_interior


@dataclass(frozen=True)
class RegularSolutionTable:
    """Regular solutions phi(x, E) at a batch of energies.

    ``values[k]`` covers all nodes x_0 .. x_{N+1}; the first two entries are
    pinned to 0 and step by the initial conditions.
    """

    grid: Grid
    energies: np.ndarray
    values: np.ndarray

    @property
    def interior(self) -> np.ndarray:
        """Slice covering x_1 .. x_N only."""
        return self.values[:, 1:-1]


def _sturm_counts(diag: np.ndarray, off2: np.ndarray, shifts: np.ndarray) -> np.ndarray:
    """Number of eigenvalues strictly below each shift, via LDL^T sign counts."""
    shifts = np.atleast_1d(shifts)
    pivmin = np.finfo(float).tiny
    # A zero pivot counts as negative: both one-sided limits give that count.
    q = diag[0] - shifts
    q = np.where(q == 0.0, -pivmin, q)
    count = (q < 0).astype(int)
    with np.errstate(over="ignore"):
        for i in range(1, diag.size):
            q = diag[i] - shifts - off2[i - 1] / q
            q = np.where(q == 0.0, -pivmin, q)
            count += q < 0
    return count


def _bisect_all(diag: np.ndarray, off: np.ndarray) -> np.ndarray:
    """All eigenvalues, ascending, by simultaneous bisection."""
    n = diag.size
    off2 = off ** 2
    radius = np.zeros(n)
    radius[:-1] += np.abs(off) if n > 1 else 0.0
    radius[1:] += np.abs(off) if n > 1 else 0.0
    lo_bound = float(np.min(diag - radius))
    hi_bound = float(np.max(diag + radius))
    span = max(hi_bound - lo_bound, 1.0)
    lo = np.full(n, lo_bound - 1e-3 * span)
    hi = np.full(n, hi_bound + 1e-3 * span)
    targets = np.arange(1, n + 1)
    # Each midpoint evaluation halves every active bracket at once.
    for _ in range(110):
        mid = 0.5 * (lo + hi)
        counts = _sturm_counts(diag, off2, mid)
        below = counts < targets
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        width = hi - lo
        scale = np.maximum(np.abs(lo), np.abs(hi)) + 1.0
        if np.all(width <= 1e-15 * scale):
            break
    return 0.5 * (lo + hi)


def _inverse_iteration(diag: np.ndarray, off: np.ndarray, level: float, index: int) -> np.ndarray:
    n = diag.size
    if n == 1:
        return np.array([1.0])
    scale = float(np.max(np.abs(diag)) + np.max(np.abs(off)))
    rng = np.random.default_rng(0x5EED + index)
    vec = rng.standard_normal(n)
    vec /= np.linalg.norm(vec)
    shift = level
    for attempt in range(50):
        bands = np.zeros((3, n))
        bands[0, 1:] = off
        bands[1, :] = diag - shift
        bands[2, :-1] = off
        try:
            new = solve_banded((1, 1), bands, vec)
        except np.linalg.LinAlgError:
            shift = level + (attempt + 1) * 1e-13 * scale
            continue
        norm = np.linalg.norm(new)
        if not np.isfinite(norm) or norm == 0.0:
            shift = level + (attempt + 1) * 1e-13 * scale
            continue
        new /= norm
        if attempt >= 1 and abs(abs(np.dot(new, vec)) - 1.0) < 1e-14:
            return new
        vec = new
    raise ConvergenceError(index)


def eigensolve(op: JacobiOperator) -> EigenSystem:
    """All eigenpairs of the assembled operator, step-normalized and sign-fixed.

    Raises ConvergenceError if inverse iteration stalls and
    DegenerateSpectrumError if two levels coincide to relative 1e-12 (which a
    valid operator with nonzero off-diagonals cannot produce).
    """
    diag, off = tridiagonal_bands(op)
    n = op.n
    step = op.grid.step
    levels = _bisect_all(diag, off)
    gaps = np.diff(levels)
    if n > 1:
        close = gaps < tol.DEGENERATE_GAP * np.maximum(np.abs(levels[1:]), 1.0)
        if np.any(close):
            k = int(np.nonzero(close)[0][0])
            raise DegenerateSpectrumError(
                f"levels {k + 1} and {k + 2} coincide to relative {tol.DEGENERATE_GAP:g}"
            )
    vectors = np.empty((n, n))
    for i in range(n):
        vectors[i] = _inverse_iteration(diag, off, levels[i], i)
    vectors /= math.sqrt(step)
    sign = np.where(vectors[:, 0] >= 0, 1.0, -1.0)
    vectors *= sign[:, None]

    norm_h = float(np.max(np.abs(levels)))
    for i in range(n):
        residual = (diag - levels[i]) * vectors[i]
        if n > 1:
            residual[:-1] += off * vectors[i, 1:]
            residual[1:] += off * vectors[i, :-1]
        if np.linalg.norm(residual) > tol.EIGEN_RESIDUAL * max(norm_h, 1.0):
            raise ConvergenceError(i, f"residual too large for pair {i}")
    return EigenSystem(op.grid, levels, vectors)


def regular_solutions(op: JacobiOperator, energies) -> RegularSolutionTable:
    """Regular solutions at a batch of energies.

    Each solution starts from phi(x_0) = 0, phi(x_1) = step and is continued
    through x_{N+1} by the three-term recurrence, with u(x_0) taken as 0 and
    u(x_N) as ``u_edge``.
    """
    energies = np.atleast_1d(np.asarray(energies, float))
    n = op.n
    step = op.grid.step
    inv_step2 = 1.0 / step ** 2
    u_ext = np.append(op.u, op.u_edge)          # u(x_1) .. u(x_N)
    u_prev = np.concatenate(([0.0], op.u))      # u(x_0) .. u(x_{N-1})
    denom = inv_step2 - u_ext
    bad = np.nonzero(np.abs(denom) < tol.RECURRENCE_DENOMINATOR * inv_step2)[0]
    if bad.size:
        raise SingularRecurrenceError(int(bad[0]) + 1)
    values = np.zeros((energies.size, n + 2))
    values[:, 1] = step
    for node in range(1, n + 1):
        values[:, node + 1] = (
            (2.0 * inv_step2 + op.v[node - 1] - energies) * values[:, node]
            + (u_prev[node - 1] - inv_step2) * values[:, node - 1]
        ) / denom[node - 1]
    return RegularSolutionTable(op.grid, energies, values)


def regular_solution(op: JacobiOperator, energy: float) -> np.ndarray:
    """Single regular solution over x_0 .. x_{N+1}."""
    return regular_solutions(op, [energy]).values[0]


def extract_spectral_data(es: EigenSystem, grid: Grid, orientation: str = "left") -> SpectralData:
    """Spectral weight factors of an eigensystem.

    Left weights are eigenvector first components over step (the regular
    solution has phi(x_1) = step); right weights use the last component with
    the sign convention re-fixed at the right edge.
    """
    step = grid.step
    if orientation == "left":
        weights = es.vectors[:, 0] / step
    elif orientation == "right":
        weights = np.abs(es.vectors[:, -1]) / step
    else:
        raise ValueError(f"orientation must be 'left' or 'right', got {orientation!r}")
    total = step ** 3 * float(np.sum(weights ** 2))
    if abs(total - 1.0) > tol.WEIGHT_SUM_RULE:
        raise InconsistentEigensystemError(
            f"weight sum rule violated: step^3 * sum = {total!r}"
        )
    return SpectralData(grid, es.levels.copy(), weights, orientation)


def parseval_defect(es: EigenSystem) -> float:
    """Largest deviation of the step-weighted completeness sum from identity."""
    gram = es.grid.step * (es.vectors.T @ es.vectors)
    return float(np.max(np.abs(gram - np.eye(es.n))))


def spectral_data_to_dict(data: SpectralData) -> dict:
    return {
        "n": data.n,
        "delta": data.grid.step,
        "levels": [float(x) for x in data.levels],
        "weights": [float(x) for x in data.weights],
        "orientation": data.orientation,
    }


def spectral_data_from_dict(record: dict) -> SpectralData:
    try:
        n = int(record["n"])
        delta = float(record["delta"])
        levels = np.asarray(record["levels"], float)
        weights = np.asarray(record["weights"], float)
        orientation = record.get("orientation", "left")
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"spectral data record is malformed: {exc}") from exc
    if n < 1:
        raise FormatError(f"spectral data order must be positive, got {n}")
    grid = Grid(n)
    if not math.isclose(delta, grid.step, rel_tol=1e-12):
        raise FormatError(
            f"declared step {delta!r} does not match pi/(n+1) = {grid.step!r}"
        )
    try:
        return SpectralData(grid, levels, weights, orientation)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def save_spectral_data(data: SpectralData, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spectral_data_to_dict(data), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_spectral_data(path) -> SpectralData:
    try:
        with open(path, encoding="utf-8") as fh:
            record = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read spectral data file {path}: {exc}") from exc
    return spectral_data_from_dict(record)
