"""Uniform grid on [0, pi] and the tridiagonal operator living on it.

Index convention: interior nodes are x_1 .. x_N with x_n = n*step, and the
coupling array is aligned so that ``u[n-1]`` is the coefficient u(x_n) that
couples nodes x_n and x_{n+1}.  The outer coefficient u(x_N), which couples
x_N to the boundary node x_{N+1}, never enters the matrix but is needed by
recurrences that step past the edge; it is stored as ``u_edge``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .tolerances import RECURRENCE_DENOMINATOR


@dataclass(frozen=True)
class Grid:
    """Uniform partition of [0, pi] with ``n_interior`` nodes strictly inside."""

    n_interior: int

    def __post_init__(self):
        if not isinstance(self.n_interior, (int, np.integer)) or self.n_interior < 1:
            raise ValueError(f"n_interior must be a positive integer, got {self.n_interior!r}")

    @property
    def step(self) -> float:
        return math.pi / (self.n_interior + 1)

    @property
    def nodes(self) -> np.ndarray:
        """All nodes x_0 .. x_{N+1}, endpoints included."""
        return self.step * np.arange(self.n_interior + 2)

    @property
    def interior_nodes(self) -> np.ndarray:
        """Nodes x_1 .. x_N."""
        return self.step * np.arange(1, self.n_interior + 1)


def _frozen_array(values, length: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).copy()
    if arr.shape != (length,):
        raise ValueError(f"{name} must have shape ({length},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class JacobiOperator:
    """Main-diagonal potential ``v`` and off-diagonal coupling ``u`` on a grid.

    ``v`` has one entry per interior node; ``u`` has N-1 entries with
    ``u[n-1] = u(x_n)``; ``u_edge`` is u(x_N).  All entries carry energy
    units.  Instances are immutable and safe to share.
    """

    grid: Grid
    v: np.ndarray
    u: np.ndarray
    u_edge: float = 0.0

    def __post_init__(self):
        n = self.grid.n_interior
        object.__setattr__(self, "v", _frozen_array(self.v, n, "v"))
        object.__setattr__(self, "u", _frozen_array(self.u, n - 1, "u"))
        object.__setattr__(self, "u_edge", float(self.u_edge))
        if not math.isfinite(self.u_edge):
            raise ValueError("u_edge must be finite")
        step2 = self.grid.step ** 2
        denominators = 1.0 - step2 * np.append(self.u, self.u_edge)
        bad = np.nonzero(np.abs(denominators) < RECURRENCE_DENOMINATOR)[0]
        if bad.size:
            raise ValueError(
                f"|1 - step^2 * u| < {RECURRENCE_DENOMINATOR:g} at node {bad[0] + 1}; "
                "recurrence denominators must not vanish"
            )

    @property
    def n(self) -> int:
        return self.grid.n_interior


def free_well(n: int) -> JacobiOperator:
    """Zero-potential operator on n interior nodes (infinite rectangular well)."""
    grid = Grid(n)
    return JacobiOperator(grid, np.zeros(n), np.zeros(max(n - 1, 0)), 0.0)


def assemble(op: JacobiOperator) -> np.ndarray:
    """Dense symmetric tridiagonal matrix of the operator.

    The kinetic part contributes 2/step^2 on the diagonal and -1/step^2 on
    the first off-diagonals; the potential part adds ``v`` and ``u``.
    ``u_edge`` does not enter.
    """
    step2 = op.grid.step ** 2
    diag = 2.0 / step2 + op.v
    off = -1.0 / step2 + op.u
    h = np.diag(diag)
    if op.n > 1:
        h += np.diag(off, 1) + np.diag(off, -1)
    return h


def reflect(op: JacobiOperator, u_edge: float = 0.0) -> JacobiOperator:
    """Coordinate reversal x -> pi - x.

    ``v`` and ``u`` reverse order.  The reflected outer coefficient is the
    original operator's (hypothetical) coefficient at x_0, which the type
    does not carry; callers supply it, and it defaults to zero, which is the
    convention every left recurrence already uses at the first node.
    """
    return JacobiOperator(op.grid, op.v[::-1], op.u[::-1], u_edge)


def tridiagonal_bands(op: JacobiOperator) -> tuple[np.ndarray, np.ndarray]:
    """(diagonal, off-diagonal) of the assembled matrix, without densifying."""
    step2 = op.grid.step ** 2
    return 2.0 / step2 + op.v, -1.0 / step2 + op.u


def operator_to_dict(op: JacobiOperator) -> dict:
    return {
        "n": op.n,
        "v": [float(x) for x in op.v],
        "u": [float(x) for x in op.u],
        "u_edge": float(op.u_edge),
    }


def operator_from_dict(data: dict) -> JacobiOperator:
    try:
        n = int(data["n"])
        v = data["v"]
        u = data["u"]
        u_edge = float(data.get("u_edge", 0.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"operator record is malformed: {exc}") from exc
    if n < 1:
        raise FormatError(f"operator order must be positive, got {n}")
    if len(v) != n or len(u) != n - 1:
        raise FormatError(
            f"operator arrays must have lengths {n} and {n - 1}, "
            f"got {len(v)} and {len(u)}"
        )
    try:
        return JacobiOperator(Grid(n), np.asarray(v, float), np.asarray(u, float), u_edge)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def save_operator(op: JacobiOperator, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(operator_to_dict(op), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_operator(path) -> JacobiOperator:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read operator file {path}: {exc}") from exc
    return operator_from_dict(data)
