"""Shared fixtures: round-trip problems and cached free-well spectra."""

from functools import lru_cache

import numpy as np
import pytest

from glinv import (
    Grid,
    InversionProblem,
    JacobiOperator,
    eigensolve,
    extract_spectral_data,
    free_well,
)


@lru_cache(maxsize=32)
def free_well_data(n: int, orientation: str = "left"):
    """Spectral data of the free well, cached across the suite."""
    op = free_well(n)
    return extract_spectral_data(eigensolve(op), op.grid, orientation)


def random_target(seed: int, n: int = 12, v_span: float = 1.0, u_span: float = 0.1):
    rng = np.random.default_rng(seed)
    grid = Grid(n)
    return JacobiOperator(
        grid,
        rng.uniform(-v_span, v_span, n),
        rng.uniform(-u_span, u_span, n - 1),
        0.0,
    )


def roundtrip_problem(seed: int, n: int = 12, v_span: float = 1.0, u_span: float = 0.1):
    """Inversion problem whose exact answer is a known random operator."""
    target = random_target(seed, n, v_span, u_span)
    target_data = extract_spectral_data(eigensolve(target), target.grid)
    return target, InversionProblem(free_well(n), free_well_data(n), target_data)


@pytest.fixture
def n12_fixture():
    return roundtrip_problem(seed=7, n=12)
