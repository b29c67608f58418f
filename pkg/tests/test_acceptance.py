"""Acceptance suite: every criterion at its stated tolerance.

Each test prints one PASS/FAIL line (run with -s to see them); the assert
carries the same condition.  Fixtures shared between criteria are computed
once per module.
"""

import math
import time

import numpy as np
import pytest

from conftest import free_well_data, roundtrip_problem

from glinv import (
    Grid,
    InversionProblem,
    Perturbation,
    RefinementStudy,
    SpectralData,
    eigensolve,
    extract_spectral_data,
    free_well,
    free_well_problem,
    gram_schmidt_oracle,
    invert_right_edge,
    recover_recursive,
    reflect,
    run_inversion,
    run_refinement_study,
)


def _report(num: int, name: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] criterion {num:02d}: {name}  {detail}")
    assert ok, f"criterion {num:02d} ({name}) failed: {detail}"


@pytest.fixture(scope="module")
def roundtrip_batch():
    """Twenty seeded random targets at N = 12, inverted by both methods."""
    start = time.perf_counter()
    records = []
    for seed in range(20):
        target, problem = roundtrip_problem(seed=9000 + seed, n=12)
        recovered = run_inversion(problem, method="both")
        recursion = recover_recursive(
            recovered.kernel, problem.reference, problem.reference_data
        )
        records.append(
            {
                "target": target,
                "problem": problem,
                "system": recovered,
                "recursion": recursion,
            }
        )
    elapsed = time.perf_counter() - start
    return records, elapsed


@pytest.fixture(scope="module")
def sweep_result():
    start = time.perf_counter()
    study = RefinementStudy((40, 80, 160), Perturbation(level_shifts={1: 1.0}))
    result = run_refinement_study(study)
    return result, time.perf_counter() - start


def test_criterion_01_identity_inversion():
    start = time.perf_counter()
    worst_k = 0.0
    worst_op = 0.0
    for n in (4, 12, 40):
        reference = free_well(n)
        data = free_well_data(n)
        recovered = run_inversion(
            InversionProblem(reference, data, data), method="both"
        )
        worst_k = max(worst_k, recovered.kernel.max_abs)
        worst_op = max(
            worst_op,
            float(np.max(np.abs(recovered.operator.v - reference.v))),
            float(np.max(np.abs(recovered.operator.u - reference.u))),
        )
    elapsed = time.perf_counter() - start
    ok = worst_k <= 1e-10 and worst_op <= 1e-10 and elapsed < 1.0
    _report(1, "identity inversion",
            ok, f"max|K|={worst_k:.2e} op_err={worst_op:.2e} time={elapsed:.2f}s")


def test_criterion_02_roundtrip_reconstruction(roundtrip_batch):
    records, elapsed = roundtrip_batch
    worst_synth = 0.0
    worst_rec = 0.0
    worst_gap = 0.0
    for record in records:
        target = record["target"]
        synth = record["system"].operator
        rec = record["recursion"]
        worst_synth = max(
            worst_synth,
            float(np.max(np.abs(synth.v - target.v))),
            float(np.max(np.abs(synth.u - target.u))),
        )
        worst_rec = max(
            worst_rec,
            float(np.max(np.abs(rec.v - target.v))),
            float(np.max(np.abs(rec.u - target.u))),
        )
        worst_gap = max(worst_gap, record["system"].diagnostics["recursion_synthesis_gap"])
    ok = worst_synth <= 1e-5 and worst_rec <= 1e-5 and worst_gap <= 1e-5 and elapsed < 10.0
    _report(2, "round-trip reconstruction", ok,
            f"synthesis={worst_synth:.2e} recursion={worst_rec:.2e} "
            f"gap={worst_gap:.2e} time={elapsed:.1f}s")


def test_criterion_03_oracle_equivalence(roundtrip_batch):
    records, _ = roundtrip_batch
    worst = 0.0
    for record in records:
        problem = record["problem"]
        k_lin = record["system"].kernel
        k_gs = gram_schmidt_oracle(problem)
        bound = 1e-8 * (1.0 + k_lin.max_abs)
        deviation = max(
            float(np.max(np.abs(k_lin.k_lower - k_gs.k_lower))),
            float(np.max(np.abs(k_lin.k_diag - k_gs.k_diag))),
            float(np.max(np.abs(k_lin.k_edge_row - k_gs.k_edge_row))),
            float(np.max(np.abs(k_lin.row_scales - k_gs.row_scales))),
        )
        worst = max(worst, deviation / bound)
    ok = worst <= 1.0
    _report(3, "oracle equivalence", ok, f"worst deviation {worst:.2e} x bound")


def test_criterion_04_orthonormality_restoration(roundtrip_batch):
    records, _ = roundtrip_batch
    worst = max(r["system"].diagnostics["orthonormality_defect"] for r in records)
    ok = worst <= 1e-6
    _report(4, "orthonormality restoration", ok, f"defect={worst:.2e}")


def test_criterion_05_tridiagonality_of_synthesis(roundtrip_batch):
    records, _ = roundtrip_batch
    worst = 0.0
    for record in records:
        norm_h = float(np.max(np.abs(record["problem"].target_data.levels)))
        worst = max(worst, record["system"].diagnostics["leakage"] / norm_h)
    ok = worst <= 1e-6
    _report(5, "synthesis off-band leakage", ok, f"relative leakage={worst:.2e}")


def test_criterion_06_factor2_continuum_claim(sweep_result):
    result, elapsed = sweep_result
    gaps = [r.factor2_gap for r in result.per_size]
    ok = (
        all(r.error is None for r in result.per_size)
        and gaps[2] < 0.5 * gaps[0]
        and elapsed < 30.0
    )
    _report(6, "factor-2 continuum claim", ok,
            f"gaps={[f'{g:.3f}' for g in gaps]} ratio={gaps[2] / gaps[0]:.3f} "
            f"time={elapsed:.1f}s")


def test_criterion_07_goursat_residual_order(sweep_result):
    result, _ = sweep_result
    res = [r.goursat for r in result.per_size]
    ratios = [res[0] / res[1], res[1] / res[2]]
    ok = all(1.4 <= r <= 2.8 for r in ratios)
    _report(7, "Goursat-type residual order", ok,
            f"residuals={[f'{x:.4f}' for x in res]} ratios={[f'{r:.2f}' for r in ratios]}")


def test_criterion_08_mirror_consistency():
    n = 24
    grid = Grid(n)
    reference = free_well(n)
    left = free_well_data(n, "left")
    perturbation = Perturbation(level_shifts={1: 0.5}, weight_factors={2: 1.1})
    target_left = perturbation.apply(left)
    left_system = run_inversion(
        InversionProblem(reference, left, target_left), method="synthesis"
    )
    right = SpectralData(grid, left.levels, left.weights, "right")
    target_right = SpectralData(grid, target_left.levels, target_left.weights, "right")
    right_system = invert_right_edge(
        InversionProblem(reference, right, target_right), method="synthesis"
    )
    mirrored = reflect(right_system.operator)
    gap = max(
        float(np.max(np.abs(left_system.operator.v - mirrored.v))),
        float(np.max(np.abs(left_system.operator.u - mirrored.u))),
    )
    # Independent leg: right-edge weights of a known (asymmetric) operator
    # must reproduce it through the reflected pipeline.
    target, _ = roundtrip_problem(seed=808, n=12)
    gamma = extract_spectral_data(eigensolve(target), target.grid, "right")
    gamma_ref = free_well_data(12, "right")
    rt = invert_right_edge(
        InversionProblem(free_well(12), gamma_ref, gamma), method="synthesis"
    )
    rt_err = max(
        float(np.max(np.abs(rt.operator.v - target.v))),
        float(np.max(np.abs(rt.operator.u - target.u))),
    )
    ok = gap <= 1e-6 and rt_err <= 1e-5
    _report(8, "mirror consistency", ok, f"gap={gap:.2e} right-roundtrip={rt_err:.2e}")


def test_criterion_09_free_well_analytics():
    op = free_well(100)
    es = eigensolve(op)
    step = op.grid.step
    nu_all = np.arange(1, 101)
    exact = (4.0 / step ** 2) * np.sin(nu_all * step / 2.0) ** 2
    level_match = float(np.max(np.abs(es.levels - exact) / exact))

    nu = np.arange(1, 4)
    c_limit = nu * math.sqrt(2.0 / math.pi)
    level_errs = {}
    weight_errs = {}
    taylor_ok = True
    for n in (40, 80, 160):
        data = free_well_data(n)
        d = data.grid.step
        level_errs[n] = float(np.max(np.abs(data.levels[:3] - nu ** 2)))
        weight_errs[n] = float(np.max(np.abs(data.weights[:3] - c_limit)))
        taylor_ok &= bool(
            np.all(np.abs(data.levels[:3] - nu ** 2) <= 1.1 * nu ** 4 * d ** 2 / 12.0)
        )
    h_ratio = Grid(40).step / Grid(160).step
    order_levels = math.log(level_errs[40] / level_errs[160]) / math.log(h_ratio)
    order_weights = math.log(weight_errs[40] / weight_errs[160]) / math.log(h_ratio)
    ok = (
        level_match <= 1e-10
        and taylor_ok
        and 1.7 <= order_levels <= 2.3
        and order_weights >= 0.9
    )
    _report(9, "free-well analytics", ok,
            f"level_match={level_match:.2e} orders: levels={order_levels:.2f} "
            f"weights={order_weights:.2f}")


def test_criterion_10_ill_posedness_growth():
    diagnostics = {}
    for n in (12, 60):
        problem = free_well_problem(n, Perturbation(level_shifts={1: 5.0}))
        recovered = run_inversion(problem, method="both")
        diagnostics[n] = (
            recovered.diagnostics["gl_max_condition"],
            recovered.diagnostics["recursion_synthesis_gap"],
        )
    cond_grows = diagnostics[60][0] > diagnostics[12][0]
    gap_grows = diagnostics[60][1] > diagnostics[12][1]
    ok = cond_grows and gap_grows
    _report(10, "ill-posedness growth", ok,
            f"condition {diagnostics[12][0]:.3g} -> {diagnostics[60][0]:.3g}, "
            f"method gap {diagnostics[12][1]:.3g} -> {diagnostics[60][1]:.3g}")
