"""Command-line front end.

Four subcommands wire the pipeline together: ``forward`` (operator to
spectral data), ``invert`` (reference plus data to recovered operator),
``roundtrip`` (forward a known target, invert, compare), and ``sweep``
(refinement study).  Every configuration key can live in a JSON file passed
with --config and be overridden by the flag of the same name; overrides are
logged into the diagnostics output.  Data files are written with sorted keys
and repr-exact floats so identical configs produce byte-identical output.

Exit codes: 0 success, 2 unreadable or invalid inputs, 3 numerical failure
in the forward solve, 4 noninvertible or degenerate inversion data,
5 residual thresholds violated (outputs are still written).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import tolerances
from .continuum import Perturbation, RefinementStudy, run_refinement_study
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
    SingularRecurrenceError,
)
from .forward import (
    eigensolve,
    extract_spectral_data,
    load_spectral_data,
    parseval_defect,
    save_spectral_data,
)
from .inversion import InversionProblem, dump_kernel_csv
from .operators import load_operator, operator_to_dict, save_operator
from .recovery import run_inversion

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_NONINVERTIBLE = 4
EXIT_THRESHOLD = 5

_CONFIG_KEYS = (
    "operator",
    "reference_operator",
    "reference_data",
    "target_data",
    "target_operator",
    "out",
    "method",
    "tol",
    "sizes",
    "figures",
    "perturbation",
)


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _write_json(payload: dict, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _parse_index_map(pairs, kind: str) -> dict:
    out = {}
    for item in pairs or []:
        try:
            idx, _, value = item.partition("=")
            out[int(idx)] = float(value)
        except ValueError as exc:
            raise FormatError(f"bad {kind} specification {item!r}: expected INDEX=VALUE") from exc
    return out


class RunConfig:
    """Merged configuration: JSON file values overlaid by CLI flags."""

    def __init__(self, args: argparse.Namespace):
        data = {}
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    data = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise FormatError(f"cannot read config {args.config}: {exc}") from exc
            unknown = set(data) - set(_CONFIG_KEYS)
            if unknown:
                raise FormatError(f"unknown config keys: {sorted(unknown)}")
        self.overridden: list[str] = []

        def pick(key, flag_value, convert=lambda x: x):
            if flag_value is not None:
                if key in data:
                    self.overridden.append(key)
                return convert(flag_value)
            if key in data and data[key] is not None:
                return convert(data[key])
            return None

        self.operator = pick("operator", args.operator)
        self.reference_operator = pick("reference_operator", args.reference_operator)
        self.reference_data = pick("reference_data", args.reference_data)
        self.target_data = pick("target_data", args.target_data)
        self.target_operator = pick("target_operator", args.target_operator)
        self.out = Path(pick("out", args.out) or ".")
        self.method = pick("method", args.method) or "both"
        self.tol = pick("tol", args.tol, float)
        if self.tol is None:
            self.tol = tolerances.ROUNDTRIP
        sizes = pick("sizes", args.sizes,
                     lambda s: [int(x) for x in s.split(",")] if isinstance(s, str) else list(s))
        self.sizes = sizes or []
        figures = pick("figures", args.figures_flag)
        self.figures = True if figures is None else bool(figures)

        pert = data.get("perturbation", {}) or {}
        shifts = {int(k): float(v) for k, v in (pert.get("level_shifts") or {}).items()}
        factors = {int(k): float(v) for k, v in (pert.get("weight_factors") or {}).items()}
        cli_shifts = _parse_index_map(args.level_shift, "level shift")
        cli_factors = _parse_index_map(args.weight_factor, "weight factor")
        if cli_shifts:
            if shifts:
                self.overridden.append("perturbation.level_shifts")
            shifts = cli_shifts
        if cli_factors:
            if factors:
                self.overridden.append("perturbation.weight_factors")
            factors = cli_factors
        self.perturbation = Perturbation(level_shifts=shifts, weight_factors=factors)

    def require(self, *keys: str) -> None:
        missing = [k for k in keys if getattr(self, k) is None]
        if missing:
            raise FormatError(f"missing required inputs: {', '.join(missing)}")


def cmd_forward(cfg: RunConfig) -> int:
    cfg.require("operator")
    op = load_operator(cfg.operator)
    try:
        system = eigensolve(op)
        data = extract_spectral_data(system, op.grid)
        defect = parseval_defect(system)
    except (ConvergenceError, DegenerateSpectrumError,
            InconsistentEigensystemError, SingularRecurrenceError) as exc:
        print(f"forward solve failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    cfg.out.mkdir(parents=True, exist_ok=True)
    save_spectral_data(data, cfg.out / "spectral_data.json")
    _write_json(
        {
            "n": op.n,
            "parseval_defect": defect,
            "weight_sum_rule_defect": abs(
                op.grid.step ** 3 * float(np.sum(data.weights ** 2)) - 1.0
            ),
            "overridden_keys": sorted(cfg.overridden),
        },
        cfg.out / "forward_report.json",
    )
    print(f"wrote {cfg.out / 'spectral_data.json'} (parseval defect {defect:.3e})")
    return EXIT_OK


def _invert_once(cfg: RunConfig, reference, ref_data, target_data):
    problem = InversionProblem(reference, ref_data, target_data)
    return run_inversion(problem, method=cfg.method)


def _write_inversion_outputs(cfg: RunConfig, recovered, extra: dict | None = None) -> dict:
    cfg.out.mkdir(parents=True, exist_ok=True)
    save_operator(recovered.operator, cfg.out / "recovered_operator.json")
    dump_kernel_csv(recovered.kernel, cfg.out / "kernel.csv")
    diagnostics = {
        "method": recovered.method,
        "thresholds": {
            "orthonormality_defect": tolerances.ORTHONORMALITY_DEFECT,
            "cross_check_deviation": tolerances.ORTHONORMALITY_DEFECT,
            "recursion_synthesis_gap": cfg.tol,
        },
        "residuals": {
            k: (float(v) if np.isfinite(v) else None)
            for k, v in recovered.diagnostics.items()
            if isinstance(v, (int, float))
        },
        "recursion_fallback_nodes": recovered.diagnostics.get("recursion_fallback_nodes", []),
        "overridden_keys": sorted(cfg.overridden),
    }
    if extra:
        diagnostics.update(extra)
    _write_json(diagnostics, cfg.out / "diagnostics.json")
    return diagnostics


def _thresholds_pass(cfg: RunConfig, diag: dict) -> bool:
    res = diag["residuals"]
    ok = res.get("orthonormality_defect", 0.0) <= tolerances.ORTHONORMALITY_DEFECT
    ok &= res.get("cross_check_deviation", 0.0) <= tolerances.ORTHONORMALITY_DEFECT
    if "recursion_synthesis_gap" in res:
        ok &= res["recursion_synthesis_gap"] <= cfg.tol
    return bool(ok)


def cmd_invert(cfg: RunConfig) -> int:
    cfg.require("reference_operator", "reference_data", "target_data")
    reference = load_operator(cfg.reference_operator)
    ref_data = load_spectral_data(cfg.reference_data)
    target_data = load_spectral_data(cfg.target_data)
    try:
        recovered = _invert_once(cfg, reference, ref_data, target_data)
    except (NoninvertibleDataError, DegenerateDataError,
            NonTridiagonalSynthesisError, RecursionDegenerateError) as exc:
        print(f"inversion failed: {exc}", file=sys.stderr)
        return EXIT_NONINVERTIBLE
    diagnostics = _write_inversion_outputs(cfg, recovered)
    if not _thresholds_pass(cfg, diagnostics):
        print("residual thresholds violated; see diagnostics.json", file=sys.stderr)
        return EXIT_THRESHOLD
    print(f"recovered operator written to {cfg.out / 'recovered_operator.json'}")
    return EXIT_OK


def cmd_roundtrip(cfg: RunConfig) -> int:
    cfg.require("target_operator", "reference_operator")
    target = load_operator(cfg.target_operator)
    reference = load_operator(cfg.reference_operator)
    try:
        target_data = extract_spectral_data(eigensolve(target), target.grid)
        ref_data = extract_spectral_data(eigensolve(reference), reference.grid)
    except (ConvergenceError, DegenerateSpectrumError,
            InconsistentEigensystemError, SingularRecurrenceError) as exc:
        print(f"forward solve failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    try:
        recovered = _invert_once(cfg, reference, ref_data, target_data)
    except (NoninvertibleDataError, DegenerateDataError,
            NonTridiagonalSynthesisError, RecursionDegenerateError) as exc:
        print(f"inversion failed: {exc}", file=sys.stderr)
        return EXIT_NONINVERTIBLE

    from .recovery import recover_recursive

    ops = {}
    if cfg.method in ("synthesis", "both"):
        ops["synthesis"] = recovered.operator
    if cfg.method in ("recursion", "both"):
        ops["recursion"] = (
            recovered.operator
            if recovered.method == "recursion"
            else recover_recursive(recovered.kernel, reference, ref_data)
        )
    errors = {}
    for name, op in ops.items():
        errors[name] = {
            "v_errors": [float(a) for a in np.abs(op.v - target.v)],
            "u_errors": [float(a) for a in np.abs(op.u - target.u)],
            "max_error": float(
                max(
                    np.max(np.abs(op.v - target.v)),
                    np.max(np.abs(op.u - target.u)) if target.n > 1 else 0.0,
                )
            ),
        }
    diagnostics = _write_inversion_outputs(cfg, recovered, extra={"comparison": errors})
    report = {
        "tolerance": cfg.tol,
        "methods": {name: err["max_error"] for name, err in errors.items()},
        "per_coefficient": errors,
        "target": operator_to_dict(target),
        "recovered": {name: operator_to_dict(op) for name, op in ops.items()},
    }
    _write_json(report, cfg.out / "roundtrip_report.json")
    if cfg.figures:
        from .plots import render_roundtrip_figure

        render_roundtrip_figure(target, ops, cfg.out)
    worst = max(err["max_error"] for err in errors.values())
    if worst > cfg.tol:
        print(
            f"round trip exceeded tolerance: max error {worst:.3e} > {cfg.tol:.3e}",
            file=sys.stderr,
        )
        return EXIT_THRESHOLD
    print(f"round trip ok: max error {worst:.3e} (tolerance {cfg.tol:.3e})")
    return EXIT_OK


def cmd_sweep(cfg: RunConfig) -> int:
    if not cfg.sizes:
        raise FormatError("sweep needs sizes (config key 'sizes' or --sizes)")
    study = RefinementStudy(tuple(cfg.sizes), cfg.perturbation)
    result = run_refinement_study(study)
    cfg.out.mkdir(parents=True, exist_ok=True)

    with open(cfg.out / "study.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["N", "delta", "max_factor2_gap", "goursat_residual",
                         "cauchy_diff", "est_order", "error"])
        for row in result.rows():
            writer.writerow([
                row["N"],
                _fmt(row["delta"]),
                _fmt(row["max_factor2_gap"]) if np.isfinite(row["max_factor2_gap"]) else "",
                _fmt(row["goursat_residual"]) if np.isfinite(row["goursat_residual"]) else "",
                _fmt(row["cauchy_diff"]) if np.isfinite(row["cauchy_diff"]) else "",
                _fmt(row["est_order"]) if np.isfinite(row["est_order"]) else "",
                row["error"],
            ])
    for res in result.per_size:
        if res.node_positions is None:
            continue
        with open(cfg.out / f"profile_N{res.n}.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "v_eff"])
            for x, v in zip(res.node_positions, res.node_effective):
                writer.writerow([_fmt(x), _fmt(v)])
    if cfg.figures:
        from .plots import render_study_figures

        render_study_figures(result, cfg.out)

    ok_sizes = [r for r in result.per_size if r.error is None]
    if len(cfg.sizes) < 2:
        print("warning: need at least 2 sizes for convergence estimates", file=sys.stderr)
        print(f"study written to {cfg.out / 'study.csv'}")
        return EXIT_OK
    if len(ok_sizes) < len(result.per_size):
        failed = [r.n for r in result.per_size if r.error is not None]
        print(f"sizes failed: {failed}; see study.csv", file=sys.stderr)
        return EXIT_THRESHOLD
    gaps = [r.factor2_gap for r in ok_sizes]
    gour = [r.goursat for r in ok_sizes]
    trivial = cfg.perturbation.is_trivial
    factor2_ok = trivial or all(b < a for a, b in zip(gaps, gaps[1:]))
    if not trivial and len(gaps) >= 2:
        factor2_ok = factor2_ok and gaps[-1] < 0.5 * gaps[0]
    goursat_ok = trivial or all(b < a for a, b in zip(gour, gour[1:]))
    if factor2_ok and goursat_ok:
        print(f"study written to {cfg.out / 'study.csv'}; convergence criteria hold")
        return EXIT_OK
    print("convergence criteria violated; see study.csv", file=sys.stderr)
    return EXIT_THRESHOLD


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its keys")
    common.add_argument("--out", help="output directory (default: current)")
    common.add_argument("--method", choices=["synthesis", "recursion", "both"],
                        help="recovery method (default: both)")
    common.add_argument("--tol", type=float, help="comparison tolerance (default 1e-5)")
    common.add_argument("--sizes", help="comma-separated grid sizes for sweep")
    common.add_argument("--operator", help="operator JSON (forward)")
    common.add_argument("--reference-operator", dest="reference_operator",
                        help="reference operator JSON")
    common.add_argument("--reference-data", dest="reference_data",
                        help="reference spectral data JSON")
    common.add_argument("--target-data", dest="target_data",
                        help="target spectral data JSON")
    common.add_argument("--target-operator", dest="target_operator",
                        help="target operator JSON (roundtrip)")
    common.add_argument("--level-shift", action="append", metavar="IDX=VAL",
                        help="perturbation level shift (repeatable)")
    common.add_argument("--weight-factor", action="append", metavar="IDX=VAL",
                        help="perturbation weight factor (repeatable)")
    fig = common.add_mutually_exclusive_group()
    fig.add_argument("--figures", dest="figures_flag", action="store_const", const=True,
                     help="render figures (default)")
    fig.add_argument("--no-figures", dest="figures_flag", action="store_const", const=False,
                     help="skip figure rendering")
    common.set_defaults(figures_flag=None)

    parser = argparse.ArgumentParser(
        prog="glinv",
        description="Inverse eigenvalue problem for discrete Sturm-Liouville operators",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("forward", parents=[common],
                   help="eigensolve an operator and emit its spectral data")
    sub.add_parser("invert", parents=[common],
                   help="recover an operator from reference + target data")
    sub.add_parser("roundtrip", parents=[common],
                   help="forward-solve a target, invert, compare coefficients")
    sub.add_parser("sweep", parents=[common],
                   help="refinement study of the continuum-limit claims")
    return parser


_COMMANDS = {
    "forward": cmd_forward,
    "invert": cmd_invert,
    "roundtrip": cmd_roundtrip,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(args)
        return _COMMANDS[args.command](cfg)
    except FormatError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except ValueError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except GlinvError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
