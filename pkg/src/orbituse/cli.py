"""Command-line interface: solve, regulate, treaty, sweep, verify.

Usage:
    orbituse solve    --scenario path [--set key=value]... [--format json|csv]
    orbituse regulate --scenario path [--set ...]
    orbituse treaty   --scenario path [--set ...]
    orbituse sweep    --scenario path --sweep param:from:to:steps [--format csv]
    orbituse verify   --scenario path --seed N [--random-count N]

Override keys: scenario.<field> (short aliases p, m, k, d, D0, Dbar, X, c),
tax.<sector>.<market> with 1-based indices, and abatement. Exit codes:
0 success, 2 validation failure, 3 solver non-convergence, 4 assumption
violation under --strict, 1 other errors (including failed verification).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    NoConvergenceError,
    OrbitUseError,
    OverrideError,
    ScenarioParseError,
    ScenarioValidationError,
)
from .open_access import (
    STATIC,
    check_assumptions,
    required_abatement,
    solve_equilibrium,
)
from .regulation import national_welfare, regulatory_equilibrium
from .reporting import (
    LoadedBundle,
    bundle_from_data,
    divergence_report,
    dump_bundle,
    equilibrium_report,
    flatten_for_csv,
    format_csv_value,
    load_scenario,
    rows_to_csv,
    treaty_report,
)
from .treaty import MODEL_DERIVED, CLOSED_FORM, analyze_treaty
from .verification import run_verification

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VALIDATION = 2
EXIT_NO_CONVERGENCE = 3
EXIT_ASSUMPTION = 4


@dataclasses.dataclass
class RunConfig:
    command: str
    scenario_path: str
    overrides: list[str]
    sweep_axis: tuple[str, float, float, int] | None
    output_format: str
    strict: bool
    out: str | None
    seed: int | None
    random_count: int


def _error_object(error: Exception) -> dict:
    payload = {"error": type(error).__name__, "message": str(error)}
    if isinstance(error, ScenarioValidationError):
        payload["violations"] = error.violations
    return payload


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _report_text(report: dict, output_format: str) -> str:
    if output_format == "csv":
        flat = flatten_for_csv(report)
        return rows_to_csv(list(flat.keys()), [list(flat.values())])
    return json.dumps(report, indent=2)


def _solve_report(bundle: LoadedBundle) -> dict:
    equilibrium = solve_equilibrium(bundle.scenario, bundle.taxes, bundle.abatement)
    welfare = national_welfare(bundle.scenario, bundle.taxes, bundle.abatement)
    flags = check_assumptions(bundle.scenario, bundle.taxes)
    report = {"inputs": dump_bundle(bundle)}
    report.update(
        equilibrium_report(bundle.scenario, bundle.taxes, equilibrium, welfare, flags)
    )
    return report


def _regulate_report(bundle: LoadedBundle) -> tuple[dict, bool]:
    result = regulatory_equilibrium(bundle.scenario, bundle.abatement, bundle.taxes)
    welfare = national_welfare(bundle.scenario, result.taxes, bundle.abatement)
    flags = check_assumptions(bundle.scenario, result.taxes)
    report = {
        "inputs": dump_bundle(bundle),
        "taxes": [list(row) for row in result.taxes.rates],
        "converged": result.converged,
        "iterations": result.iterations,
        "max_update": result.max_update,
        "update_trace": list(result.update_trace),
        "equilibrium": equilibrium_report(
            bundle.scenario, result.taxes, result.equilibrium, welfare, flags
        ),
    }
    return report, result.converged


def _treaty_report(bundle: LoadedBundle) -> dict:
    model = analyze_treaty(bundle.scenario, bundle.taxes, MODEL_DERIVED)
    closed = analyze_treaty(
        bundle.scenario, bundle.taxes, CLOSED_FORM, qbar=model.qbar
    )
    return {
        "inputs": dump_bundle(bundle),
        "qbar_responsive": model.qbar,
        "qbar_static": required_abatement(bundle.scenario, bundle.taxes, mode=STATIC),
        "variants": {
            MODEL_DERIVED: treaty_report(model),
            CLOSED_FORM: treaty_report(closed),
        },
        "divergence": divergence_report(model.divergences),
    }


def _sweep_rows(bundle: LoadedBundle, axis) -> tuple[list[str], list[list]]:
    key, start, stop, steps = axis
    values = np.linspace(start, stop, steps)
    scenario = bundle.scenario
    n_s, n_m = scenario.n_sectors, scenario.n_markets
    parties = scenario.treaty_parties

    header = [key]
    header += [f"fleet_{i}" for i in range(n_s)]
    header += ["debris_stock", "survival"]
    header += [f"welfare_{j}" for j in range(n_m)]
    header += ["qbar_responsive", "qbar_static"]
    for party in range(parties):
        header += [f"alpha_model_{party}", f"beta_model_{party}"]
        header += [f"alpha_closed_{party}", f"beta_closed_{party}"]
    header += [
        "averting_sustainable_model",
        "self_enforcing_model",
        "averting_sustainable_closed",
        "self_enforcing_closed",
        "error",
    ]

    base = dump_bundle(bundle)
    rows = []
    for value in values:
        row: list = [float(value)]
        try:
            data_override = f"{key}={format_csv_value(float(value))}"
            probe = bundle_from_data(base, [data_override])
            equilibrium = solve_equilibrium(probe.scenario, probe.taxes, probe.abatement)
            welfare = national_welfare(probe.scenario, probe.taxes, probe.abatement)
            model = analyze_treaty(probe.scenario, probe.taxes, MODEL_DERIVED)
            closed = analyze_treaty(
                probe.scenario, probe.taxes, CLOSED_FORM, qbar=model.qbar
            )
            row += [float(f) for f in equilibrium.fleets]
            row += [equilibrium.debris.stock, equilibrium.debris.survival]
            row += [float(w) for w in welfare.welfare]
            row += [
                model.qbar,
                required_abatement(probe.scenario, probe.taxes, mode=STATIC),
            ]
            for party in range(parties):
                row += [
                    model.coefficients[party].alpha,
                    model.coefficients[party].beta,
                    closed.coefficients[party].alpha,
                    closed.coefficients[party].beta,
                ]
            row += [
                model.averting_sustainable,
                model.self_enforcing,
                closed.averting_sustainable,
                closed.self_enforcing,
                "",
            ]
        except OrbitUseError as error:
            pad = len(header) - 2
            row += [float("nan")] * pad
            row += [type(error).__name__]
        rows.append(row)
    return header, rows


def execute(config: RunConfig) -> int:
    """Run one command; returns the process exit code."""
    try:
        bundle = load_scenario(config.scenario_path, config.overrides)
    except (ScenarioParseError, ScenarioValidationError, OverrideError) as error:
        sys.stderr.write(json.dumps(_error_object(error)) + "\n")
        return EXIT_VALIDATION

    if config.strict:
        flags = check_assumptions(bundle.scenario, bundle.taxes)
        if not flags.bounded_marginal_risk or not all(flags.no_crowding_out):
            sys.stderr.write(
                json.dumps(
                    {
                        "error": "AssumptionViolation",
                        "message": "structural assumptions violated under --strict",
                        "no_crowding_out": [bool(f) for f in flags.no_crowding_out],
                        "bounded_marginal_risk": bool(flags.bounded_marginal_risk),
                    }
                )
                + "\n"
            )
            return EXIT_ASSUMPTION

    try:
        if config.command == "solve":
            report = _solve_report(bundle)
            _emit(_report_text(report, config.output_format), config.out)
            return EXIT_OK
        if config.command == "regulate":
            report, converged = _regulate_report(bundle)
            _emit(_report_text(report, config.output_format), config.out)
            return EXIT_OK if converged else EXIT_NO_CONVERGENCE
        if config.command == "treaty":
            report = _treaty_report(bundle)
            _emit(_report_text(report, config.output_format), config.out)
            return EXIT_OK
        if config.command == "sweep":
            header, rows = _sweep_rows(bundle, config.sweep_axis)
            if config.output_format == "json":
                payload = [dict(zip(header, row)) for row in rows]
                _emit(json.dumps(payload, indent=2), config.out)
            else:
                _emit(rows_to_csv(header, rows), config.out)
            return EXIT_OK
        if config.command == "verify":
            if config.seed is None:
                sys.stderr.write(
                    json.dumps(
                        {
                            "error": "MissingSeed",
                            "message": "verify requires --seed for reproducible batches",
                        }
                    )
                    + "\n"
                )
                return EXIT_VALIDATION
            reports = run_verification(
                bundle.scenario,
                bundle.taxes,
                bundle.abatement,
                seed=config.seed,
                random_count=config.random_count,
            )
            digest = {
                "seed": config.seed,
                "reports": [dataclasses.asdict(r) for r in reports],
            }
            for item in reports:
                status = "PASS" if item.passed else "FAIL"
                sys.stdout.write(
                    f"{status} {item.target} max_residual={item.max_residual:.3e} "
                    f"counterexamples={len(item.counterexamples)}\n"
                )
            _emit(json.dumps(digest, indent=2, default=str), config.out)
            return EXIT_OK if all(r.passed for r in reports) else EXIT_ERROR
        raise ValueError(f"unknown command {config.command!r}")
    except NoConvergenceError as error:
        sys.stderr.write(json.dumps(_error_object(error)) + "\n")
        return EXIT_NO_CONVERGENCE
    except OrbitUseError as error:
        sys.stderr.write(json.dumps(_error_object(error)) + "\n")
        return EXIT_ERROR


def _parse_sweep(raw: str) -> tuple[str, float, float, int]:
    parts = raw.split(":")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("sweep must look like param:from:to:steps")
    key, start, stop, steps = parts[0], float(parts[1]), float(parts[2]), int(parts[3])
    if steps < 2:
        raise argparse.ArgumentTypeError("sweep needs at least 2 steps")
    return key, start, stop, steps


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="orbituse",
        description="Orbit-use equilibria, regulatory competition, and treaties.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "regulate", "treaty", "sweep", "verify"):
        sub = subparsers.add_parser(name)
        sub.add_argument("--scenario", required=True, help="path to a scenario JSON file")
        sub.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a loaded value (repeatable)",
        )
        sub.add_argument("--format", dest="output_format", choices=("json", "csv"), default="json")
        sub.add_argument("--out", default=None, help="write the report to this path")
        sub.add_argument("--strict", action="store_true", help="assumption violations become failures")
        sub.add_argument("--seed", type=int, default=None, help="seed for randomized work (required by verify)")
        if name == "sweep":
            sub.add_argument("--sweep", required=True, type=_parse_sweep, metavar="PARAM:FROM:TO:STEPS")
        if name == "verify":
            sub.add_argument("--random-count", type=int, default=40)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = RunConfig(
        command=args.command,
        scenario_path=args.scenario,
        overrides=args.overrides,
        sweep_axis=getattr(args, "sweep", None),
        output_format=args.output_format,
        strict=args.strict,
        out=args.out,
        seed=getattr(args, "seed", None),
        random_count=getattr(args, "random_count", 40),
    )
    return execute(config)


if __name__ == "__main__":
    sys.exit(main())
