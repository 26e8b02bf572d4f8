"""Command-line interface: run scenarios, emit CSVs, reports and figures.

Exit codes: 0 when every requested check passes, 1 when a check fails,
2 on input errors (arguments, scenario files, output paths), 3 when the
integration itself breaks down.
"""
from __future__ import annotations

import argparse
import re
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from .analysis import equilibrium_distance, fit_envelope_constants, trajectory_deviations
from .diagnostics import DiagnosticsSeries, diagnostics_series
from .errors import IntegrationError, ScenarioError
from .integrate import SCHEMES, Trajectory, integrate
from .reporting import (
    CheckResult,
    check_conservation,
    check_deviation,
    check_entropy,
    check_envelope,
    check_nonmonotonicity,
    deviation_csv_text,
    diagnostics_csv_text,
    render_deviation_figure,
    render_diagnostics_figure,
    render_state_figure,
    report_text,
    trajectory_csv_text,
)
from .scenarios import (
    VALID_CHECKS,
    Scenario,
    get_builtin,
    list_builtins,
    load_scenario,
)
from .topology import ConstantTopology

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT_ERROR = 2
EXIT_INTEGRATION_ERROR = 3


@dataclass(frozen=True)
class RunResult:
    """Everything a completed run produced, for callers and tests."""

    scenario: str
    exit_code: int
    T0: float
    results: tuple[CheckResult, ...]
    files: tuple[Path, ...]
    trajectories: dict[str, Trajectory]
    diagnostics: dict[str, DiagnosticsSeries]


def _safe_stem(name: str) -> str:
    stem = re.sub(r"[^-_.a-zA-Z0-9]+", "-", name).strip("-.")
    return stem or "scenario"


def run(
    scenario: Scenario,
    out_dir: str | Path = ".",
    seed: int | None = None,
    figures: bool = True,
) -> RunResult:
    """Integrate a scenario, write its artifacts, evaluate its checks.

    Emits, per model run, a trajectory CSV and a diagnostics CSV; when both
    models run, also a deviation CSV comparing them record by record.  The
    verification report is plain text with one line per check.  Raises
    ScenarioError for input problems, IntegrationError when the dynamics
    break down, OSError when the output directory is unusable.
    """
    state, T0 = scenario.realize(seed)
    if "deviation" in scenario.checks:
        if scenario.model != "both":
            raise ScenarioError(
                "the deviation check compares both models; set model = 'both'"
            )
        if not isinstance(scenario.topology, ConstantTopology):
            raise ScenarioError("the deviation check needs a constant topology")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = _safe_stem(scenario.name)

    trajectories: dict[str, Trajectory] = {}
    diagnostics: dict[str, DiagnosticsSeries] = {}
    files: list[Path] = []
    for model in scenario.models:
        trajectory = integrate(model, state, scenario.topology, T0, scenario.config)
        series = diagnostics_series(trajectory, scenario.topology, T0)
        trajectories[model] = trajectory
        diagnostics[model] = series
        traj_path = out / f"{stem}_{model}_trajectory.csv"
        traj_path.write_text(trajectory_csv_text(trajectory))
        diag_path = out / f"{stem}_{model}_diagnostics.csv"
        diag_path.write_text(diagnostics_csv_text(series))
        files.extend([traj_path, diag_path])

    deviations = None
    if scenario.model == "both":
        deviations = trajectory_deviations(
            trajectories["pbcs"], trajectories["kbcs"], T0
        )
        dev_path = out / f"{stem}_deviation.csv"
        dev_path.write_text(deviation_csv_text(trajectories["pbcs"].times, *deviations))
        files.append(dev_path)

    results: list[CheckResult] = []
    for check in scenario.checks:
        if check == "conservation":
            results.extend(
                check_conservation(model, diagnostics[model])
                for model in scenario.models
            )
        elif check == "entropy":
            results.extend(
                check_entropy(model, diagnostics[model]) for model in scenario.models
            )
        elif check == "envelope":
            results.extend(
                check_envelope(model, trajectories[model], scenario.topology, T0)
                for model in scenario.models
            )
        elif check == "nonmonotonicity":
            results.extend(
                check_nonmonotonicity(model, trajectories[model], scenario.topology)
                for model in scenario.models
            )
        elif check == "deviation":
            assert deviations is not None
            du, dE, _ = deviations
            times = trajectories["pbcs"].times
            eps = equilibrium_distance(state, T0)
            a_min = scenario.topology.min_weight()
            constants = None
            if eps <= 1.0 and a_min > 0.0:
                C_sup_u, C_fit_u = fit_envelope_constants(times, du.max(axis=1), a_min, eps)
                C_sup_E, C_fit_E = fit_envelope_constants(times, dE.max(axis=1), a_min, eps)
                constants = (C_sup_u, C_fit_u, C_sup_E, C_fit_E)
            results.append(check_deviation(times, du, dE, eps, a_min, constants))

    report = report_text(
        scenario.name,
        scenario.model,
        scenario.topology,
        T0,
        scenario.t0_mode,
        {m: (trajectories[m], diagnostics[m]) for m in scenario.models},
        results,
    )
    report_path = out / f"{stem}_report.txt"
    report_path.write_text(report)
    files.append(report_path)

    if figures:
        for model in scenario.models:
            state_path = out / f"{stem}_{model}_state.png"
            render_state_figure(
                state_path, f"{scenario.name} — {model}", trajectories[model], T0
            )
            diag_path = out / f"{stem}_{model}_diagnostics.png"
            render_diagnostics_figure(
                diag_path, f"{scenario.name} — {model}", diagnostics[model]
            )
            files.extend([state_path, diag_path])
        if deviations is not None:
            dev_fig = out / f"{stem}_deviation.png"
            render_deviation_figure(
                dev_fig,
                f"{scenario.name} — model gap",
                trajectories["pbcs"].times,
                deviations[0],
                deviations[1],
            )
            files.append(dev_fig)

    failed = any(not r.passed for r in results)
    return RunResult(
        scenario=scenario.name,
        exit_code=EXIT_CHECK_FAILED if failed else EXIT_OK,
        T0=T0,
        results=tuple(results),
        files=tuple(files),
        trajectories=trajectories,
        diagnostics=diagnostics,
    )


def _resolve_scenario(args: argparse.Namespace) -> Scenario:
    target: str = args.target
    if target.startswith("builtin:"):
        scenario = get_builtin(target[len("builtin:"):])
    else:
        scenario = load_scenario(target)
    config_updates = {}
    if args.dt is not None:
        config_updates["dt"] = args.dt
    if args.t_end is not None:
        config_updates["t_end"] = args.t_end
    if args.scheme is not None:
        config_updates["scheme"] = args.scheme
    updates: dict = {}
    if config_updates:
        updates["config"] = replace(scenario.config, **config_updates)
    if args.model is not None:
        updates["model"] = args.model
    if args.check:
        updates["checks"] = tuple(args.check)
    return replace(scenario, **updates) if updates else scenario


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermoflock",
        description=(
            "Simulate thermo-mechanical flocking mixtures and verify their "
            "analytical properties."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_parser = sub.add_parser(
        "run", help="integrate a scenario and emit CSVs, a report and figures"
    )
    run_parser.add_argument(
        "target",
        metavar="scenario",
        help="path to a scenario JSON file, or builtin:NAME",
    )
    run_parser.add_argument(
        "--model", choices=("pbcs", "kbcs", "both"), help="override the scenario's model"
    )
    run_parser.add_argument(
        "--out", default=".", metavar="DIR", help="output directory (default: .)"
    )
    run_parser.add_argument("--dt", type=float, help="override the time step")
    run_parser.add_argument(
        "--t-end", type=float, dest="t_end", help="override the final time"
    )
    run_parser.add_argument(
        "--scheme", choices=SCHEMES, help="override the integration scheme"
    )
    run_parser.add_argument(
        "--check",
        action="append",
        choices=VALID_CHECKS,
        metavar="NAME",
        help="replace the scenario's checks (repeatable); "
        f"one of {', '.join(VALID_CHECKS)}",
    )
    run_parser.add_argument(
        "--seed", type=int, help="seed for scenarios with random initial data"
    )
    run_parser.add_argument(
        "--no-figures", action="store_true", help="skip figure rendering"
    )

    sub.add_parser("list-builtins", help="list the compiled-in scenarios")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-builtins":
        for name, description in list_builtins():
            print(f"{name}: {description}")
        return EXIT_OK
    try:
        scenario = _resolve_scenario(args)
        result = run(
            scenario,
            out_dir=args.out,
            seed=args.seed,
            figures=not args.no_figures,
        )
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except IntegrationError as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION_ERROR
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    report_path = next(p for p in result.files if p.suffix == ".txt")
    sys.stdout.write(report_path.read_text())
    return result.exit_code
