"""
Command line entry point: droop-sim validate | run | sweep | oracle.

Exit status is 0 when the scenario is valid (validate), produced no
findings (run, sweep) or matched every reference model (oracle); 1 when
it did not, 2 for unusable scenario documents and 3 when the simulation
itself failed.
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from app.core.config import settings
from app.sim.errors import SimulationError
from app.utils.monte_carlo import parse_sweep, run_sweep
from app.utils.oracle_check import cross_check
from app.utils.runner import artifact_dir, run_scenario
from app.utils.scenario_loader import ScenarioError, load_scenario_file, scenario_hash
from app.utils import stimulus

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_INVALID = 2
EXIT_SIMULATION = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="droop-sim", description="Droop-adaptive clock timing simulator.")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="Logging level (default from LOG_LEVEL)")
    commands = parser.add_subparsers(dest="command", required=True)

    validate = commands.add_parser("validate", help="Check a scenario document and print its hash")
    validate.add_argument("scenario", type=Path)

    run = commands.add_parser("run", help="Simulate a scenario and write its artifacts")
    run.add_argument("scenario", type=Path)
    run.add_argument("--seed", type=int, default=None, help="Override the scenario's seed")
    run.add_argument("--out", type=Path, default=None, help=f"Artifact root (default {settings.ARTIFACTS_DIR})")

    sweep = commands.add_parser("sweep", help="Monte Carlo sweep over seeds, epsilons, droop onsets or resolution delays")
    sweep.add_argument("scenario", type=Path)
    kind = sweep.add_mutually_exclusive_group(required=True)
    kind.add_argument("--seeds", metavar="A..B", help="Inclusive seed range")
    kind.add_argument("--epsilon", metavar="LIST", help="Comma-separated epsilon values")
    kind.add_argument("--onset", metavar="START:END:STEP", help="Droop onset range, delays in scenario syntax")
    kind.add_argument("--resolution", metavar="START:END:STEP", help="Delay range of a forced resolution")
    sweep.add_argument("--instance", default=None, help="Forced resolution swept by --resolution (default: the last one)")
    sweep.add_argument("--workers", type=int, default=None, help="Process pool size (default SWEEP_WORKERS)")
    sweep.add_argument("--out", type=Path, default=None, help="Where to write the aggregate report")

    oracle = commands.add_parser("oracle", help="Cross-check idealized simulations against reference models")
    oracle.add_argument("scenario", type=Path)
    return parser


def _print_scenario_error(e: ScenarioError) -> None:
    print(f"error: {e.message}", file=sys.stderr)
    for where, what in e.diagnostics:
        print(f"  {where}: {what}", file=sys.stderr)


def cmd_validate(args: argparse.Namespace) -> int:
    scenario = load_scenario_file(args.scenario)
    print(f"{args.scenario}: valid {scenario.topology} scenario '{scenario.name}', hash {scenario_hash(scenario)}")
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    scenario = load_scenario_file(args.scenario)
    outcome = run_scenario(scenario, args.seed, out_dir=args.out)
    report = outcome.report
    verdict = "PASS" if report.passed else "FAIL"
    print(f"{verdict} '{report.scenario}' seed {report.seed}: {report.output_cycles} output cycles, "
          f"{len(report.findings)} finding(s)")
    for kind, count in sorted(report.finding_counts.items()):
        print(f"  {kind}: {count}")
    print(f"artifacts: {outcome.directory}")
    return outcome.exit_code


def cmd_sweep(args: argparse.Namespace) -> int:
    scenario = load_scenario_file(args.scenario)
    if args.seeds is not None:
        spec = parse_sweep("seeds", args.seeds)
    elif args.epsilon is not None:
        spec = parse_sweep("epsilon", args.epsilon)
    elif args.onset is not None:
        spec = parse_sweep("onset", args.onset)
    else:
        spec = parse_sweep("resolution", args.resolution, args.instance)
    report = run_sweep(scenario, spec, workers=args.workers)
    out = args.out or artifact_dir(scenario, stimulus.resolve_seed(scenario), report.scenario_hash) / f"sweep-{spec.kind}.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.model_dump_json(indent=2), encoding="utf-8")
    print(f"{report.passed} passed, {report.failed} failed over {len(report.runs)} {spec.kind} run(s)")
    if report.case_counts:
        print("  cases: " + ", ".join(f"{k}={v}" for k, v in sorted(report.case_counts.items())))
    if report.fractional_delay_range:
        lo, hi = report.fractional_delay_range
        print(f"  fractional delays: {lo} .. {hi} fs")
    if report.first_failing_epsilon is not None:
        print(f"  first failing epsilon: {report.first_failing_epsilon}")
    print(f"report: {out}")
    return EXIT_OK if report.all_passed else EXIT_FINDINGS


def cmd_oracle(args: argparse.Namespace) -> int:
    scenario = load_scenario_file(args.scenario)
    report = cross_check(scenario)
    for c in report.comparisons:
        label = f"{c.model} {c.case}".strip()
        print(f"{'ok ' if c.mismatch is None else 'BAD'} {label}: {c.net}" + (f" ({c.mismatch})" if c.mismatch else ""))
    print(json.dumps({"passed": report.passed, "compared": len(report.comparisons)}))
    return EXIT_OK if report.passed else EXIT_FINDINGS


COMMANDS = {"validate": cmd_validate, "run": cmd_run, "sweep": cmd_sweep, "oracle": cmd_oracle}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.INFO), format=settings.LOG_FORMAT)
    try:
        return COMMANDS[args.command](args)
    except ScenarioError as e:
        _print_scenario_error(e)
        return EXIT_FINDINGS if args.command == "validate" else EXIT_INVALID
    except SimulationError as e:
        logger.error(f"Simulation failed: {type(e).__name__}: {e}")
        return EXIT_SIMULATION


if __name__ == "__main__":
    sys.exit(main())
