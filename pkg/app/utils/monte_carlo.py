"""
Monte Carlo sweeps over seeds, epsilons, droop onsets or forced
resolution delays.

Runs are independent and may execute in a process pool; results are
sorted by (sweep key, seed) before aggregation so the aggregate does not
depend on the order in which runs finish or were listed.
"""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.config import settings
from app.models.report import Histogram, SweepReport, SweepRun
from app.models.scenario import Scenario, SweepSpec
from app.utils import stimulus
from app.utils.runner import execute
from app.utils.scenario_loader import ScenarioError, scenario_hash, with_value

logger = logging.getLogger(__name__)

HISTOGRAM_BINS = 20


@dataclass(frozen=True)
class SweepPoint:
    key: Union[int, float]
    scenario: Scenario
    seed: int


def _delay_range(text: str) -> Tuple[Union[int, str], ...]:
    parts = [p.strip() for p in text.split(":")]
    if len(parts) != 3:
        raise ValueError("expected start:end:step")
    return tuple(int(p) if p.isdigit() else p for p in parts)


def parse_sweep(kind: str, text: str, instance: Optional[str] = None) -> SweepSpec:
    """
    Build a sweep from its command-line form: "A..B" seeds,
    "0,0.01,0.02" epsilons, "start:end:step" onsets or resolution delays.
    """
    try:
        if kind == "seeds":
            start, _, stop = text.partition("..")
            return SweepSpec(kind="seeds", seeds=(int(start), int(stop or start)))
        if kind == "epsilon":
            return SweepSpec(kind="epsilon", epsilon=[float(v) for v in text.split(",") if v.strip()])
        if kind == "onset":
            return SweepSpec(kind="onset", onset=_delay_range(text))
        if kind == "resolution":
            return SweepSpec(kind="resolution", resolution=_delay_range(text), instance=instance)
    except ValueError as e:
        raise ScenarioError(f"Invalid {kind} sweep '{text}'", [(kind, str(e))]) from None
    raise ScenarioError(f"Unknown sweep kind '{kind}'", [("sweep", "expected seeds, epsilon, onset or resolution")])


def _ticks_range(scenario: Scenario, field: str, bounds) -> range:
    start, stop, step = (scenario.ticks(v) for v in bounds)
    if step < 1 or stop < start:
        raise ScenarioError(f"Invalid {field} range", [(field, f"start {start}, end {stop}, step {step}")])
    return range(start, stop + 1, step)


def _resolution_points(scenario: Scenario, spec: SweepSpec, seed: int) -> List[SweepPoint]:
    forced = [f.model_dump(mode="json") for f in scenario.timing.forced]
    matches = [i for i, f in enumerate(forced) if spec.instance is None or f["instance"] == spec.instance]
    if not matches:
        target = f"'{spec.instance}'" if spec.instance else "any instance"
        raise ScenarioError("Resolution sweeps need a forced resolution",
                            [("timing.forced", f"no forced resolution for {target}")])
    index = matches[-1]
    points = []
    for delay in _ticks_range(scenario, "resolution", spec.resolution):
        entries = [dict(f) for f in forced]
        entries[index]["delay"] = delay
        points.append(SweepPoint(delay, with_value(scenario, "timing.forced", entries), seed))
    return points


def sweep_points(scenario: Scenario, spec: SweepSpec) -> List[SweepPoint]:
    base_seed = stimulus.resolve_seed(scenario)
    if spec.kind == "seeds":
        start, stop = spec.seeds
        return [SweepPoint(seed, scenario, seed) for seed in range(start, stop + 1)]
    if spec.kind == "epsilon":
        return [
            SweepPoint(eps, with_value(scenario, "timing.epsilon", eps), base_seed)
            for eps in sorted(set(spec.epsilon))
        ]
    if spec.kind == "resolution":
        return _resolution_points(scenario, spec, base_seed)
    if scenario.stimulus.droop_in is not None:
        raise ScenarioError("Onset sweeps need a droop episode",
                            [("stimulus.droop_in", "a direct droop waveform cannot be swept")])
    return [
        SweepPoint(onset, with_value(scenario, "stimulus.droop.onset", onset), base_seed)
        for onset in _ticks_range(scenario, "onset", spec.onset)
    ]


def run_point(point: SweepPoint) -> SweepRun:
    """One sweep run; module level so process pools can pickle it."""
    report, _ = execute(point.scenario, point.seed)
    onset = point.scenario.stimulus.droop.onset if point.scenario.stimulus.droop is not None else None
    cases: Dict[str, int] = {}
    fractional: List[int] = []
    for element in report.elements:
        for case, count in element.cases.items():
            cases[case] = cases.get(case, 0) + count
        fractional.extend(element.fractional_delays)
    return SweepRun(
        key=point.key,
        seed=point.seed,
        epsilon=point.scenario.timing.epsilon,
        onset=point.scenario.ticks(onset) if onset is not None else None,
        passed=report.passed,
        finding_counts=report.finding_counts,
        cases=cases,
        fractional_delays=fractional,
        resolution_delays=[m.resolution_delay for m in report.metastability],
    )


def histogram(values: Sequence[int], value_range: Optional[Tuple[float, float]] = None) -> Histogram:
    if not values:
        return Histogram()
    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=HISTOGRAM_BINS, range=value_range)
    return Histogram(edges=[float(e) for e in edges], counts=[int(c) for c in counts])


def _add(total: Dict[str, int], counts: Dict[str, int]) -> None:
    for name, count in counts.items():
        total[name] = total.get(name, 0) + count


def aggregate(scenario: Scenario, kind: str, runs: Iterable[SweepRun]) -> SweepReport:
    runs = sorted(runs, key=lambda r: (r.key, r.seed))
    finding_counts: Dict[str, int] = {}
    case_counts: Dict[str, int] = {}
    fractional: List[int] = []
    resolution: List[int] = []
    for run in runs:
        _add(finding_counts, run.finding_counts)
        _add(case_counts, run.cases)
        fractional.extend(run.fractional_delays)
        resolution.extend(run.resolution_delays)

    quarter = scenario.ticks(scenario.delay_element.quarter_delay)
    upper = max([quarter * (1 + scenario.timing.epsilon)] + fractional)
    failing = [r.key for r in runs if not r.passed]
    passed = sum(1 for r in runs if r.passed)
    return SweepReport(
        scenario=scenario.name,
        scenario_hash=scenario_hash(scenario),
        sweep=kind,
        runs=runs,
        passed=passed,
        failed=len(runs) - passed,
        pass_matrix={str(r.key): r.passed for r in runs},
        finding_counts=finding_counts,
        case_counts=case_counts,
        fractional_delay_histogram=histogram(fractional, (min([0] + fractional), upper)),
        fractional_delay_range=[min(fractional), max(fractional)] if fractional else None,
        resolution_delay_histogram=histogram(resolution),
        resolution_delay_mean=float(np.mean(resolution)) if resolution else None,
        first_failing_epsilon=float(min(failing)) if kind == "epsilon" and failing else None,
    )


def run_sweep(
    scenario: Scenario,
    spec: SweepSpec,
    *,
    workers: Optional[int] = None,
    limit: Optional[int] = None,
) -> SweepReport:
    """
    Run every point of the sweep and aggregate.

    Args:
        workers: Process pool size, defaults to settings.SWEEP_WORKERS;
            1 runs in this process
        limit: Refuse sweeps with more runs than this

    Raises:
        ScenarioError: Malformed sweep or more runs than limit
        SimulationError: The first run that failed to simulate
    """
    points = sweep_points(scenario, spec)
    if limit is not None and len(points) > limit:
        raise ScenarioError("Sweep too large", [("sweep", f"{len(points)} runs exceed the limit of {limit}")])
    workers = workers or settings.SWEEP_WORKERS
    logger.info(f"Sweeping '{scenario.name}' over {len(points)} {spec.kind} point(s) with {workers} worker(s)")
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(run_point, points, chunksize=max(1, len(points) // (4 * workers))))
    else:
        runs = [run_point(p) for p in points]
    report = aggregate(scenario, spec.kind, runs)
    logger.info(f"Sweep of '{scenario.name}': {report.passed} passed, {report.failed} failed")
    return report
