"""
Scenario runs: build the configured topology, simulate it, apply the
checkers and write the artifacts.

Each run writes report.json, trace.vcd and run.log into
<ARTIFACTS_DIR>/<scenario hash>/ (with a -seed<N> suffix when the seed
was overridden). A run passes iff it produced no findings.
"""
import logging
import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple, Union

from app.core.config import settings
from app.models.report import (
    AccumulatorEntry,
    AccumulatorSummary,
    CycleEntry,
    DetectorSummary,
    DiagnosticEntry,
    ElementSummary,
    Finding,
    MetastabilityEntry,
    RunReport,
)
from app.models.scenario import Scenario
from app.sim.checkers import (
    ViolationReport,
    check_envelope,
    check_fixed_delay,
    check_glitch,
    check_masking_transitions,
    check_monotone_delay,
    check_no_x,
    check_pipeline,
    edge_delays,
    summarize,
)
from app.sim.delay_element import (
    ChainNets,
    DelayElementReport,
    ElementNets,
    build_chain,
    build_delay_element,
    chain_reports,
    clock_preconditions,
    element_report,
)
from app.sim.droop_detector import DetectorNets, DroopDetectorConfig, build_droop_detector
from app.sim.errors import InfeasibleShaperError, SimulationError
from app.sim.kernel import Diagnostic, MetastabilityEvent, Netlist, Simulator
from app.sim.logic import L0, L1
from app.sim.phase_accumulator import (
    AccumulatorNets,
    AccumulatorReport,
    accumulator_report,
    build_phase_accumulator,
    flag_input_breaches,
)
from app.sim.shaper import ShaperStages, analyze_constraints, build_shaper
from app.sim.system import SYSTEM_CLOCK, SystemConfig, build_system, reset_waveform
from app.sim.timing import TimingProfile, mtbf_exponent, mtbf_stages
from app.sim.waveform import Waveform
from app.utils import stimulus
from app.utils.scenario_loader import scenario_hash
from app.utils.vcd_io import dump_vcd

logger = logging.getLogger(__name__)

# high time of the element's shaper input: fast path T/2 plus the quarter delay
ELEMENT_SHAPER_INPUT_HIGH = Fraction(3, 4)


@dataclass
class RunContext:
    """A scenario resolved to ticks, timing and checker limits."""
    scenario: Scenario
    seed: int
    timing: TimingProfile
    t_end: int
    tolerance: int
    min_pulse: int

    @classmethod
    def create(cls, scenario: Scenario, seed: Optional[int] = None) -> "RunContext":
        seed = stimulus.resolve_seed(scenario, seed)
        timing = stimulus.build_timing(scenario, seed)
        return cls(
            scenario=scenario,
            seed=seed,
            timing=timing,
            t_end=stimulus.simulation_end(scenario),
            tolerance=stimulus.tolerance(scenario, timing),
            min_pulse=scenario.ticks(scenario.checkers.min_pulse),
        )

    @property
    def period(self) -> int:
        return self.scenario.period_ticks

    @property
    def epsilon(self) -> float:
        return 0.0 if self.scenario.idealized else self.scenario.timing.epsilon

    @property
    def checks(self):
        return self.scenario.checkers

    @property
    def quarter(self) -> int:
        return self.scenario.ticks(self.scenario.delay_element.quarter_delay)

    @property
    def quarter_max(self) -> int:
        return int(math.ceil(self.quarter * (1 + self.epsilon)))

    @property
    def spread(self) -> int:
        """Largest difference between the quarter delays of two elements."""
        return int(math.ceil(2 * self.epsilon * self.quarter))

    @property
    def case_tolerance(self) -> int:
        return 2 * self.timing.gate.nominal_rise

    def scaled(self, nominal: int) -> Tuple[int, int]:
        """(1-eps, 1+eps) bounds of a nominal duration widened by the tolerance."""
        return (
            int(nominal * (1 - self.epsilon)) - self.tolerance,
            int(math.ceil(nominal * (1 + self.epsilon))) + self.tolerance,
        )


@dataclass
class TopologyRun:
    waveforms: Dict[str, Waveform]
    output: str
    findings: List[ViolationReport]
    metastability: List[MetastabilityEvent]
    diagnostics: List[Diagnostic]
    elements: List[DelayElementReport] = field(default_factory=list)
    accumulator: Optional[AccumulatorReport] = None
    detector: Optional[DetectorSummary] = None
    shaper_analysis: Optional[Dict[str, Any]] = None
    mtbf: Optional[Tuple[float, float]] = None


@dataclass
class RunOutcome:
    report: RunReport
    waveforms: Dict[str, Waveform]
    directory: Optional[Path] = None

    @property
    def exit_code(self) -> int:
        return 0 if self.report.passed else 1


# -- checker composition -------------------------------------------------


def clock_checks(
    ctx: RunContext,
    w: Waveform,
    net: str,
    *,
    high: Tuple[int, int],
    low: Optional[Tuple[int, int]] = None,
    shifts: Optional[Dict[int, int]] = None,
    allowed_extra: Tuple[int, int] = (0, 0),
) -> List[ViolationReport]:
    """Glitch, envelope and X checks of one clock net."""
    findings: List[ViolationReport] = []
    if ctx.checks.glitch:
        findings.extend(check_glitch(w, ctx.min_pulse, net))
    if ctx.checks.envelope:
        low_lo, low_hi = low if low is not None else (None, None)
        findings.extend(check_envelope(
            w, ctx.period, high[0], high[1], net=net, low_lo=low_lo, low_hi=low_hi,
            shifts=shifts, allowed_extra=allowed_extra, tolerance=ctx.tolerance,
        ))
    if ctx.checks.no_x:
        findings.extend(check_no_x(w, net))
    return findings


def masking_checks(ctx: RunContext, nets: ElementNets, waves: Dict[str, Waveform],
                   events: Sequence[MetastabilityEvent]) -> List[ViolationReport]:
    gated = waves[nets.net("CLK_GATED")]
    master, slave = f"{nets.prefix}.master", f"{nets.prefix}.slave_clk"
    findings = check_masking_transitions(
        {nets.net("M_Q0"): waves[nets.net("M_Q0")], nets.net("M_Q1"): waves[nets.net("M_Q1")]},
        gated, ctx.timing.c2q(master), transparent_high=True,
        events=[e for e in events if e.instance == master],
    )
    findings.extend(check_masking_transitions(
        {nets.net("S_Q0"): waves[nets.net("S_Q0")]},
        gated, ctx.timing.c2q(slave), transparent_high=False,
        events=[e for e in events if e.instance == slave],
    ))
    return findings


def element_checks(
    ctx: RunContext,
    elements: Sequence[ElementNets],
    reports: Sequence[DelayElementReport],
    waves: Dict[str, Waveform],
    events: Sequence[MetastabilityEvent],
    *,
    recovery: bool,
) -> List[ViolationReport]:
    """
    Per-element checks: output clock, fixed delay per sampled level,
    masking transitions and X-freedom of the masking outputs.

    With recovery set, an output gap may also shrink by one quarter delay
    (the droop bit returned to 1 or left the last element).
    """
    width = stimulus.shaper_stages(ctx.scenario).pulse_width
    extra = (-(ctx.quarter_max + ctx.spread) if recovery else -ctx.spread, ctx.quarter_max + ctx.spread)
    findings: List[ViolationReport] = []
    for nets, report in zip(elements, reports):
        findings.extend(clock_checks(ctx, waves[nets.clk_out], nets.clk_out,
                                     high=ctx.scaled(width), allowed_extra=extra))
        if ctx.checks.fixed_delay:
            for level in (L1, L0):
                group = [r for r in report.cycles if r.sampled == level]
                findings.extend(check_fixed_delay(
                    [r.delay for r in group], ctx.tolerance, nets.clk_out, [r.rising_out for r in group],
                ))
        if ctx.checks.masking:
            findings.extend(masking_checks(ctx, nets, waves, events))
        if ctx.checks.no_x:
            for name in ("M_Q0", "M_Q1", "S_Q0"):
                findings.extend(check_no_x(waves[nets.net(name)], nets.net(name)))
    return findings


def monotone_checks(ctx: RunContext, clk_in: Waveform, clk_out: Waveform, net: str,
                    until: Optional[int]) -> List[ViolationReport]:
    """Input-to-output delay of a stand-alone element or chain never shrinks before the droop releases."""
    pairs = edge_delays(clk_in.rising_edges, clk_out.rising_edges)
    if until is not None:
        pairs = [(i, o) for i, o in pairs if i <= until]
    return check_monotone_delay(
        [o for _, o in pairs], [i for i, _ in pairs],
        tolerance=ctx.tolerance + ctx.spread, max_step=ctx.quarter_max, net=net,
    )


def pipeline_checks(ctx: RunContext, chain: ChainNets, reports: Sequence[DelayElementReport],
                    waves: Dict[str, Waveform], droop: Waveform) -> List[ViolationReport]:
    elements = chain.from_droop_side()
    by_instance = {r.instance: r for r in reports}
    exempt = set()
    for i, nets in enumerate(elements):
        for record in by_instance[nets.prefix].cycles:
            if record.sampled is None:
                exempt.add(record.cycle - 1 - i)
    gate = ctx.timing.gate.nominal_rise
    meta = ctx.timing.masking
    return check_pipeline(
        droop,
        [waves[e.e_out] for e in elements],
        [waves[e.clk_in].rising_edges for e in elements],
        capture_offset=ctx.quarter + 2 * gate,
        sample_offset=ctx.period // 8,
        stable_margin=meta.setup + meta.hold + ctx.tolerance + ctx.spread + 2 * gate,
        exempt_cycles=exempt,
    )


def accumulator_checks(ctx: RunContext, nets: AccumulatorNets, waves: Dict[str, Waveform],
                       report: AccumulatorReport) -> List[ViolationReport]:
    """High time (1+-eps)T/2, low time up to (1+eps)3T/4, T/4 extra spacing exactly where counted."""
    half, quarter = ctx.period // 2, ctx.period // 4
    shifts = {c.cycle: quarter for c in report.cycles if c.shifted}
    findings = clock_checks(
        ctx, waves[nets.clk_out], nets.clk_out,
        high=ctx.scaled(half), low=(ctx.scaled(half)[0], ctx.scaled(half + quarter)[1]), shifts=shifts,
    )
    if ctx.checks.select_window:
        findings.extend(report.findings)
    if ctx.checks.no_x:
        for name in nets.select:
            findings.extend(check_no_x(waves[name], name))
    return findings


def note_clock_preconditions(ctx: RunContext, sim: Simulator, clk: Waveform, net: str) -> None:
    for message in clock_preconditions(clk, ctx.period, ctx.epsilon, net):
        sim.diagnose(net, "precondition", message)
        logger.warning(f"Input clock hypothesis breached: {message}")


def shaper_analysis(stages: ShaperStages, period: int, input_high: Fraction) -> Dict[str, Any]:
    """Constraint analysis of the shaper in use; an infeasible design is reported, not raised."""
    try:
        analysis = analyze_constraints(stages, input_high, period=period)
        feasible = True
    except InfeasibleShaperError as e:
        analysis = e.report
        feasible = False
        logger.warning(f"Pulse shaper in use is infeasible: {e}")
    return {
        "feasible": feasible,
        "input_high_max": str(input_high),
        "max_epsilon": float(analysis.max_epsilon) if analysis.max_epsilon is not None else None,
        "max_epsilon_exact": str(analysis.max_epsilon) if analysis.max_epsilon is not None else None,
        "binding_stage": analysis.binding_stage,
        "stages": analysis.report(),
    }


def detector_summary(cfg: DroopDetectorConfig, nets: DetectorNets, waves: Dict[str, Waveform],
                     t_end: int) -> DetectorSummary:
    detections = waves[nets.net("DETECT")].rising_edges
    return DetectorSummary(
        crossover_voltage=cfg.crossover_voltage(),
        crossover_multiplier=cfg.crossover_multiplier,
        detections=len(detections),
        first_detection=detections[0] if detections else None,
        calibrated=waves[nets.net("CALIBRATE")].sample(t_end) == L1,
    )


def chain_mtbf(ctx: RunContext) -> Optional[Tuple[float, float]]:
    """(MTBF in seconds, its log10) of the droop-bit synchronizer chain; None without a capture window."""
    meta = ctx.timing.masking
    window = meta.setup + meta.hold
    if window <= 0:
        return None
    stages = ctx.scenario.chain_length
    seconds = mtbf_stages(meta.tau, window, ctx.period, stages)
    f_clock = 1e15 / ctx.period
    log10 = mtbf_exponent(meta.tau, ctx.period, stages) / math.log(10) - math.log10(
        window * 1e-15 * f_clock * (f_clock / 2)
    )
    return seconds, log10


# -- topologies ----------------------------------------------------------


def simulate(ctx: RunContext, netlist: Netlist) -> Tuple[Simulator, Dict[str, Waveform]]:
    """Add the scenario's recorded nets and run to the end time; '*' records every net."""
    if "*" in ctx.scenario.record:
        netlist.recorded.clear()
    else:
        netlist.record(*ctx.scenario.record)
    sim = Simulator(netlist, ctx.timing, storm_cap=settings.EVENT_STORM_CAP)
    return sim, sim.run_until(ctx.t_end)


def run_pulse_shaper(ctx: RunContext) -> TopologyRun:
    s = ctx.scenario
    stages = stimulus.shaper_stages(s)
    clk = stimulus.module_clock(s)
    netlist = build_shaper(stages, input="CLK_IN", output="CLK_OUT", prefix="shaper", source=clk)
    netlist.record("CLK_IN")
    sim, waves = simulate(ctx, netlist)
    out = waves["CLK_OUT"]
    findings = clock_checks(ctx, out, "CLK_OUT", high=ctx.scaled(stages.pulse_width))
    if ctx.checks.fixed_delay:
        pairs = edge_delays(clk.rising_edges, out.rising_edges)
        findings.extend(check_fixed_delay([o - i for i, o in pairs], ctx.tolerance, "CLK_OUT",
                                          [o for _, o in pairs]))
    analysis = shaper_analysis(stages, ctx.period, Fraction(stimulus.clock_high(s), ctx.period))
    return TopologyRun(waves, "CLK_OUT", findings, sim.metastability, sim.diagnostics, shaper_analysis=analysis)


def run_delay_element(ctx: RunContext) -> TopologyRun:
    s = ctx.scenario
    cfg = stimulus.element_config(s, L1)
    droop = stimulus.droop_bit(s)
    netlist = build_delay_element(cfg, stimulus.module_clock(s), droop, prefix="de")
    sim, waves = simulate(ctx, netlist)
    note_clock_preconditions(ctx, sim, waves["CLK_IN"], "CLK_IN")
    nets = ElementNets("CLK_IN", "DROOP_IN", "CLK_OUT", "E_OUT", "de")
    report = element_report("de", waves["CLK_IN"], waves["CLK_OUT"], waves["de.S_Q0"], waves["E_OUT"],
                            sim.metastability, ctx.period, ctx.case_tolerance)
    release = stimulus.release_time(droop)
    findings = element_checks(ctx, [nets], [report], waves, sim.metastability, recovery=release is not None)
    if ctx.checks.monotone:
        findings.extend(monotone_checks(ctx, waves["CLK_IN"], waves["CLK_OUT"], "CLK_OUT", release))
    return TopologyRun(
        waves, "CLK_OUT", findings, sim.metastability, sim.diagnostics, elements=[report],
        shaper_analysis=shaper_analysis(cfg.shaper, ctx.period, ELEMENT_SHAPER_INPUT_HIGH),
    )


def run_chain(ctx: RunContext) -> TopologyRun:
    s = ctx.scenario
    cfg = stimulus.element_config(s, L1)
    droop = stimulus.droop_bit(s)
    netlist, chain = build_chain(s.chain_length, cfg, stimulus.module_clock(s), droop)
    for nets in chain.elements:
        netlist.record(nets.net("CLK_GATED"), nets.net("M_Q0"), nets.net("M_Q1"))
    sim, waves = simulate(ctx, netlist)
    note_clock_preconditions(ctx, sim, waves[chain.clk_in], chain.clk_in)
    reports = chain_reports(chain, waves, sim.metastability, ctx.period, ctx.case_tolerance)
    release = stimulus.release_time(droop)
    findings = element_checks(ctx, chain.elements, reports, waves, sim.metastability,
                              recovery=release is not None)
    if ctx.checks.monotone:
        findings.extend(monotone_checks(ctx, waves[chain.clk_in], waves[chain.clk_out], chain.clk_out, release))
    if ctx.checks.pipeline:
        findings.extend(pipeline_checks(ctx, chain, reports, waves, waves[chain.droop_in]))
    return TopologyRun(
        waves, chain.clk_out, findings, sim.metastability, sim.diagnostics, elements=reports,
        shaper_analysis=shaper_analysis(cfg.shaper, ctx.period, ELEMENT_SHAPER_INPUT_HIGH),
        mtbf=chain_mtbf(ctx),
    )


def run_phase_accumulator(ctx: RunContext) -> TopologyRun:
    s = ctx.scenario
    nets = AccumulatorNets()
    netlist = build_phase_accumulator(
        stimulus.accumulator_config(s),
        stimulus.accumulator_clock(s, ctx.t_end),
        stimulus.accumulator_input(s),
        reset_waveform(s.ticks(s.stimulus.reset_release)),
        nets,
    )
    sim, waves = simulate(ctx, netlist)
    flag_input_breaches(sim, nets)
    report = accumulator_report(nets, waves, netlist.component(nets.net("counter")), ctx.period)
    findings = accumulator_checks(ctx, nets, waves, report)
    return TopologyRun(waves, nets.clk_out, findings, sim.metastability, sim.diagnostics, accumulator=report)


def run_droop_detector(ctx: RunContext) -> TopologyRun:
    s = ctx.scenario
    cfg = stimulus.detector_config(s)
    nets = DetectorNets()
    sim, waves = simulate(ctx, build_droop_detector(cfg, stimulus.module_clock(s), nets))
    summary = detector_summary(cfg, nets, waves, ctx.t_end)
    return TopologyRun(waves, nets.droop_n, [], sim.metastability, sim.diagnostics, detector=summary)


def run_full_system(ctx: RunContext) -> TopologyRun:
    """
    The closed loop. Element outputs may only grow by one quarter delay per
    gap since bits leaving the chain are taken over by the accumulator, and
    SYS_CLK offsets against a T grid never shrink.
    """
    s = ctx.scenario
    droop_in = stimulus.waveform_from_spec(s, s.stimulus.droop_in) if s.stimulus.droop_in is not None else None
    release = s.ticks(s.stimulus.reset_release)
    cfg = SystemConfig(
        period=ctx.period,
        chain_length=s.chain_length,
        accumulator=stimulus.accumulator_config(s),
        element=stimulus.element_config(s, L0),
        detector=stimulus.detector_config(s),
        reset_release=ctx.period // 4 if release is None else release,
        clock_phase=s.ticks(s.stimulus.clock_phase),
        droop_in=droop_in,
    )
    netlist, nets = build_system(cfg, ctx.t_end)
    sim, waves = simulate(ctx, netlist)
    flag_input_breaches(sim, nets.accumulator)
    reports = chain_reports(nets.chain, waves, sim.metastability, ctx.period, ctx.case_tolerance)
    accumulator = accumulator_report(nets.accumulator, waves, netlist.component(nets.accumulator.net("counter")),
                                     ctx.period)

    findings = element_checks(ctx, nets.chain.elements, reports, waves, sim.metastability, recovery=False)
    findings.extend(accumulator_checks(ctx, nets.accumulator, waves, accumulator))
    if ctx.checks.monotone:
        edges = waves[SYSTEM_CLOCK].rising_edges
        grid = [edges[0] + k * ctx.period for k in range(len(edges))] if edges else []
        findings.extend(check_monotone_delay(edges, grid, tolerance=ctx.tolerance + ctx.spread,
                                             max_step=ctx.quarter_max, net=SYSTEM_CLOCK))
    if ctx.checks.pipeline:
        findings.extend(pipeline_checks(ctx, nets.chain, reports, waves, waves[nets.detector.droop_n]))
    detector = detector_summary(cfg.detector, nets.detector, waves, ctx.t_end) if droop_in is None else None
    return TopologyRun(
        waves, SYSTEM_CLOCK, findings, sim.metastability, sim.diagnostics,
        elements=reports, accumulator=accumulator, detector=detector,
        shaper_analysis=shaper_analysis(cfg.element.shaper, ctx.period, ELEMENT_SHAPER_INPUT_HIGH),
        mtbf=chain_mtbf(ctx),
    )


TOPOLOGY_RUNNERS: Dict[str, Callable[[RunContext], TopologyRun]] = {
    "full-system": run_full_system,
    "phase-accumulator": run_phase_accumulator,
    "delay-element": run_delay_element,
    "chain": run_chain,
    "pulse-shaper": run_pulse_shaper,
    "droop-detector": run_droop_detector,
}


# -- reports -------------------------------------------------------------


def element_summary(report: DelayElementReport) -> ElementSummary:
    return ElementSummary(
        instance=report.instance,
        delta=report.delta,
        cases=report.cases,
        fractional_delays=report.fractional_delays(),
        cycles=[
            CycleEntry(
                cycle=r.cycle, rising_in=r.rising_in, rising_out=r.rising_out, delay=r.delay, x=r.x,
                sampled=r.sampled.value if r.sampled is not None else None, e_out=r.e_out.value, case=r.case,
            )
            for r in report.cycles
        ],
    )


def accumulator_summary(report: AccumulatorReport) -> AccumulatorSummary:
    return AccumulatorSummary(
        total_shift_steps=report.total_shift_steps,
        counting_edges=report.counting_edges,
        cycles=[
            AccumulatorEntry(
                cycle=c.cycle, rising=c.rising, high_time=c.high_time, low_time=c.low_time,
                sampled=c.sampled.value, shifted=c.shifted, select_change=c.select_change,
            )
            for c in report.cycles
        ],
    )


def metastability_entry(event: MetastabilityEvent, elements: Sequence[DelayElementReport],
                        period: int) -> MetastabilityEntry:
    case = next((c for c in (r.case_of(event, period) for r in elements) if c is not None), None)
    return MetastabilityEntry(
        instance=event.instance,
        cycle=event.cycle,
        entered_at=event.entered_at,
        resolution_delay=event.resolution_delay,
        value=event.value.value,
        masking=event.masking,
        masked_at=event.masked_at,
        resolved_at=event.resolved_at,
        outcome=event.outcome,
        case=case,
    )


def build_report(ctx: RunContext, run: TopologyRun, hash_: str) -> RunReport:
    findings = [f.with_reproducer(ctx.seed, hash_) for f in run.findings]
    output_side = run.elements[-1] if run.elements else None
    mtbf_seconds, mtbf_log10 = run.mtbf if run.mtbf is not None else (None, None)
    return RunReport(
        scenario=ctx.scenario.name,
        scenario_hash=hash_,
        seed=ctx.seed,
        topology=ctx.scenario.topology,
        passed=not findings,
        t_end=ctx.t_end,
        output_cycles=len(run.waveforms[run.output].rising_edges),
        findings=[Finding(**f.to_dict()) for f in findings],
        finding_counts=summarize(findings),
        delta=output_side.delta if output_side else None,
        elements=[element_summary(r) for r in run.elements],
        accumulator=accumulator_summary(run.accumulator) if run.accumulator else None,
        detector=run.detector,
        shaper_analysis=run.shaper_analysis,
        metastability=[metastability_entry(e, run.elements, ctx.period) for e in run.metastability],
        diagnostics=[DiagnosticEntry(time=d.time, instance=d.instance, kind=d.kind, message=d.message)
                     for d in run.diagnostics],
        timing=ctx.timing.summary(),
        mtbf_seconds=mtbf_seconds if mtbf_seconds is not None and math.isfinite(mtbf_seconds) else None,
        mtbf_log10_seconds=mtbf_log10,
    )


# -- artifacts -----------------------------------------------------------


def artifact_dir(scenario: Scenario, seed: int, hash_: str,
                 out_dir: Optional[Union[str, Path]] = None) -> Path:
    base = Path(out_dir if out_dir is not None else settings.ARTIFACTS_DIR)
    name = hash_ if seed == stimulus.resolve_seed(scenario) else f"{hash_}-seed{seed}"
    return base / name


@contextmanager
def run_log(path: Optional[Path]) -> Iterator[None]:
    """Copy log records to path for the duration of the block."""
    if path is None:
        yield
        return
    handler = logging.FileHandler(path, mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter(settings.LOG_FORMAT))
    root = logging.getLogger()
    root.addHandler(handler)
    try:
        yield
    finally:
        root.removeHandler(handler)
        handler.close()


def execute(scenario: Scenario, seed: Optional[int] = None) -> Tuple[RunReport, TopologyRun]:
    """Simulate and check without touching the file system."""
    hash_ = scenario_hash(scenario)
    ctx = RunContext.create(scenario, seed)
    logger.info(
        f"Running '{scenario.name}' ({scenario.topology}, hash {hash_}, seed {ctx.seed}) to {ctx.t_end} fs"
    )
    try:
        run = TOPOLOGY_RUNNERS[scenario.topology](ctx)
    except SimulationError as e:
        logger.error(f"Scenario '{scenario.name}' (hash {hash_}, seed {ctx.seed}) failed: {e}", exc_info=True)
        e.scenario_hash = hash_
        e.seed = ctx.seed
        raise
    report = build_report(ctx, run, hash_)
    if report.passed:
        logger.info(f"'{scenario.name}' passed: {report.output_cycles} output cycles")
    else:
        logger.warning(f"'{scenario.name}' failed with findings {report.finding_counts}")
    return report, run


def run_scenario(
    scenario: Scenario,
    seed: Optional[int] = None,
    *,
    out_dir: Optional[Union[str, Path]] = None,
    write_artifacts: bool = True,
) -> RunOutcome:
    """
    Run one scenario and write its artifacts.

    Args:
        scenario: Validated scenario
        seed: Overrides the scenario's seed
        out_dir: Artifact root, defaults to settings.ARTIFACTS_DIR
        write_artifacts: Skip the file system entirely when False

    Raises:
        SimulationError: Kernel, netlist or configuration failures, with
            scenario_hash and seed attached
    """
    if not write_artifacts:
        report, run = execute(scenario, seed)
        return RunOutcome(report, run.waveforms)

    resolved = stimulus.resolve_seed(scenario, seed)
    directory = artifact_dir(scenario, resolved, scenario_hash(scenario), out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    log_path = directory / "run.log"
    with run_log(log_path):
        report, run = execute(scenario, resolved)
        trace = dump_vcd(directory / "trace.vcd", run.waveforms,
                         comment=f"{scenario.name} hash {report.scenario_hash} seed {report.seed}")
        report_path = directory / "report.json"
        report.artifacts = {"report": str(report_path), "trace": str(trace), "log": str(log_path)}
        report_path.write_text(report.model_dump_json(indent=2), encoding="utf-8")
        logger.info(f"Artifacts written to {directory}")
    return RunOutcome(report, run.waveforms, directory)
