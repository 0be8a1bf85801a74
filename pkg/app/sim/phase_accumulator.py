"""
Phase accumulator: a divide-by-two clock with cumulative quarter-period
phase shifts.

Two toggle flip-flops clocked on opposite flanks of the input clock give
four phases spaced by a quarter of the output period. A Gray counter,
advanced on each falling output flank whose sampled droop bit is L0,
selects the phase through a delayed select and a glitch-free mux.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from app.sim.checkers import ViolationReport, check_select_window
from app.sim.errors import ConfigError
from app.sim.gates import DelayLine, Gate, Mux4
from app.sim.kernel import Component, Diagnostic, MetastabilityEvent, Netlist, Simulator, Tie, WaveformSource
from app.sim.latches import DLatch, GrayCounter, TFlipFlop
from app.sim.logic import L0, L1, Logic
from app.sim.masking import MaskingLatch
from app.sim.timing import TimingProfile
from app.sim.waveform import Waveform, clock_waveform

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhaseAccumulatorConfig:
    """period is the output period T; the input clock runs at T/2."""
    period: int
    select_delay: int

    def __post_init__(self):
        if not self.period // 4 < self.select_delay < self.period // 2:
            raise ConfigError(
                f"select_delay {self.select_delay} must lie strictly between T/4 and T/2 (T={self.period})"
            )

    @classmethod
    def default(cls, period: int) -> "PhaseAccumulatorConfig":
        return cls(period, int(round(0.33 * period)))


@dataclass(frozen=True)
class AccumulatorNets:
    clk_in: str = "CLK_IN"
    g_in: str = "G_IN"
    reset_n: str = "RESET_N"
    clk_out: str = "CLK_OUT"
    prefix: str = "pa"

    def net(self, name: str) -> str:
        return f"{self.prefix}.{name}"

    @property
    def phases(self) -> List[str]:
        return [self.net("Q1"), self.net("Q2"), self.net("QN1"), self.net("QN2")]

    @property
    def select(self) -> List[str]:
        return [self.net("SEL1"), self.net("SEL0")]


def phase_set_components(nets: AccumulatorNets) -> List[Component]:
    """Four phases from two toggle flip-flops on opposite input flanks."""
    p = nets.prefix
    q1, q2, qn1, qn2 = nets.phases
    return [
        Tie(f"{p}.tie_hi", nets.net("ONE"), L1),
        Gate(f"{p}.clk_buf", "BUF", [nets.clk_in], nets.net("CLK_P")),
        Gate(f"{p}.clk_inv", "NOT", [nets.clk_in], nets.net("CLK_N")),
        TFlipFlop(f"{p}.t1", nets.net("ONE"), nets.net("CLK_P"), q1, qn1),
        TFlipFlop(f"{p}.t2", nets.net("ONE"), nets.net("CLK_N"), q2, qn2),
    ]


def phase_accumulator_components(cfg: PhaseAccumulatorConfig, nets: AccumulatorNets) -> List[Component]:
    p = nets.prefix
    c1, c0 = nets.net("C1"), nets.net("C0")
    sel1, sel0 = nets.select
    rst, latched = nets.net("RST_SYNC"), nets.net("G_LATCHED")
    return [
        *phase_set_components(nets),
        Mux4(f"{p}.mux", nets.phases, (sel1, sel0), nets.clk_out),
        # reset release only lands while CLK_OUT is low; metastability masks to "reset"
        MaskingLatch(f"{p}.reset_sync", nets.reset_n, nets.clk_out, q0=rst, variant="mask0",
                     transparent_high=False, boot=L0),
        DLatch(f"{p}.droop_latch", nets.g_in, nets.clk_out, latched, transparent_high=False,
               clear_n=rst, clear_level=L1, boot=L1),
        GrayCounter(f"{p}.counter", nets.clk_out, latched, c1, c0, clear_n=rst,
                    active_low_enable=True, falling=True),
        DelayLine(f"{p}.sel_line1", c1, sel1, cfg.select_delay),
        DelayLine(f"{p}.sel_line0", c0, sel0, cfg.select_delay),
    ]


def build_phase_accumulator(
    cfg: PhaseAccumulatorConfig,
    clk_in: Optional[Waveform] = None,
    g_in: Optional[Waveform] = None,
    reset_n: Optional[Waveform] = None,
    nets: AccumulatorNets = AccumulatorNets(),
) -> Netlist:
    netlist = Netlist(nets.prefix)
    if clk_in is not None:
        netlist.add(WaveformSource("clk_src", nets.clk_in, clk_in))
    if g_in is not None:
        netlist.add(WaveformSource("g_src", nets.g_in, g_in))
    if reset_n is not None:
        netlist.add(WaveformSource("reset_src", nets.reset_n, reset_n))
    netlist.extend(phase_accumulator_components(cfg, nets))
    netlist.record(nets.clk_in, nets.g_in, nets.reset_n, nets.clk_out, *nets.phases, *nets.select,
                  nets.net("C1"), nets.net("C0"), nets.net("G_LATCHED"), nets.net("RST_SYNC"))
    return netlist


def input_clock(period: int, t_end: int, phase: Optional[int] = None) -> Waveform:
    """Input clock of period T/2 with 50% duty."""
    half = period // 2
    return clock_waveform(half, half // 2, t_end, phase=half if phase is None else phase)


@dataclass
class AccumulatorCycle:
    cycle: int
    rising: int
    high_time: Optional[int]
    low_time: Optional[int]
    sampled: Logic
    shifted: bool
    select_change: Optional[int] = None


@dataclass
class AccumulatorReport:
    cycles: List[AccumulatorCycle] = field(default_factory=list)
    counting_edges: List[int] = field(default_factory=list)
    findings: List[ViolationReport] = field(default_factory=list)

    @property
    def total_shift_steps(self) -> int:
        return sum(1 for c in self.cycles if c.shifted)


def accumulator_report(nets: AccumulatorNets, waves: Dict[str, Waveform], counter: GrayCounter,
                       period: int) -> AccumulatorReport:
    """Per output cycle: timing, sampled droop bit, and whether a shift was applied."""
    out = waves[nets.clk_out]
    latched = waves[nets.net("G_LATCHED")]
    select_changes = sorted({t for name in nets.select for t, _ in waves[name].transitions})
    counted = {t for t, _ in counter.history}
    rising, falling = out.rising_edges, out.falling_edges
    cycles = []
    counting_edges = []
    for k, r in enumerate(rising):
        fall = next((f for f in falling if f > r), None)
        next_rise = rising[k + 1] if k + 1 < len(rising) else None
        shifted = fall is not None and fall in counted
        change = None
        if shifted:
            counting_edges.append(fall)
            change = next((t for t in select_changes if t > fall), None)
        cycles.append(AccumulatorCycle(
            cycle=k,
            rising=r,
            high_time=fall - r if fall is not None else None,
            low_time=next_rise - fall if fall is not None and next_rise is not None else None,
            sampled=latched.sample(fall) if fall is not None else latched.sample(r),
            shifted=shifted,
            select_change=change,
        ))
    report = AccumulatorReport(cycles, counting_edges)
    report.findings = check_select_window(
        counting_edges, [waves[n] for n in nets.select], period // 4, period // 2, nets.net("SEL"),
    )
    return report


def flag_input_breaches(sim: Simulator, nets: AccumulatorNets) -> int:
    """Record a diagnostic for every capture of G_IN that went metastable."""
    count = 0
    for event in sim.metastability:
        if event.instance == nets.net("droop_latch"):
            message = f"G_IN moved inside the sampling window at {event.entered_at} fs"
            sim.diagnose(event.instance, "precondition", message)
            logger.warning(f"Phase accumulator hypothesis breached: {message}")
            count += 1
    return count


@dataclass
class AccumulatorRun:
    clk_out: Waveform
    report: AccumulatorReport
    waveforms: Dict[str, Waveform]
    metastability: List[MetastabilityEvent]
    diagnostics: List[Diagnostic]


def run_phase_accumulator(
    cfg: PhaseAccumulatorConfig,
    clk_in: Waveform,
    g_in: Waveform,
    reset_n: Optional[Waveform] = None,
    timing: Optional[TimingProfile] = None,
    t_end: Optional[int] = None,
) -> AccumulatorRun:
    """Simulate the accumulator on a T/2 input clock; g_in is active-low droop."""
    timing = timing or TimingProfile(period=cfg.period)
    nets = AccumulatorNets()
    netlist = build_phase_accumulator(cfg, clk_in, g_in, reset_n if reset_n is not None else Waveform(L1), nets)
    sim = Simulator(netlist, timing)
    if t_end is None:
        t_end = (clk_in.times[-1] if clk_in.transitions else 0) + cfg.period
    waves = sim.run_until(t_end)
    flag_input_breaches(sim, nets)
    counter = netlist.component(nets.net("counter"))
    report = accumulator_report(nets, waves, counter, cfg.period)
    return AccumulatorRun(waves[nets.clk_out], report, waves, sim.metastability, sim.diagnostics)


def phase_offsets(waves: Dict[str, Waveform], phases: Sequence[str], period: int) -> List[int]:
    """Offset of each phase's first full-period rising edge from the first phase, modulo T."""
    reference = waves[phases[0]].rising_edges
    if not reference:
        return []
    base = reference[0]
    offsets = []
    for name in phases:
        edges = [t for t in waves[name].rising_edges if t >= base]
        offsets.append((edges[0] - base) % period if edges else -1)
    return offsets
