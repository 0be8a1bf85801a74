"""
Delay element and delay-element chain.

Each element forwards the rising clock flank either on the fast path
(droop input sampled L1) or a quarter period later (sampled L0), hands
the sampled bit to its left neighbour on E_OUT, and restores the output
high time with a pulse shaper.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from app.sim.checkers import check_envelope, edge_delays
from app.sim.errors import ConfigError
from app.sim.gates import DelayLine, Gate
from app.sim.kernel import Component, Diagnostic, MetastabilityEvent, Netlist, Simulator, WaveformSource
from app.sim.latches import DLatch
from app.sim.logic import L0, L1, Logic, X
from app.sim.masking import MaskingLatch
from app.sim.shaper import ShaperStages, shaper_components, shaper_variant
from app.sim.timing import TimingProfile
from app.sim.waveform import Waveform

logger = logging.getLogger(__name__)

CASE_NONE = "none"
CASE_FRACTIONAL = "5a"
CASE_FAST = "5b"


@dataclass(frozen=True)
class DelayElementConfig:
    period: int
    quarter_delay: int
    shaper: ShaperStages
    boot_level: Logic = L1

    def __post_init__(self):
        if self.quarter_delay < 1:
            raise ConfigError("quarter_delay must be at least 1 tick")
        if not self.period // 8 < self.quarter_delay < self.period // 2:
            raise ConfigError(
                f"quarter_delay {self.quarter_delay} is far from a quarter of the period {self.period}"
            )
        if self.boot_level == X:
            raise ConfigError("boot_level must be 0 or 1")

    @classmethod
    def default(cls, period: int, shaper: str = "implemented", boot_level: Logic = L1) -> "DelayElementConfig":
        return cls(period, period // 4, shaper_variant(shaper, period), boot_level)


@dataclass(frozen=True)
class ElementNets:
    clk_in: str
    droop_in: str
    clk_out: str
    e_out: str
    prefix: str

    def net(self, name: str) -> str:
        return f"{self.prefix}.{name}"


def delay_element_components(cfg: DelayElementConfig, nets: ElementNets) -> List[Component]:
    """The gates, latches and shaper of one element, named under nets.prefix."""
    p = nets.prefix
    t4, t4n, gated = nets.net("CLK_T4"), nets.net("CLK_T4N"), nets.net("CLK_GATED")
    m_q0, m_q1, s_q0 = nets.net("M_Q0"), nets.net("M_Q1"), nets.net("S_Q0")
    fast_n, combined = nets.net("FAST_N"), nets.net("COMBINED")
    boot = cfg.boot_level
    return [
        DelayLine(f"{p}.quarter", nets.clk_in, t4, cfg.quarter_delay),
        Gate(f"{p}.t4_inv", "NOT", [t4], t4n),
        Gate(f"{p}.latch_gate", "AND", [nets.clk_in, t4n], gated),
        MaskingLatch(f"{p}.master", nets.droop_in, gated, q0=m_q0, q1=m_q1, variant="mask01",
                     transparent_high=True, boot=boot),
        DLatch(f"{p}.slave_data", m_q0, gated, nets.e_out, transparent_high=False, boot=boot),
        MaskingLatch(f"{p}.slave_clk", m_q1, gated, q0=s_q0, variant="mask0",
                     transparent_high=False, boot=boot),
        Gate(f"{p}.fast_filter", "NAND", [nets.clk_in, s_q0], fast_n),
        Gate(f"{p}.combine", "NAND", [fast_n, t4n], combined),
        *shaper_components(cfg.shaper, combined, nets.clk_out, f"{p}.shaper"),
    ]


def build_delay_element(cfg: DelayElementConfig, clk_in: Optional[Waveform] = None,
                        droop_in: Optional[Waveform] = None, prefix: str = "de") -> Netlist:
    """Single element; given waveforms become the CLK_IN and Droop_IN sources."""
    nets = ElementNets("CLK_IN", "DROOP_IN", "CLK_OUT", "E_OUT", prefix)
    netlist = Netlist(prefix)
    if clk_in is not None:
        netlist.add(WaveformSource("clk_src", nets.clk_in, clk_in))
    if droop_in is not None:
        netlist.add(WaveformSource("droop_src", nets.droop_in, droop_in))
    netlist.extend(delay_element_components(cfg, nets))
    netlist.record(nets.clk_in, nets.droop_in, nets.clk_out, nets.e_out, nets.net("CLK_GATED"),
                  nets.net("M_Q0"), nets.net("M_Q1"), nets.net("S_Q0"), nets.net("COMBINED"))
    return netlist


@dataclass
class CycleRecord:
    cycle: int
    rising_in: int
    rising_out: int
    delay: int
    x: Optional[int]
    sampled: Optional[Logic]
    e_out: Logic
    case: str = CASE_NONE


@dataclass
class DelayElementReport:
    instance: str
    delta: Optional[int]
    cycles: List[CycleRecord] = field(default_factory=list)

    @property
    def cases(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for record in self.cycles:
            counts[record.case] = counts.get(record.case, 0) + 1
        return counts

    def fractional_delays(self) -> List[int]:
        return [r.x for r in self.cycles if r.case == CASE_FRACTIONAL and r.x is not None]

    def case_of(self, event: MetastabilityEvent, period: int) -> Optional[str]:
        """Case tag of the cycle a metastable capture of this element belongs to."""
        if not event.instance.startswith(f"{self.instance}."):
            return None
        previous = -1
        for record in self.cycles:
            if event.instance.endswith(".master"):
                if previous < event.entered_at <= record.rising_in:
                    return record.case
            elif record.rising_in <= event.entered_at < record.rising_in + period // 2:
                return record.case
            previous = record.rising_in
        return None


def element_report(
    prefix: str,
    clk_in: Waveform,
    clk_out: Waveform,
    s_q0: Waveform,
    e_out: Waveform,
    events: Iterable[MetastabilityEvent],
    period: int,
    tolerance: int,
) -> DelayElementReport:
    """
    Per-cycle rising-edge delays and metastability case tags of one element.

    A master metastability in cycle k-1 and a slave metastability at flank
    k both belong to cycle k. Tagged cycles delayed beyond delta with
    E_OUT low are fractional-delay cycles, the others took the fast path.
    """
    late = period // 8
    in_edges = clk_in.rising_edges
    master = [e.entered_at for e in events if e.instance == f"{prefix}.master"]
    slaves = [e.entered_at for e in events
              if e.instance in (f"{prefix}.slave_clk", f"{prefix}.slave_data")]
    records: List[CycleRecord] = []
    for k, (t_in, t_out) in enumerate(edge_delays(in_edges, clk_out.rising_edges)):
        previous = in_edges[k - 1] if k > 0 else -1
        meta = any(previous < t <= t_in for t in master) or any(t_in <= t < t_in + period // 2 for t in slaves)
        sampled = None if meta else s_q0.sample(t_in + late)
        records.append(CycleRecord(k, t_in, t_out, t_out - t_in, None, sampled, e_out.sample(t_in + late)))

    delta = next((r.delay for r in records if r.sampled == L1), None)
    for r in records:
        if delta is not None:
            r.x = r.delay - delta
        if r.sampled is None:
            delayed = r.x is not None and r.x > tolerance
            if delayed and r.e_out != L0:
                logger.warning(f"{prefix}: cycle {r.cycle} delayed by {r.x} fs with E_OUT {r.e_out.value}")
            r.case = CASE_FRACTIONAL if delayed and r.e_out == L0 else CASE_FAST
    return DelayElementReport(prefix, delta, records)


def clock_preconditions(clk: Waveform, period: int, epsilon: float, net: str) -> List[str]:
    """Violations of the clean-input-clock hypothesis, as readable messages."""
    half = period / 2
    findings = check_envelope(
        clk, period, int(half * (1 - epsilon)), int(round(half * (1 + epsilon))),
        net=net, low_lo=int(half * (1 - epsilon)), allowed_extra=(0, period),
    )
    return [f"{f.kind.value} on {f.net} at {f.time} fs: {f.measured} not in {f.bound}" for f in findings]


@dataclass
class ElementRun:
    clk_out: Waveform
    e_out: Waveform
    report: DelayElementReport
    waveforms: Dict[str, Waveform]
    metastability: List[MetastabilityEvent]
    diagnostics: List[Diagnostic]
    preconditions: List[str] = field(default_factory=list)


def run_element(cfg: DelayElementConfig, clk_in: Waveform, droop_in: Waveform,
                timing: Optional[TimingProfile] = None, t_end: Optional[int] = None,
                prefix: str = "de") -> ElementRun:
    """Simulate one element and build its per-cycle report."""
    timing = timing or TimingProfile(period=cfg.period)
    preconditions = clock_preconditions(clk_in, cfg.period, timing.variation.epsilon, "CLK_IN")
    for message in preconditions:
        logger.warning(f"{prefix}: input clock hypothesis breached: {message}")
    netlist = build_delay_element(cfg, clk_in, droop_in, prefix)
    sim = Simulator(netlist, timing)
    if t_end is None:
        t_end = (clk_in.times[-1] if clk_in.transitions else 0) + cfg.period
    waves = sim.run_until(t_end)
    report = element_report(
        prefix, waves["CLK_IN"], waves["CLK_OUT"], waves[f"{prefix}.S_Q0"], waves["E_OUT"],
        sim.metastability, cfg.period, 2 * timing.gate.nominal_rise,
    )
    return ElementRun(waves["CLK_OUT"], waves["E_OUT"], report, waves, sim.metastability,
                      sim.diagnostics, preconditions)


# -- chain ---------------------------------------------------------------


@dataclass(frozen=True)
class ChainNets:
    """
    Nets of an n-element chain. The clock enters element 0 and leaves
    element n-1; the droop bit enters element n-1 and leaves element 0.
    """
    elements: Tuple[ElementNets, ...]

    @property
    def clk_in(self) -> str:
        return self.elements[0].clk_in

    @property
    def clk_out(self) -> str:
        return self.elements[-1].clk_out

    @property
    def droop_in(self) -> str:
        return self.elements[-1].droop_in

    @property
    def g_out(self) -> str:
        return self.elements[0].e_out

    def from_droop_side(self) -> List[ElementNets]:
        return list(reversed(self.elements))


def chain_nets(n: int, clk_in: str, droop_in: str, clk_out: str, prefix: str = "de") -> ChainNets:
    if n < 1:
        raise ConfigError(f"A delay-element chain needs at least one element, got {n}")
    elements = []
    for i in range(n):
        name = f"{prefix}{i}"
        elements.append(ElementNets(
            clk_in=clk_in if i == 0 else f"{prefix}{i - 1}.CLK_OUT",
            droop_in=droop_in if i == n - 1 else f"{prefix}{i + 1}.E_OUT",
            clk_out=clk_out if i == n - 1 else f"{name}.CLK_OUT",
            e_out=f"{name}.E_OUT",
            prefix=name,
        ))
    return ChainNets(tuple(elements))


def chain_components(n: int, cfg: DelayElementConfig, clk_in: str, droop_in: str, clk_out: str,
                     prefix: str = "de") -> Tuple[List[Component], ChainNets]:
    nets = chain_nets(n, clk_in, droop_in, clk_out, prefix)
    parts: List[Component] = []
    for element in nets.elements:
        parts.extend(delay_element_components(cfg, element))
    return parts, nets


def build_chain(n: int, cfg: DelayElementConfig, clk_in: Optional[Waveform] = None,
                droop_in: Optional[Waveform] = None, prefix: str = "de") -> Tuple[Netlist, ChainNets]:
    netlist = Netlist("chain")
    if clk_in is not None:
        netlist.add(WaveformSource("clk_src", "CLK_IN", clk_in))
    if droop_in is not None:
        netlist.add(WaveformSource("droop_src", "DROOP_IN", droop_in))
    parts, nets = chain_components(n, cfg, "CLK_IN", "DROOP_IN", "CLK_OUT", prefix)
    netlist.extend(parts)
    netlist.record("CLK_IN", "DROOP_IN", "CLK_OUT")
    for element in nets.elements:
        netlist.record(element.e_out, element.net("S_Q0"))
        if element.clk_out != "CLK_OUT":
            netlist.record(element.clk_out)
    return netlist, nets


def chain_reports(nets: ChainNets, waves: Dict[str, Waveform], events: Sequence[MetastabilityEvent],
                  period: int, tolerance: int) -> List[DelayElementReport]:
    return [
        element_report(e.prefix, waves[e.clk_in], waves[e.clk_out], waves[e.net("S_Q0")], waves[e.e_out],
                       events, period, tolerance)
        for e in nets.elements
    ]


@dataclass
class ChainRun:
    nets: ChainNets
    waveforms: Dict[str, Waveform]
    reports: List[DelayElementReport]
    metastability: List[MetastabilityEvent]
    diagnostics: List[Diagnostic]


def run_chain(n: int, cfg: DelayElementConfig, clk_in: Waveform, droop_in: Waveform,
              timing: Optional[TimingProfile] = None, t_end: Optional[int] = None) -> ChainRun:
    timing = timing or TimingProfile(period=cfg.period)
    netlist, nets = build_chain(n, cfg, clk_in, droop_in)
    sim = Simulator(netlist, timing)
    if t_end is None:
        t_end = (clk_in.times[-1] if clk_in.transitions else 0) + cfg.period
    waves = sim.run_until(t_end)
    reports = chain_reports(nets, waves, sim.metastability, cfg.period, 2 * timing.gate.nominal_rise)
    return ChainRun(nets, waves, reports, sim.metastability, sim.diagnostics)
