"""
Full clock-adaptation system: phase accumulator, delay-element chain and
droop detector closed into one loop.

The accumulator's output clock travels down the chain to the system clock
output, which also clocks the droop detector. The detector's active-low
droop bit enters the chain at the far end and reaches the accumulator
one element per cycle later.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from app.sim.delay_element import ChainNets, DelayElementConfig, DelayElementReport, chain_components, chain_reports
from app.sim.droop_detector import DetectorNets, DroopDetectorConfig, droop_detector_components
from app.sim.kernel import Diagnostic, MetastabilityEvent, Netlist, Simulator, WaveformSource
from app.sim.logic import L0, L1
from app.sim.phase_accumulator import (
    AccumulatorNets,
    AccumulatorReport,
    PhaseAccumulatorConfig,
    accumulator_report,
    input_clock,
    phase_accumulator_components,
)
from app.sim.timing import TimingProfile
from app.sim.waveform import Waveform

logger = logging.getLogger(__name__)

SYSTEM_CLOCK = "SYS_CLK"


@dataclass(frozen=True)
class SystemConfig:
    period: int
    chain_length: int
    accumulator: PhaseAccumulatorConfig
    element: DelayElementConfig
    detector: DroopDetectorConfig
    reset_release: Optional[int] = None
    clock_phase: Optional[int] = None
    droop_in: Optional[Waveform] = None

    @classmethod
    def default(cls, period: int, chain_length: int = 4, **kwargs) -> "SystemConfig":
        return cls(
            period=period,
            chain_length=chain_length,
            accumulator=PhaseAccumulatorConfig.default(period),
            element=DelayElementConfig.default(period, boot_level=L0),
            detector=kwargs.pop("detector", DroopDetectorConfig()),
            reset_release=kwargs.pop("reset_release", period // 4),
            **kwargs,
        )


@dataclass(frozen=True)
class SystemNets:
    accumulator: AccumulatorNets
    chain: ChainNets
    detector: DetectorNets
    system_clock: str = SYSTEM_CLOCK


def reset_waveform(release: Optional[int]) -> Waveform:
    if release is None or release <= 0:
        return Waveform(L1)
    return Waveform(L0, ((release, L1),))


def build_system(cfg: SystemConfig, t_end: int) -> Tuple[Netlist, "SystemNets"]:
    """Netlist of the closed loop plus its named nets."""
    pa = AccumulatorNets(clk_in="FAST_CLK", g_in="de0.E_OUT", reset_n="RESET_N", clk_out="pa.CLK_OUT")
    det = DetectorNets(clk_in=SYSTEM_CLOCK, droop_n="DROOP_N")
    netlist = Netlist("system")
    netlist.add(WaveformSource("fast_clk_src", pa.clk_in, input_clock(cfg.period, t_end, cfg.clock_phase)))
    netlist.add(WaveformSource("reset_src", pa.reset_n, reset_waveform(cfg.reset_release)))
    netlist.extend(phase_accumulator_components(cfg.accumulator, pa))
    parts, chain = chain_components(cfg.chain_length, cfg.element, pa.clk_out, det.droop_n, SYSTEM_CLOCK)
    netlist.extend(parts)
    if cfg.droop_in is not None:
        netlist.add(WaveformSource("droop_src", det.droop_n, cfg.droop_in))
    else:
        netlist.extend(droop_detector_components(cfg.detector, det))
        netlist.record(det.net("DETECT"), det.net("CALIBRATE"))
    netlist.record(SYSTEM_CLOCK, pa.clk_in, pa.reset_n, pa.clk_out, det.droop_n, *pa.phases, *pa.select,
                  pa.net("C1"), pa.net("C0"), pa.net("G_LATCHED"), pa.net("RST_SYNC"))
    for element in chain.elements:
        netlist.record(element.clk_in, element.e_out, element.net("S_Q0"), element.net("M_Q0"),
                      element.net("M_Q1"), element.net("CLK_GATED"))
    return netlist, SystemNets(pa, chain, det)


@dataclass
class SystemRun:
    nets: SystemNets
    waveforms: Dict[str, Waveform]
    element_reports: List[DelayElementReport]
    accumulator: AccumulatorReport
    metastability: List[MetastabilityEvent]
    diagnostics: List[Diagnostic] = field(default_factory=list)

    @property
    def system_clock(self) -> Waveform:
        return self.waveforms[self.nets.system_clock]


def run_system(cfg: SystemConfig, t_end: int, timing: Optional[TimingProfile] = None, **sim_kwargs) -> SystemRun:
    timing = timing or TimingProfile(period=cfg.period)
    netlist, nets = build_system(cfg, t_end)
    sim = Simulator(netlist, timing, **sim_kwargs)
    waves = sim.run_until(t_end)
    reports = chain_reports(nets.chain, waves, sim.metastability, cfg.period, 2 * timing.gate.nominal_rise)
    counter = netlist.component(nets.accumulator.net("counter"))
    accumulator = accumulator_report(nets.accumulator, waves, counter, cfg.period)
    logger.info(
        f"System run to {t_end} fs: {len(waves[SYSTEM_CLOCK].rising_edges)} output cycles, "
        f"{len(sim.metastability)} metastable captures"
    )
    return SystemRun(nets, waves, reports, accumulator, sim.metastability, sim.diagnostics)
