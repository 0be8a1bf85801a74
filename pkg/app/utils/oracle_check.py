"""
Idealized-mode cross-check of the event kernel against the interval-algebra
reference models.
"""
import logging
from dataclasses import dataclass
from typing import List, Optional

from pydantic import BaseModel, Field

from app.models.scenario import Scenario
from app.sim import oracle
from app.sim.delay_element import run_element
from app.sim.logic import L0, L1
from app.sim.phase_accumulator import AccumulatorNets, PhaseAccumulatorConfig, input_clock, run_phase_accumulator
from app.sim.shaper import shape
from app.sim.timing import TimingProfile
from app.sim.waveform import Waveform
from app.utils import stimulus
from app.utils.scenario_loader import scenario_hash

logger = logging.getLogger(__name__)

ELEMENT_NETS = {"CLK_OUT": "CLK_OUT", "E_OUT": "E_OUT"}


class OracleComparison(BaseModel):
    model: str = Field(..., description="pulse-shaper, delay-element or phase-set")
    case: str = ""
    net: str
    mismatch: Optional[str] = Field(None, description="First differing transition, null if identical")


class OracleReport(BaseModel):
    scenario: str
    scenario_hash: str
    passed: bool
    comparisons: List[OracleComparison] = Field(default_factory=list)


@dataclass(frozen=True)
class _Compared:
    model: str
    case: str
    net: str
    simulated: Waveform
    reference: Waveform
    t_end: int

    def result(self) -> OracleComparison:
        return OracleComparison(
            model=self.model, case=self.case, net=self.net,
            mismatch=oracle.compare(self.simulated.until(self.t_end), self.reference.until(self.t_end)),
        )


def cross_check(scenario: Scenario) -> OracleReport:
    """
    Simulate the scenario's shaper, one delay element on both stable droop
    levels and the phase set with idealized timing, and compare every
    recorded net with its reference model.
    """
    period = scenario.period_ticks
    timing = TimingProfile.ideal(period)
    gate, c2q = timing.gate.nominal_rise, timing.clock_to_q
    clk = stimulus.module_clock(scenario)
    t_end = clk.times[-1] + 2 * period
    pending: List[_Compared] = []

    stages = stimulus.shaper_stages(scenario)
    pending.append(_Compared("pulse-shaper", "", "clk_out", shape(clk, stages, timing, t_end),
                             oracle.shaper(clk, stages, gate), t_end))

    cfg = stimulus.element_config(scenario, L1)
    for level in (L1, L0):
        droop = Waveform(level)
        run = run_element(cfg, clk, droop, timing, t_end)
        refs = oracle.delay_element(clk, droop, cfg.quarter_delay, cfg.shaper, gate, c2q, cfg.boot_level)
        for name, ref in refs.items():
            net = ELEMENT_NETS.get(name, f"de.{name}")
            pending.append(_Compared("delay-element", f"droop {level.value}", net, run.waveforms[net], ref, t_end))

    pa_clk = input_clock(period, t_end)
    acc = run_phase_accumulator(PhaseAccumulatorConfig.default(period), pa_clk, Waveform(L1), timing=timing,
                                t_end=t_end)
    for net, ref in zip(AccumulatorNets().phases, oracle.phase_set(pa_clk, gate, c2q)):
        pending.append(_Compared("phase-set", "", net, acc.waveforms[net], ref, t_end))

    comparisons = [p.result() for p in pending]
    failed = [c for c in comparisons if c.mismatch is not None]
    for c in failed:
        logger.warning(f"Oracle mismatch in {c.model} {c.case} on {c.net}: {c.mismatch}")
    logger.info(f"Oracle cross-check of '{scenario.name}': {len(comparisons) - len(failed)}/{len(comparisons)} nets match")
    return OracleReport(
        scenario=scenario.name,
        scenario_hash=scenario_hash(scenario),
        passed=not failed,
        comparisons=comparisons,
    )
