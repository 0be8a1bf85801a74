"""
Scenario to simulation inputs: timing profile, module configurations and
stimulus waveforms.
"""
import logging
from typing import Optional, Tuple

from app.core.config import settings
from app.models.scenario import Scenario, WaveformSpec
from app.sim.delay_element import DelayElementConfig
from app.sim.droop_detector import DroopDetectorConfig
from app.sim.errors import ConfigError
from app.sim.logic import L0, L1, Logic
from app.sim.phase_accumulator import PhaseAccumulatorConfig, input_clock
from app.sim.shaper import ShaperStages, shaper_variant
from app.sim.timing import (
    DelaySpec,
    ForcedResolution,
    MetastabilityConfig,
    TimingProfile,
    VariationModel,
    VddProfile,
    VoltageDelayMap,
)
from app.sim.waveform import Waveform, clock_waveform

logger = logging.getLogger(__name__)


def resolve_seed(scenario: Scenario, seed: Optional[int] = None) -> int:
    """Explicit seed, else the scenario's, else the process default."""
    if seed is not None:
        return seed
    if scenario.timing.seed is not None:
        return scenario.timing.seed
    return settings.DEFAULT_SEED


def forced_resolutions(scenario: Scenario) -> Tuple[ForcedResolution, ...]:
    return tuple(
        ForcedResolution(f.instance, f.cycle, scenario.ticks(f.delay), Logic.parse(f.value))
        for f in scenario.timing.forced
    )


def build_timing(scenario: Scenario, seed: int) -> TimingProfile:
    t = scenario.timing
    period = scenario.period_ticks
    forced = forced_resolutions(scenario)
    if scenario.idealized:
        return TimingProfile.ideal(period, t.multipliers, forced).with_seed(seed)
    rise = scenario.ticks(t.gate_rise if t.gate_rise is not None else t.gate_delay)
    fall = scenario.ticks(t.gate_fall if t.gate_fall is not None else t.gate_delay)
    setup, hold = scenario.ticks(t.setup), scenario.ticks(t.hold)
    return TimingProfile(
        period=period,
        gate=DelaySpec(rise, fall),
        clock_to_q=scenario.ticks(t.clock_to_q),
        variation=VariationModel(t.epsilon, seed, dict(t.multipliers)),
        plain=MetastabilityConfig(scenario.ticks(t.tau_plain), setup, hold, t.resolve_bias, forced),
        masking=MetastabilityConfig(scenario.ticks(t.tau_masking), setup, hold, t.resolve_bias, forced),
    )


def tolerance(scenario: Scenario, timing: TimingProfile) -> int:
    """Slack for timing checks: as configured, else 0 idealized and four gate delays otherwise."""
    if scenario.checkers.tolerance is not None:
        return scenario.ticks(scenario.checkers.tolerance)
    if scenario.idealized:
        return 0
    return 4 * max(timing.gate.nominal_rise, timing.gate.nominal_fall)


def shaper_stages(scenario: Scenario) -> ShaperStages:
    spec = scenario.shaper
    if spec.stages is not None:
        return ShaperStages(scenario.ticks(spec.shorten), tuple(scenario.ticks(d) for d in spec.stages))
    return shaper_variant(spec.variant, scenario.period_ticks)


def element_config(scenario: Scenario, boot_default: Logic) -> DelayElementConfig:
    boot = scenario.delay_element.boot_level
    return DelayElementConfig(
        period=scenario.period_ticks,
        quarter_delay=scenario.ticks(scenario.delay_element.quarter_delay),
        shaper=shaper_stages(scenario),
        boot_level=Logic.parse(boot) if boot is not None else boot_default,
    )


def accumulator_config(scenario: Scenario) -> PhaseAccumulatorConfig:
    return PhaseAccumulatorConfig(scenario.period_ticks, scenario.ticks(scenario.phase_accumulator.select_delay))


def supply_profile(scenario: Scenario) -> VddProfile:
    """Explicit supply points, else a step down for the configured droop, else nominal."""
    stimulus, detector = scenario.stimulus, scenario.detector
    if stimulus.vdd is not None:
        return VddProfile(tuple((scenario.ticks(t), volts) for t, volts in stimulus.vdd))
    droop = stimulus.droop
    if droop is None:
        return VddProfile.constant(detector.v_nominal)
    onset, edge = scenario.ticks(droop.onset), max(1, scenario.ticks(droop.edge))
    if droop.duration is None:
        return VddProfile(((onset, detector.v_nominal), (onset + edge, droop.level)))
    return VddProfile.step(detector.v_nominal, droop.level, onset, scenario.ticks(droop.duration), edge)


def detector_config(scenario: Scenario) -> DroopDetectorConfig:
    d = scenario.detector
    return DroopDetectorConfig(
        buffers=d.buffers,
        buffer_delay=scenario.ticks(d.buffer_delay),
        voltage_map=VoltageDelayMap(d.v_nominal, d.sensitivity),
        vdd=supply_profile(scenario),
    )


def waveform_from_spec(scenario: Scenario, spec: WaveformSpec) -> Waveform:
    return Waveform.from_changes(spec.initial, [(scenario.ticks(t), level) for t, level in spec.transitions])


def droop_episode(scenario: Scenario) -> Waveform:
    """Active-low droop bit of the configured episode, constant 1 without one."""
    droop = scenario.stimulus.droop
    if droop is None:
        return Waveform(L1)
    onset = scenario.ticks(droop.onset)
    changes = [(onset, L0)]
    if droop.duration is not None:
        changes.append((onset + scenario.ticks(droop.duration), L1))
    return Waveform.from_changes(L1, changes)


def droop_bit(scenario: Scenario) -> Waveform:
    if scenario.stimulus.droop_in is not None:
        return waveform_from_spec(scenario, scenario.stimulus.droop_in)
    return droop_episode(scenario)


def accumulator_input(scenario: Scenario) -> Waveform:
    if scenario.stimulus.g_in is not None:
        return waveform_from_spec(scenario, scenario.stimulus.g_in)
    return droop_bit(scenario)


def release_time(droop: Waveform) -> Optional[int]:
    """First return of the droop bit to 1 after it went low, if any."""
    fell = None
    for t, level in droop.transitions:
        if level == L0 and fell is None:
            fell = t
        elif level == L1 and fell is not None:
            return t
    return None


def clock_high(scenario: Scenario) -> int:
    period = scenario.period_ticks
    high = scenario.ticks(scenario.stimulus.clock_high) if scenario.stimulus.clock_high is not None else period // 2
    if not 0 < high < period:
        raise ConfigError(f"clock_high must lie strictly between 0 and the period, got {high}")
    return high


def clock_phase(scenario: Scenario, default: int) -> int:
    phase = scenario.ticks(scenario.stimulus.clock_phase)
    return default if phase is None else phase


def module_clock(scenario: Scenario) -> Waveform:
    """Input clock of a stand-alone module: period T, one rising flank per simulated cycle."""
    period = scenario.period_ticks
    phase = clock_phase(scenario, period)
    return clock_waveform(period, clock_high(scenario), phase + (scenario.cycles - 1) * period, phase=phase)


def accumulator_clock(scenario: Scenario, t_end: int) -> Waveform:
    """The T/2 input clock of the phase accumulator."""
    return input_clock(scenario.period_ticks, t_end, scenario.ticks(scenario.stimulus.clock_phase))


def simulation_end(scenario: Scenario) -> int:
    """Run length giving the configured number of output cycles plus drain time."""
    period, cycles = scenario.period_ticks, scenario.cycles
    if scenario.topology == "full-system":
        return (cycles + scenario.chain_length + 2) * period
    if scenario.topology == "phase-accumulator":
        return (cycles + 1) * period
    depth = scenario.chain_length if scenario.topology == "chain" else 1
    return clock_phase(scenario, period) + (cycles - 1) * period + (depth + 1) * period
