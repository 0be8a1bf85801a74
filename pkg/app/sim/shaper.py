"""
Pulse shapers and their glitch-freedom constraint analysis.

A shaper turns each rising input flank into an output pulse of fixed
width. An optional pre-stage AND(in, delay(in, s)) delays the rising
flank and shortens the input pulse by s. Stage 1 is NAND(in, NOT
delay(in, d1)) and yields a low pulse of width d1; later stages widen
the pulse by d_k with NAND (even stages) or NOR (odd stages), and an
odd stage count ends with an inverter.
"""
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from app.sim.checkers import (
    ViolationKind,
    ViolationReport,
    check_fixed_delay,
    check_glitch,
    default_min_pulse,
    edge_delays,
)
from app.sim.errors import ConfigError, InfeasibleShaperError
from app.sim.gates import DelayLine, Gate
from app.sim.kernel import Component, Netlist, Simulator, WaveformSource
from app.sim.timing import TimingProfile, period_fraction
from app.sim.waveform import Waveform, clock_waveform

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ShaperStages:
    """Pre-stage and stage delays in ticks."""
    shorten_delay: Optional[int]
    stage_delays: Tuple[int, ...]

    def __post_init__(self):
        if not self.stage_delays:
            raise ConfigError("A pulse shaper needs at least one stage")
        if self.shorten_delay is not None and self.shorten_delay < 1:
            raise ConfigError(f"Pre-stage delay must be >= 1 tick, got {self.shorten_delay}")
        for k, d in enumerate(self.stage_delays, start=1):
            if d < 1:
                raise ConfigError(f"Stage {k} delay must be >= 1 tick, got {d}")

    @property
    def pulse_width(self) -> int:
        return sum(self.stage_delays)


@dataclass(frozen=True)
class ShaperDesign:
    """Stage delays as exact fractions of the clock period."""
    shorten: Optional[Fraction]
    stages: Tuple[Fraction, ...]

    def at(self, period: int) -> ShaperStages:
        shorten = period_fraction(self.shorten, period) if self.shorten is not None else None
        return ShaperStages(shorten, tuple(period_fraction(d, period) for d in self.stages))


SHAPER_VARIANTS: Dict[str, ShaperDesign] = {
    "old": ShaperDesign(None, (Fraction(1, 3), Fraction(1, 6))),
    "idealized": ShaperDesign(Fraction(1, 10), (Fraction(1, 3), Fraction(1, 6))),
    "implemented": ShaperDesign(Fraction(1, 10), (Fraction(1, 4), Fraction(1, 5))),
    "four_stage": ShaperDesign(None, (Fraction(1, 8), Fraction(1, 10), Fraction(1, 6), Fraction(13, 120))),
}


def shaper_variant(name: str, period: int) -> ShaperStages:
    try:
        return SHAPER_VARIANTS[name].at(period)
    except KeyError:
        raise ConfigError(f"Unknown pulse shaper variant '{name}'") from None


def shaper_components(stages: ShaperStages, input: str, output: str, prefix: str = "shaper") -> List[Component]:
    """Gates and delay lines of one shaper, named under prefix."""
    parts: List[Component] = []
    net = input
    if stages.shorten_delay is not None:
        parts.append(DelayLine(f"{prefix}.pre_line", net, f"{prefix}.pre_d", stages.shorten_delay))
        parts.append(Gate(f"{prefix}.pre", "AND", [net, f"{prefix}.pre_d"], f"{prefix}.pre_out"))
        net = f"{prefix}.pre_out"
    count = len(stages.stage_delays)
    for k, delay in enumerate(stages.stage_delays, start=1):
        last = k == count and count % 2 == 0
        out = output if last else f"{prefix}.s{k}"
        delayed = f"{prefix}.d{k}"
        parts.append(DelayLine(f"{prefix}.line{k}", net, delayed, delay, invert=(k == 1)))
        kind = "NAND" if k == 1 or k % 2 == 0 else "NOR"
        parts.append(Gate(f"{prefix}.stage{k}", kind, [net, delayed], out))
        net = out
    if count % 2 == 1:
        parts.append(Gate(f"{prefix}.inv", "NOT", [net], output))
    return parts


def build_shaper(stages: ShaperStages, *, input: str = "clk_in", output: str = "clk_out",
                 prefix: str = "shaper", source: Optional[Waveform] = None) -> Netlist:
    """Shaper netlist; with a source waveform the input net is driven too."""
    netlist = Netlist(prefix)
    if source is not None:
        netlist.add(WaveformSource("stimulus", input, source))
    netlist.extend(shaper_components(stages, input, output, prefix))
    netlist.record(output)
    return netlist


def shape(input: Waveform, stages: ShaperStages, timing: Optional[TimingProfile] = None,
          t_end: Optional[int] = None, prefix: str = "shaper") -> Waveform:
    """Build a shaper, drive it with input and return its output."""
    timing = timing or TimingProfile.ideal()
    netlist = build_shaper(stages, prefix=prefix, source=input)
    if t_end is None:
        last = input.times[-1] if input.transitions else 0
        t_end = last + 2 * timing.period
    return Simulator(netlist, timing).run_until(t_end)["clk_out"]


@dataclass(frozen=True)
class ShaperContract:
    """Fixed rising-flank delay and output high time within a relative tolerance."""
    rising_delay: int
    high_time: int
    tolerance: float = 0.0
    delay_tolerance: int = 0

    def check(self, input: Waveform, output: Waveform, net: str = "clk_out",
              min_pulse: Optional[int] = None) -> List[ViolationReport]:
        findings: List[ViolationReport] = []
        if min_pulse is not None:
            findings.extend(check_glitch(output, min_pulse, net))
        pairs = edge_delays(input.rising_edges, output.rising_edges)
        delays = [o - i for i, o in pairs]
        findings.extend(check_fixed_delay(
            [self.rising_delay] + delays, self.delay_tolerance, net, [0] + [o for _, o in pairs],
        ))
        lo = int(self.high_time * (1 - self.tolerance))
        hi = int(round(self.high_time * (1 + self.tolerance)))
        for pulse in output.high_pulses():
            if not lo <= pulse.width <= hi:
                findings.append(ViolationReport(
                    ViolationKind.HIGH_TIME, net, pulse.start, pulse.width, f"[{lo}, {hi}]",
                ))
        return findings


# -- constraint analysis -------------------------------------------------


@dataclass(frozen=True)
class StageInequality:
    """constant + slope * eps > 0, in units of the clock period."""
    stage: str
    text: str
    constant: Fraction
    slope: Fraction

    @property
    def bound(self) -> Optional[Fraction]:
        """Supremum of eps satisfying the inequality, None if unbounded."""
        if self.slope >= 0:
            return None
        return self.constant / -self.slope

    @property
    def feasible_at_zero(self) -> bool:
        return self.constant > 0

    def margin(self, epsilon: Fraction) -> Fraction:
        return self.constant + self.slope * Fraction(epsilon)


@dataclass(frozen=True)
class ShaperAnalysis:
    max_epsilon: Optional[Fraction]
    binding_stage: Optional[str]
    inequalities: Tuple[StageInequality, ...] = field(default_factory=tuple)

    def report(self) -> List[Dict[str, object]]:
        return [
            {
                "stage": q.stage,
                "inequality": q.text,
                "margin_at_zero": str(q.constant),
                "bound": str(q.bound) if q.bound is not None else None,
            }
            for q in self.inequalities
        ]


def _as_design(stages: Union[ShaperDesign, ShaperStages], period: Optional[int]) -> ShaperDesign:
    if isinstance(stages, ShaperDesign):
        return stages
    if period is None:
        raise ConfigError("Analyzing stages given in ticks needs the clock period")
    shorten = Fraction(stages.shorten_delay, period) if stages.shorten_delay is not None else None
    return ShaperDesign(shorten, tuple(Fraction(d, period) for d in stages.stage_delays))


def stage_inequalities(design: ShaperDesign, input_high_max: Optional[Fraction] = None,
                       input_low_min: Optional[Fraction] = None) -> List[StageInequality]:
    """
    The inequalities a shaper must meet for an input whose high time is at
    most (1+eps)*input_high_max and whose low time is at least
    (1-eps)*input_low_min, all delays varying by a factor in [1-eps, 1+eps].
    """
    if input_high_max is None and input_low_min is None:
        raise ConfigError("Give input_high_max, input_low_min or both")
    out: List[StageInequality] = []
    s = design.shorten
    d1 = design.stages[0]
    if input_high_max is not None:
        h = Fraction(input_high_max)
        if s is not None:
            out.append(StageInequality(
                "pre", f"T - (1+e)*{h}T > (1+e)*{s}T", 1 - h - s, -h - s,
            ))
            out.append(StageInequality(
                "stage1", f"T - (1+e)*{h}T + (1-e)*{s}T > (1+e)*{d1}T", 1 - h + s - d1, -h - s - d1,
            ))
        else:
            out.append(StageInequality("stage1", f"T - (1+e)*{h}T > (1+e)*{d1}T", 1 - h - d1, -h - d1))
    if input_low_min is not None:
        low = Fraction(input_low_min)
        out.append(StageInequality("stage1", f"(1-e)*{low}T > (1+e)*{d1}T", low - d1, -low - d1))
    accumulated = Fraction(0)
    for k, d in enumerate(design.stages, start=1):
        if k > 1:
            out.append(StageInequality(
                f"stage{k}", f"(1-e)*{accumulated}T > (1+e)*{d}T", accumulated - d, -accumulated - d,
            ))
        accumulated += d
    return out


def analyze_constraints(
    stages: Union[ShaperDesign, ShaperStages],
    input_high_max: Optional[Fraction] = None,
    input_low_min: Optional[Fraction] = None,
    *,
    period: Optional[int] = None,
) -> ShaperAnalysis:
    """
    Supremum of eps for which every stage stays glitch-free.

    Strict inequalities are kept strict: a design that only ties at eps=0
    is infeasible. Raises InfeasibleShaperError carrying the report.
    """
    design = _as_design(stages, period)
    inequalities = stage_inequalities(design, input_high_max, input_low_min)
    broken = [q for q in inequalities if not q.feasible_at_zero]
    if broken:
        analysis = ShaperAnalysis(None, broken[0].stage, tuple(inequalities))
        raise InfeasibleShaperError(
            f"Shaper infeasible at eps=0: {broken[0].text} (margin {broken[0].constant}T)",
            report=analysis,
        )
    best: Optional[Fraction] = None
    binding: Optional[str] = None
    for q in inequalities:
        bound = q.bound
        if bound is not None and (best is None or bound < best):
            best, binding = bound, q.stage
    logger.debug(f"Shaper analysis: max eps {best} bound by {binding}")
    return ShaperAnalysis(best, binding, tuple(inequalities))


# -- worst-case corners --------------------------------------------------


def corner_overrides(design: ShaperDesign, stage: str, epsilon: float, prefix: str = "shaper") -> Dict[str, float]:
    """
    Variation overrides pushing the inequality of one stage to its corner:
    delays on the left-hand side shrink, the stage's own delay grows.
    """
    slow, fast = 1.0 + epsilon, 1.0 - epsilon
    if stage == "pre":
        return {f"{prefix}.pre_line": slow}
    k = int(stage[len("stage"):])
    if k == 1:
        overrides = {f"{prefix}.line1": slow}
        if design.shorten is not None:
            overrides[f"{prefix}.pre_line"] = fast
        return overrides
    overrides = {f"{prefix}.line{j}": fast for j in range(1, k)}
    overrides[f"{prefix}.line{k}"] = slow
    return overrides


def corner_stimulus(period: int, epsilon: float, cycles: int,
                    input_high_max: Fraction = Fraction(3, 4)) -> Waveform:
    """Clock alternating T/2 and (1+eps)*input_high_max high times, rising every T."""
    long_high = int(round(float(input_high_max) * period * (1 + epsilon)))
    return clock_waveform(
        period, period // 2, (cycles - 1) * period, phase=period,
        high_times=lambda k: long_high if k % 2 else period // 2,
    )


def check_corner(
    design: ShaperDesign,
    period: int,
    epsilon: float,
    *,
    stage: Optional[str] = None,
    input_high_max: Fraction = Fraction(3, 4),
    cycles: int = 12,
    min_pulse: Optional[int] = None,
    prefix: str = "shaper",
) -> List[ViolationReport]:
    """
    Simulate the worst-case corner of one stage's inequality in idealized
    timing and report glitches and rising-delay drift of the output.
    """
    if stage is None:
        stage = analyze_constraints(design, input_high_max).binding_stage
    overrides = corner_overrides(design, stage, epsilon, prefix)
    timing = TimingProfile.ideal(period, overrides)
    stimulus = corner_stimulus(period, epsilon, cycles, input_high_max)
    output = shape(stimulus, design.at(period), timing, prefix=prefix)
    findings = check_glitch(output, min_pulse or default_min_pulse(period), "clk_out")
    pairs = edge_delays(stimulus.rising_edges, output.rising_edges)
    findings.extend(check_fixed_delay([o - i for i, o in pairs], 4 * timing.gate.nominal_rise,
                                      "clk_out", [o for _, o in pairs]))
    return findings
