"""
Scenario documents: everything needed to reproduce one simulation run.

Delays accept the micro-syntax of app.utils.delays; they are kept as
written so that the canonical JSON (and therefore the scenario hash)
reflects the document, and are converted to ticks with Scenario.ticks().
"""
from typing import Any, Dict, List, Literal, Optional, Tuple, Union, get_args

from pydantic import BaseModel, ConfigDict, Field, StrictInt, field_validator, model_validator

from app.utils.delays import check_delay, is_relative, parse_delay

SCHEMA_VERSION = 1

Topology = Literal["full-system", "phase-accumulator", "delay-element", "chain", "pulse-shaper", "droop-detector"]
TOPOLOGIES: Tuple[str, ...] = get_args(Topology)
Level = Literal["0", "1"]
DelayValue = Union[StrictInt, str]


class StrictModel(BaseModel):
    """Base for scenario sections: unknown keys are errors."""
    model_config = ConfigDict(extra="forbid")


def _delay(value):
    if value is None:
        return value
    return check_delay(value)


class ForcedResolutionSpec(StrictModel):
    """Pins the outcome of one metastable capture."""
    instance: str = Field(..., description="Instance name, e.g. 'de0.master'")
    cycle: int = Field(..., ge=0, description="Capture count of that instance, from 0")
    delay: DelayValue = Field(..., description="Resolution delay after entering metastability")
    value: Level = Field(..., description="Resolved level")

    @field_validator("delay")
    @classmethod
    def check_delays(cls, value):
        return _delay(value)


class TimingSpec(StrictModel):
    epsilon: float = Field(0.0, ge=0.0, lt=1.0, description="Static delay variation, multipliers in [1-eps, 1+eps]")
    seed: Optional[int] = Field(None, ge=0, description="Variation and resolution seed; defaults to DEFAULT_SEED")
    gate_delay: DelayValue = Field("50ps", description="Nominal gate delay (rise and fall)")
    gate_rise: Optional[DelayValue] = Field(None, description="Rise delay, overrides gate_delay")
    gate_fall: Optional[DelayValue] = Field(None, description="Fall delay, overrides gate_delay")
    clock_to_q: DelayValue = Field("80ps", description="Latch and flip-flop clock-to-q delay")
    tau_plain: DelayValue = Field("106ps", description="Resolution time constant of plain storage elements")
    tau_masking: DelayValue = Field("108ps", description="Resolution time constant of masking latches")
    setup: DelayValue = Field("20ps")
    hold: DelayValue = Field("20ps")
    resolve_bias: float = Field(0.5, ge=0.0, le=1.0, description="Probability that a resolution goes to 1")
    forced: List[ForcedResolutionSpec] = Field(default_factory=list)
    multipliers: Dict[str, float] = Field(default_factory=dict, description="Fixed per-instance delay multipliers")

    @field_validator("gate_delay", "gate_rise", "gate_fall", "clock_to_q", "tau_plain", "tau_masking", "setup", "hold")
    @classmethod
    def check_delays(cls, value):
        return _delay(value)

    @field_validator("multipliers")
    @classmethod
    def positive_multipliers(cls, value: Dict[str, float]) -> Dict[str, float]:
        for name, multiplier in value.items():
            if multiplier <= 0:
                raise ValueError(f"multiplier of '{name}' must be positive, got {multiplier}")
        return value


class ShaperSpec(StrictModel):
    variant: Literal["old", "idealized", "implemented", "four_stage"] = "implemented"
    shorten: Optional[DelayValue] = Field(None, description="Pre-stage delay of a custom shaper")
    stages: Optional[List[DelayValue]] = Field(None, description="Stage delays of a custom shaper")

    @field_validator("shorten")
    @classmethod
    def check_shorten(cls, value):
        return _delay(value)

    @field_validator("stages")
    @classmethod
    def check_stages(cls, value):
        if value is None:
            return value
        if not value:
            raise ValueError("a custom shaper needs at least one stage")
        return [check_delay(v) for v in value]

    @model_validator(mode="after")
    def shorten_needs_stages(self):
        if self.shorten is not None and self.stages is None:
            raise ValueError("'shorten' only applies to a custom shaper given by 'stages'")
        return self


class DelayElementSpec(StrictModel):
    quarter_delay: DelayValue = "T/4"
    boot_level: Optional[Level] = Field(None, description="Latch state before t=0; 1 stand-alone, 0 in the full system")

    @field_validator("quarter_delay")
    @classmethod
    def check_delays(cls, value):
        return _delay(value)


class PhaseAccumulatorSpec(StrictModel):
    select_delay: DelayValue = "0.33T"

    @field_validator("select_delay")
    @classmethod
    def check_delays(cls, value):
        return _delay(value)


class DetectorSpec(StrictModel):
    buffers: int = Field(8, ge=1, description="Supply-sensitive buffers in the test line")
    buffer_delay: DelayValue = "200ps"
    v_nominal: float = Field(1.2, gt=0.0)
    sensitivity: float = Field(2.0, gt=0.0, description="Relative delay increase per relative voltage drop")

    @field_validator("buffer_delay")
    @classmethod
    def check_delays(cls, value):
        return _delay(value)


class DroopSpec(StrictModel):
    """
    One droop episode. With a detector in the netlist it is a supply step
    down to 'level' volts; otherwise the active-low droop bit is held
    low from onset for duration (forever when duration is omitted).
    """
    onset: DelayValue
    duration: Optional[DelayValue] = None
    level: float = Field(0.9, gt=0.0, description="Supply voltage during the droop")
    edge: DelayValue = Field("1ps", description="Supply ramp time")

    @field_validator("onset", "duration", "edge")
    @classmethod
    def check_delays(cls, value):
        return _delay(value)


class WaveformSpec(StrictModel):
    initial: Level = "1"
    transitions: List[Tuple[DelayValue, Literal["0", "1", "x"]]] = Field(default_factory=list)

    @field_validator("transitions")
    @classmethod
    def check_times(cls, value):
        return [(check_delay(t), level) for t, level in value]


class StimulusSpec(StrictModel):
    clock_high: Optional[DelayValue] = Field(None, description="High time of the module input clock, default T/2")
    clock_phase: Optional[DelayValue] = Field(None, description="First rising input flank")
    droop: Optional[DroopSpec] = None
    vdd: Optional[List[Tuple[DelayValue, float]]] = Field(None, description="Piecewise-linear supply (time, volts)")
    droop_in: Optional[WaveformSpec] = Field(None, description="Direct active-low droop input")
    g_in: Optional[WaveformSpec] = Field(None, description="Direct active-low phase-accumulator input")
    reset_release: Optional[DelayValue] = Field(None, description="Release of the active-low reset")

    @field_validator("clock_high", "clock_phase", "reset_release")
    @classmethod
    def check_delays(cls, value):
        return _delay(value)

    @field_validator("vdd")
    @classmethod
    def check_vdd(cls, value):
        if value is None:
            return value
        if not value:
            raise ValueError("a supply profile needs at least one point")
        return [(check_delay(t), volts) for t, volts in value]


class CheckerSpec(StrictModel):
    min_pulse: DelayValue = "T/12"
    tolerance: Optional[DelayValue] = Field(None, description="Timing slack; default 0 idealized, 4 gate delays otherwise")
    glitch: bool = True
    envelope: bool = True
    monotone: bool = True
    fixed_delay: bool = True
    pipeline: bool = True
    no_x: bool = True
    select_window: bool = True
    masking: bool = True

    @field_validator("min_pulse", "tolerance")
    @classmethod
    def check_delays(cls, value):
        return _delay(value)


class Scenario(StrictModel):
    """A complete, hashable description of one run."""
    schema_version: Literal[1] = SCHEMA_VERSION
    name: str = "scenario"
    topology: Topology = "full-system"
    period: DelayValue = Field("50ns", description="Output clock period T")
    chain_length: int = Field(4, ge=1, le=64)
    cycles: int = Field(100, ge=1, le=200_000, description="Output clock cycles to simulate")
    idealized: bool = Field(False, description="1 ps gates and latches, no setup/hold window, no variation")
    timing: TimingSpec = Field(default_factory=TimingSpec)
    shaper: ShaperSpec = Field(default_factory=ShaperSpec)
    delay_element: DelayElementSpec = Field(default_factory=DelayElementSpec)
    phase_accumulator: PhaseAccumulatorSpec = Field(default_factory=PhaseAccumulatorSpec)
    detector: DetectorSpec = Field(default_factory=DetectorSpec)
    stimulus: StimulusSpec = Field(default_factory=StimulusSpec)
    record: List[str] = Field(default_factory=list, description="Extra nets to record; '*' records all nets")
    checkers: CheckerSpec = Field(default_factory=CheckerSpec)

    model_config = ConfigDict(
        extra="forbid",
        json_schema_extra={
            "example": {
                "name": "step-droop",
                "topology": "full-system",
                "period": "50ns",
                "cycles": 200,
                "stimulus": {"droop": {"onset": "20T", "duration": "3T", "level": 0.9}},
            }
        },
    )

    @field_validator("period")
    @classmethod
    def absolute_period(cls, value):
        value = check_delay(value)
        if is_relative(value):
            raise ValueError("the period cannot be given as a fraction of itself")
        if parse_delay(value) < 8:
            raise ValueError("the period must be at least 8 ticks")
        return value

    @property
    def period_ticks(self) -> int:
        return parse_delay(self.period)

    def ticks(self, value: Optional[DelayValue]) -> Optional[int]:
        """A delay of this scenario in femtoseconds."""
        if value is None:
            return None
        return parse_delay(value, self.period_ticks)

    @property
    def has_detector(self) -> bool:
        return self.topology == "droop-detector" or (
            self.topology == "full-system" and self.stimulus.droop_in is None
        )


SweepKind = Literal["seeds", "epsilon", "onset", "resolution"]


class SweepSpec(StrictModel):
    """
    One Monte Carlo sweep: a seed range, a list of epsilons, a droop
    onset range or a range of forced resolution delays. Only the field
    named by kind may be set; instance goes with resolution sweeps.
    """
    kind: SweepKind
    seeds: Optional[Tuple[int, int]] = Field(None, description="Inclusive seed range")
    epsilon: Optional[List[float]] = None
    onset: Optional[Tuple[DelayValue, DelayValue, DelayValue]] = Field(
        None, description="start, end (inclusive) and step of the droop onset"
    )
    resolution: Optional[Tuple[DelayValue, DelayValue, DelayValue]] = Field(
        None, description="start, end (inclusive) and step of a forced resolution delay"
    )
    instance: Optional[str] = Field(
        None, description="Instance of the forced resolution to sweep; defaults to the last forced entry"
    )

    @field_validator("seeds")
    @classmethod
    def ordered_seeds(cls, value):
        if value is not None and not 0 <= value[0] <= value[1]:
            raise ValueError(f"seed range {value[0]}..{value[1]} is empty or negative")
        return value

    @field_validator("epsilon")
    @classmethod
    def epsilon_range(cls, value):
        if value is not None:
            if not value:
                raise ValueError("an epsilon sweep needs at least one value")
            for eps in value:
                if not 0.0 <= eps < 1.0:
                    raise ValueError(f"epsilon must be in [0, 1), got {eps}")
        return value

    @field_validator("onset", "resolution")
    @classmethod
    def check_delays(cls, value):
        if value is None:
            return value
        return tuple(check_delay(v) for v in value)

    @model_validator(mode="after")
    def matches_kind(self):
        given = [name for name in ("seeds", "epsilon", "onset", "resolution") if getattr(self, name) is not None]
        if given != [self.kind]:
            raise ValueError(f"a '{self.kind}' sweep takes exactly the '{self.kind}' field, got {given or 'none'}")
        if self.instance is not None and self.kind != "resolution":
            raise ValueError("instance only applies to resolution sweeps")
        return self


class SweepRequest(BaseModel):
    """HTTP body of a sweep: the scenario document and the sweep to run over it."""
    scenario: Dict[str, Any] = Field(..., description="Scenario document, validated like /scenarios/validate")
    sweep: SweepSpec
