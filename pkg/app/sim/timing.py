"""
Delay and metastability parameterization.

Holds nominal delays, static per-instance variation, voltage-dependent
delay scaling, metastability windows and resolution sampling, and the
synchronizer MTBF estimate. Random draws are keyed by
(seed, instance, cycle, stream) so call order never changes a result.
"""
import hashlib
import math
from fractions import Fraction
from dataclasses import dataclass, field, replace
from typing import Dict, Mapping, Optional, Protocol, Sequence, Tuple

import numpy as np

from app.sim.errors import ConfigError
from app.sim.logic import L0, L1, Logic, X

FS = 1
PS = 1_000
NS = 1_000_000
US = 1_000_000_000

T_DEFAULT = 50 * NS

# independent random streams per instance
_STREAM_MULTIPLIER = 1
_STREAM_RESOLUTION = 2


def period_fraction(fraction, period: int) -> int:
    """Ticks of a fraction of the period, rounded half up (T/3 of 50 ns -> 16_666_667)."""
    return int(math.floor(Fraction(fraction) * period + Fraction(1, 2)))


def instance_key(instance_id: str) -> int:
    """Stable 64-bit integer for an instance name."""
    digest = hashlib.blake2b(instance_id.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def keyed_rng(seed: int, instance_id: str, *extra: int) -> np.random.Generator:
    return np.random.default_rng([seed, instance_key(instance_id), *extra])


@dataclass(frozen=True)
class DelaySpec:
    """Nominal rise and fall delay in ticks."""
    nominal_rise: int
    nominal_fall: int

    def __post_init__(self):
        if self.nominal_rise < 1 or self.nominal_fall < 1:
            raise ConfigError(
                f"Delays must be at least 1 tick (rise={self.nominal_rise}, fall={self.nominal_fall})"
            )

    @classmethod
    def symmetric(cls, delay: int) -> "DelaySpec":
        return cls(delay, delay)

    def for_level(self, level: Logic) -> int:
        """Delay for an output moving to level; X takes the faster edge."""
        if level == L1:
            return self.nominal_rise
        if level == L0:
            return self.nominal_fall
        return min(self.nominal_rise, self.nominal_fall)

    def scaled(self, multiplier: float) -> "DelaySpec":
        return DelaySpec(scale_delay(self.nominal_rise, multiplier), scale_delay(self.nominal_fall, multiplier))


def scale_delay(nominal: int, multiplier: float) -> int:
    """Effective delay, rounded to the nearest tick and never below 1."""
    return max(1, int(round(nominal * multiplier)))


@dataclass(frozen=True)
class VariationModel:
    """
    Static PVT variation: one multiplier per instance, uniform in [1-eps, 1+eps].

    overrides pins the multiplier of named instances, which is how
    worst-case corners are simulated.
    """
    epsilon: float = 0.0
    seed: int = 1
    overrides: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ConfigError(f"epsilon must be in [0, 1), got {self.epsilon}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")

    def multiplier(self, instance_id: str) -> float:
        return draw_multiplier(self, instance_id)


def draw_multiplier(vm: VariationModel, instance_id: str) -> float:
    """Deterministic multiplier in [1-eps, 1+eps] for an instance."""
    if instance_id in vm.overrides:
        return float(vm.overrides[instance_id])
    if vm.epsilon == 0.0:
        return 1.0
    u = keyed_rng(vm.seed, instance_id, _STREAM_MULTIPLIER).random()
    return 1.0 + vm.epsilon * (2.0 * u - 1.0)


@dataclass(frozen=True)
class ForcedResolution:
    """Pins the metastability outcome of one capture of one instance."""
    instance: str
    cycle: int
    delay: int
    value: Logic


@dataclass(frozen=True)
class ResolutionDraw:
    delay: int
    value: Logic


@dataclass(frozen=True)
class MetastabilityConfig:
    """
    Setup/hold window and resolution law of a storage element.

    cycle numbers used by forced overrides count the capturing edges of
    the instance, starting at 0.
    """
    tau: int = 108 * PS
    setup: int = 20 * PS
    hold: int = 20 * PS
    resolve_bias: float = 0.5
    forced_overrides: Tuple[ForcedResolution, ...] = ()

    def __post_init__(self):
        if self.tau <= 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if self.setup < 0 or self.hold < 0:
            raise ConfigError("setup and hold must be non-negative")
        if not 0.0 <= self.resolve_bias <= 1.0:
            raise ConfigError(f"resolve_bias must be in [0, 1], got {self.resolve_bias}")

    def forced(self, instance_id: str, cycle: int) -> Optional[ForcedResolution]:
        for item in self.forced_overrides:
            if item.instance == instance_id and item.cycle == cycle:
                return item
        return None


def sample_resolution(
    cfg: MetastabilityConfig, instance_id: str, cycle: int, seed: int = 0
) -> ResolutionDraw:
    """
    Resolution of a metastable capture.

    The delay is exponential with mean tau, the value is 1 with
    probability resolve_bias. A matching forced override wins.
    """
    forced = cfg.forced(instance_id, cycle)
    if forced is not None:
        return ResolutionDraw(forced.delay, forced.value)
    rng = keyed_rng(seed, instance_id, cycle, _STREAM_RESOLUTION)
    u = 1.0 - rng.random()  # (0, 1]
    delay = int(round(-cfg.tau * math.log(u)))
    value = L1 if rng.random() < cfg.resolve_bias else L0
    return ResolutionDraw(delay, value)


class SampledSignal(Protocol):
    """Anything that can be sampled and searched for transitions."""

    def sample(self, t: int) -> Logic: ...

    def has_transition_within(self, lo: int, hi: int) -> bool: ...


def detect_violation(data: SampledSignal, t_capture: int, cfg: MetastabilityConfig) -> bool:
    """True iff data moves inside [t - setup, t + hold] or is X at t."""
    if data.sample(t_capture) == X:
        return True
    return data.has_transition_within(t_capture - cfg.setup, t_capture + cfg.hold)


def mtbf(
    tau: int,
    resolve_window: int,
    f_clock: float,
    f_data: float,
    stages: int,
    t_resolve: Optional[int] = None,
) -> float:
    """
    Mean time between synchronizer failures in seconds.

    Args:
        tau: Resolution time constant in ticks
        resolve_window: Metastability window T_w in ticks
        f_clock: Sampling clock frequency in Hz
        f_data: Data toggle rate in Hz
        stages: Number of resolving stages
        t_resolve: Resolution time granted per stage in ticks; defaults to
            half a clock period

    Returns:
        e^(stages * t_resolve / tau) / (T_w * f_clock * f_data), or inf on overflow
    """
    if tau <= 0 or resolve_window <= 0 or f_clock <= 0 or f_data <= 0 or stages < 0:
        raise ValueError("mtbf parameters must be positive")
    if t_resolve is None:
        t_resolve = int(round(0.5e15 / f_clock))
    t_w_seconds = resolve_window * 1e-15
    exponent = stages * t_resolve / tau
    try:
        return math.exp(exponent) / (t_w_seconds * f_clock * f_data)
    except OverflowError:
        return math.inf


def mtbf_exponent(tau: int, t_resolve: int, stages: int) -> float:
    """Natural log of the exponential factor, usable when mtbf overflows."""
    return stages * t_resolve / tau


@dataclass(frozen=True)
class VoltageDelayMap:
    """Delay multiplier as a monotone non-increasing function of supply voltage."""
    v_nominal: float = 1.2
    sensitivity: float = 2.0
    floor: float = 0.05

    def scale(self, v: float) -> float:
        return max(self.floor, 1.0 + self.sensitivity * (self.v_nominal - v) / self.v_nominal)

    def voltage_for(self, multiplier: float) -> float:
        """Closed-form inverse of scale above the floor."""
        return self.v_nominal * (1.0 - (multiplier - 1.0) / self.sensitivity)


@dataclass(frozen=True)
class VddProfile:
    """Piecewise-linear supply voltage, constant outside the given points."""
    points: Tuple[Tuple[int, float], ...]

    def __post_init__(self):
        if not self.points:
            raise ConfigError("A supply profile needs at least one point")
        times = [t for t, _ in self.points]
        if any(b < a for a, b in zip(times, times[1:])):
            raise ConfigError("Supply profile times must be non-decreasing")

    @classmethod
    def constant(cls, volts: float) -> "VddProfile":
        return cls(((0, volts),))

    @classmethod
    def step(cls, v_nominal: float, v_droop: float, onset: int, duration: int, edge: int = 1) -> "VddProfile":
        """Nominal supply with one rectangular droop; edge is the ramp time in ticks."""
        return cls((
            (onset, v_nominal),
            (onset + edge, v_droop),
            (onset + edge + duration, v_droop),
            (onset + 2 * edge + duration, v_nominal),
        ))

    def at(self, t: int) -> float:
        xs = [p[0] for p in self.points]
        ys = [p[1] for p in self.points]
        return float(np.interp(t, xs, ys))


@dataclass(frozen=True)
class TimingProfile:
    """
    Everything a netlist needs to turn nominal delays into effective ones.

    Idealized profiles use 1 ps gate and latch delays, no setup/hold window
    and no variation so that waveforms are exact interval algebra.
    """
    period: int = T_DEFAULT
    gate: DelaySpec = DelaySpec(50 * PS, 50 * PS)
    clock_to_q: int = 80 * PS
    variation: VariationModel = VariationModel()
    plain: MetastabilityConfig = MetastabilityConfig(tau=106 * PS)
    masking: MetastabilityConfig = MetastabilityConfig(tau=108 * PS)
    idealized: bool = False

    @classmethod
    def ideal(cls, period: int = T_DEFAULT, overrides: Optional[Mapping[str, float]] = None,
              forced: Sequence[ForcedResolution] = ()) -> "TimingProfile":
        forced = tuple(forced)
        return cls(
            period=period,
            gate=DelaySpec.symmetric(1 * PS),
            clock_to_q=1 * PS,
            variation=VariationModel(0.0, 1, dict(overrides or {})),
            plain=MetastabilityConfig(tau=106 * PS, setup=0, hold=0, forced_overrides=forced),
            masking=MetastabilityConfig(tau=108 * PS, setup=0, hold=0, forced_overrides=forced),
            idealized=True,
        )

    @property
    def seed(self) -> int:
        return self.variation.seed

    def with_seed(self, seed: int) -> "TimingProfile":
        return replace(self, variation=replace(self.variation, seed=seed))

    def with_forced(self, forced: Sequence[ForcedResolution]) -> "TimingProfile":
        forced = tuple(forced)
        return replace(
            self,
            plain=replace(self.plain, forced_overrides=forced),
            masking=replace(self.masking, forced_overrides=forced),
        )

    def multiplier(self, instance_id: str) -> float:
        return draw_multiplier(self.variation, instance_id)

    def gate_delay(self, instance_id: str, nominal: Optional[DelaySpec] = None) -> DelaySpec:
        return (nominal or self.gate).scaled(self.multiplier(instance_id))

    def line_delay(self, instance_id: str, nominal: int) -> int:
        return scale_delay(nominal, self.multiplier(instance_id))

    def c2q(self, instance_id: str) -> int:
        return scale_delay(self.clock_to_q, self.multiplier(instance_id))

    def metastability(self, masking: bool) -> MetastabilityConfig:
        return self.masking if masking else self.plain

    def summary(self) -> Dict[str, object]:
        return {
            "period": self.period,
            "gate_rise": self.gate.nominal_rise,
            "gate_fall": self.gate.nominal_fall,
            "clock_to_q": self.clock_to_q,
            "epsilon": self.variation.epsilon,
            "seed": self.variation.seed,
            "idealized": self.idealized,
        }


def mtbf_stages(tau: int, resolve_window: int, period: int, stages: int,
                f_data: Optional[float] = None) -> float:
    """
    MTBF of a synchronizer chain clocked with the given period.

    Each stage grants one clock period of resolution time; the data rate
    defaults to one toggle every other cycle.
    """
    f_clock = 1e15 / period
    return mtbf(tau, resolve_window, f_clock, f_data or f_clock / 2, stages, t_resolve=period)
