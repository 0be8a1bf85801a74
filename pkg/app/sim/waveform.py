"""
Piecewise-constant three-valued waveforms over integer femtosecond time.

A Waveform is the value exchanged between the kernel, the checkers, the
oracle and the VCD writer. It is immutable; every operation returns a new
waveform.
"""
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Callable, Dict, Iterable, List, NamedTuple, Optional, Tuple

from app.sim.logic import L0, L1, Logic, X, logic_not

Transition = Tuple[int, Logic]


class Pulse(NamedTuple):
    """A maximal constant interval [start, end) bounded by two transitions."""
    start: int
    end: int
    level: Logic

    @property
    def width(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class Waveform:
    """
    Three-valued signal: an initial level plus ordered transitions.

    Invariants: transition times are non-negative and strictly increasing,
    and every transition changes the level.
    """
    initial: Logic
    transitions: Tuple[Transition, ...] = ()

    def __post_init__(self):
        previous_time = -1
        previous_level = self.initial
        for time, level in self.transitions:
            if time <= previous_time:
                raise ValueError(f"Transition times must strictly increase (t={time})")
            if level == previous_level:
                raise ValueError(f"Transition at t={time} does not change the level")
            previous_time, previous_level = time, level

    @classmethod
    def constant(cls, level: Logic) -> "Waveform":
        return cls(Logic.parse(level))

    @classmethod
    def from_changes(cls, initial: Logic, changes: Iterable[Tuple[int, Any]]) -> "Waveform":
        """Build a normalized waveform; later entries win at equal times, no-ops are dropped."""
        by_time: Dict[int, Logic] = {}
        for time, level in changes:
            if time < 0:
                raise ValueError(f"Negative transition time {time}")
            by_time[int(time)] = Logic.parse(level)
        initial = Logic.parse(initial)
        out: List[Transition] = []
        current = initial
        for time in sorted(by_time):
            level = by_time[time]
            if level != current:
                out.append((time, level))
                current = level
        return cls(initial, tuple(out))

    @cached_property
    def times(self) -> List[int]:
        return [t for t, _ in self.transitions]

    @property
    def final(self) -> Logic:
        return self.transitions[-1][1] if self.transitions else self.initial

    def sample(self, t: int) -> Logic:
        """Level at time t; a transition takes effect at its own timestamp."""
        index = bisect_right(self.times, t) - 1
        if index < 0:
            return self.initial
        return self.transitions[index][1]

    def transitions_within(self, lo: int, hi: int) -> List[Transition]:
        """Transitions with lo <= time <= hi."""
        start = bisect_left(self.times, lo)
        stop = bisect_right(self.times, hi)
        return list(self.transitions[start:stop])

    def has_transition_within(self, lo: int, hi: int) -> bool:
        return bisect_right(self.times, hi) > bisect_left(self.times, lo)

    def edges(self, level: Logic) -> List[int]:
        return [t for t, v in self.transitions if v == level]

    @property
    def rising_edges(self) -> List[int]:
        return self.edges(L1)

    @property
    def falling_edges(self) -> List[int]:
        return self.edges(L0)

    def pulses(self) -> List[Pulse]:
        """Complete pulses, i.e. intervals bounded by a transition on both sides."""
        out = []
        for (start, level), (end, _) in zip(self.transitions, self.transitions[1:]):
            out.append(Pulse(start, end, level))
        return out

    def high_pulses(self) -> List[Pulse]:
        return [p for p in self.pulses() if p.level == L1]

    def low_pulses(self) -> List[Pulse]:
        return [p for p in self.pulses() if p.level == L0]

    def has_x(self) -> bool:
        return self.initial == X or any(v == X for _, v in self.transitions)

    def map(self, fn: Callable[[Logic], Logic]) -> "Waveform":
        return Waveform.from_changes(fn(self.initial), ((t, fn(v)) for t, v in self.transitions))

    def inverted(self) -> "Waveform":
        return self.map(logic_not)

    def shifted(self, delay: int) -> "Waveform":
        """Transport every transition by delay ticks (delay >= 0)."""
        if delay < 0:
            raise ValueError("Waveforms can only be shifted forward in time")
        return Waveform(self.initial, tuple((t + delay, v) for t, v in self.transitions))

    def until(self, t_end: int) -> "Waveform":
        """Drop transitions after t_end."""
        stop = bisect_right(self.times, t_end)
        return Waveform(self.initial, self.transitions[:stop])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "initial": self.initial.value,
            "transitions": [[t, v.value] for t, v in self.transitions],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Waveform":
        return cls.from_changes(data.get("initial", "0"), data.get("transitions", []))


def clock_waveform(
    period: int,
    high: int,
    t_end: int,
    phase: int = 0,
    high_times: Optional[Callable[[int], int]] = None,
) -> Waveform:
    """
    Clock starting low whose k-th rising edge is at phase + k*period.

    Args:
        period: Rising-to-rising spacing
        high: Default high time of every pulse
        t_end: Last time to generate edges for
        phase: Time of the first rising edge
        high_times: Optional callable giving the high time of pulse k
    """
    if period <= 0 or high <= 0 or high >= period:
        raise ValueError(f"Invalid clock: period={period}, high={high}")
    changes: List[Transition] = []
    k = 0
    while phase + k * period <= t_end:
        rise = phase + k * period
        width = high_times(k) if high_times else high
        changes.append((rise, L1))
        changes.append((rise + width, L0))
        k += 1
    return Waveform.from_changes(L0, changes)
