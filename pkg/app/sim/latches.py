"""
Storage elements: transparent D-latch, D and T flip-flops, and the 2-bit
Gray counter.

The capture decision of a latch or flip-flop is taken hold ticks after
the capturing edge, once the whole setup/hold window is known. A window
violation makes the element metastable: plain elements drive X until the
sampled resolution time, then the resolved value.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

from app.sim.errors import SimulationError, XPropagationError
from app.sim.kernel import Component, Event, MetastabilityEvent, Simulator
from app.sim.logic import L0, L1, Logic, X, logic_not, logic_xor
from app.sim.timing import (
    MetastabilityConfig,
    ResolutionDraw,
    SampledSignal,
    detect_violation,
    sample_resolution,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Stable:
    level: Logic


@dataclass(frozen=True)
class Metastable:
    entered_at: int
    resolution: ResolutionDraw

    @property
    def resolves_at(self) -> int:
        return self.entered_at + self.resolution.delay


LatchState = Union[Stable, Metastable]


@dataclass(frozen=True)
class StepResult:
    """New state plus the (time, level) transactions scheduled on Q."""
    state: LatchState
    outputs: Tuple[Tuple[int, Logic], ...] = ()


def capture(data: SampledSignal, t_capture: int, cfg: MetastabilityConfig,
            instance_id: str = "", cycle: int = 0, seed: int = 0) -> LatchState:
    """Sample data at a capturing edge, entering metastability on a window violation."""
    if detect_violation(data, t_capture, cfg):
        return Metastable(t_capture, sample_resolution(cfg, instance_id, cycle, seed))
    return Stable(data.sample(t_capture))


def _unmasked_outputs(state: LatchState, t_edge: int, c2q: int) -> Tuple[Tuple[int, Logic], ...]:
    if isinstance(state, Stable):
        return ((t_edge + c2q, state.level),)
    draw = state.resolution
    if draw.delay == 0:
        return ((t_edge + c2q, draw.value),)
    return ((t_edge + c2q, X), (t_edge + draw.delay + c2q, draw.value))


def dff_step(state: LatchState, data: SampledSignal, t_edge: int, cfg: MetastabilityConfig, c2q: int,
             *, instance_id: str = "", cycle: int = 0, seed: int = 0) -> StepResult:
    """Edge-triggered capture: Q follows the sample after clock-to-q, or X then the resolution."""
    new = capture(data, t_edge, cfg, instance_id, cycle, seed)
    return StepResult(new, _unmasked_outputs(new, t_edge, c2q))


def dlatch_step(state: LatchState, data: SampledSignal, t_edge: int, cfg: MetastabilityConfig, c2q: int,
                *, instance_id: str = "", cycle: int = 0, seed: int = 0) -> StepResult:
    """Closing edge of a transparent latch; a clean capture leaves the tracked output alone."""
    new = capture(data, t_edge, cfg, instance_id, cycle, seed)
    if isinstance(new, Stable):
        return StepResult(new)
    return StepResult(new, _unmasked_outputs(new, t_edge, c2q))


def tff_step(state: LatchState, toggle: SampledSignal, t_edge: int, cfg: MetastabilityConfig, c2q: int,
             *, instance_id: str = "", cycle: int = 0, seed: int = 0) -> StepResult:
    """Toggle flip-flop: next Q = Q xor T, with the window check applied to T."""
    current = state.level if isinstance(state, Stable) else state.resolution.value
    sampled = capture(toggle, t_edge, cfg, instance_id, cycle, seed)
    if isinstance(sampled, Stable):
        new: LatchState = Stable(logic_xor([current, sampled.level]))
    else:
        new = sampled
    return StepResult(new, _unmasked_outputs(new, t_edge, c2q))


GRAY_SEQUENCE = (0b00, 0b01, 0b11, 0b10)


def gray_step(state: int, enable_sample: Logic) -> int:
    """Advance 00 -> 01 -> 11 -> 10 -> 00 when enabled; X enable is an error."""
    if enable_sample == X:
        raise SimulationError("X on Gray counter enable")
    if state not in GRAY_SEQUENCE:
        raise SimulationError(f"Invalid Gray counter state {state:#04b}")
    if enable_sample == L0:
        return state
    return GRAY_SEQUENCE[(GRAY_SEQUENCE.index(state) + 1) % 4]


def gray_bits(state: int) -> Tuple[Logic, Logic]:
    return (L1 if state & 0b10 else L0, L1 if state & 0b01 else L0)


class StorageElement(Component):
    """Shared plumbing for elements that can go metastable."""
    masking = False

    def __init__(self, name: str, *, boot: Logic = L0, clock_to_q: Optional[int] = None,
                 metastability: Optional[MetastabilityConfig] = None, **pins: Optional[str]):
        super().__init__(name, **pins)
        self.boot = boot
        self._nominal_c2q = clock_to_q
        self._cfg_override = metastability
        self.c2q = clock_to_q or 1
        self.cfg = metastability or MetastabilityConfig()
        self.seed = 0
        self.state: LatchState = Stable(boot)
        self.cleared = False
        self._cycle = 0
        self._resolution: Optional[Event] = None
        self._record: Optional[MetastabilityEvent] = None
        self._warned = False

    def elaborate(self, sim: Simulator) -> None:
        if self._nominal_c2q is None:
            self.c2q = sim.timing.c2q(self.name)
        else:
            self.c2q = max(1, int(round(self._nominal_c2q * sim.timing.multiplier(self.name))))
        self.cfg = self._cfg_override or sim.timing.metastability(self.masking)
        self.seed = sim.timing.seed

    def _require_clean(self, sim: Simulator, port: str, level: Logic) -> None:
        if level == X:
            raise XPropagationError(self.name, port, sim.now)

    def _output_nets(self) -> List[str]:
        return list(self.output_pins().values())

    def _emit(self, sim: Simulator, port_levels: Dict[str, Logic], at: int) -> None:
        at = max(at, sim.now)
        for port, level in port_levels.items():
            self.drive(sim, port, level, at)

    def _next_cycle(self) -> int:
        cycle = self._cycle
        self._cycle += 1
        return cycle

    def _log_entry(self, sim: Simulator, state: Metastable, cycle: int, masked_at: int) -> None:
        self._record = MetastabilityEvent(
            instance=self.name,
            cycle=cycle,
            entered_at=state.entered_at,
            resolution_delay=state.resolution.delay,
            value=state.resolution.value,
            masking=self.masking,
            masked_at=masked_at,
        )
        sim.metastability.append(self._record)
        sim.diagnose(self.name, "metastable", f"window violation at capture {cycle}")
        logger.debug(
            f"[{sim.now} fs] {self.name} metastable (cycle {cycle}), resolves to "
            f"{state.resolution.value.value} after {state.resolution.delay} fs"
        )

    def _arm_resolution(self, sim: Simulator, state: Metastable) -> None:
        self._resolution = sim.call_at(max(state.resolves_at, sim.now), lambda: self._resolved(sim), self.name)

    def _resolved(self, sim: Simulator) -> None:
        self._resolution = None
        if not isinstance(self.state, Metastable):
            return
        self.state = Stable(self.state.resolution.value)
        if self._record is not None:
            self._record.outcome = "resolved"
            self._record.resolved_at = sim.now
        self._after_resolution(sim)

    def _after_resolution(self, sim: Simulator) -> None:
        """Plain elements already scheduled the resolved value with the X."""

    def _abandon(self, sim: Simulator, outcome: str) -> None:
        """Drop an unresolved metastability (choke-off, recapture or clear)."""
        if not isinstance(self.state, Metastable):
            return
        Simulator.cancel(self._resolution)
        self._resolution = None
        if self._record is not None:
            self._record.outcome = outcome
        if outcome == "choked":
            sim.diagnose(self.name, "choke_off", "metastability cut short by the next transparent phase")
            if not self._warned:
                logger.warning(f"{self.name}: metastability choked off at t={sim.now} fs")
                self._warned = True


class DLatch(StorageElement):
    """
    Transparent D-latch with optional inverted output and active-low clear.

    transparent_high selects whether the latch passes data while the
    enable is high or while it is low.
    """
    input_ports = ("d", "en", "clear_n")
    output_ports = ("q", "qn")

    def __init__(self, name: str, d: str, en: str, q: str, qn: Optional[str] = None, *,
                 clear_level: Logic = L0,
                 transparent_high: bool = True, clear_n: Optional[str] = None, boot: Logic = L0,
                 clock_to_q: Optional[int] = None, metastability: Optional[MetastabilityConfig] = None):
        super().__init__(name, boot=boot, clock_to_q=clock_to_q, metastability=metastability,
                         d=d, en=en, q=q, qn=qn, clear_n=clear_n)
        self.transparent_high = transparent_high
        self.clear_level = clear_level
        self.transparent = False

    def is_transparent(self, enable: Logic) -> bool:
        return enable == (L1 if self.transparent_high else L0)

    def levels(self, level: Logic) -> Dict[str, Logic]:
        return {"q": level, "qn": logic_not(level)}

    def settle(self, inputs):
        if inputs.get("clear_n", L1) == L0:
            level = self.clear_level
        elif self.is_transparent(inputs["en"]):
            level = inputs["d"]
        else:
            level = self.boot
        self.state = Stable(level)
        return self.levels(level)

    def start(self, sim):
        self.transparent = self.is_transparent(self.read(sim, "en"))
        self.cleared = "clear_n" in self.pins and self.read(sim, "clear_n") == L0

    def on_input(self, sim, port, level):
        if port == "clear_n":
            self._require_clean(sim, port, level)
            if level == L0:
                self._clear(sim)
            else:
                self.cleared = False
                if self.transparent:
                    self._track(sim)
            return
        if port == "en":
            self._require_clean(sim, port, level)
            opening = self.is_transparent(level)
            if opening == self.transparent:
                return
            self.transparent = opening
            if self.cleared:
                return
            if opening:
                self._reopen(sim)
            else:
                t_edge, cycle = sim.now, self._next_cycle()
                sim.call_at(t_edge + self.cfg.hold, lambda: self._decide(sim, t_edge, cycle), self.name)
            return
        if self.transparent and not self.cleared:
            self._track(sim)

    def _reopen(self, sim: Simulator) -> None:
        self._abandon(sim, "choked")
        self._track(sim)

    def _track(self, sim: Simulator) -> None:
        level = self.read(sim, "d")
        self.state = Stable(level)
        self._emit(sim, self.levels(level), sim.now + self.c2q)

    def _clear(self, sim: Simulator) -> None:
        self._abandon(sim, "cleared")
        self.cleared = True
        self.state = Stable(self.clear_level)
        self._emit(sim, self.levels(self.clear_level), sim.now + self.c2q)

    def _decide(self, sim: Simulator, t_edge: int, cycle: int) -> None:
        if self.transparent or self.cleared:
            return
        result = dlatch_step(self.state, sim.view(self.pins["d"]), t_edge, self.cfg, self.c2q,
                             instance_id=self.name, cycle=cycle, seed=self.seed)
        self.state = result.state
        if isinstance(result.state, Metastable):
            for net in self._output_nets():
                sim.cancel_pending(net, sim.now)
            first = max(result.outputs[0][0], sim.now)
            self._log_entry(sim, result.state, cycle, first)
            for time, level in result.outputs:
                self._emit(sim, self.levels(level), time)
            self._arm_resolution(sim, result.state)


class DFlipFlop(StorageElement):
    """Edge-triggered D flip-flop with Q/QN and active-low asynchronous clear."""
    input_ports = ("d", "clk", "clear_n")
    output_ports = ("q", "qn")
    data_port = "d"

    def __init__(self, name: str, d: str, clk: str, q: str, qn: Optional[str] = None, *,
                 rising: bool = True, clear_n: Optional[str] = None, boot: Logic = L0,
                 clock_to_q: Optional[int] = None, metastability: Optional[MetastabilityConfig] = None):
        super().__init__(name, boot=boot, clock_to_q=clock_to_q, metastability=metastability,
                         clk=clk, q=q, qn=qn, clear_n=clear_n, **{self.data_port: d})
        self.rising = rising

    def levels(self, level: Logic) -> Dict[str, Logic]:
        return {"q": level, "qn": logic_not(level)}

    def settle(self, inputs):
        level = L0 if inputs.get("clear_n", L1) == L0 else self.boot
        self.state = Stable(level)
        return self.levels(level)

    def start(self, sim):
        self.cleared = "clear_n" in self.pins and self.read(sim, "clear_n") == L0

    def on_input(self, sim, port, level):
        if port == "clear_n":
            self._require_clean(sim, port, level)
            self.cleared = level == L0
            if self.cleared:
                self._abandon(sim, "cleared")
                self.state = Stable(L0)
                self._emit(sim, self.levels(L0), sim.now + self.c2q)
            return
        if port != "clk":
            return
        self._require_clean(sim, port, level)
        if level != (L1 if self.rising else L0) or self.cleared:
            return
        t_edge, cycle = sim.now, self._next_cycle()
        sim.call_at(t_edge + self.cfg.hold, lambda: self._decide(sim, t_edge, cycle), self.name)

    def _step(self, sim: Simulator, t_edge: int, cycle: int) -> StepResult:
        return dff_step(self.state, sim.view(self.pins["d"]), t_edge, self.cfg, self.c2q,
                        instance_id=self.name, cycle=cycle, seed=self.seed)

    def _decide(self, sim: Simulator, t_edge: int, cycle: int) -> None:
        if self.cleared:
            return
        result = self._step(sim, t_edge, cycle)
        self._abandon(sim, "choked")
        self.state = result.state
        if isinstance(result.state, Metastable):
            for net in self._output_nets():
                sim.cancel_pending(net, sim.now)
            self._log_entry(sim, result.state, cycle, max(result.outputs[0][0], sim.now))
            self._arm_resolution(sim, result.state)
        for time, level in result.outputs:
            self._emit(sim, self.levels(level), time)


class TFlipFlop(DFlipFlop):
    """Toggle flip-flop; Q and QN switch together after clock-to-q."""
    input_ports = ("t", "clk", "clear_n")
    data_port = "t"

    def _step(self, sim: Simulator, t_edge: int, cycle: int) -> StepResult:
        return tff_step(self.state, sim.view(self.pins["t"]), t_edge, self.cfg, self.c2q,
                        instance_id=self.name, cycle=cycle, seed=self.seed)


class GrayCounter(Component):
    """
    2-bit Gray up-counter clocked on the falling (or rising) edge.

    The enable is sampled at the clock edge without window modeling; it
    is active-low by default. An X enable at a counting edge is an error.
    """
    input_ports = ("clk", "en", "clear_n")
    output_ports = ("q1", "q0")

    def __init__(self, name: str, clk: str, en: str, q1: str, q0: str, *,
                 clear_n: Optional[str] = None, active_low_enable: bool = True,
                 falling: bool = True, clock_to_q: Optional[int] = None):
        super().__init__(name, clk=clk, en=en, q1=q1, q0=q0, clear_n=clear_n)
        self.active_low_enable = active_low_enable
        self.falling = falling
        self._nominal_c2q = clock_to_q
        self.c2q = clock_to_q or 1
        self.value = 0b00
        self.cleared = False
        self.history: List[Tuple[int, int]] = []

    def elaborate(self, sim):
        self.c2q = self._nominal_c2q or sim.timing.c2q(self.name)

    def _bits(self) -> Dict[str, Logic]:
        q1, q0 = gray_bits(self.value)
        return {"q1": q1, "q0": q0}

    def settle(self, inputs):
        self.value = 0b00
        return self._bits()

    def start(self, sim):
        self.cleared = "clear_n" in self.pins and self.read(sim, "clear_n") == L0

    def on_input(self, sim, port, level):
        if port == "clear_n":
            if level == X:
                raise XPropagationError(self.name, port, sim.now)
            self.cleared = level == L0
            if self.cleared and self.value != 0b00:
                self.value = 0b00
                self.history.append((sim.now, self.value))
                for bit, value in self._bits().items():
                    self.drive(sim, bit, value, sim.now + self.c2q)
            return
        if port != "clk":
            return
        if level == X:
            raise XPropagationError(self.name, port, sim.now)
        if level != (L0 if self.falling else L1) or self.cleared:
            return
        enable = self.read(sim, "en")
        if enable == X:
            raise XPropagationError(self.name, "en", sim.now)
        if self.active_low_enable:
            enable = logic_not(enable)
        new = gray_step(self.value, enable)
        if new != self.value:
            self.value = new
            self.history.append((sim.now, new))
            for bit, value in self._bits().items():
                self.drive(sim, bit, value, sim.now + self.c2q)
