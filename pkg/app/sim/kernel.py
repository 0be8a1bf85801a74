"""
Deterministic discrete-event kernel.

Time is integer femtoseconds. Events are ordered by (time, seq), seq being
assigned at insertion, so same-time events fire in the order they were
scheduled. Nets use transport-delay drivers: a new transaction cancels the
net's pending transactions at or after its own time, and a transaction
that would not change the projected value is not scheduled.
"""
import heapq
import itertools
from bisect import bisect_left, bisect_right
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Deque, Dict, Iterable, List, Mapping, Optional, Tuple

from app.sim.errors import CausalityError, NetlistError, OscillationError
from app.sim.logic import Logic, X
from app.sim.timing import TimingProfile
from app.sim.waveform import Waveform

logger = logging.getLogger(__name__)

DEFAULT_STORM_CAP = 1000


@dataclass(order=True)
class Event:
    """A net update (new_level set) or a component wake-up (action set)."""
    time: int
    seq: int = -1
    target: str = field(default="", compare=False)
    new_level: Optional[Logic] = field(default=None, compare=False)
    action: Optional[Callable[[], None]] = field(default=None, compare=False, repr=False)
    cancelled: bool = field(default=False, compare=False)


@dataclass
class Diagnostic:
    time: int
    instance: str
    kind: str
    message: str


@dataclass
class MetastabilityEvent:
    """One metastable capture of one storage element."""
    instance: str
    cycle: int
    entered_at: int
    resolution_delay: int
    value: Logic
    masking: bool
    masked_at: Optional[int] = None
    resolved_at: Optional[int] = None
    outcome: str = "pending"  # pending | resolved | choked | cleared


class Component:
    """
    Behavioral component with named ports bound to nets.

    Subclasses declare input_ports/output_ports, compute their steady state
    in settle(), and react to input changes in on_input().
    """
    input_ports: Tuple[str, ...] = ()
    output_ports: Tuple[str, ...] = ()

    def __init__(self, name: str, **pins: Optional[str]):
        self.name = name
        self.pins: Dict[str, str] = {port: net for port, net in pins.items() if net is not None}
        for port in self.pins:
            if port not in self.input_ports and port not in self.output_ports:
                raise NetlistError(f"'{name}' has no port '{port}'")

    def input_pins(self) -> Dict[str, str]:
        return {p: n for p, n in self.pins.items() if p in self.input_ports}

    def output_pins(self) -> Dict[str, str]:
        return {p: n for p, n in self.pins.items() if p in self.output_ports}

    def elaborate(self, sim: "Simulator") -> None:
        """Resolve effective delays against the simulator's timing profile."""

    def settle(self, inputs: Mapping[str, Logic]) -> Dict[str, Logic]:
        """Output levels after a long quiet period with the given inputs."""
        return {}

    def start(self, sim: "Simulator") -> None:
        """Called once at t=0 after the initial state has settled."""

    def on_input(self, sim: "Simulator", port: str, level: Logic) -> None:
        """Called after an input net changed to level."""

    def read(self, sim: "Simulator", port: str) -> Logic:
        return sim.value(self.pins[port])

    def drive(self, sim: "Simulator", port: str, level: Logic, at: int) -> None:
        if port in self.pins:
            sim.drive(self.pins[port], level, at)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name!r})"


class Netlist:
    """Components wired by named nets; every net has exactly one driver."""

    def __init__(self, name: str = "top"):
        self.name = name
        self.components: List[Component] = []
        self.recorded: List[str] = []
        self._names: Dict[str, Component] = {}

    def add(self, component: Component) -> Component:
        if component.name in self._names:
            raise NetlistError(f"Duplicate component name '{component.name}'")
        self._names[component.name] = component
        self.components.append(component)
        return component

    def extend(self, components: Iterable[Component]) -> None:
        for component in components:
            self.add(component)

    def component(self, name: str) -> Component:
        return self._names[name]

    def record(self, *nets: str) -> None:
        for net in nets:
            if net not in self.recorded:
                self.recorded.append(net)

    def drivers(self) -> Dict[str, Component]:
        drivers: Dict[str, Component] = {}
        for component in self.components:
            for net in component.output_pins().values():
                if net in drivers:
                    raise NetlistError(
                        f"Net '{net}' has multiple drivers: '{drivers[net].name}' and '{component.name}'"
                    )
                drivers[net] = component
        return drivers

    def nets(self) -> List[str]:
        seen: Dict[str, None] = {}
        for component in self.components:
            for net in component.pins.values():
                seen.setdefault(net, None)
        return list(seen)

    def validate(self) -> Dict[str, Component]:
        """Check the single-driver rule and that every read net is driven."""
        drivers = self.drivers()
        for component in self.components:
            for port, net in component.input_pins().items():
                if net not in drivers:
                    raise NetlistError(f"Net '{net}' read by '{component.name}.{port}' has no driver")
        for net in self.recorded:
            if net not in drivers:
                raise NetlistError(f"Recorded net '{net}' has no driver")
        return drivers


class _NetState:
    __slots__ = ("name", "value", "initial", "changes", "times", "readers", "pending",
                 "storm_start", "storm_count")

    def __init__(self, name: str):
        self.name = name
        self.value: Logic = X
        self.initial: Logic = X
        self.changes: List[Tuple[int, Logic]] = []
        self.times: List[int] = []
        self.readers: List[Tuple[Component, str]] = []
        self.pending: Deque[Event] = deque()
        self.storm_start = 0
        self.storm_count = 0


class SignalView:
    """Live, read-only view of a net's history for in-run queries."""

    def __init__(self, state: _NetState):
        self._state = state

    def sample(self, t: int) -> Logic:
        index = bisect_right(self._state.times, t) - 1
        return self._state.initial if index < 0 else self._state.changes[index][1]

    def has_transition_within(self, lo: int, hi: int) -> bool:
        times = self._state.times
        return bisect_right(times, hi) > bisect_left(times, lo)


class Simulator:
    """
    Runs one netlist under one timing profile.

    The netlist is validated and elaborated on construction; nets start
    from the fixpoint of all components' settle() values.
    """

    def __init__(
        self,
        netlist: Netlist,
        timing: Optional[TimingProfile] = None,
        *,
        storm_cap: int = DEFAULT_STORM_CAP,
        storm_window: Optional[int] = None,
    ):
        self.netlist = netlist
        self.timing = timing or TimingProfile()
        self.now = 0
        self.storm_cap = storm_cap
        self.storm_window = storm_window or self.timing.period
        self.diagnostics: List[Diagnostic] = []
        self.metastability: List[MetastabilityEvent] = []
        self._queue: List[Event] = []
        self._seq = itertools.count()
        self._started = False

        netlist.validate()
        self._nets: Dict[str, _NetState] = {name: _NetState(name) for name in netlist.nets()}
        for component in netlist.components:
            for port, net in component.input_pins().items():
                self._nets[net].readers.append((component, port))
        for component in netlist.components:
            component.elaborate(self)
        self._settle()
        logger.debug(
            f"Elaborated '{netlist.name}': {len(netlist.components)} components, {len(self._nets)} nets"
        )

    # -- initial state ---------------------------------------------------

    def _settle(self) -> None:
        components = self.netlist.components
        limit = 4 * len(components) + 8
        for _ in range(limit):
            changed = False
            for component in components:
                inputs = {port: self._nets[net].value for port, net in component.input_pins().items()}
                outputs = component.settle(inputs)
                for port, level in outputs.items():
                    # unconnected outputs (e.g. a latch without QN) are not nets
                    if port not in component.pins:
                        continue
                    net = self._nets[component.pins[port]]
                    if net.value != level:
                        net.value = level
                        changed = True
            if not changed:
                break
        else:
            raise NetlistError(f"Initial state of '{self.netlist.name}' does not settle")
        for net in self._nets.values():
            net.initial = net.value

    # -- scheduling ------------------------------------------------------

    def schedule(self, event: Event) -> Event:
        """Enqueue an event, stamping its insertion sequence number."""
        if event.time < self.now:
            raise CausalityError(event.time, self.now)
        event.seq = next(self._seq)
        heapq.heappush(self._queue, event)
        return event

    def call_at(self, time: int, action: Callable[[], None], target: str = "") -> Event:
        return self.schedule(Event(time, target=target, action=action))

    @staticmethod
    def cancel(event: Optional[Event]) -> None:
        if event is not None:
            event.cancelled = True

    def drive(self, net: str, level: Logic, at: int) -> None:
        """Transport-delay transaction on a net."""
        state = self._nets[net]
        pending = state.pending
        while pending and pending[-1].time >= at:
            pending.pop().cancelled = True
        projected = pending[-1].new_level if pending else state.value
        if projected == level:
            return
        pending.append(self.schedule(Event(at, target=net, new_level=level)))

    def cancel_pending(self, net: str, from_time: int) -> None:
        pending = self._nets[net].pending
        while pending and pending[-1].time >= from_time:
            pending.pop().cancelled = True

    # -- queries ---------------------------------------------------------

    def value(self, net: str) -> Logic:
        return self._nets[net].value

    def view(self, net: str) -> SignalView:
        return SignalView(self._nets[net])

    def waveform(self, net: str) -> Waveform:
        state = self._nets[net]
        return Waveform(state.initial, tuple(state.changes))

    def waveforms(self, nets: Optional[Iterable[str]] = None) -> Dict[str, Waveform]:
        names = list(nets) if nets is not None else list(self._nets)
        return {name: self.waveform(name) for name in names}

    def diagnose(self, instance: str, kind: str, message: str) -> Diagnostic:
        entry = Diagnostic(self.now, instance, kind, message)
        self.diagnostics.append(entry)
        logger.debug(f"[{self.now} fs] {instance}: {kind}: {message}")
        return entry

    # -- run loop --------------------------------------------------------

    def run_until(self, t_end: int) -> Dict[str, Waveform]:
        """
        Process every event up to and including t_end.

        Returns:
            Waveforms of the recorded nets, or of all nets if nothing is recorded
        """
        if not self._started:
            self._started = True
            for component in self.netlist.components:
                component.start(self)
        queue = self._queue
        while queue and queue[0].time <= t_end:
            event = heapq.heappop(queue)
            if event.cancelled:
                continue
            self.now = event.time
            if event.action is not None:
                event.action()
            else:
                self._commit(event)
        self.now = max(self.now, t_end)
        return self.waveforms(self.netlist.recorded or None)

    def _commit(self, event: Event) -> None:
        state = self._nets[event.target]
        if state.pending and state.pending[0] is event:
            state.pending.popleft()
        else:
            try:
                state.pending.remove(event)
            except ValueError:
                pass
        level = event.new_level
        if level == state.value:
            return
        now = self.now
        if now - state.storm_start >= self.storm_window:
            state.storm_start = now
            state.storm_count = 0
        state.storm_count += 1
        if state.storm_count > self.storm_cap:
            raise OscillationError(state.name, now, state.storm_count, self.storm_window)
        state.value = level
        state.changes.append((now, level))
        state.times.append(now)
        for component, port in state.readers:
            component.on_input(self, port, level)


def run_until(netlist: Netlist, t_end: int, timing: Optional[TimingProfile] = None, **kwargs) -> Dict[str, Waveform]:
    """Build a simulator for netlist and run it to t_end."""
    return Simulator(netlist, timing, **kwargs).run_until(t_end)


class WaveformSource(Component):
    """Drives a net from a precomputed waveform."""
    output_ports = ("out",)

    def __init__(self, name: str, out: str, waveform: Waveform):
        super().__init__(name, out=out)
        self.waveform = waveform

    def settle(self, inputs):
        return {"out": self.waveform.sample(0)}

    def start(self, sim):
        for time, level in self.waveform.transitions:
            if time > 0:
                self.drive(sim, "out", level, time)


class Tie(Component):
    """Constant driver."""
    output_ports = ("out",)

    def __init__(self, name: str, out: str, level: Logic):
        super().__init__(name, out=out)
        self.level = level

    def settle(self, inputs):
        return {"out": self.level}
