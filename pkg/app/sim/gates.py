"""
Combinational primitives: logic gates, transport delay lines and the
glitch-free 4:1 multiplexer.
"""
import logging
from typing import Dict, Optional, Sequence, Tuple, Union

from app.sim.errors import ArityError, ConfigError
from app.sim.kernel import Component, Netlist, Simulator, WaveformSource
from app.sim.logic import L0, L1, Logic, X, eval_combinational, logic_not
from app.sim.timing import DelaySpec, TimingProfile
from app.sim.waveform import Waveform

logger = logging.getLogger(__name__)

# Gray-coded select (bit1, bit0) to multiplexer input index
GRAY_INDEX: Dict[Tuple[Logic, Logic], int] = {
    (L0, L0): 0,
    (L0, L1): 1,
    (L1, L1): 2,
    (L1, L0): 3,
}


class Gate(Component):
    """
    N-input combinational gate with rise/fall delays.

    Without an explicit delay the profile's gate delay is used, scaled by
    the instance's variation multiplier.
    """

    def __init__(self, name: str, kind: str, inputs: Sequence[str], output: str,
                 delay: Optional[DelaySpec] = None):
        kind = kind.upper()
        arity = len(inputs)
        if kind in ("NOT", "BUF") and arity != 1:
            raise ArityError(f"{kind} gate '{name}' needs 1 input, got {arity}")
        if kind not in ("NOT", "BUF") and arity < 2:
            raise ArityError(f"{kind} gate '{name}' needs at least 2 inputs, got {arity}")
        self.input_ports = tuple(f"in{i}" for i in range(arity))
        self.output_ports = ("out",)
        super().__init__(name, out=output, **{f"in{i}": net for i, net in enumerate(inputs)})
        self.kind = kind
        self.nominal = delay
        self.delay: DelaySpec = delay or DelaySpec.symmetric(1)

    def elaborate(self, sim: Simulator) -> None:
        self.delay = sim.timing.gate_delay(self.name, self.nominal)

    def _evaluate(self, levels: Sequence[Logic]) -> Logic:
        return eval_combinational(self.kind, levels)

    def settle(self, inputs):
        return {"out": self._evaluate([inputs[p] for p in self.input_ports])}

    def on_input(self, sim, port, level):
        out = self._evaluate([self.read(sim, p) for p in self.input_ports])
        self.drive(sim, "out", out, sim.now + self.delay.for_level(out))


class DelayLine(Component):
    """
    Transport delay line; with invert=True the line also inverts.

    The nominal delay is scaled by the instance's variation multiplier.
    """
    input_ports = ("in",)
    output_ports = ("out",)

    def __init__(self, name: str, input: str, output: str, delay: Union[int, DelaySpec],
                 invert: bool = False):
        super().__init__(name, out=output, **{"in": input})
        self.nominal = delay if isinstance(delay, DelaySpec) else DelaySpec.symmetric(int(delay))
        self.invert = invert
        self.delay = self.nominal

    def elaborate(self, sim: Simulator) -> None:
        self.delay = self.nominal.scaled(sim.timing.multiplier(self.name))

    def _out(self, level: Logic) -> Logic:
        return logic_not(level) if self.invert else level

    def settle(self, inputs):
        return {"out": self._out(inputs["in"])}

    def on_input(self, sim, port, level):
        out = self._out(level)
        self.drive(sim, "out", out, sim.now + self.delay.for_level(out))


def mux4(inputs: Sequence[Logic], select: Tuple[Logic, Logic]) -> Logic:
    """Level of the input chosen by a Gray-coded (bit1, bit0) select; X select gives X."""
    if len(inputs) != 4:
        raise ArityError(f"mux4 takes 4 inputs, got {len(inputs)}")
    if X in select:
        return X
    return inputs[GRAY_INDEX[tuple(select)]]


class Mux4(Component):
    """
    Glitch-free 4:1 multiplexer with a Gray-coded select.

    A select change between inputs that carry the same level emits no
    output event, because the driver drops transactions equal to the
    projected value.
    """
    input_ports = ("d0", "d1", "d2", "d3", "s1", "s0")
    output_ports = ("out",)

    def __init__(self, name: str, inputs: Sequence[str], select: Tuple[str, str], output: str,
                 delay: Optional[DelaySpec] = None):
        if len(inputs) != 4:
            raise ArityError(f"Mux4 '{name}' needs 4 data inputs")
        super().__init__(
            name, out=output, s1=select[0], s0=select[1],
            **{f"d{i}": net for i, net in enumerate(inputs)},
        )
        self.nominal = delay
        self.delay: DelaySpec = delay or DelaySpec.symmetric(1)

    def elaborate(self, sim):
        self.delay = sim.timing.gate_delay(self.name, self.nominal)

    def _evaluate(self, get) -> Logic:
        return mux4([get(f"d{i}") for i in range(4)], (get("s1"), get("s0")))

    def settle(self, inputs):
        return {"out": self._evaluate(inputs.__getitem__)}

    def on_input(self, sim, port, level):
        out = self._evaluate(lambda p: self.read(sim, p))
        self.drive(sim, "out", out, sim.now + self.delay.for_level(out))


def delay_line(input: Waveform, d: int, timing: Optional[TimingProfile] = None) -> Waveform:
    """Run a waveform through a single transport delay line of d ticks."""
    if d < 1:
        raise ConfigError(f"Delay line needs d >= 1 tick, got {d}")
    netlist = Netlist("delay_line")
    netlist.add(WaveformSource("src", "a", input))
    netlist.add(DelayLine("line", "a", "y", d))
    netlist.record("y")
    t_end = (input.times[-1] if input.transitions else 0) + d
    sim = Simulator(netlist, timing or TimingProfile.ideal())
    return sim.run_until(t_end)["y"]
