"""
Exception hierarchy for the simulator.

Every error raised by the kernel, the component library or the analysis
helpers derives from SimulationError so callers can catch one type.
"""
from typing import Any, Optional


class SimulationError(Exception):
    """Base class for all simulation failures."""


class CausalityError(SimulationError):
    """An event was scheduled before the current simulation time."""

    def __init__(self, time: int, now: int):
        super().__init__(f"Cannot schedule event at t={time} fs, current time is t={now} fs")
        self.time = time
        self.now = now


class NetlistError(SimulationError):
    """The netlist failed structural validation."""


class OscillationError(SimulationError):
    """A net exceeded the event-storm cap inside one clock period."""

    def __init__(self, net: str, time: int, count: int, window: int):
        super().__init__(
            f"Event storm on net '{net}' at t={time} fs: {count} events within {window} fs"
        )
        self.net = net
        self.time = time
        self.count = count
        self.window = window


class XPropagationError(SimulationError):
    """An X value reached an input that must always be a clean 0 or 1."""

    def __init__(self, instance: str, port: str, time: int):
        super().__init__(f"X on '{port}' of '{instance}' at t={time} fs")
        self.instance = instance
        self.port = port
        self.time = time


class ArityError(SimulationError):
    """A combinational function received the wrong number of inputs."""


class ConfigError(SimulationError):
    """A component or module configuration is invalid."""


class InfeasibleShaperError(SimulationError):
    """A pulse shaper violates its constraints even without delay variation."""

    def __init__(self, message: str, report: Optional[Any] = None):
        super().__init__(message)
        self.report = report
