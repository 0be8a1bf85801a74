"""
Gate-level discrete-event simulation of the droop-adaptive clock generator.
"""
from app.sim.errors import (
    ArityError,
    CausalityError,
    ConfigError,
    InfeasibleShaperError,
    NetlistError,
    OscillationError,
    SimulationError,
    XPropagationError,
)
from app.sim.kernel import Diagnostic, MetastabilityEvent, Netlist, Simulator, run_until
from app.sim.logic import L0, L1, X, Logic
from app.sim.timing import FS, NS, PS, T_DEFAULT, US, TimingProfile
from app.sim.waveform import Waveform, clock_waveform

__all__ = [
    "ArityError",
    "CausalityError",
    "ConfigError",
    "Diagnostic",
    "FS",
    "InfeasibleShaperError",
    "L0",
    "L1",
    "Logic",
    "MetastabilityEvent",
    "NS",
    "Netlist",
    "NetlistError",
    "OscillationError",
    "PS",
    "SimulationError",
    "Simulator",
    "T_DEFAULT",
    "TimingProfile",
    "US",
    "Waveform",
    "X",
    "XPropagationError",
    "clock_waveform",
    "run_until",
]
