"""
Dual delay-line droop detector.

The clock races down a reference line of x+2 buffers and a test line of
x supply-sensitive buffers. At nominal supply the test line wins; a deep
enough droop slows it past the reference line and flips the detect
flip-flop.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from app.sim.errors import ConfigError
from app.sim.gates import DelayLine, Gate
from app.sim.kernel import Component, Diagnostic, MetastabilityEvent, Netlist, Simulator, WaveformSource
from app.sim.latches import DFlipFlop
from app.sim.logic import L0
from app.sim.timing import PS, DelaySpec, TimingProfile, VddProfile, VoltageDelayMap, scale_delay
from app.sim.waveform import Waveform

logger = logging.getLogger(__name__)


class VoltageScaledBuffer(Component):
    """Buffer whose delay is scaled by the supply voltage at the moment an edge enters it."""
    input_ports = ("in",)
    output_ports = ("out",)

    def __init__(self, name: str, input: str, output: str, delay: int, vdd: VddProfile,
                 voltage_map: VoltageDelayMap):
        super().__init__(name, out=output, **{"in": input})
        self.nominal = delay
        self.delay = delay
        self.vdd = vdd
        self.voltage_map = voltage_map

    def elaborate(self, sim):
        self.delay = sim.timing.line_delay(self.name, self.nominal)

    def delay_at(self, t: int) -> int:
        return scale_delay(self.delay, self.voltage_map.scale(self.vdd.at(t)))

    def settle(self, inputs):
        return {"out": inputs["in"]}

    def on_input(self, sim, port, level):
        self.drive(sim, "out", level, sim.now + self.delay_at(sim.now))


@dataclass(frozen=True)
class DroopDetectorConfig:
    buffers: int = 8
    buffer_delay: int = 200 * PS
    voltage_map: VoltageDelayMap = VoltageDelayMap()
    vdd: VddProfile = VddProfile.constant(1.2)

    def __post_init__(self):
        if self.buffers < 1:
            raise ConfigError("The test line needs at least one buffer")
        if self.buffer_delay < 1:
            raise ConfigError("buffer_delay must be at least 1 tick")

    @property
    def crossover_multiplier(self) -> float:
        """Test-line slow-down at which both lines take equally long."""
        return (self.buffers + 2) / self.buffers

    def crossover_voltage(self) -> float:
        return self.voltage_map.voltage_for(self.crossover_multiplier)


@dataclass(frozen=True)
class DetectorNets:
    clk_in: str = "CLK_IN"
    droop_n: str = "DROOP_N"
    prefix: str = "det"

    def net(self, name: str) -> str:
        return f"{self.prefix}.{name}"


def droop_detector_components(cfg: DroopDetectorConfig, nets: DetectorNets) -> List[Component]:
    p = nets.prefix
    parts: List[Component] = []
    net = nets.clk_in
    for i in range(cfg.buffers + 2):
        out = nets.net(f"ref{i}")
        parts.append(DelayLine(f"{p}.ref{i}", net, out, cfg.buffer_delay))
        net = out
    ref_out = net
    net = nets.clk_in
    for i in range(cfg.buffers):
        out = nets.net(f"test{i}")
        parts.append(VoltageScaledBuffer(f"{p}.test{i}", net, out, cfg.buffer_delay, cfg.vdd, cfg.voltage_map))
        net = out
    test_out = net
    parts += [
        DFlipFlop(f"{p}.detect_ff", ref_out, test_out, nets.net("DETECT"), boot=L0),
        DFlipFlop(f"{p}.calibrate_ff", test_out, ref_out, nets.net("CALIBRATE"), boot=L0),
        Gate(f"{p}.out_inv", "NOT", [nets.net("DETECT")], nets.droop_n, DelaySpec.symmetric(1)),
    ]
    return parts


def build_droop_detector(cfg: DroopDetectorConfig, clk_in: Optional[Waveform] = None,
                         nets: DetectorNets = DetectorNets()) -> Netlist:
    netlist = Netlist(nets.prefix)
    if clk_in is not None:
        netlist.add(WaveformSource("clk_src", nets.clk_in, clk_in))
    netlist.extend(droop_detector_components(cfg, nets))
    netlist.record(nets.clk_in, nets.net("DETECT"), nets.net("CALIBRATE"), nets.droop_n,
                  nets.net(f"ref{cfg.buffers + 1}"), nets.net(f"test{cfg.buffers - 1}"))
    return netlist


@dataclass
class DetectorOutputs:
    calibrate: Waveform
    detect: Waveform
    droop_detected_n: Waveform
    metastability: List[MetastabilityEvent] = field(default_factory=list)
    diagnostics: List[Diagnostic] = field(default_factory=list)
    waveforms: Dict[str, Waveform] = field(default_factory=dict)


def run_detector(cfg: DroopDetectorConfig, clk_in: Waveform, vdd: Optional[VddProfile] = None,
                 timing: Optional[TimingProfile] = None, t_end: Optional[int] = None) -> DetectorOutputs:
    """Run the detector on clk_in; vdd replaces the configured supply profile when given."""
    if vdd is not None:
        cfg = DroopDetectorConfig(cfg.buffers, cfg.buffer_delay, cfg.voltage_map, vdd)
    timing = timing or TimingProfile()
    nets = DetectorNets()
    sim = Simulator(build_droop_detector(cfg, clk_in, nets), timing)
    if t_end is None:
        t_end = (clk_in.times[-1] if clk_in.transitions else 0) + timing.period
    waves = sim.run_until(t_end)
    if sim.metastability:
        logger.info(f"Droop detector went metastable {len(sim.metastability)} time(s)")
    return DetectorOutputs(
        calibrate=waves[nets.net("CALIBRATE")],
        detect=waves[nets.net("DETECT")],
        droop_detected_n=waves[nets.droop_n],
        metastability=list(sim.metastability),
        diagnostics=list(sim.diagnostics),
        waveforms=waves,
    )
