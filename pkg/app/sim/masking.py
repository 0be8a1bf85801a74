"""
Masking latches.

A masking latch is a transparent latch whose outputs show a fixed level
while it is internally metastable. A 0-masking port reads L0 and a
1-masking port reads L1 until the element resolves; resolution then
shows up as at most one late transition per port.
"""
import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from app.sim.errors import ConfigError
from app.sim.kernel import Simulator
from app.sim.latches import DLatch, LatchState, Metastable, Stable, StorageElement, capture
from app.sim.logic import L0, L1, Logic, X
from app.sim.timing import MetastabilityConfig, SampledSignal

logger = logging.getLogger(__name__)

# port -> level shown while metastable
MASK_LEVELS: Dict[str, Logic] = {"q0": L0, "q1": L1, "q0b": L0}

VARIANT_PORTS: Dict[str, Tuple[str, ...]] = {
    "mask0": ("q0",),
    "mask1": ("q1",),
    "mask01": ("q0", "q1"),
    # two 0-masking ports
    "mask00": ("q0", "q0b"),
}


@dataclass(frozen=True)
class MaskingOutputs:
    variant: str
    q_mask0: Optional[Logic] = None
    q_mask1: Optional[Logic] = None

    @classmethod
    def of(cls, state: LatchState, variant: str) -> "MaskingOutputs":
        ports = VARIANT_PORTS[variant]
        if isinstance(state, Metastable):
            q0, q1 = L0, L1
        else:
            q0 = q1 = state.level
        return cls(
            variant=variant,
            q_mask0=q0 if "q0" in ports else None,
            q_mask1=q1 if "q1" in ports else None,
        )


def masking_capture(data: SampledSignal, t_edge: int, cfg: MetastabilityConfig,
                    instance_id: str = "", cycle: int = 0, seed: int = 0) -> LatchState:
    """Closing-edge capture; an X input counts as a window violation."""
    return capture(data, t_edge, cfg, instance_id, cycle, seed)


def masking_resolve(state: LatchState, now: int) -> Tuple[LatchState, Tuple[Tuple[str, Logic], ...]]:
    """
    Resolve a metastable masking latch.

    Returns the stable state and the single transition of the port whose
    mask level differs from the resolved value.
    """
    if not isinstance(state, Metastable):
        return state, ()
    value = state.resolution.value
    transitions = tuple((port, value) for port, mask in MASK_LEVELS.items() if mask != value)
    return Stable(value), transitions


def masking_reopen(state: LatchState, t_transparent: int, data: Logic) -> Tuple[LatchState, bool]:
    """
    Reopen the latch at t_transparent with data on D.

    Returns the tracking state and whether an unresolved metastability
    was choked off. A resolution due strictly before the reopen wins.
    """
    choked = isinstance(state, Metastable) and state.resolves_at >= t_transparent
    return Stable(data), choked


def masked_levels(level: Logic, ports: Tuple[str, ...]) -> Dict[str, Logic]:
    """Output levels for an internal level; X shows the mask levels."""
    if level == X:
        return {port: MASK_LEVELS[port] for port in ports}
    return {port: level for port in ports}


class MaskingLatch(DLatch):
    """
    Mask-0 / Mask-1 / Mask-01 latch.

    Behaves as a plain transparent latch whenever no window violation
    occurs; its outputs never carry X.
    """
    output_ports = ("q0", "q1", "q0b")
    masking = True

    def __init__(self, name: str, d: str, en: str, *, q0: Optional[str] = None,
                 q1: Optional[str] = None, q0b: Optional[str] = None, variant: str = "mask01",
                 transparent_high: bool = True, clear_n: Optional[str] = None, boot: Logic = L0,
                 clock_to_q: Optional[int] = None, metastability: Optional[MetastabilityConfig] = None):
        if variant not in VARIANT_PORTS:
            raise ConfigError(f"Unknown masking variant '{variant}'")
        allowed = VARIANT_PORTS[variant]
        for port, net in (("q0", q0), ("q1", q1), ("q0b", q0b)):
            if net is not None and port not in allowed:
                raise ConfigError(f"{variant} latch '{name}' has no output '{port}'")
        StorageElement.__init__(self, name, boot=boot, clock_to_q=clock_to_q, metastability=metastability,
                                d=d, en=en, q0=q0, q1=q1, q0b=q0b, clear_n=clear_n)
        self.variant = variant
        self.clear_level = L0
        self.transparent_high = transparent_high
        self.transparent = False
        self._masked_at = 0

    def levels(self, level: Logic) -> Dict[str, Logic]:
        return masked_levels(level, VARIANT_PORTS[self.variant])

    def outputs(self) -> MaskingOutputs:
        return MaskingOutputs.of(self.state, self.variant)

    def _decide(self, sim: Simulator, t_edge: int, cycle: int) -> None:
        if self.transparent or self.cleared:
            return
        state = masking_capture(sim.view(self.pins["d"]), t_edge, self.cfg,
                                instance_id=self.name, cycle=cycle, seed=self.seed)
        self.state = state
        if not isinstance(state, Metastable):
            return
        for net in self._output_nets():
            sim.cancel_pending(net, sim.now)
        masked_at = max(t_edge + self.c2q, sim.now)
        self._masked_at = masked_at
        self._log_entry(sim, state, cycle, masked_at)
        self._emit(sim, self.levels(X), masked_at)
        self._arm_resolution(sim, state)

    def _reopen(self, sim: Simulator) -> None:
        state, choked = masking_reopen(self.state, sim.now, self.read(sim, "d"))
        if choked:
            self._abandon(sim, "choked")
        self.state = state
        self._emit(sim, self.levels(state.level), sim.now + self.c2q)

    def _resolved(self, sim: Simulator) -> None:
        self._resolution = None
        if not isinstance(self.state, Metastable):
            return
        self.state, transitions = masking_resolve(self.state, sim.now)
        if self._record is not None:
            self._record.outcome = "resolved"
            self._record.resolved_at = sim.now
        ports = VARIANT_PORTS[self.variant]
        at = max(sim.now + self.c2q, self._masked_at)
        for port, level in transitions:
            if port in ports:
                self.drive(sim, port, level, at)
