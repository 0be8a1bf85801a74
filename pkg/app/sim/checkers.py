"""
Waveform property monitors.

Every checker is a pure function over waveforms (or edge lists) returning
a list of ViolationReport; an empty list means the property holds.
"""
import logging
from dataclasses import asdict, dataclass, replace
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, Union

from app.sim.kernel import MetastabilityEvent
from app.sim.logic import L0, L1, X, Logic
from app.sim.waveform import Waveform

logger = logging.getLogger(__name__)


class ViolationKind(str, Enum):
    GLITCH = "Glitch"
    HIGH_TIME = "HighTimeEnvelope"
    LOW_TIME = "LowTimeEnvelope"
    RISING_SPACING = "RisingSpacing"
    FIXED_DELAY = "FixedDelayDrift"
    MONOTONE_DELAY = "MonotoneDelayBreach"
    PIPELINE = "PipelineMismatch"
    X_REACHED = "XReached"
    SELECT_WINDOW = "SelectWindow"
    MASKING = "MaskingTransition"


@dataclass(frozen=True)
class ViolationReport:
    kind: ViolationKind
    net: str
    time: int
    measured: Union[int, float, str]
    bound: str
    message: str = ""
    seed: Optional[int] = None
    scenario_hash: Optional[str] = None

    def with_reproducer(self, seed: int, scenario_hash: str) -> "ViolationReport":
        return replace(self, seed=seed, scenario_hash=scenario_hash)

    def to_dict(self) -> Dict[str, object]:
        data = asdict(self)
        data["kind"] = self.kind.value
        return data


def default_min_pulse(period: int) -> int:
    """
    Shortest legitimate pulse: T/12, stricter than the T/20 default it
    replaces. The shortest intended pulse in any module is the T/10
    shaper pre-stage.
    """
    return max(1, period // 12)


def check_glitch(w: Waveform, min_pulse: int, net: str = "") -> List[ViolationReport]:
    """One finding per complete high or low pulse shorter than min_pulse."""
    if min_pulse < 1:
        raise ValueError("min_pulse must be at least 1 tick")
    findings = []
    for pulse in w.pulses():
        if pulse.level != X and pulse.width < min_pulse:
            findings.append(ViolationReport(
                ViolationKind.GLITCH, net, pulse.start, pulse.width, f">= {min_pulse}",
                f"{pulse.level.value}-pulse of {pulse.width} fs",
            ))
    return findings


def check_envelope(
    w: Waveform,
    rising_period: int,
    high_lo: int,
    high_hi: int,
    *,
    net: str = "",
    low_lo: Optional[int] = None,
    low_hi: Optional[int] = None,
    shifts: Optional[Mapping[int, int]] = None,
    allowed_extra: Tuple[int, int] = (0, 0),
    tolerance: int = 0,
) -> List[ViolationReport]:
    """
    Check high times, optional low times, and rising-to-rising spacing.

    Args:
        rising_period: Nominal spacing of consecutive rising flanks
        shifts: Declared extra spacing per gap index (gap k lies between
            rising flank k and k+1)
        allowed_extra: Range of extra spacing tolerated on undeclared gaps
        tolerance: Slack applied to the spacing check
    """
    findings: List[ViolationReport] = []
    for pulse in w.high_pulses():
        if not high_lo <= pulse.width <= high_hi:
            findings.append(ViolationReport(
                ViolationKind.HIGH_TIME, net, pulse.start, pulse.width, f"[{high_lo}, {high_hi}]",
            ))
    if low_lo is not None or low_hi is not None:
        lo = low_lo if low_lo is not None else 0
        hi = low_hi if low_hi is not None else float("inf")
        for pulse in w.low_pulses():
            if not lo <= pulse.width <= hi:
                findings.append(ViolationReport(
                    ViolationKind.LOW_TIME, net, pulse.start, pulse.width, f"[{lo}, {hi}]",
                ))
    shifts = shifts or {}
    rising = w.rising_edges
    for k, (a, b) in enumerate(zip(rising, rising[1:])):
        gap = b - a
        if k in shifts:
            lo = hi = rising_period + shifts[k]
        else:
            lo, hi = rising_period + allowed_extra[0], rising_period + allowed_extra[1]
        if not lo - tolerance <= gap <= hi + tolerance:
            findings.append(ViolationReport(
                ViolationKind.RISING_SPACING, net, b, gap, f"[{lo - tolerance}, {hi + tolerance}]",
                f"gap {k}",
            ))
    return findings


def rising_gaps(w: Waveform) -> List[int]:
    rising = w.rising_edges
    return [b - a for a, b in zip(rising, rising[1:])]


def check_monotone_delay(
    edges: Union[Waveform, Sequence[int]],
    baseline_edges: Sequence[int],
    *,
    tolerance: int = 0,
    max_step: Optional[int] = None,
    net: str = "",
) -> List[ViolationReport]:
    """
    Cumulative offsets o_k = edge_k - baseline_k must never decrease.

    A decrease larger than tolerance means a pulse was delayed while a
    later one was not. With max_step set, a single increase beyond it is
    reported as well. Edge lists are compared up to the shorter one.
    """
    if isinstance(edges, Waveform):
        edges = edges.rising_edges
    offsets = [e - b for e, b in zip(edges, baseline_edges)]
    findings = []
    for k in range(1, len(offsets)):
        step = offsets[k] - offsets[k - 1]
        if step < -tolerance:
            findings.append(ViolationReport(
                ViolationKind.MONOTONE_DELAY, net, edges[k], offsets[k], f">= {offsets[k - 1] - tolerance}",
                f"edge {k} earlier than edge {k - 1} relative to baseline",
            ))
        elif max_step is not None and step > max_step + tolerance:
            findings.append(ViolationReport(
                ViolationKind.MONOTONE_DELAY, net, edges[k], step, f"<= {max_step + tolerance}",
                f"edge {k} shifted by more than one step",
            ))
    return findings


def check_fixed_delay(delays: Sequence[int], tolerance: int = 0, net: str = "",
                      times: Optional[Sequence[int]] = None) -> List[ViolationReport]:
    """All delays must lie within tolerance of the first one."""
    if not delays:
        return []
    reference = delays[0]
    findings = []
    for k, delay in enumerate(delays):
        if abs(delay - reference) > tolerance:
            findings.append(ViolationReport(
                ViolationKind.FIXED_DELAY, net, times[k] if times else k, delay,
                f"{reference} +/- {tolerance}",
            ))
    return findings


def edge_delays(inputs: Sequence[int], outputs: Sequence[int]) -> List[Tuple[int, int]]:
    """Pair each input edge with the first output edge at or after it."""
    pairs = []
    j = 0
    for t_in in inputs:
        while j < len(outputs) and outputs[j] < t_in:
            j += 1
        if j == len(outputs):
            break
        pairs.append((t_in, outputs[j]))
        j += 1
    return pairs


def check_no_x(w: Waveform, net: str = "") -> List[ViolationReport]:
    findings = []
    if w.initial == X:
        findings.append(ViolationReport(ViolationKind.X_REACHED, net, 0, "x", "0/1"))
    for time, level in w.transitions:
        if level == X:
            findings.append(ViolationReport(ViolationKind.X_REACHED, net, time, "x", "0/1"))
    return findings


def check_select_window(
    counting_edges: Sequence[int],
    select: Sequence[Waveform],
    lo: int,
    hi: int,
    net: str = "select",
) -> List[ViolationReport]:
    """
    Every select change must land strictly inside (edge + lo, edge + hi)
    of the output falling flank at which the counter counted.
    """
    changes = sorted({t for w in select for t, _ in w.transitions})
    findings = []
    for t in changes:
        preceding = [e for e in counting_edges if e <= t]
        if not preceding:
            findings.append(ViolationReport(ViolationKind.SELECT_WINDOW, net, t, t, "after a counting edge"))
            continue
        offset = t - preceding[-1]
        if not lo < offset < hi:
            findings.append(ViolationReport(
                ViolationKind.SELECT_WINDOW, net, t, offset, f"({lo}, {hi})",
            ))
    return findings


def opaque_phases(enable: Waveform, transparent_high: bool = True) -> List[Tuple[int, int]]:
    """(close, reopen) times of a latch enable; the last phase may be open-ended."""
    closing = L0 if transparent_high else L1
    phases = []
    close = None
    for time, level in enable.transitions:
        if level == closing:
            close = time
        elif close is not None:
            phases.append((close, time))
            close = None
    if close is not None:
        phases.append((close, 2 ** 62))
    return phases


def check_masking_transitions(
    outputs: Mapping[str, Waveform],
    enable: Waveform,
    c2q: int,
    *,
    transparent_high: bool = True,
    events: Iterable[MetastabilityEvent] = (),
) -> List[ViolationReport]:
    """
    Each masked output may change at most once per opaque phase.

    The phase starts at close + c2q, or once the mask levels are shown if
    the latch entered metastability, and ends at reopen + c2q. Both bounds
    are exclusive: the change that puts the mask level on the output
    belongs to the closing edge and is not counted, so the one allowed
    change is the resolution.
    """
    masked_at = [e.masked_at for e in events if e.masked_at is not None]
    findings = []
    for close, reopen in opaque_phases(enable, transparent_high):
        start = close + c2q
        for t in masked_at:
            if close <= t <= reopen:
                start = max(start, t)
        end = reopen + c2q
        for net, w in outputs.items():
            inside = [t for t in w.times if start < t < end]
            if len(inside) > 1:
                findings.append(ViolationReport(
                    ViolationKind.MASKING, net, inside[1], len(inside), "<= 1",
                    f"opaque phase from {close}",
                ))
    return findings


def stable_at(w: Waveform, t: int, margin: int) -> Optional[Logic]:
    """Level at t if known and free of transitions within +/- margin."""
    level = w.sample(t)
    if level == X or w.has_transition_within(t - margin, t + margin):
        return None
    return level


def check_pipeline(
    droop_in: Waveform,
    e_outs: Sequence[Waveform],
    clk_edges: Sequence[Sequence[int]],
    *,
    capture_offset: int,
    sample_offset: int,
    stable_margin: int = 0,
    exempt_cycles: Set[int] = frozenset(),
) -> List[ViolationReport]:
    """
    Check that a chain hands values on one element per cycle.

    e_outs and clk_edges are ordered by distance from the droop input
    (index 0 is the element sampling droop_in). r_k, the value the first
    element captured in cycle k, is its E_OUT sampled in cycle k+1.
    Element i must show r_{k-1-i} in cycle k. Cycles whose r_k came from
    a metastable capture are listed in exempt_cycles.
    """
    if not e_outs:
        return []
    first = clk_edges[0]
    captured: Dict[int, Logic] = {}
    for k in range(len(first) - 1):
        captured[k] = e_outs[0].sample(first[k + 1] + sample_offset)

    findings = []
    for k, value in captured.items():
        if k in exempt_cycles:
            continue
        expected = stable_at(droop_in, first[k] + capture_offset, stable_margin)
        if expected is not None and value != expected:
            findings.append(ViolationReport(
                ViolationKind.PIPELINE, "e_out[0]", first[k + 1], value.value, expected.value,
                f"cycle {k} captured wrong input value",
            ))
    for i in range(1, len(e_outs)):
        for k, t in enumerate(clk_edges[i]):
            origin = k - 1 - i
            if origin < 0 or origin not in captured or origin in exempt_cycles:
                continue
            expected = captured[origin]
            if expected == X:
                continue
            got = e_outs[i].sample(t + sample_offset)
            if got != expected:
                findings.append(ViolationReport(
                    ViolationKind.PIPELINE, f"e_out[{i}]", t + sample_offset, got.value, expected.value,
                    f"cycle {k} does not carry the value captured in cycle {origin}",
                ))
    return findings


def summarize(findings: Iterable[ViolationReport]) -> Dict[str, int]:
    counts: Dict[str, int] = {}
    for finding in findings:
        counts[finding.kind.value] = counts.get(finding.kind.value, 0) + 1
    return counts
