"""
Interval-algebra reference models for idealized timing.

These functions compute waveforms directly from their inputs, without
the event kernel: a gate with delay g is the Boolean combination of its
inputs shifted by g, a delay line is a shift, and a latch holds the value
sampled at its closing flank. Simulations in idealized mode must match
them transition for transition.
"""
from typing import Callable, Dict, List, Optional, Sequence

from app.sim.logic import L0, L1, Logic, eval_combinational, logic_not
from app.sim.shaper import ShaperStages
from app.sim.waveform import Waveform


def combine(fn: Callable[[Sequence[Logic]], Logic], *waves: Waveform) -> Waveform:
    """Pointwise combination over the union of all change points."""
    times = sorted({t for w in waves for t in w.times})
    initial = fn([w.initial for w in waves])
    return Waveform.from_changes(initial, ((t, fn([w.sample(t) for w in waves])) for t in times))


def gate(kind: str, *inputs: Waveform, delay: int = 0) -> Waveform:
    out = combine(lambda levels: eval_combinational(kind, levels), *inputs)
    return out.shifted(delay)


def line(w: Waveform, delay: int, invert: bool = False) -> Waveform:
    out = w.shifted(delay)
    return out.inverted() if invert else out


def latch(d: Waveform, en: Waveform, c2q: int, *, transparent_high: bool = True, boot: Logic = L0) -> Waveform:
    """Transparent latch fed only stable data at its closing flanks."""
    open_level = L1 if transparent_high else L0
    level = d.initial if en.initial == open_level else boot
    initial = level
    changes = []
    for t in sorted(set(d.times) | set(en.times)):
        if en.sample(t) == open_level:
            level = d.sample(t)
        changes.append((t, level))
    return Waveform.from_changes(initial, changes).shifted(c2q)


def toggle(clk: Waveform, c2q: int, *, rising: bool = True, boot: Logic = L0) -> Waveform:
    level = boot
    changes = []
    for t in (clk.rising_edges if rising else clk.falling_edges):
        level = logic_not(level)
        changes.append((t + c2q, level))
    return Waveform.from_changes(boot, changes)


def shaper(input: Waveform, stages: ShaperStages, gate_delay: int) -> Waveform:
    net = input
    if stages.shorten_delay is not None:
        net = gate("AND", net, line(net, stages.shorten_delay), delay=gate_delay)
    count = len(stages.stage_delays)
    for k, d in enumerate(stages.stage_delays, start=1):
        kind = "NAND" if k == 1 or k % 2 == 0 else "NOR"
        net = gate(kind, net, line(net, d, invert=(k == 1)), delay=gate_delay)
    if count % 2 == 1:
        net = gate("NOT", net, delay=gate_delay)
    return net


def delay_element(clk: Waveform, droop: Waveform, quarter: int, stages: ShaperStages, gate_delay: int,
                  c2q: int, boot: Logic = L1) -> Dict[str, Waveform]:
    """Reference waveforms of one element fed data that is stable at every capture."""
    t4n = gate("NOT", line(clk, quarter), delay=gate_delay)
    gated = gate("AND", clk, t4n, delay=gate_delay)
    master = latch(droop, gated, c2q, transparent_high=True, boot=boot)
    e_out = latch(master, gated, c2q, transparent_high=False, boot=boot)
    s_q0 = latch(master, gated, c2q, transparent_high=False, boot=boot)
    fast_n = gate("NAND", clk, s_q0, delay=gate_delay)
    combined = gate("NAND", fast_n, t4n, delay=gate_delay)
    return {
        "CLK_GATED": gated,
        "M_Q0": master,
        "S_Q0": s_q0,
        "E_OUT": e_out,
        "COMBINED": combined,
        "CLK_OUT": shaper(combined, stages, gate_delay),
    }


def phase_set(clk_in: Waveform, gate_delay: int, c2q: int) -> List[Waveform]:
    """Q1, Q2, QN1, QN2 of the toggle-flip-flop pair."""
    q1 = toggle(gate("BUF", clk_in, delay=gate_delay), c2q)
    q2 = toggle(gate("NOT", clk_in, delay=gate_delay), c2q)
    return [q1, q2, q1.inverted(), q2.inverted()]


def compare(sim: Waveform, ref: Waveform) -> Optional[str]:
    """None if identical, else a description of the first mismatch."""
    if sim.initial != ref.initial:
        return f"initial level {sim.initial.value} != {ref.initial.value}"
    for k, (a, b) in enumerate(zip(sim.transitions, ref.transitions)):
        if a != b:
            return f"transition {k}: simulated {a[0]} fs -> {a[1].value}, reference {b[0]} fs -> {b[1].value}"
    if len(sim.transitions) != len(ref.transitions):
        longer, name = (sim, "simulated") if len(sim.transitions) > len(ref.transitions) else (ref, "reference")
        t, level = longer.transitions[min(len(sim.transitions), len(ref.transitions))]
        return f"extra {name} transition at {t} fs -> {level.value}"
    return None
