"""
Value change dump output and a reader for the files we write.

Nets become 1-bit wires in a scope hierarchy derived from their dotted
names ("de0.M_Q0" lives in scope top.de0). Timescale is 1 fs, so VCD
timestamps are simulation ticks. A transition at t=0 is folded into the
initial value.
"""
import logging
from pathlib import Path
from typing import Dict, List, Mapping, Optional, TextIO, Tuple, Union

from vcd import VCDWriter

from app.sim.logic import L0, L1, X, Logic
from app.sim.waveform import Waveform

logger = logging.getLogger(__name__)

ROOT_SCOPE = "top"
TIMESCALE = "1 fs"

_VCD_VALUE = {L0: 0, L1: 1, X: "x"}


def split_net(net: str) -> Tuple[str, str]:
    """(scope, name) of a dotted net name."""
    parts = net.split(".")
    return ".".join([ROOT_SCOPE, *parts[:-1]]), parts[-1]


def write_vcd(out: TextIO, waveforms: Mapping[str, Waveform], comment: str = "") -> int:
    """
    Write waveforms as a value change dump.

    Returns:
        Number of value changes written after the initial values
    """
    changes: List[Tuple[int, int, str]] = []
    with VCDWriter(out, timescale=TIMESCALE, comment=comment, version="droop-sim") as writer:
        variables = {}
        for order, net in enumerate(sorted(waveforms)):
            w = waveforms[net]
            scope, name = split_net(net)
            variables[net] = writer.register_var(scope, name, "wire", size=1, init=_VCD_VALUE[w.sample(0)])
            changes.extend((t, order, net) for t, _ in w.transitions if t > 0)
        changes.sort()
        for t, _, net in changes:
            writer.change(variables[net], t, _VCD_VALUE[waveforms[net].sample(t)])
    return len(changes)


def dump_vcd(path: Union[str, Path], waveforms: Mapping[str, Waveform], comment: str = "") -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8") as f:
        count = write_vcd(f, waveforms, comment)
    logger.debug(f"Wrote {len(waveforms)} nets, {count} changes to {path}")
    return path


def _level(char: str) -> Logic:
    if char == "0":
        return L0
    if char == "1":
        return L1
    return X


def parse_vcd(text: str) -> Dict[str, Waveform]:
    """
    Read 1-bit wires back into waveforms, keyed by dotted net name
    relative to the root scope. Vector and real variables are ignored.
    """
    scopes: List[str] = []
    names: Dict[str, str] = {}
    initial: Dict[str, Logic] = {}
    changes: Dict[str, List[Tuple[int, Logic]]] = {}
    time = 0
    in_header = True
    tokens = iter(text.split())
    for token in tokens:
        if in_header:
            if token == "$scope":
                next(tokens)  # scope type
                scopes.append(next(tokens))
            elif token == "$upscope":
                scopes.pop()
            elif token == "$var":
                _kind, size, ident, name = next(tokens), next(tokens), next(tokens), next(tokens)
                if size == "1":
                    path = scopes[1:] if scopes and scopes[0] == ROOT_SCOPE else scopes
                    names[ident] = ".".join([*path, name])
            elif token == "$enddefinitions":
                in_header = False
            continue
        if token.startswith("#"):
            time = int(token[1:])
        elif token.startswith("$"):
            continue
        elif token[0] in "01xXzZ" and token[1:] in names:
            net = names[token[1:]]
            level = _level(token[0].lower())
            if time == 0:
                initial[net] = level
            else:
                changes.setdefault(net, []).append((time, level))
        elif token[0] in "bBrR":
            next(tokens, None)  # value belongs to a vector or real variable
    return {
        net: Waveform.from_changes(initial.get(net, X), changes.get(net, []))
        for net in names.values()
    }


def read_vcd(path: Union[str, Path]) -> Dict[str, Waveform]:
    return parse_vcd(Path(path).read_text(encoding="utf-8"))


def vcd_equivalent(w: Waveform) -> Waveform:
    """The waveform a VCD round trip yields: t=0 transitions folded into the initial value."""
    return Waveform.from_changes(w.sample(0), [(t, v) for t, v in w.transitions if t > 0])


def first_mismatch(original: Mapping[str, Waveform], parsed: Mapping[str, Waveform]) -> Optional[str]:
    for net, w in sorted(original.items()):
        if net not in parsed:
            return f"net '{net}' missing from dump"
        if parsed[net] != vcd_equivalent(w):
            return f"net '{net}' differs after round trip"
    return None
