"""
Three-valued logic levels and Kleene evaluation of combinational gates.
"""
from enum import Enum
from typing import Callable, Dict, Sequence

from app.sim.errors import ArityError


class Logic(str, Enum):
    """Logic level carried by a net: a clean 0, a clean 1 or unknown."""
    L0 = "0"
    L1 = "1"
    X = "x"

    def __invert__(self) -> "Logic":
        return logic_not(self)

    @property
    def is_known(self) -> bool:
        return self is not Logic.X

    @classmethod
    def parse(cls, value) -> "Logic":
        """Accept 0/1/'x', booleans, or the enum names L0/L1/X."""
        if isinstance(value, Logic):
            return value
        if isinstance(value, bool):
            return cls.L1 if value else cls.L0
        text = str(value).strip().upper()
        if text in ("0", "L0"):
            return cls.L0
        if text in ("1", "L1"):
            return cls.L1
        if text == "X":
            return cls.X
        raise ValueError(f"Not a logic level: {value!r}")


L0, L1, X = Logic.L0, Logic.L1, Logic.X


def logic_not(a: Logic) -> Logic:
    if a is X:
        return X
    return L0 if a is L1 else L1


def logic_and(inputs: Sequence[Logic]) -> Logic:
    # a controlling 0 wins over X
    if any(v is L0 for v in inputs):
        return L0
    if all(v is L1 for v in inputs):
        return L1
    return X


def logic_or(inputs: Sequence[Logic]) -> Logic:
    if any(v is L1 for v in inputs):
        return L1
    if all(v is L0 for v in inputs):
        return L0
    return X


def logic_xor(inputs: Sequence[Logic]) -> Logic:
    if any(v is X for v in inputs):
        return X
    ones = sum(1 for v in inputs if v is L1)
    return L1 if ones % 2 else L0


_UNARY: Dict[str, Callable[[Logic], Logic]] = {
    "NOT": logic_not,
    "BUF": lambda a: a,
}

_NARY: Dict[str, Callable[[Sequence[Logic]], Logic]] = {
    "AND": logic_and,
    "NAND": lambda v: logic_not(logic_and(v)),
    "OR": logic_or,
    "NOR": lambda v: logic_not(logic_or(v)),
    "XOR": logic_xor,
    "XNOR": lambda v: logic_not(logic_xor(v)),
}

GATE_KINDS = tuple(_UNARY) + tuple(_NARY)


def eval_combinational(kind: str, inputs: Sequence[Logic]) -> Logic:
    """
    Evaluate a gate of the given kind under strong Kleene semantics.

    Args:
        kind: One of NOT, BUF, AND, NAND, OR, NOR, XOR, XNOR
        inputs: Input levels; NOT/BUF take exactly one, the others two or more

    Returns:
        The output level

    Raises:
        ArityError: If the number of inputs does not fit the gate kind
    """
    kind = kind.upper()
    if kind in _UNARY:
        if len(inputs) != 1:
            raise ArityError(f"{kind} takes 1 input, got {len(inputs)}")
        return _UNARY[kind](inputs[0])
    if kind in _NARY:
        if len(inputs) < 2:
            raise ArityError(f"{kind} takes at least 2 inputs, got {len(inputs)}")
        return _NARY[kind](inputs)
    raise ArityError(f"Unknown gate kind '{kind}'")
