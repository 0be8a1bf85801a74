"""
Delay micro-syntax used by scenario documents.

A delay is a bare integer (femtosecond ticks), an absolute time with a
unit ("16ns", "200ps", "1.5us", "108000fs") or a fraction of the clock
period ("T", "T/4", "3T/4", "0.33T", "13T/120"). Fractions of T are
rounded half up to whole ticks.
"""
import math
import re
from fractions import Fraction
from typing import Optional, Union

from app.sim.timing import FS, NS, PS, US, period_fraction

Delay = Union[int, str]

UNITS = {"fs": FS, "ps": PS, "ns": NS, "us": US}

_ABSOLUTE = re.compile(r"^(?P<value>\d+(?:\.\d+)?)\s*(?P<unit>fs|ps|ns|us)$")
_RELATIVE = re.compile(r"^(?P<num>\d+(?:\.\d+)?)?\s*\*?\s*T(?:\s*/\s*(?P<den>\d+))?$")


def period_share(value: Delay) -> Optional[Fraction]:
    """The fraction of T a relative delay names, None for absolute delays."""
    if not isinstance(value, str):
        return None
    match = _RELATIVE.match(value.strip())
    if not match:
        return None
    share = Fraction(match["num"]) if match["num"] else Fraction(1)
    if match["den"]:
        if int(match["den"]) == 0:
            raise ValueError(f"Division by zero in delay '{value}'")
        share /= int(match["den"])
    return share


def is_relative(value: Delay) -> bool:
    return period_share(value) is not None


def parse_delay(value: Delay, period: Optional[int] = None) -> int:
    """
    Convert a delay to femtosecond ticks.

    Args:
        value: Integer ticks or a delay string
        period: Clock period in ticks, needed for fractions of T

    Returns:
        Non-negative number of ticks

    Raises:
        ValueError: If the value cannot be parsed, is negative, or is
            relative while no period is known
    """
    if isinstance(value, bool):
        raise ValueError(f"Not a delay: {value!r}")
    if isinstance(value, int):
        if value < 0:
            raise ValueError(f"Delays must be non-negative, got {value}")
        return value
    if isinstance(value, float):
        if value.is_integer() and value >= 0:
            return int(value)
        raise ValueError(f"Tick counts must be whole numbers, got {value}")

    text = str(value).strip()
    if text.isdigit():
        return int(text)
    match = _ABSOLUTE.match(text)
    if match:
        return int(math.floor(Fraction(match["value"]) * UNITS[match["unit"]] + Fraction(1, 2)))
    share = period_share(text)
    if share is not None:
        if period is None:
            raise ValueError(f"'{text}' is a fraction of the clock period, which is not known here")
        return period_fraction(share, period)
    raise ValueError(
        f"Cannot parse delay {value!r}: expected ticks, a time with a unit (fs, ps, ns, us) "
        f"or a fraction of T such as 'T/4' or '0.33T'"
    )


def check_delay(value: Delay) -> Delay:
    """Syntax check without a period; returns the value with whitespace stripped."""
    parse_delay(value, period=1 * NS)
    return value.strip() if isinstance(value, str) else value


def format_delay(ticks: int) -> str:
    """Largest unit that represents ticks exactly, e.g. 50_000_000 -> '50ns'."""
    for unit in ("us", "ns", "ps"):
        if ticks and ticks % UNITS[unit] == 0:
            return f"{ticks // UNITS[unit]}{unit}"
    return f"{ticks}fs"
