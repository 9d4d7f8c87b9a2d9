"""Quantities with unit suffixes, as written in scenario files.

    "1.5 MHz"         -> 1.5e6      (a rate; see ``convention``)
    "2pi*8.8 MHz"     -> 2 pi 8.8e6 (angular frequency, explicit)
    "20 us"           -> 2e-5
    "6.55e-7"         -> 6.55e-7    (dimensionless)

A frequency written without the ``2pi*`` factor is ambiguous.  Under the
default ``convention="angular"`` it is used as an angular frequency as
written; ``convention="cyclic"`` multiplies it by 2 pi.  An explicit
``2pi*`` is always honoured and never doubled.
"""
from __future__ import annotations

import math
import re

FREQ = {"Hz": 1.0, "kHz": 1e3, "KHz": 1e3, "MHz": 1e6, "GHz": 1e9, "THz": 1e12}
TIME = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "μs": 1e-6, "ns": 1e-9, "ps": 1e-12}
CONVENTIONS = ("angular", "cyclic")

_QTY = re.compile(
    r"^\s*(?P<twopi>(?:2\s*(?:pi|π)\s*[*×x]?\s*))?"
    r"(?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"
    r"\s*(?P<unit>[A-Za-zµμ]+)?\s*$")


class UnitError(ValueError):
    pass


def parse_quantity(text, kind: str | None = None, convention: str = "angular") -> float:
    """Parse a number or a ``"<value> <unit>"`` string into SI (rad/s, s).

    ``kind`` (``"frequency"``, ``"time"``, ``"dimensionless"``) restricts the
    accepted units; plain numbers are accepted for any kind and taken as is.
    """
    if convention not in CONVENTIONS:
        raise UnitError(f"unknown frequency convention {convention!r}")
    if isinstance(text, bool):
        raise UnitError("booleans are not quantities")
    if isinstance(text, (int, float)):
        return float(text)
    m = _QTY.match(str(text))
    if not m:
        raise UnitError(f"cannot parse quantity {text!r}")
    value = float(m["num"])
    unit = m["unit"]
    twopi = m["twopi"] is not None
    if unit is None:
        if kind == "frequency" and twopi:
            return 2 * math.pi * value
        if twopi:
            raise UnitError(f"{text!r}: 2pi factor on a non-frequency quantity")
        return value
    if unit in FREQ:
        if kind not in (None, "frequency"):
            raise UnitError(f"{text!r}: expected a {kind}, got a frequency")
        scale = FREQ[unit]
        if twopi or convention == "cyclic":
            scale *= 2 * math.pi
        return value * scale
    if unit in TIME:
        if kind not in (None, "time"):
            raise UnitError(f"{text!r}: expected a {kind}, got a time")
        if twopi:
            raise UnitError(f"{text!r}: 2pi factor on a time")
        return value * TIME[unit]
    raise UnitError(f"{text!r}: unknown unit {unit!r}")
