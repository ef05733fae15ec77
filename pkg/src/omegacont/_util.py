"""Small shared helpers: complex/JSON conversions and parsing."""

from __future__ import annotations

import re

from .errors import SchemaError

ENTIRE_RADIUS = 1e300  # finite stand-in for an entire function's radius


def as_complex(value) -> complex:
    """Coerce a JSON value ([re, im], number, or string) to complex."""
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, complex):
        return value
    if isinstance(value, str):
        return parse_complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        re_part, im_part = value
        return complex(float(re_part), float(im_part))
    raise SchemaError(f"cannot interpret {value!r} as a complex number")


def pair(z: complex) -> list:
    return [float(z.real), float(z.imag)]


_COMPLEX_CLEAN = re.compile(r"\s+")


def parse_complex(text: str) -> complex:
    """Parse '1+2i', '-3.5', '2i', '1+2j' style literals."""
    cleaned = _COMPLEX_CLEAN.sub("", text).replace("i", "j")
    try:
        return complex(cleaned)
    except ValueError as exc:
        raise SchemaError(f"bad complex literal {text!r}") from exc
