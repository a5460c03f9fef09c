"""Exact rational helpers shared by every module.

All numeric data in this package is carried as :class:`fractions.Fraction`,
which is always normalized (lowest terms, positive denominator).  Files use
the textual form ``"p/q"``; floating point literals are rejected.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from fractions import Fraction
from numbers import Integral, Rational

__all__ = [
    "Fraction",
    "RationalParseError",
    "as_fraction",
    "parse_rational",
    "format_rational",
    "lcm_denominator",
    "stable_hash",
]

_RAT_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


class RationalParseError(ValueError):
    """Raised when a string is not a valid ``p/q`` rational."""


def parse_rational(text, where: str = "") -> Fraction:
    """Parse ``"p/q"`` (or a bare integer ``"p"``) into a Fraction."""
    if isinstance(text, bool):
        raise RationalParseError(f"{where or 'value'}: booleans are not rationals")
    if isinstance(text, (Integral, Fraction)):
        return Fraction(text)
    if not isinstance(text, str):
        raise RationalParseError(
            f"{where or 'value'}: expected a 'p/q' string, got {type(text).__name__}"
        )
    m = _RAT_RE.match(text)
    if m is None:
        raise RationalParseError(f"{where or 'value'}: malformed rational {text!r}")
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise RationalParseError(f"{where or 'value'}: zero denominator in {text!r}")
    return Fraction(int(m.group(1)), den)


def format_rational(q) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def as_fraction(x) -> Fraction:
    """Coerce ints, Fractions and ``p/q`` strings; refuse floats."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, (Integral, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return parse_rational(x)
    raise TypeError(f"cannot use {type(x).__name__} as an exact rational")


def lcm_denominator(values) -> int:
    d = 1
    for v in values:
        d = math.lcm(d, Fraction(v).denominator)
    return d


def stable_hash(obj) -> str:
    """Short SHA-256 digest of a JSON-serializable object (canonical form)."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]
