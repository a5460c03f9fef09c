"""Dyadic digits and residuals on [0,1] and [0,1]^2.

The residual map is r(t) = 2t - floor(2t) with the endpoint held fixed:
r(1) = 1 and its digit is 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .rational import as_fraction

__all__ = [
    "DyadicOrbit",
    "residual_step",
    "residual_digits",
    "orbit_2d",
    "in_transition_set",
    "bad_orbit_stage",
]

_ONE = Fraction(1)


def residual_step(t: Fraction) -> tuple[int, Fraction]:
    """One step: (digit, residual)."""
    if t == _ONE:
        return 1, _ONE
    d = math.floor(2 * t)
    return d, 2 * t - d


def _check_unit(t: Fraction, what: str = "t"):
    if not 0 <= t <= 1:
        raise ValueError(f"{what} = {t} is outside [0, 1]")


def residual_digits(t, n: int) -> tuple[list[int], Fraction]:
    """Digits Q_1..Q_n of t and the residual r^n(t)."""
    t = as_fraction(t)
    _check_unit(t)
    if n < 0:
        raise ValueError("n must be nonnegative")
    digits = []
    for _ in range(n):
        d, t = residual_step(t)
        digits.append(d)
    return digits, t


@dataclass(frozen=True)
class DyadicOrbit:
    """Orbit of a point under the coordinatewise residual map.

    ``residuals[j]`` is R_j for j = 0..n-1; ``terminal`` is R_n and
    ``digits[j-1]`` is Q_j.
    """

    point: tuple
    digits: tuple
    residuals: tuple
    terminal: tuple

    @property
    def n(self) -> int:
        return len(self.digits)

    def check(self) -> None:
        states = list(self.residuals) + [self.terminal]
        for j, q in enumerate(self.digits):
            prev, cur = states[j], states[j + 1]
            for c in range(2):
                sticky = prev[c] == 1 and cur[c] == 1 and q[c] == 1
                if not sticky and cur[c] != 2 * prev[c] - q[c]:
                    raise AssertionError(f"stage {j + 1}: residual recursion broken")
                if not 0 <= cur[c] <= 1:
                    raise AssertionError(f"stage {j + 1}: residual left [0,1]")


def orbit_2d(p, n: int, check_affine: bool = True) -> DyadicOrbit:
    """Coordinatewise orbit of ``p``.

    When ``p`` lies in the interior of a dyadic square of side 2^-n, the
    terminal residual is cross-checked against 2^n p - m.
    """
    x, y = as_fraction(p[0]), as_fraction(p[1])
    _check_unit(x, "x")
    _check_unit(y, "y")
    if n < 0:
        raise ValueError("n must be nonnegative")
    cur = (x, y)
    digits, residuals = [], []
    for _ in range(n):
        residuals.append(cur)
        (dx, rx), (dy, ry) = residual_step(cur[0]), residual_step(cur[1])
        digits.append((dx, dy))
        cur = (rx, ry)
    if check_affine:
        scale = 2 ** n
        for c, t in enumerate((x, y)):
            s = scale * t
            if s.denominator != 1:  # interior of a dyadic interval
                if cur[c] != s - math.floor(s):
                    raise AssertionError("residual iterate is not the local affine map")
    return DyadicOrbit((x, y), tuple(digits), tuple(residuals), cur)


def in_transition_set(t: Fraction, delta_n: Fraction) -> bool:
    """Membership in J_n = [0, delta_n] U [1/2, 1/2 + delta_n]."""
    return 0 <= t <= delta_n or Fraction(1, 2) <= t <= Fraction(1, 2) + delta_n


def bad_orbit_stage(p, n: int, delta_n) -> int | None:
    """Smallest j in 1..n whose (j-1)-stage residual has a coordinate in J_n."""
    delta_n = as_fraction(delta_n)
    if delta_n <= 0:
        raise ValueError("delta_n must be positive")
    orb = orbit_2d(p, n, check_affine=False)
    for j, (rx, ry) in enumerate(orb.residuals, start=1):
        if in_transition_set(rx, delta_n) or in_transition_set(ry, delta_n):
            return j
    return None
