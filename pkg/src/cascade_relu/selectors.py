"""Digit selectors on the loop and the product gadget.

The selector chi_{0,n} reads the current dyadic digit off a loop state:
along the loop, chi_{0,n}(E(t)) is a trapezoid equal to 1 on [delta_n, 1/2]
and 0 on [1/2 + delta_n, 1], with linear ramps on the transition set
J_n = [0, delta_n] U [1/2, 1/2 + delta_n].  chi_{1,n} carries the complementary
trace and is built independently of chi_{0,n}.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .circuit import Circuit, Expr
from .controller import THIRD, TWO_THIRDS, cone_expr, cone_function
from .cpwl import CpwlFunction2D
from .network import AffineLayer, ReluNetwork
from .rational import as_fraction, format_rational

__all__ = [
    "SelectorParams",
    "selector_trace",
    "selector_functions",
    "selector_exprs",
    "build_selector",
    "pi_expr",
    "product_gadget",
]

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class SelectorParams:
    delta_bar: Fraction = Fraction(1, 2)
    rho: Fraction = Fraction(1, 4)
    n: int = 1

    def __post_init__(self):
        db, rho = as_fraction(self.delta_bar), as_fraction(self.rho)
        object.__setattr__(self, "delta_bar", db)
        object.__setattr__(self, "rho", rho)
        if not 0 < db < 1:
            raise ValueError(f"delta_bar must lie in (0, 1), got {db}")
        if not 0 < rho < HALF:
            raise ValueError(f"rho must lie in (0, 1/2), got {rho}")
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 0:
            raise ValueError("n must be a nonnegative integer")

    @property
    def delta_n(self) -> Fraction:
        return self.delta_bar * self.rho / 2 ** self.n

    def in_J(self, t) -> bool:
        t, d = as_fraction(t), self.delta_n
        return 0 <= t <= d or HALF <= t <= HALF + d


def selector_trace(q: int, p: SelectorParams):
    """chi_{q,n} o E as a function of the loop parameter t in [0, 1]."""
    d = p.delta_n

    def chi0(t: Fraction) -> Fraction:
        if t <= d:
            return t / d
        if t <= HALF:
            return Fraction(1)
        if t <= HALF + d:
            return (HALF + d - t) / d
        return Fraction(0)

    if q == 0:
        return chi0
    if q == 1:
        return lambda t: 1 - chi0(t)
    raise ValueError("digit must be 0 or 1")


def selector_functions(p: SelectorParams) -> tuple[CpwlFunction2D, CpwlFunction2D]:
    ts = {Fraction(0), p.delta_n, THIRD, HALF, HALF + p.delta_n, TWO_THIRDS}
    out = []
    for q in (0, 1):
        tr = selector_trace(q, p)
        out.append(cone_function({t: tr(t) for t in ts}, HALF))
    return out[0], out[1]


# Hats are formed as min(ReLU(lambda)) so that the weights of the ramp
# vertices, which scale exactly like 1/delta_n, never mix with bounded ones.
def selector_exprs(c: Circuit, z, p: SelectorParams) -> tuple[Expr, Expr]:
    f0, f1 = selector_functions(p)
    return cone_expr(c, f0, z, True), cone_expr(c, f1, z, True)


def build_selector(q: int, p: SelectorParams) -> ReluNetwork:
    if q not in (0, 1):
        raise ValueError("digit must be 0 or 1")
    c = Circuit(2)
    x, y = c.inputs
    out = cone_expr(c, selector_functions(p)[q], (x, y), rectify_first=True)
    return c.to_network([out], meta={"kind": "selector", "q": q, "n": p.n,
                                     "delta_n": f"{p.delta_n.numerator}/{p.delta_n.denominator}"})


def pi_expr(c: Circuit, lam: Expr, ys: Sequence[Expr], a) -> list[Expr]:
    """Pi_a(lam, y) = -ReLU(lam*a - y) - ReLU((1 - lam)*a - ReLU(-y)) + a, per component."""
    a = as_fraction(a)
    if a <= 0:
        raise ValueError("gate bound a must be positive")
    out = []
    for y in ys:
        if y.is_constant() and y.const == 0:
            out.append(Expr())  # Pi(lam, 0) = 0 for lam in [0, 1]
            continue
        h1 = c.relu(lam * a - y)
        h2 = c.relu((1 - lam) * a - c.relu(-y))
        out.append(a - h1 - h2)
    return out


def product_gadget(a, N: int) -> ReluNetwork:
    """Pi_a as a network (lam, y_1..y_N) -> N outputs; width 2N+1, two hidden layers.

    For lam in [0, 1] and y in [-a, a]^N: Pi(1, y) = y, Pi(0, y) = 0, Pi(lam, 0) = 0.
    """
    a = as_fraction(a)
    if a <= 0:
        raise ValueError("gate bound a must be positive")
    if N < 1:
        raise ValueError("N must be positive")
    one = Fraction(1)
    # hidden 1: [ReLU(lam*a - y_i)]_i, [ReLU(-y_i)]_i, ReLU(lam)
    rows1 = [{0: a, 1 + i: -one} for i in range(N)] + [{1 + i: -one} for i in range(N)] + [{0: one}]
    # hidden 2: carry the first block, then ReLU((1 - lam)*a - ReLU(-y_i))
    rows2 = [{i: one} for i in range(N)] + [{2 * N: -a, N + i: -one} for i in range(N)]
    bias2 = [Fraction(0)] * N + [a] * N
    rows3 = [{i: -one, N + i: -one} for i in range(N)]
    layers = [
        AffineLayer.from_rows(rows1, [Fraction(0)] * (2 * N + 1), N + 1),
        AffineLayer.from_rows(rows2, bias2, 2 * N + 1),
        AffineLayer.from_rows(rows3, [a] * N, 2 * N),
    ]
    return ReluNetwork(N + 1, layers, {"kind": "product_gadget", "a": format_rational(a), "N": N})
