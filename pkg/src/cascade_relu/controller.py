"""Loop controller: the polygonal loop E, the doubling map F on the loop,
the torus controller, the readouts rho-/rho+ and the four-branch atom readout.

The loop is the boundary of the triangle with corners a0 = (0,0), a1 = (1,1),
a2 = (1,0), traversed by

    E(t) = (3t, 3t)      on [0, 1/3]
           (1, 2 - 3t)   on [1/3, 2/3]
           (3 - 3t, 0)   on [2/3, 1],

so E(0) = E(1) = a0 (the seam).  Every map defined here is continuous and
piecewise linear on a cone triangulation of the triangle with apex (2/3, 1/3).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .circuit import Circuit, Expr
from .cpwl import CpwlFunction2D, CpwlMesh, PiecewiseLinear1D, cpwl2d_expr, pwl1d_expr
from .dyadic import residual_step
from .network import ReluNetwork
from .rational import as_fraction

__all__ = [
    "APEX",
    "ControllerParams",
    "loop_E",
    "loop_param",
    "on_loop",
    "loop_F_boundary",
    "cone_function",
    "cone_expr",
    "F_functions",
    "readout_functions",
    "E_coordinate_functions",
    "check_special_atom",
    "e_expr",
    "f_expr",
    "readout_exprs",
    "h_readout_expr",
    "build_F_net",
    "build_E_net",
    "build_controller_iterate",
    "build_readouts",
    "build_H_readout",
]

F0 = Fraction(0)
THIRD = Fraction(1, 3)
TWO_THIRDS = Fraction(2, 3)
APEX = (TWO_THIRDS, THIRD)
LOOP_BREAKS = (F0, Fraction(1, 6), THIRD, Fraction(1, 2), TWO_THIRDS, Fraction(5, 6))


@dataclass(frozen=True)
class ControllerParams:
    rho: Fraction = Fraction(1, 4)
    eps_bar: Fraction = Fraction(1, 8)

    def __post_init__(self):
        rho, eps = as_fraction(self.rho), as_fraction(self.eps_bar)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "eps_bar", eps)
        if not (0 < eps < rho < Fraction(1, 2)):
            raise ValueError(f"need 0 < eps_bar < rho < 1/2, got eps_bar={eps}, rho={rho}")


def loop_E(t) -> tuple[Fraction, Fraction]:
    t = as_fraction(t)
    if not 0 <= t <= 1:
        raise ValueError(f"loop parameter {t} outside [0, 1]")
    if t <= THIRD:
        return 3 * t, 3 * t
    if t <= TWO_THIRDS:
        return Fraction(1), 2 - 3 * t
    return 3 - 3 * t, F0


def on_loop(z) -> bool:
    x, y = as_fraction(z[0]), as_fraction(z[1])
    return ((x == y and 0 <= x <= 1) or (x == 1 and 0 <= y <= 1) or (y == 0 and 0 <= x <= 1))


def loop_param(z) -> Fraction:
    """The unique t in [0, 1) with E(t) = z."""
    x, y = as_fraction(z[0]), as_fraction(z[1])
    if not on_loop((x, y)):
        raise ValueError(f"point {(x, y)} is not on the loop")
    if y == 0:
        return F0 if x == 0 else 1 - x / 3
    if x == y:
        return x / 3
    return (2 - y) / 3


def loop_F_boundary(z) -> tuple[Fraction, Fraction]:
    """F on the loop: E(t) -> E(r(t))."""
    t = loop_param(z)
    return loop_E(residual_step(t)[1])


# -- cone triangulation ----------------------------------------------------------


def cone_function(trace: dict, apex_value) -> CpwlFunction2D:
    """CPwL map on the closed triangle with prescribed values at loop points E(t).

    ``trace`` maps loop parameters in [0, 1) to values and must contain t = 0;
    the trace is linear in t between listed parameters (periodically).  The
    triangle is coned from (2/3, 1/3); the side midpoints and corners are
    always vertices, which keeps every vertex star convex.
    """
    trace = {as_fraction(t): as_fraction(v) for t, v in trace.items()}
    if F0 not in trace:
        raise ValueError("the seam parameter t = 0 must be in the trace")
    given = sorted(trace)
    if given[0] < 0 or given[-1] >= 1:
        raise ValueError("trace parameters must lie in [0, 1)")
    ext = given + [Fraction(1)]
    vals_ext = [trace[t] for t in given] + [trace[F0]]

    def interp(t):
        for i in range(len(ext) - 1):
            if ext[i] <= t <= ext[i + 1]:
                return vals_ext[i] + (vals_ext[i + 1] - vals_ext[i]) * (t - ext[i]) / (ext[i + 1] - ext[i])
        raise AssertionError("unreachable")

    ts = sorted(set(given) | set(LOOP_BREAKS))
    verts = [APEX] + [loop_E(t) for t in ts]
    vals = [as_fraction(apex_value)] + [trace[t] if t in trace else interp(t) for t in ts]
    m = len(ts)
    tris = [(0, 1 + i, 1 + (i + 1) % m) for i in range(m)]
    return CpwlFunction2D(CpwlMesh(tuple(verts), tuple(tris), tuple(vals)), None)


def cone_expr(c: Circuit, f: CpwlFunction2D, z, rectify_first: bool = False) -> Expr:
    """Hat-sum circuit for a cone map, offset by its seam value (the seam
    hat is dropped; the hats sum to one on the triangle)."""
    return cpwl2d_expr(c, f, z[0], z[1], method="hats", offset=f.mesh.vertex_values[1],
                       rectify_first=rectify_first)


def _F_trace(component: int) -> dict:
    return {t: loop_E(residual_step(t)[1])[component] for t in LOOP_BREAKS}


def F_functions() -> tuple[CpwlFunction2D, CpwlFunction2D]:
    """Both components of F; the apex takes the mean of the breakpoint images."""
    out = []
    for c in range(2):
        tr = _F_trace(c)
        out.append(cone_function(tr, sum(tr.values()) / len(tr)))
    return out[0], out[1]


def readout_functions(params: ControllerParams) -> tuple[CpwlFunction2D, CpwlFunction2D]:
    """rho- (identity on [eps, 1], seam ramp from 1) and rho+ (identity on
    [0, 1 - eps], seam ramp down to 0), apex value 1/2."""
    e = params.eps_bar
    minus = {F0: Fraction(1), e: e, THIRD: THIRD, TWO_THIRDS: TWO_THIRDS}
    plus = {F0: F0, THIRD: THIRD, TWO_THIRDS: TWO_THIRDS, 1 - e: 1 - e}
    half = Fraction(1, 2)
    return cone_function(minus, half), cone_function(plus, half)


def E_coordinate_functions() -> tuple[PiecewiseLinear1D, PiecewiseLinear1D]:
    bp = (F0, THIRD, TWO_THIRDS, Fraction(1))
    return (PiecewiseLinear1D(bp, (F0, Fraction(1), Fraction(1), F0)),
            PiecewiseLinear1D(bp, (F0, Fraction(1), F0, F0)))


def check_special_atom(H: CpwlFunction2D, rho) -> None:
    """Raise unless H >= 0 at its vertices, vanishes off its mesh, and every
    triangle carrying a nonzero value lies in [rho, 1 - rho]^2."""
    rho = as_fraction(rho)
    if H.outside_value != 0:
        raise ValueError("an atom must vanish off its mesh")
    m = H.mesh
    for v, val in enumerate(m.vertex_values):
        if val < 0:
            raise ValueError(f"atom is negative at vertex {m.vertices[v]}")
    for tri in m.triangles:
        if any(m.vertex_values[v] != 0 for v in tri):
            for v in tri:
                x, y = m.vertices[v]
                if not (rho <= x <= 1 - rho and rho <= y <= 1 - rho):
                    raise ValueError(f"atom support reaches {(x, y)}, outside [{rho}, {1 - rho}]^2")


# -- circuit fragments ---------------------------------------------------------


def e_expr(c: Circuit, t: Expr) -> tuple[Expr, Expr]:
    e1, e2 = E_coordinate_functions()
    return pwl1d_expr(c, e1, t), pwl1d_expr(c, e2, t)


_F_CACHE: list = []


def f_expr(c: Circuit, z) -> tuple[Expr, Expr]:
    if not _F_CACHE:
        _F_CACHE.extend(F_functions())
    f1, f2 = _F_CACHE
    return cone_expr(c, f1, z), cone_expr(c, f2, z)


def readout_exprs(c: Circuit, z, params: ControllerParams) -> tuple[Expr, Expr]:
    rm, rp = readout_functions(params)
    return cone_expr(c, rm, z), cone_expr(c, rp, z)


def h_readout_expr(c: Circuit, H: CpwlFunction2D, rx, ry) -> Expr:
    """min over the four branches of H(rho^s(z1), rho^t(z2)).

    ``rx`` and ``ry`` are the (rho-, rho+) pairs of the two loop states.
    """
    branches = [cpwl2d_expr(c, H, u, v) for u in rx for v in ry]
    return c.min2(c.min2(branches[0], branches[1]), c.min2(branches[2], branches[3]))


def _controller_chain(c: Circuit, n: int):
    x, y = c.inputs
    zx, zy = e_expr(c, x), e_expr(c, y)
    for _ in range(n):
        # loop states are nonnegative; storing them keeps every stage alike
        zx = f_expr(c, tuple(c.nonneg(e) for e in zx))
        zy = f_expr(c, tuple(c.nonneg(e) for e in zy))
    return zx, zy


# -- networks --------------------------------------------------------------------


def build_F_net() -> ReluNetwork:
    c = Circuit(2)
    out = f_expr(c, c.inputs)
    return c.to_network(list(out), meta={"kind": "loop_F"})


def build_E_net(dim: int = 2) -> ReluNetwork:
    """(x, y) -> (E(x), E(y)); with ``dim=1`` the scalar loop map t -> E(t)."""
    if dim not in (1, 2):
        raise ValueError("dim must be 1 or 2")
    c = Circuit(dim, [True] * dim)
    outs = [e for t in c.inputs for e in e_expr(c, t)]
    return c.to_network(outs, meta={"kind": "loop_E", "dim": dim})


def build_controller_iterate(n: int) -> ReluNetwork:
    """(x, y) -> (E(r^n x), E(r^n y)) on the unit square."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    c = Circuit(2, [True, True])
    zx, zy = _controller_chain(c, n)
    return c.to_network([*zx, *zy], meta={"kind": "controller", "n": n})


def build_readouts(params: ControllerParams | None = None) -> tuple[ReluNetwork, ReluNetwork]:
    params = params or ControllerParams()
    nets = []
    for f, tag in zip(readout_functions(params), ("rho_minus", "rho_plus")):
        c = Circuit(2)
        x, y = c.inputs
        nets.append(c.to_network([cone_expr(c, f, (x, y))], meta={"kind": tag}))
    return nets[0], nets[1]


def build_H_readout(H: CpwlFunction2D, params: ControllerParams | None, n: int) -> ReluNetwork:
    """(x, y) -> H(R_n(x, y)) on the unit square."""
    params = params or ControllerParams()
    check_special_atom(H, params.rho)
    c = Circuit(2, [True, True])
    zx, zy = _controller_chain(c, n)
    out = h_readout_expr(c, H, readout_exprs(c, zx, params), readout_exprs(c, zy, params))
    return c.to_network([out], meta={"kind": "atom_readout", "n": n, "atom": H.hash()})
