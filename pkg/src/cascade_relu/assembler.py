"""Assembly of the full realization of V^n g.

On the unit square the stacked patch vector of V^n H (H a special atom) is

    Phi_0 = H(R_n z) e_l,
    Phi_j = sum_q Pi_a(chi_{q2}(z2_{j-1}), Pi_a(chi_{q1}(z1_{j-1}), T_q^T Phi_{j-1})),
    output_l = Phi_n[b11],

where z_{j-1} are loop states after j-1 controller steps.  The circuit runs
the controller twice: pass 1 reaches z_n for the readout, pass 2 replays the
controller in lockstep with the gating stages.  Recomputing keeps the width
independent of n.

Patches are glued on the window with clamps sigma_k(t) = ReLU(t-k+1) - ReLU(t-k),
and a general seed is realized as a sum of shifted atoms.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .circuit import Circuit, Expr, lincomb
from .controller import (ControllerParams, check_special_atom, e_expr, f_expr, h_readout_expr,
                         readout_exprs)
from .cpwl import CpwlFunction2D
from .decomposition import AtomDecomposition, AtomTerm, decompose
from .network import NetworkStats, ReluNetwork, evaluate_batch, stats
from .rational import as_fraction, format_rational
from .refinement import (DIGITS, Mask, PatchIndexing, TransitionMatrices, Window,
                         check_window_preservation, matrix_bound, transition_matrices)
from .selectors import SelectorParams, pi_expr, selector_exprs

__all__ = [
    "CascadeParams",
    "CascadeBounds",
    "CompiledRealization",
    "GlueCompatibilityError",
    "cascade_bounds",
    "unit_square_exprs",
    "build_unit_square",
    "glue_expr",
    "build_glue",
    "build_atom_net",
    "build_seed_net",
]

F0 = Fraction(0)


@dataclass(frozen=True)
class CascadeParams:
    """rho (atom inset), eps_bar (readout seam width), delta_bar (selector ramps)."""

    rho: Fraction = Fraction(1, 4)
    eps_bar: Fraction = Fraction(1, 8)
    delta_bar: Fraction = Fraction(1, 2)

    def __post_init__(self):
        for name in ("rho", "eps_bar", "delta_bar"):
            object.__setattr__(self, name, as_fraction(getattr(self, name)))
        self.controller()
        SelectorParams(self.delta_bar, self.rho, 0)

    def controller(self) -> ControllerParams:
        return ControllerParams(self.rho, self.eps_bar)

    def selector(self, n: int) -> SelectorParams:
        return SelectorParams(self.delta_bar, self.rho, n)

    def to_json(self) -> dict:
        return {k: format_rational(getattr(self, k)) for k in ("rho", "eps_bar", "delta_bar")}


@dataclass(frozen=True)
class CascadeBounds:
    B: Fraction
    M_H: Fraction
    a_n: Fraction
    n: int


def cascade_bounds(tm: TransitionMatrices, H: CpwlFunction2D, n: int) -> CascadeBounds:
    """a_n = max(1, max_{j<=n} B^j M_H); this equals max(1, B^n M_H) when B >= 1."""
    B = matrix_bound(tm)
    M_H = max(abs(v) for v in H.mesh.vertex_values)
    a = max([Fraction(1)] + [B ** j * M_H for j in range(n + 1)])
    return CascadeBounds(B, M_H, a, n)


# -- unit square -------------------------------------------------------------------


def _transpose_rows(tm: TransitionMatrices) -> dict:
    """For each q, the rows of T_q^T as sparse {col: coef} maps."""
    N = tm.window.size
    out = {}
    for q in DIGITS:
        T = tm[q]
        out[q] = [{i: T[i][c] for i in range(N) if T[i][c] != 0} for c in range(N)]
    return out


def unit_square_exprs(c: Circuit, H: CpwlFunction2D, tm: TransitionMatrices, params: CascadeParams,
                      n: int, x: Expr, y: Expr, ells=None) -> dict:
    """Circuit outputs e_l^T Vec(V^n H)(x, y) for l in ``ells`` (all by default).

    ``x`` and ``y`` must take values in [0, 1].
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    N = tm.window.size
    ells = list(range(N)) if ells is None else list(ells)
    a = cascade_bounds(tm, H, n).a_n
    cp, sp = params.controller(), params.selector(n)
    rows_t = _transpose_rows(tm)
    b11 = PatchIndexing(tm.window).b11

    # Loop states, readouts and selectors depend on one coordinate only and
    # are hash-consed across callers that feed the same coordinate.
    with c.scope("pass1"):
        zx, zy = e_expr(c, x), e_expr(c, y)
        for _ in range(n):
            zx, zy = f_expr(c, zx), f_expr(c, zy)
        rx, ry = readout_exprs(c, zx, cp), readout_exprs(c, zy, cp)
        rx, ry = tuple(c.nonneg(r) for r in rx), tuple(c.nonneg(r) for r in ry)
        h = c.nonneg(h_readout_expr(c, H, rx, ry))

    def store(z):
        return tuple(c.nonneg(u) for u in z)

    with c.scope("pass2"):
        zx, zy = store(e_expr(c, x)), store(e_expr(c, y))
        # The initial state h*e_l is stored like every later state, so stage 1
        # has the same layout as the others.
        phis = {l: [c.relu(h, True) - c.relu(-h, True) if i == l
                    else c.relu(Expr(), True) - c.relu(Expr(), True) for i in range(N)]
                for l in ells}
        for j in range(1, n + 1):
            sx = tuple(c.nonneg(s) for s in selector_exprs(c, zx, sp))
            sy = tuple(c.nonneg(s) for s in selector_exprs(c, zy, sp))
            for l in ells:
                phi = phis[l]
                new = [Expr() for _ in range(N)]
                for q in DIGITS:
                    branch = [lincomb((w, phi[i]) for i, w in rows_t[q][col].items()) for col in range(N)]
                    if all(e.is_constant() and e.const == 0 for e in branch):
                        continue
                    gated = pi_expr(c, sy[q[1]], pi_expr(c, sx[q[0]], branch, a), a)
                    new = [u + v for u, v in zip(new, gated)]
                phis[l] = [c.split(e) for e in new] if j < n else new
            if j < n:
                zx, zy = store(f_expr(c, zx)), store(f_expr(c, zy))
    return {l: phis[l][b11] for l in ells}


def build_unit_square(H: CpwlFunction2D, tm: TransitionMatrices, params: CascadeParams | None,
                      n: int) -> ReluNetwork:
    """(x, y) in [0,1]^2 -> the L1*L2 patch values of V^n H."""
    params = params or CascadeParams()
    check_special_atom(H, params.rho)
    c = Circuit(2, [True, True])
    x, y = c.inputs
    outs = unit_square_exprs(c, H, tm, params, n, x, y)
    return c.to_network([outs[l] for l in sorted(outs)],
                        meta={"kind": "unit_square", "n": n, "atom": H.hash(), "mask": tm.mask_hash,
                              "window": tm.window.to_json(), "params": params.to_json(),
                              "ordering": "row-major l=(a-1)*L2+(b-1)"})


# -- gluing ---------------------------------------------------------------------------


class GlueCompatibilityError(ValueError):
    def __init__(self, edge: str, point, values):
        self.edge, self.point, self.values = edge, point, values
        super().__init__(f"patch edge {edge} incompatible at {point}: {values}")


def _sigma(c: Circuit, t: Expr, k: int) -> Expr:
    """Clamp of t - k + 1 to [0, 1], stored in one nonnegative neuron."""
    return c.nonneg(c.relu(t - (k - 1)) - c.relu(t - k))


def glue_expr(c: Circuit, patch: Callable, w: Window, x: Expr, y: Expr,
              edges_vanish: bool = False) -> Expr:
    """Glued physical function from patch values.

    ``patch(u, v, l)`` returns the circuit value of patch l at (u, v).  With
    ``edges_vanish`` the edge traces are known to be zero and are skipped.
    """
    idx = PatchIndexing(w)
    sx = {a: _sigma(c, x, a) for a in range(1, w.L1 + 1)}
    sy = {b: _sigma(c, y, b) for b in range(1, w.L2 + 1)}
    zero = Expr()
    terms = []
    for a in range(1, w.L1 + 1):
        for b in range(1, w.L2 + 1):
            l = idx.index(a, b)
            terms.append((1, patch(sx[a], sy[b], l)))
            if edges_vanish:
                continue
            if a >= 2:
                terms.append((-1, patch(zero, sy[b], l)))
            if b >= 2:
                terms.append((-1, patch(sx[a], zero, l)))
            if a >= 2 and b >= 2:
                terms.append((1, patch(zero, zero, l)))
    return lincomb(terms)


def _edge_samples(count: int):
    return [Fraction(k, count - 1) for k in range(count)]


def check_patch_compatibility(net: ReluNetwork, w: Window, samples: int = 64) -> None:
    """Shared edges must agree and the outer boundary must vanish."""
    idx = PatchIndexing(w)
    ts = _edge_samples(samples)
    pts = [(F0, t) for t in ts] + [(Fraction(1), t) for t in ts] + \
          [(t, F0) for t in ts] + [(t, Fraction(1)) for t in ts]
    vals = dict(zip(pts, evaluate_batch(net, pts)))
    for a in range(1, w.L1 + 1):
        for b in range(1, w.L2 + 1):
            l = idx.index(a, b)
            for t in ts:
                if a < w.L1 and vals[(Fraction(1), t)][l] != vals[(F0, t)][idx.index(a + 1, b)]:
                    raise GlueCompatibilityError(f"({a},{b})|({a + 1},{b})", (1, t),
                                                 (vals[(Fraction(1), t)][l], vals[(F0, t)][idx.index(a + 1, b)]))
                if b < w.L2 and vals[(t, Fraction(1))][l] != vals[(t, F0)][idx.index(a, b + 1)]:
                    raise GlueCompatibilityError(f"({a},{b})|({a},{b + 1})", (t, 1),
                                                 (vals[(t, Fraction(1))][l], vals[(t, F0)][idx.index(a, b + 1)]))
                for side, p, cond in (("x=0", (F0, t), a == 1), ("x=L1", (Fraction(1), t), a == w.L1),
                                      ("y=0", (t, F0), b == 1), ("y=L2", (t, Fraction(1)), b == w.L2)):
                    if cond and vals[p][l] != 0:
                        raise GlueCompatibilityError(f"({a},{b}) outer {side}", p, (vals[p][l], 0))


def build_glue(vectorized: ReluNetwork, w: Window, edges_vanish: bool = False,
               check: bool = True) -> ReluNetwork:
    """Physical function on the plane from a network of stacked unit patches."""
    if vectorized.input_dim != 2 or vectorized.output_dim != w.size:
        raise ValueError(f"expected a 2 -> {w.size} patch network")
    if check:
        check_patch_compatibility(vectorized, w)
    c = Circuit(2)
    x, y = c.inputs
    cache: dict = {}

    def patch(u: Expr, v: Expr, l: int) -> Expr:
        key = (id(u), id(v))
        if key not in cache:
            cache[key] = c.apply_network(vectorized, [u, v], layer_scopes=True)
        return cache[key][l]

    out = glue_expr(c, patch, w, x, y, edges_vanish)
    meta = dict(vectorized.meta)
    meta.update(kind="glued", window=w.to_json())
    return c.to_network([out], meta=meta)


# -- seed pipeline ------------------------------------------------------------------------


@dataclass
class CompiledRealization:
    network: ReluNetwork
    provenance: dict
    stats: NetworkStats
    decomposition: AtomDecomposition | None = None
    timings: dict = field(default_factory=dict)

    def __call__(self, p):
        from .network import evaluate
        return evaluate(self.network, p)[0]


def _seed_support_inside(g: CpwlFunction2D, w: Window) -> None:
    box = g.support_bbox()
    if box is not None and not (0 <= box[0] and 0 <= box[1] and box[2] <= w.L1 and box[3] <= w.L2):
        raise ValueError(f"seed support box {tuple(str(v) for v in box)} is not inside the window")


def _atom_expr(c: Circuit, term: AtomTerm, tm: TransitionMatrices, params: CascadeParams, n: int,
               x: Expr, y: Expr) -> Expr:
    """V^n of the translated atom H(. - delta), i.e. (V^n H)(. - 2^-n delta).

    V^n H vanishes on the integer lines of the window, so the edge traces
    of the gluing formula drop out.
    """
    check_special_atom(term.atom, params.rho)
    scale = Fraction(1, 2 ** n)
    xs, ys = x - scale * term.shift[0], y - scale * term.shift[1]

    def patch(u, v, l):
        return unit_square_exprs(c, term.atom, tm, params, n, u, v, [l])[l]

    return glue_expr(c, patch, tm.window, xs, ys, edges_vanish=True)


def build_atom_net(term: AtomTerm, m: Mask, w: Window, params: CascadeParams | None, n: int) -> ReluNetwork:
    """Network for V^n[H(. - delta)] with (H, delta) taken from ``term``; the
    coefficient is not applied."""
    params = params or CascadeParams()
    if n < 0:
        raise ValueError("n must be nonnegative")
    tm = transition_matrices(m, w, check_window_preservation(m, w).require())
    c = Circuit(2)
    x, y = c.inputs
    out = _atom_expr(c, term, tm, params, n, x, y)
    return c.to_network([out], meta={"kind": "shifted_atom", "n": n, "atom": term.atom.hash(),
                                     "shift": [format_rational(s) for s in term.shift],
                                     "mask": m.hash(), "window": w.to_json(), "params": params.to_json()})


def build_seed_net(g: CpwlFunction2D, m: Mask, w: Window, params: CascadeParams | None, n: int,
                   decomposition: AtomDecomposition | None = None) -> CompiledRealization:
    """Exact network for V^n g on the whole plane."""
    params = params or CascadeParams()
    t0 = time.perf_counter()
    if n < 0:
        raise ValueError("n must be nonnegative")
    if g.outside_value != 0:
        raise ValueError("the seed must vanish off its mesh")
    _seed_support_inside(g, w)
    cert = check_window_preservation(m, w).require()
    tm = transition_matrices(m, w, cert)
    d = decomposition if decomposition is not None else decompose(g, params.rho)
    if d.rho != params.rho:
        raise ValueError("decomposition was made for a different rho")
    t1 = time.perf_counter()

    c = Circuit(2)
    x, y = c.inputs
    out = lincomb((term.coefficient, _atom_expr(c, term, tm, params, n, x, y)) for term in d.terms)
    prov = {
        "mask": m.hash(),
        "seed": g.hash(),
        "window": w.to_json(),
        "n": n,
        "params": params.to_json(),
        "atoms": len(d.terms),
        "ordering": "row-major l=(a-1)*L2+(b-1)",
    }
    net = c.to_network([out], meta={"kind": "cascade", **prov})
    t2 = time.perf_counter()
    return CompiledRealization(net, prov, stats(net), d,
                               {"decompose_s": t1 - t0, "assemble_s": t2 - t1})
