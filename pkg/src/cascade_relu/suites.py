"""Property suites run by the verification harness.

Each suite compares a built network (or a construction step) with an
independent exact reference and returns a :class:`SuiteResult` carrying the
number of checks, the number of failures and the first failing witness.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .assembler import (CascadeParams, build_atom_net, build_glue, build_unit_square)
from .controller import (build_controller_iterate, build_E_net, build_F_net, build_H_readout,
                         loop_E)
from .cpwl import CpwlFunction2D, eval_mesh
from .decomposition import AtomDecomposition, verify_decomposition
from .dyadic import bad_orbit_stage, residual_digits
from .network import ReluNetwork, evaluate_batch, stats
from .rational import format_rational
from .refinement import (Mask, PatchIndexing, TransitionMatrices, Window, localize, oracle_cascade_physical,
                         oracle_direct_batch)
from .selectors import SelectorParams, build_selector, product_gadget, selector_trace

__all__ = [
    "SuiteResult",
    "random_rational",
    "random_unit_points",
    "bad_orbit_point",
    "controller_suite",
    "torus_suite",
    "readout_suite",
    "boundary_suite",
    "selector_suite",
    "gadget_suite",
    "gluing_suite",
    "oracle_suite",
    "decomposition_suite",
    "translation_suite",
]

HALF = Fraction(1, 2)


def _fmt(v):
    if isinstance(v, Fraction):
        return format_rational(v)
    if isinstance(v, (list, tuple)):
        return [_fmt(u) for u in v]
    if isinstance(v, dict):
        return {k: _fmt(u) for k, u in v.items()}
    return v


@dataclass
class SuiteResult:
    name: str
    checked: int = 0
    failures: int = 0
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def record(self, good: bool, **witness) -> None:
        self.checked += 1
        if not good:
            self.failures += 1
            if self.witness is None:
                self.witness = _fmt(witness)

    def to_json(self) -> dict:
        return {"name": self.name, "ok": self.ok, "checked": self.checked, "failures": self.failures,
                "witness": self.witness, "details": _fmt(self.details)}


def random_rational(rnd: random.Random, lo, hi, max_den: int = 2 ** 20) -> Fraction:
    """Uniform-ish rational in [lo, hi] with denominator at most ``max_den``."""
    q = rnd.randint(1, max_den)
    lo, hi = Fraction(lo), Fraction(hi)
    a = -((-lo * q).__floor__())  # ceil(lo*q)
    b = (hi * q).__floor__()
    return Fraction(rnd.randint(a, b), q)


def random_unit_points(rnd: random.Random, count: int) -> list:
    return [(random_rational(rnd, 0, 1), random_rational(rnd, 0, 1)) for _ in range(count)]


def _unit_grid(level: int) -> list:
    s = 2 ** level
    return [(Fraction(i, s), Fraction(j, s)) for i in range(s + 1) for j in range(s + 1)]


def _net_values(net: ReluNetwork, points) -> list:
    return evaluate_batch(net, [list(p) for p in points])


# -- controller ------------------------------------------------------------------


def _special_ts() -> list:
    ts = {Fraction(0), Fraction(1), HALF, Fraction(1, 3), Fraction(2, 3), Fraction(1, 6), Fraction(5, 6)}
    ts |= {Fraction(k, 2 ** j) for j in range(1, 6) for k in range(2 ** j)}
    return sorted(ts)


def controller_suite(k_max: int = 32, count: int = 1000, seed: int = 0) -> SuiteResult:
    """F-net applied k times to E(t) equals E(r^k t) for k = 0..k_max."""
    res = SuiteResult("controller")
    rnd = random.Random(seed)
    ts = _special_ts()
    ts += [random_rational(rnd, 0, 1) for _ in range(max(count - len(ts), 0))]
    e_net = build_E_net(1)
    zs = [tuple(v) for v in _net_values(e_net, [(t,) for t in ts])]
    for t, z in zip(ts, zs):
        res.record(z == loop_E(t), t=t, got=z, want=loop_E(t), k=0)
    f_net = build_F_net()
    for k in range(1, k_max + 1):
        zs = [tuple(v) for v in _net_values(f_net, zs)]
        for t, z in zip(ts, zs):
            want = loop_E(residual_digits(t, k)[1])
            res.record(z == want, t=t, k=k, got=z, want=want)
    res.details = {"k_max": k_max, "parameters": len(ts), "F_stats": stats(f_net).__dict__}
    return res


def torus_suite(n_values=range(0, 9), count: int = 1000, seed: int = 0) -> SuiteResult:
    """Controller iterate on [0,1]^2 equals (E(r^n x), E(r^n y))."""
    res = SuiteResult("torus_controller")
    rnd = random.Random(seed)
    pts = [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(1)), (HALF, Fraction(1))]
    pts += random_unit_points(rnd, count - len(pts))
    for n in n_values:
        net = build_controller_iterate(n)
        for p, v in zip(pts, _net_values(net, pts)):
            want = (*loop_E(residual_digits(p[0], n)[1]), *loop_E(residual_digits(p[1], n)[1]))
            res.record(tuple(v) == want, n=n, point=p, got=v, want=want)
    res.details = {"n_values": list(n_values), "points": len(pts)}
    return res


# -- readouts ------------------------------------------------------------------------


def _H_terminal(H: CpwlFunction2D, p, n: int) -> Fraction:
    return eval_mesh(H, (residual_digits(p[0], n)[1], residual_digits(p[1], n)[1]))


def readout_suite(H: CpwlFunction2D, params: CascadeParams | None = None, n_values=range(0, 7),
                  count: int = 1000, seed: int = 0) -> SuiteResult:
    """Four-branch readout net equals H(R_n) on the level-(n+2) grid and at
    random rationals."""
    params = params or CascadeParams()
    res = SuiteResult("four_branch_readout")
    rnd = random.Random(seed)
    for n in n_values:
        net = build_H_readout(H, params.controller(), n)
        pts = _unit_grid(n + 2) + random_unit_points(rnd, count)
        for p, v in zip(pts, _net_values(net, pts)):
            want = _H_terminal(H, p, n)
            res.record(v[0] == want, n=n, point=p, got=v[0], want=want)
    res.details = {"n_values": list(n_values)}
    return res


def bad_orbit_point(rnd: random.Random, n: int, sp: SelectorParams):
    j = rnd.randint(1, n)
    d = sp.delta_n
    s = random_rational(rnd, 0, d) if rnd.random() < 0.5 else HALF + random_rational(rnd, 0, d)
    m = rnd.randrange(2 ** (j - 1))
    bad = (m + s) / 2 ** (j - 1)
    other = random_rational(rnd, 0, 1)
    return (bad, other) if rnd.random() < 0.5 else (other, bad)


def boundary_suite(H: CpwlFunction2D, params: CascadeParams | None = None, n_values=range(1, 7),
                   count: int = 1000, seed: int = 0, check_network: bool = True) -> SuiteResult:
    """Bad orbits: H(R_n) = 0 and the bad coordinate ends in [0, delta_bar*rho*2^(1-j)]."""
    params = params or CascadeParams()
    res = SuiteResult("boundary_localization")
    rnd = random.Random(seed)
    per_n = max(count // len(n_values), 1)
    for n in n_values:
        sp = params.selector(n)
        pts = []
        while len(pts) < per_n:
            p = bad_orbit_point(rnd, n, sp)
            j = bad_orbit_stage(p, n, sp.delta_n)
            if j is None:
                raise AssertionError(f"constructed point {p} has a good orbit")
            pts.append((p, j))
        net = build_H_readout(H, params.controller(), n) if check_network else None
        vals = _net_values(net, [p for p, _ in pts]) if net is not None else [None] * len(pts)
        bound_of = lambda j: params.delta_bar * params.rho * Fraction(2) ** (1 - j)
        for (p, j), v in zip(pts, vals):
            h = _H_terminal(H, p, n)
            res.record(h == 0, n=n, point=p, stage=j, H_R_n=h)
            if v is not None:
                res.record(v[0] == 0, n=n, point=p, stage=j, network=v[0])
            ok = False
            for c in range(2):
                r = residual_digits(p[c], j - 1)[1]
                if sp.in_J(r):
                    ok = ok or 0 <= residual_digits(p[c], n)[1] <= bound_of(j)
            res.record(ok, n=n, point=p, stage=j, bound=bound_of(j))
    res.details = {"n_values": list(n_values), "points_per_n": per_n}
    return res


# -- selectors and gadget --------------------------------------------------------------------


def selector_suite(params: CascadeParams | None = None, n_values=range(0, 9), count: int = 1000,
                   seed: int = 0) -> SuiteResult:
    """Trace, partition of unity, range, binary values off J_n, and weight doubling."""
    params = params or CascadeParams()
    res = SuiteResult("selectors")
    rnd = random.Random(seed)
    weights = {}
    for n in n_values:
        sp = params.selector(n)
        d = sp.delta_n
        ts = [Fraction(0), d / 2, d, Fraction(1, 4), HALF, HALF + d / 2, HALF + d, Fraction(3, 4)]
        ts += [random_rational(rnd, 0, 1) for _ in range(count)]
        ts = [t for t in ts if t < 1] + [Fraction(1)]
        zs = [loop_E(t) for t in ts]
        nets = [build_selector(q, sp) for q in (0, 1)]
        vals = [_net_values(net, zs) for net in nets]
        weights[n] = max(stats(net).max_abs_weight for net in nets)
        for i, t in enumerate(ts):
            c0, c1 = vals[0][i][0], vals[1][i][0]
            tt = t % 1
            tr0, tr1 = selector_trace(0, sp)(tt), selector_trace(1, sp)(tt)
            res.record(c0 == tr0 and c1 == tr1, n=n, t=t, got=[c0, c1], want=[tr0, tr1])
            res.record(c0 + c1 == 1, n=n, t=t, sum=c0 + c1)
            res.record(0 <= c0 <= 1 and 0 <= c1 <= 1, n=n, t=t, values=[c0, c1])
            if not sp.in_J(t) and t < 1:
                want0 = Fraction(1) if t < HALF else Fraction(0)
                res.record(c0 == want0 and c1 == 1 - want0, n=n, t=t, got=[c0, c1])
    ns = sorted(weights)
    for a, b in zip(ns, ns[1:]):
        if a >= 1 and b == a + 1:
            res.record(weights[b] == 2 * weights[a], n=b, weight=weights[b], previous=weights[a])
    res.details = {"max_abs_weight": {str(n): weights[n] for n in ns}}
    return res


def gadget_suite(a_values=(Fraction(1), Fraction(2), Fraction(3, 2)), N: int = 2) -> SuiteResult:
    """Pi_a(1,y) = y, Pi_a(0,y) = 0, Pi_a(lam,0) = 0, and the network equals the formula."""
    res = SuiteResult("product_gadget")
    lams = [Fraction(k, 4) for k in range(5)]
    relu = lambda v: max(v, Fraction(0))
    for a in a_values:
        a = Fraction(a)
        net = product_gadget(a, N)
        st = stats(net)
        res.record(st.width == 2 * N + 1 and st.hidden_layers == 2, a=a, width=st.width, hidden=st.hidden_layers)
        comps = [-a, -a / 2, Fraction(0), a / 2, a]
        ys = list(itertools.product(comps, repeat=N))
        pts = [(lam, *y) for lam in lams for y in ys]
        for p, v in zip(pts, _net_values(net, pts)):
            lam, y = p[0], p[1:]
            formula = [a - relu(lam * a - u) - relu((1 - lam) * a - relu(-u)) for u in y]
            res.record(list(v) == formula, a=a, point=p, got=v, want=formula)
            if lam == 1:
                res.record(list(v) == list(y), a=a, point=p, family="lam=1")
            if lam == 0:
                res.record(all(u == 0 for u in v), a=a, point=p, family="lam=0")
            if all(u == 0 for u in y):
                res.record(all(u == 0 for u in v), a=a, point=p, family="y=0")
    return res


# -- gluing, oracles, decomposition ---------------------------------------------------------


def _window_points(rnd: random.Random, w: Window, inside: int, outside: int) -> tuple[list, list]:
    ins = [(random_rational(rnd, 0, w.L1), random_rational(rnd, 0, w.L2)) for _ in range(inside)]
    ins += [(Fraction(a), Fraction(b)) for a in range(w.L1 + 1) for b in range(w.L2 + 1)]
    outs = []
    while len(outs) < outside:
        p = (random_rational(rnd, -1, w.L1 + 1), random_rational(rnd, -1, w.L2 + 1))
        if not w.contains(p):
            outs.append(p)
    return ins, outs


def gluing_suite(H: CpwlFunction2D, tm: TransitionMatrices, params: CascadeParams | None = None,
                 n: int = 2, inside: int = 1000, outside: int = 50, seed: int = 0) -> SuiteResult:
    """Glued network equals the patch values inside the window and 0 outside."""
    params = params or CascadeParams()
    res = SuiteResult("gluing")
    rnd = random.Random(seed)
    w = tm.window
    unit = build_unit_square(H, tm, params, n)
    glued = build_glue(unit, w)
    ins, outs = _window_points(rnd, w, inside, outside)
    idx = PatchIndexing(w)
    locs = [localize(p, w) for p in ins]
    patch_vals = _net_values(unit, [z for _, z in locs])
    for p, (ab, _), pv, gv in zip(ins, locs, patch_vals, _net_values(glued, ins)):
        want = pv[idx.index(*ab)]
        res.record(gv[0] == want, point=p, got=gv[0], want=want)
    for p, gv in zip(outs, _net_values(glued, outs)):
        res.record(gv[0] == 0, point=p, got=gv[0])
    res.details = {"n": n, "inside": len(ins), "outside": len(outs)}
    return res


def oracle_suite(g: CpwlFunction2D, tm: TransitionMatrices, m: Mask, n_values=range(0, 5),
                 count: int = 1000, seed: int = 0) -> SuiteResult:
    """oracle_direct = oracle_cascade (devectorized) at random rational points."""
    res = SuiteResult("oracle_cross_validation")
    rnd = random.Random(seed)
    w = tm.window
    for n in n_values:
        pts = [(random_rational(rnd, 0, w.L1), random_rational(rnd, 0, w.L2)) for _ in range(count)]
        direct = oracle_direct_batch(g, m, n, pts)
        for p, d in zip(pts, direct):
            c = oracle_cascade_physical(g, tm, n, p)
            res.record(c == d, n=n, point=p, direct=d, cascade=c)
    res.details = {"n_values": list(n_values), "points_per_n": count}
    return res


def decomposition_suite(d: AtomDecomposition, g: CpwlFunction2D, count: int = 1000, seed: int = 0) -> SuiteResult:
    res = SuiteResult("decomposition")
    rep = verify_decomposition(d, g, count, seed)
    res.checked = rep.points_checked + len(d.terms)
    res.failures = rep.mismatches + len(rep.atom_failures)
    if not rep.ok:
        res.witness = rep.to_json()
    res.details = {"atoms": len(d.terms), "distinct_shapes": len(d.atom_shapes()),
                   "refined_triangles": d.refined_triangles}
    return res


def translation_suite(d: AtomDecomposition, m: Mask, w: Window, params: CascadeParams | None = None,
                      n_values=range(0, 5), count: int = 1000, atoms: int = 2, seed: int = 0) -> SuiteResult:
    """Realization of one shifted atom equals the direct oracle of the shifted atom."""
    params = params or CascadeParams()
    res = SuiteResult("translation_covariance")
    rnd = random.Random(seed)
    picks = sorted(rnd.sample(range(len(d.terms)), min(atoms, len(d.terms))))
    for i in picks:
        term = d.terms[i]
        shifted = term.atom.translated(term.shift)
        for n in n_values:
            net = build_atom_net(term, m, w, params, n)
            pts = [(random_rational(rnd, -Fraction(1, 2), w.L1 + HALF),
                    random_rational(rnd, -Fraction(1, 2), w.L2 + HALF)) for _ in range(count)]
            want = oracle_direct_batch(shifted, m, n, pts)
            for p, v, u in zip(pts, _net_values(net, pts), want):
                res.record(v[0] == u, atom=i, n=n, point=p, got=v[0], want=u)
    res.details = {"atoms": picks, "n_values": list(n_values)}
    return res
