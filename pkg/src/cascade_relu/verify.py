"""End-to-end verification harness and heatmap rendering.

A :class:`VerificationPlan` fixes everything a run depends on (mask, seed,
window, parameters, levels, sample budget, random seed), so two runs of the
same plan produce byte-identical reports (timings are kept out of the
canonical report and only added on request).
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .assembler import CascadeParams, build_seed_net
from .cpwl import CpwlFunction2D, CpwlMesh, function_to_json, mesh_from_json
from .decomposition import decompose
from .network import ReluNetwork, evaluate_batch, evaluate_batch_float
from .rational import as_fraction, format_rational, parse_rational, stable_hash
from .refinement import (Mask, Window, check_window_preservation, oracle_cascade_physical,
                         oracle_direct_batch, tensor_mask, transition_matrices)
from . import suites

__all__ = [
    "SampleSpec",
    "VerificationPlan",
    "VerificationReport",
    "sample_points",
    "depth_fit",
    "run_verification",
    "Heatmap",
    "render_heatmap",
    "pyramid_seed",
    "FAMILIES",
]

FAMILIES = ("grid", "random", "dyadic_lines", "seam_orbits", "window_boundary", "outside")
_MAX_WITNESSES = 5


def pyramid_seed(L1: int = 2, L2: int = 2) -> CpwlFunction2D:
    """Hat on [0, L1] x [0, L2] over the 4-triangle fan, apex value 1 at the center."""
    cx, cy = Fraction(L1, 2), Fraction(L2, 2)
    V = ((Fraction(0), Fraction(0)), (Fraction(L1), Fraction(0)), (Fraction(L1), Fraction(L2)),
         (Fraction(0), Fraction(L2)), (cx, cy))
    T = ((0, 1, 4), (1, 2, 4), (2, 3, 4), (3, 0, 4))
    return CpwlFunction2D(CpwlMesh(V, T, (Fraction(0),) * 4 + (Fraction(1),)), Fraction(0))


@dataclass(frozen=True)
class SampleSpec:
    """Sample budget per level n: the full grid {k/2^(n+grid_offset)} on the
    window plus the listed counts per family."""

    grid_offset: int = 3
    random: int = 500
    max_den_bits: int = 20
    dyadic_lines: int = 100
    seam_orbits: int = 100
    window_boundary: int = 100
    outside: int = 50
    cascade_checks: int = 1000

    def to_json(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_json(cls, doc: dict) -> "SampleSpec":
        known = cls.__dataclass_fields__
        bad = set(doc) - set(known)
        if bad:
            raise ValueError(f"unknown sample fields {sorted(bad)}")
        return cls(**{k: int(v) for k, v in doc.items()})


@dataclass(frozen=True)
class VerificationPlan:
    mask: Mask
    seed: CpwlFunction2D
    window: Window
    params: CascadeParams = CascadeParams()
    n_values: tuple = (1, 2, 3, 4, 5)
    samples: SampleSpec = SampleSpec()
    random_seed: int = 0
    direct_cap: int = 6
    suites: bool = True
    suite_points: int = 1000

    @classmethod
    def demo(cls, **overrides) -> "VerificationPlan":
        """Tensor hat mask t = (1/2, 1, 1/2), pyramid seed, window (2, 2), n = 1..5."""
        base = dict(mask=tensor_mask([Fraction(1, 2), 1, Fraction(1, 2)]), seed=pyramid_seed(),
                    window=Window(2, 2))
        base.update(overrides)
        return cls(**base)

    def to_json(self) -> dict:
        return {
            "mask": self.mask.to_json(),
            "seed": function_to_json(self.seed),
            "window": self.window.to_json(),
            "params": self.params.to_json(),
            "n_values": list(self.n_values),
            "samples": self.samples.to_json(),
            "random_seed": self.random_seed,
            "direct_cap": self.direct_cap,
            "suites": self.suites,
            "suite_points": self.suite_points,
        }

    @classmethod
    def from_json(cls, doc) -> "VerificationPlan":
        if isinstance(doc, (str, bytes)):
            doc = json.loads(doc)
        defaults = cls.demo()
        p = doc.get("params", {})
        params = CascadeParams(parse_rational(p.get("rho", "1/4"), "params.rho"),
                               parse_rational(p.get("eps_bar", "1/8"), "params.eps_bar"),
                               parse_rational(p.get("delta_bar", "1/2"), "params.delta_bar"))
        n_values = tuple(int(n) for n in doc.get("n_values", defaults.n_values))
        if any(n < 0 for n in n_values) or not n_values:
            raise ValueError("n_values must be a nonempty list of nonnegative integers")
        return cls(
            mask=Mask.from_json(doc["mask"]) if "mask" in doc else defaults.mask,
            seed=mesh_from_json(doc["seed"]) if "seed" in doc else defaults.seed,
            window=Window.from_json(doc["window"]) if "window" in doc else defaults.window,
            params=params,
            n_values=n_values,
            samples=SampleSpec.from_json(doc.get("samples", {})),
            random_seed=int(doc.get("random_seed", 0)),
            direct_cap=int(doc.get("direct_cap", 6)),
            suites=bool(doc.get("suites", True)),
            suite_points=int(doc.get("suite_points", 1000)),
        )

    def hash(self) -> str:
        return stable_hash(self.to_json())


# -- samples -------------------------------------------------------------------------


def _rng(plan: VerificationPlan, n: int, family: str) -> random.Random:
    return random.Random(f"{plan.random_seed}/{n}/{family}")


def sample_points(plan: VerificationPlan, n: int) -> dict:
    """Sample families for level n, in a fixed order."""
    s, w = plan.samples, plan.window
    L1, L2 = w.L1, w.L2
    den = 2 ** s.max_den_bits
    rr = suites.random_rational
    out = {}

    k = 2 ** (n + s.grid_offset)
    out["grid"] = [(Fraction(i, k), Fraction(j, k)) for i in range(L1 * k + 1) for j in range(L2 * k + 1)]

    rnd = _rng(plan, n, "random")
    out["random"] = [(rr(rnd, 0, L1, den), rr(rnd, 0, L2, den)) for _ in range(s.random)]

    rnd = _rng(plan, n, "dyadic_lines")
    pts = []
    for i in range(s.dyadic_lines):
        lev = rnd.randint(0, n + 1)
        kx, ky = 2 ** lev, 2 ** lev
        on_x = Fraction(rnd.randint(0, L1 * kx), kx)
        on_y = Fraction(rnd.randint(0, L2 * ky), ky)
        mode = i % 3
        if mode == 0:
            pts.append((on_x, rr(rnd, 0, L2, den)))
        elif mode == 1:
            pts.append((rr(rnd, 0, L1, den), on_y))
        else:
            pts.append((on_x, on_y))
    out["dyadic_lines"] = pts

    rnd = _rng(plan, n, "seam_orbits")
    pts = []
    if n >= 1:
        sp = plan.params.selector(n)
        for _ in range(s.seam_orbits):
            u, v = suites.bad_orbit_point(rnd, n, sp)
            pts.append((u + rnd.randrange(L1), v + rnd.randrange(L2)))
    out["seam_orbits"] = pts

    rnd = _rng(plan, n, "window_boundary")
    pts = [(Fraction(a), Fraction(b)) for a in (0, L1) for b in (0, L2)]
    while len(pts) < s.window_boundary:
        side = rnd.randrange(4)
        if side < 2:
            pts.append((Fraction(side * L1), rr(rnd, 0, L2, den)))
        else:
            pts.append((rr(rnd, 0, L1, den), Fraction((side - 2) * L2)))
    out["window_boundary"] = pts[:s.window_boundary]

    rnd = _rng(plan, n, "outside")
    pts = []
    while len(pts) < s.outside:
        p = (rr(rnd, -1, L1 + 1, den), rr(rnd, -1, L2 + 1, den))
        if not w.contains(p):
            pts.append(p)
    out["outside"] = pts
    return out


# -- structure ---------------------------------------------------------------------------


def depth_fit(ns, depths) -> dict:
    """Exact least-squares line depth = c1*n + c0 and its largest residual."""
    ns = [Fraction(n) for n in ns]
    ds = [Fraction(d) for d in depths]
    if len(ns) < 2:
        return {"c1": None, "c0": None, "max_residual": None}
    nb, db = sum(ns) / len(ns), sum(ds) / len(ds)
    sxx = sum((n - nb) ** 2 for n in ns)
    c1 = sum((n - nb) * (d - db) for n, d in zip(ns, ds)) / sxx
    c0 = db - c1 * nb
    res = max(abs(d - (c1 * n + c0)) for n, d in zip(ns, ds))
    return {"c1": c1, "c0": c0, "max_residual": res}


def _structure(per_n: list) -> dict:
    by_n = {r["n"]: r["stats"] for r in per_n}
    ns = sorted(by_n)
    tail = [n for n in ns if n >= 2]
    widths = {n: by_n[n]["width"] for n in tail}
    width_ok = len(set(widths.values())) <= 1
    incs = {n: by_n[n]["depth"] - by_n[n - 1]["depth"] for n in tail if n - 1 in by_n}
    depth_ok = len(set(incs.values())) <= 1
    fit = depth_fit(ns, [by_n[n]["depth"] for n in ns])
    return {"width_constant_from_2": width_ok, "widths": {str(n): by_n[n]["width"] for n in ns},
            "depth_increments": {str(n): v for n, v in incs.items()}, "depth_linear_from_2": depth_ok,
            "depth_fit": {k: (format_rational(v) if isinstance(v, Fraction) else v) for k, v in fit.items()},
            "ok": width_ok and depth_ok}


# -- report ----------------------------------------------------------------------------------


@dataclass
class VerificationReport:
    plan_hash: str
    per_n: list = field(default_factory=list)
    structure: dict = field(default_factory=dict)
    suites: list = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def mismatches(self) -> int:
        """Point mismatches, suite failures, and one per failed structural check."""
        structural = [k for k in ("width_constant_from_2", "depth_linear_from_2")
                      if not self.structure.get(k, True)]
        return (sum(r["mismatches"] + r["cascade_check"]["mismatches"] for r in self.per_n)
                + sum(s["failures"] for s in self.suites) + len(structural))

    @property
    def ok(self) -> bool:
        return self.mismatches == 0

    def to_json(self, include_timings: bool = False) -> dict:
        doc = {"plan": self.plan_hash, "ok": self.ok, "mismatches": self.mismatches,
               "per_n": self.per_n, "structure": self.structure, "suites": self.suites}
        if include_timings:
            doc["timings"] = {k: round(v, 3) for k, v in self.timings.items()}
        return doc

    def dumps(self, include_timings: bool = False) -> str:
        return json.dumps(self.to_json(include_timings), indent=1, sort_keys=False) + "\n"


def _pfmt(p) -> list:
    return [format_rational(p[0]), format_rational(p[1])]


def _verify_level(plan: VerificationPlan, n: int, d, tm, timings: dict) -> dict:
    t0 = time.perf_counter()
    real = build_seed_net(plan.seed, plan.mask, plan.window, plan.params, n, d)
    t1 = time.perf_counter()
    fams = sample_points(plan, n)
    order = [(f, p) for f in FAMILIES for p in fams[f]]
    pts = [p for _, p in order]
    got = [v[0] for v in evaluate_batch(real.network, pts)]
    t2 = time.perf_counter()
    direct = n <= plan.direct_cap
    if direct:
        ref = oracle_direct_batch(plan.seed, plan.mask, n, pts)
    else:
        ref = [oracle_cascade_physical(plan.seed, tm, n, p) for p in pts]
    t3 = time.perf_counter()

    counts = {f: len(fams[f]) for f in FAMILIES}
    fam_bad = {f: 0 for f in FAMILIES}
    witnesses = []
    for (f, p), g, r in zip(order, got, ref):
        if g != r:
            fam_bad[f] += 1
            if len(witnesses) < _MAX_WITNESSES:
                witnesses.append({"family": f, "point": _pfmt(p), "network": format_rational(g),
                                  "oracle": format_rational(r)})

    # cascade oracle on every non-grid point and a deterministic grid subsample
    ccheck = {"checked": 0, "mismatches": 0, "witness": None}
    if direct:
        grid = fams["grid"]
        step = max(1, len(grid) // max(plan.samples.cascade_checks, 1))
        chosen = [i for i in range(len(grid)) if i % step == 0][:plan.samples.cascade_checks]
        idx = chosen + list(range(len(grid), len(order)))
        for i in idx:
            c = oracle_cascade_physical(plan.seed, tm, n, pts[i])
            ccheck["checked"] += 1
            if c != ref[i]:
                ccheck["mismatches"] += 1
                if ccheck["witness"] is None:
                    ccheck["witness"] = {"point": _pfmt(pts[i]), "direct": format_rational(ref[i]),
                                         "cascade": format_rational(c)}
    t4 = time.perf_counter()
    timings.update({f"n{n}_compile": t1 - t0, f"n{n}_network_eval": t2 - t1, f"n{n}_oracle": t3 - t2,
                    f"n{n}_cascade_check": t4 - t3})
    st = real.stats
    return {
        "n": n,
        "reference": "oracle_direct" if direct else "oracle_cascade",
        "stats": {"width": st.width, "depth": st.depth, "max_abs_weight": format_rational(st.max_abs_weight),
                  "parameter_count": st.parameter_count},
        "atoms": len(d.terms),
        "samples": counts,
        "matches": len(order) - sum(fam_bad.values()),
        "mismatches": sum(fam_bad.values()),
        "mismatches_by_family": fam_bad,
        "witnesses": witnesses,
        "cascade_check": ccheck,
    }


def _run_suites(plan: VerificationPlan, d, tm) -> list:
    k = plan.suite_points
    nmax = max(plan.n_values)
    out = []
    H = d.terms[0].atom if d.terms else None
    out.append(suites.controller_suite(32, k, plan.random_seed))
    out.append(suites.torus_suite(range(0, min(nmax, 8) + 1), k, plan.random_seed))
    if H is not None:
        out.append(suites.readout_suite(H, plan.params, range(0, min(nmax, 6) + 1), k, plan.random_seed))
        if nmax >= 1:
            out.append(suites.boundary_suite(H, plan.params, range(1, min(nmax, 6) + 1), k, plan.random_seed))
    out.append(suites.selector_suite(plan.params, range(0, min(nmax, 8) + 1), k, plan.random_seed))
    out.append(suites.gadget_suite())
    if H is not None:
        out.append(suites.gluing_suite(H, tm, plan.params, min(nmax, 3), k, 50, plan.random_seed))
    out.append(suites.oracle_suite(plan.seed, tm, plan.mask, range(0, min(nmax, 4) + 1), k, plan.random_seed))
    out.append(suites.decomposition_suite(d, plan.seed, k, plan.random_seed))
    if d.terms:
        out.append(suites.translation_suite(d, plan.mask, plan.window, plan.params,
                                            range(0, min(nmax, 4) + 1), k, 2, plan.random_seed))
    return [s.to_json() for s in out]


def run_verification(plan: VerificationPlan, progress: Callable[[str], None] | None = None) -> VerificationReport:
    """Compile per n, compare network and oracle at every sample point, run
    the property suites and the width/depth checks."""
    say = progress or (lambda msg: None)
    timings: dict = {}
    t0 = time.perf_counter()
    cert = check_window_preservation(plan.mask, plan.window).require()
    tm = transition_matrices(plan.mask, plan.window, cert)
    d = decompose(plan.seed, plan.params.rho)
    timings["decompose"] = time.perf_counter() - t0
    report = VerificationReport(plan.hash(), timings=timings)
    for n in sorted(set(plan.n_values)):
        say(f"level n={n}")
        report.per_n.append(_verify_level(plan, n, d, tm, timings))
    report.structure = _structure(report.per_n)
    if plan.suites:
        say("property suites")
        t1 = time.perf_counter()
        report.suites = _run_suites(plan, d, tm)
        timings["suites"] = time.perf_counter() - t1
    timings["total"] = time.perf_counter() - t0
    return report


# -- heatmaps -----------------------------------------------------------------------------------


@dataclass
class Heatmap:
    """Samples on a W x H grid; row 0 is the top edge (y = y1), column 0 the
    left edge (x = x0).  ``values`` holds float64 samples, ``exact`` the
    exact rationals (when computed)."""

    region: tuple
    resolution: tuple
    values: np.ndarray
    exact: list | None

    def grid_points(self):
        return _grid(self.region, self.resolution)

    def pgm(self) -> bytes:
        """Binary PGM (P5, maxval 255).  Gray level 255*(v - lo)/(hi - lo) with
        lo, hi the sample minimum and maximum, rounded; a constant image is all 0."""
        W, H = self.resolution
        lo, hi = float(self.values.min()), float(self.values.max())
        if hi > lo:
            g = np.rint(255.0 * (self.values - lo) / (hi - lo))
        else:
            g = np.zeros_like(self.values)
        body = np.clip(g, 0, 255).astype(np.uint8).tobytes()
        return f"P5\n{W} {H}\n255\n".encode("ascii") + body

    def csv(self) -> str:
        lines = ["row,col,x,y,value"]
        pts = self.grid_points()
        W = self.resolution[0]
        for i, p in enumerate(pts):
            r, c = divmod(i, W)
            v = self.exact[r][c] if self.exact is not None else None
            val = format_rational(v) if v is not None else repr(float(self.values[r, c]))
            lines.append(f"{r},{c},{format_rational(p[0])},{format_rational(p[1])},{val}")
        return "\n".join(lines) + "\n"


def _grid(region, resolution) -> list:
    x0, y0, x1, y1 = region
    W, H = resolution
    return [(x0 + (x1 - x0) * c / (W - 1), y1 - (y1 - y0) * r / (H - 1)) for r in range(H) for c in range(W)]


def render_heatmap(source, region, resolution, exact: bool = True) -> Heatmap:
    """Sample a 2 -> 1 network, or an exact callable ``p -> Fraction``, on a grid.

    The float image comes from float64 evaluation of a network (or the
    float of the exact value of a callable); ``exact`` also records the
    rational values for the CSV.
    """
    region = tuple(as_fraction(v) for v in region)
    if len(region) != 4:
        raise ValueError("region is x0 y0 x1 y1")
    W, H = (int(v) for v in resolution)
    if W < 2 or H < 2:
        raise ValueError("resolution must be at least 2 x 2")
    if not (region[2] > region[0] and region[3] > region[1]):
        raise ValueError(f"degenerate region {[format_rational(v) for v in region]}")
    pts = _grid(region, (W, H))
    if isinstance(source, ReluNetwork):
        if source.input_dim != 2 or source.output_dim != 1:
            raise ValueError("heatmaps need a network from R^2 to R")
        vals = evaluate_batch_float(source, pts)[:, 0]
        ex = [v[0] for v in evaluate_batch(source, pts)] if exact else None
    else:
        ex = [as_fraction(source(p)) for p in pts]
        vals = np.array([float(v) for v in ex], dtype=np.float64)
        if not exact:
            ex = None
    grid_ex = [ex[r * W:(r + 1) * W] for r in range(H)] if ex is not None else None
    return Heatmap(region, (W, H), vals.reshape(H, W), grid_ex)
