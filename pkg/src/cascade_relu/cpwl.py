"""Continuous piecewise-linear functions in one and two variables.

Meshes carry exact rational vertices and values.  Point location uses exact
orientation predicates; a point on a shared edge or vertex is assigned to the
lowest-index triangle containing it (any choice gives the same value, since
the interpolant is continuous).
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .circuit import Circuit, Expr, lincomb
from .network import ReluNetwork
from .rational import as_fraction, format_rational, parse_rational, stable_hash

__all__ = [
    "MeshError",
    "PiecewiseLinear1D",
    "CpwlMesh",
    "CpwlFunction2D",
    "orient",
    "affine_piece",
    "eval_mesh",
    "compile_1d",
    "compile_2d",
    "pwl1d_expr",
    "cpwl2d_expr",
    "refine_mesh",
    "star_diameter",
    "nodal_hats",
    "mesh_to_json",
    "mesh_from_json",
]

Point = tuple  # (Fraction, Fraction)


class MeshError(ValueError):
    """Invalid mesh, or a mesh that a compilation route cannot handle."""


def orient(a, b, c) -> Fraction:
    """Twice the signed area of triangle abc (positive when counter-clockwise)."""
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _orient_coeffs(a, b):
    """Coefficients (cx, cy, c0) with orient(a, b, p) = cx*px + cy*py + c0."""
    cx = -(b[1] - a[1])
    cy = b[0] - a[0]
    return cx, cy, -cx * a[0] - cy * a[1]


def affine_piece(tri_pts, vals):
    """Return (a, b, c) with a*x + b*y + c interpolating ``vals`` on the triangle."""
    p0, p1, p2 = tri_pts
    area = orient(p0, p1, p2)
    a = b = c = Fraction(0)
    for (pj, pk), v in zip(((p1, p2), (p2, p0), (p0, p1)), vals):
        cx, cy, c0 = _orient_coeffs(pj, pk)
        a += v * cx / area
        b += v * cy / area
        c += v * c0 / area
    return a, b, c


# ---------------------------------------------------------------------------
# one variable


@dataclass(frozen=True)
class PiecewiseLinear1D:
    """Continuous PL function: interpolates ``values`` at ``breakpoints`` and
    extrapolates linearly with the given outer slopes."""

    breakpoints: tuple
    values: tuple
    left_slope: Fraction = Fraction(0)
    right_slope: Fraction = Fraction(0)

    def __post_init__(self):
        bp = tuple(as_fraction(b) for b in self.breakpoints)
        vs = tuple(as_fraction(v) for v in self.values)
        if len(bp) < 2 or len(bp) != len(vs):
            raise ValueError("need at least two breakpoints, one value each")
        if any(b1 >= b2 for b1, b2 in zip(bp, bp[1:])):
            raise ValueError("breakpoints must be strictly increasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vs)
        object.__setattr__(self, "left_slope", as_fraction(self.left_slope))
        object.__setattr__(self, "right_slope", as_fraction(self.right_slope))

    def slopes(self) -> list[Fraction]:
        bp, vs = self.breakpoints, self.values
        return [(vs[i + 1] - vs[i]) / (bp[i + 1] - bp[i]) for i in range(len(bp) - 1)]

    def __call__(self, t) -> Fraction:
        t = as_fraction(t)
        bp, vs = self.breakpoints, self.values
        if t <= bp[0]:
            return vs[0] + self.left_slope * (t - bp[0])
        if t >= bp[-1]:
            return vs[-1] + self.right_slope * (t - bp[-1])
        for i in range(len(bp) - 1):
            if t <= bp[i + 1]:
                return vs[i] + (vs[i + 1] - vs[i]) * (t - bp[i]) / (bp[i + 1] - bp[i])
        raise AssertionError("unreachable")

    def ramp_form(self):
        """``(f(b0), s_left, [(b_i, jump_i)])`` with
        f(t) = f(b0) + s_left*(t - b0) + sum jump_i * ReLU(t - b_i)."""
        s = [self.left_slope] + self.slopes() + [self.right_slope]
        jumps = [(b, s[i + 1] - s[i]) for i, b in enumerate(self.breakpoints)]
        return self.values[0], self.left_slope, [(b, j) for b, j in jumps if j != 0]


def pwl1d_expr(circuit: Circuit, f: PiecewiseLinear1D, t: Expr) -> Expr:
    f0, s0, ramps = f.ramp_form()
    b0 = f.breakpoints[0]
    terms = [(s0, t)] + [(j, circuit.relu(t - b)) for b, j in ramps]
    return lincomb(terms, f0 - s0 * b0)


def compile_1d(f: PiecewiseLinear1D) -> ReluNetwork:
    """Depth-2 ramp-sum realization, exact for every rational input."""
    c = Circuit(1)
    out = pwl1d_expr(c, f, c.input(0))
    return c.to_network([out], meta={"kind": "pwl1d"})


# ---------------------------------------------------------------------------
# two variables


@dataclass(frozen=True, eq=False)
class CpwlMesh:
    vertices: tuple
    triangles: tuple
    vertex_values: tuple
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        verts = tuple((as_fraction(x), as_fraction(y)) for x, y in self.vertices)
        vals = tuple(as_fraction(v) for v in self.vertex_values)
        if len(vals) != len(verts):
            raise MeshError("one value per vertex required")
        if len(set(verts)) != len(verts):
            raise MeshError("duplicate vertices")
        tris = []
        for t, tri in enumerate(self.triangles):
            i, j, k = (int(v) for v in tri)
            if not all(0 <= v < len(verts) for v in (i, j, k)):
                raise MeshError(f"triangle {t} references a missing vertex")
            o = orient(verts[i], verts[j], verts[k])
            if o == 0:
                raise MeshError(f"triangle {t} is degenerate")
            tris.append((i, j, k) if o > 0 else (i, k, j))
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "triangles", tuple(tris))
        object.__setattr__(self, "vertex_values", vals)
        self._check_conforming()

    def _check_conforming(self):
        edges = self.edge_map()
        for e, ts in edges.items():
            if len(ts) > 2:
                raise MeshError(f"edge {e} shared by {len(ts)} triangles")
        verts = self.vertices
        order = sorted(range(len(verts)), key=lambda v: verts[v][0])
        xs = [verts[v][0] for v in order]
        for (a, b) in edges:
            pa, pb = verts[a], verts[b]
            lo = (min(pa[0], pb[0]), min(pa[1], pb[1]))
            hi = (max(pa[0], pb[0]), max(pa[1], pb[1]))
            for v in order[bisect.bisect_left(xs, lo[0]):bisect.bisect_right(xs, hi[0])]:
                p = verts[v]
                if v in (a, b) or not lo[1] <= p[1] <= hi[1]:
                    continue
                if orient(pa, pb, p) == 0:
                    raise MeshError(f"vertex {v} hangs on edge {(a, b)}")

    # -- topology -------------------------------------------------------
    def edge_map(self) -> dict:
        em = self._cache.get("edges")
        if em is None:
            em = {}
            for t, (i, j, k) in enumerate(self.triangles):
                for a, b in ((i, j), (j, k), (k, i)):
                    em.setdefault((min(a, b), max(a, b)), []).append(t)
            self._cache["edges"] = em
        return em

    def boundary_edges(self) -> list:
        return [e for e, ts in self.edge_map().items() if len(ts) == 1]

    def boundary_vertices(self) -> set:
        return {v for e in self.boundary_edges() for v in e}

    def vertex_triangles(self) -> list[list[int]]:
        vt = self._cache.get("vt")
        if vt is None:
            vt = [[] for _ in self.vertices]
            for t, tri in enumerate(self.triangles):
                for v in tri:
                    vt[v].append(t)
            self._cache["vt"] = vt
        return vt

    def tri_points(self, t: int):
        return tuple(self.vertices[v] for v in self.triangles[t])

    def pieces(self) -> list:
        pc = self._cache.get("pieces")
        if pc is None:
            pc = [affine_piece(self.tri_points(t), [self.vertex_values[v] for v in tri])
                  for t, tri in enumerate(self.triangles)]
            self._cache["pieces"] = pc
        return pc

    def bbox(self):
        xs = [p[0] for p in self.vertices]
        ys = [p[1] for p in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)

    def is_convex_domain(self) -> bool:
        return _polygon_convex(self._boundary_cycle(set(range(len(self.triangles)))))

    def _boundary_cycle(self, tris: set):
        """Ordered vertex cycle around the union of ``tris`` (None if not a disk)."""
        count: dict = {}
        for t in tris:
            i, j, k = self.triangles[t]
            for a, b in ((i, j), (j, k), (k, i)):
                count[(a, b)] = count.get((a, b), 0) + 1
        directed = [(a, b) for (a, b) in count if (b, a) not in count]
        nxt = {}
        for a, b in directed:
            if a in nxt:
                return None
            nxt[a] = b
        if not directed:
            return None
        start = directed[0][0]
        cyc = [start]
        cur = nxt[start]
        while cur != start:
            cyc.append(cur)
            if cur not in nxt or len(cyc) > len(directed):
                return None
            cur = nxt[cur]
        if len(cyc) != len(directed):
            return None
        return [self.vertices[v] for v in cyc]

    def star_is_convex(self, v: int) -> bool:
        key = ("starconv", v)
        if key not in self._cache:
            self._cache[key] = _polygon_convex(self._boundary_cycle(set(self.vertex_triangles()[v])))
        return self._cache[key]

    def hash(self) -> str:
        return stable_hash(mesh_to_json(self))

    # -- evaluation -------------------------------------------------------
    def _buckets(self):
        """Uniform grid over the bounding box; each cell lists the triangles
        whose boxes meet it (exact floor arithmetic, so nothing is missed)."""
        idx = self._cache.get("buckets")
        if idx is None:
            x0, y0, x1, y1 = self.bbox()
            k = max(1, int(len(self.triangles) ** 0.5))
            sx, sy = (x1 - x0) / k, (y1 - y0) / k
            cells: dict = {}
            for t in range(len(self.triangles)):
                pts = self.tri_points(t)
                i0 = math.floor((min(q[0] for q in pts) - x0) / sx)
                i1 = math.floor((max(q[0] for q in pts) - x0) / sx)
                j0 = math.floor((min(q[1] for q in pts) - y0) / sy)
                j1 = math.floor((max(q[1] for q in pts) - y0) / sy)
                for i in range(i0, min(i1, k - 1) + 1):
                    for j in range(j0, min(j1, k - 1) + 1):
                        cells.setdefault((i, j), []).append(t)
            idx = (x0, y0, x1, y1, sx, sy, k, cells)
            self._cache["buckets"] = idx
        return idx

    def locate(self, p) -> int | None:
        x, y = p
        x0, y0, x1, y1, sx, sy, k, cells = self._buckets()
        if not (x0 <= x <= x1 and y0 <= y <= y1):
            return None
        i = min(math.floor((x - x0) / sx), k - 1)
        j = min(math.floor((y - y0) / sy), k - 1)
        for t in cells.get((i, j), ()):
            a, b, c = self.tri_points(t)
            if orient(a, b, p) >= 0 and orient(b, c, p) >= 0 and orient(c, a, p) >= 0:
                return t
        return None

    def value_in(self, t: int, p) -> Fraction:
        a, b, c = self.pieces()[t]
        return a * p[0] + b * p[1] + c


def _polygon_convex(cyc) -> bool:
    if cyc is None or len(cyc) < 3:
        return False
    n = len(cyc)
    sign = 0
    for i in range(n):
        o = orient(cyc[i], cyc[(i + 1) % n], cyc[(i + 2) % n])
        if o != 0:
            s = 1 if o > 0 else -1
            if sign and s != sign:
                return False
            sign = s
    return sign != 0


@dataclass(frozen=True, eq=False)
class CpwlFunction2D:
    """Mesh interpolant extended by ``outside_value`` off the mesh.

    ``outside_value=None`` marks a map that is only defined on the mesh domain.
    A compactly supported function has ``outside_value == 0`` and vanishes on
    the mesh boundary.
    """

    mesh: CpwlMesh
    outside_value: Fraction | None = Fraction(0)

    def __post_init__(self):
        if self.outside_value is None:
            return
        ov = as_fraction(self.outside_value)
        object.__setattr__(self, "outside_value", ov)
        m = self.mesh
        for a, b in m.boundary_edges():
            pa, pb = m.vertices[a], m.vertices[b]
            mid = ((pa[0] + pb[0]) / 2, (pa[1] + pb[1]) / 2)
            for val in (m.vertex_values[a], m.vertex_values[b], eval_mesh(self, mid)):
                if val != ov:
                    raise MeshError(
                        f"boundary edge {(a, b)} has value {val} != outside value {ov}; "
                        "the zero-extension would be discontinuous"
                    )

    def __call__(self, p) -> Fraction:
        return eval_mesh(self, p)

    @property
    def compact(self) -> bool:
        return self.outside_value == 0

    def max_abs(self) -> Fraction:
        vals = [abs(v) for v in self.mesh.vertex_values]
        if self.outside_value is not None:
            vals.append(abs(self.outside_value))
        return max(vals)

    def support_bbox(self):
        """Bounding box of the triangles carrying a nonzero value."""
        m = self.mesh
        pts = [m.vertices[v] for tri in m.triangles
               if any(m.vertex_values[u] != 0 for u in tri) for v in tri]
        if not pts:
            return None
        return (min(p[0] for p in pts), min(p[1] for p in pts),
                max(p[0] for p in pts), max(p[1] for p in pts))

    def hash(self) -> str:
        d = mesh_to_json(self.mesh)
        d["outside_value"] = None if self.outside_value is None else format_rational(self.outside_value)
        return stable_hash(d)

    def translated(self, shift) -> "CpwlFunction2D":
        dx, dy = (as_fraction(s) for s in shift)
        m = self.mesh
        mesh = CpwlMesh(tuple((x + dx, y + dy) for x, y in m.vertices), m.triangles, m.vertex_values)
        return CpwlFunction2D(mesh, self.outside_value)


def eval_mesh(f: CpwlFunction2D, p) -> Fraction:
    """Exact value at a rational point (``outside_value`` off the mesh)."""
    p = (as_fraction(p[0]), as_fraction(p[1]))
    t = f.mesh.locate(p)
    if t is None:
        if f.outside_value is None:
            raise ValueError(f"point {p} lies outside the domain of a domain-restricted map")
        return f.outside_value
    return f.mesh.value_in(t, p)


# -- compilation -----------------------------------------------------------


def _hat_expr(circuit: Circuit, mesh: CpwlMesh, v: int, x: Expr, y: Expr,
              rectify_first: bool = False) -> Expr:
    """ReLU(min over the star of the barycentric coordinate of v).

    ``rectify_first`` computes the equal min(ReLU(lambda_T)) instead, which
    costs one layer but keeps each coordinate's weights in its own neuron.
    """
    lams = []
    for t in mesh.vertex_triangles()[v]:
        tri = mesh.triangles[t]
        pos = tri.index(v)
        a = mesh.vertices[tri[(pos + 1) % 3]]
        b = mesh.vertices[tri[(pos + 2) % 3]]
        area = orient(a, b, mesh.vertices[v])
        cx, cy, c0 = _orient_coeffs(a, b)
        lams.append(lincomb(((cx / area, x), (cy / area, y)), c0 / area))
    uniq = {}
    for e in lams:
        uniq[(tuple(sorted(e.terms.items())), e.const)] = e
    if rectify_first:
        return circuit.min_tree([circuit.relu(e) for e in uniq.values()])
    return circuit.relu(circuit.min_tree(list(uniq.values())))


def _hat_route_ok(f: CpwlFunction2D) -> bool:
    m = f.mesh
    if f.outside_value is None:
        return m.is_convex_domain() and all(m.star_is_convex(v) for v in range(len(m.vertices)))
    if f.outside_value != 0:
        return False
    return all(m.star_is_convex(v) for v, val in enumerate(m.vertex_values) if val != 0)


def _lattice_expr(circuit: Circuit, f: CpwlFunction2D, x: Expr, y: Expr) -> Expr:
    m = f.mesh
    pieces = []
    index = {}
    tri_piece = []
    for pc in m.pieces():
        if pc not in index:
            index[pc] = len(pieces)
            pieces.append(pc)
        tri_piece.append(index[pc])
    sets = set()
    for t, i in enumerate(tri_piece):
        a0, b0, c0 = pieces[i]
        pts = m.tri_points(t)
        S = frozenset(
            j for j, (a, b, c) in enumerate(pieces)
            if all((a - a0) * p[0] + (b - b0) * p[1] + (c - c0) >= 0 for p in pts)
        )
        sets.add(S)
    minimal = [S for S in sets if not any(T < S for T in sets)]
    minimal.sort(key=lambda S: sorted(S))
    exprs = [lincomb(((a, x), (b, y)), c) for a, b, c in pieces]
    terms = [circuit.min_tree([exprs[j] for j in sorted(S)]) for S in minimal]
    return circuit.max_tree(terms)


def cpwl2d_expr(circuit: Circuit, f: CpwlFunction2D, x: Expr, y: Expr, method: str = "auto",
                offset=None, rectify_first: bool = False) -> Expr:
    """Circuit expression for ``f(x, y)``.

    ``hats``: sum of vertex values times ReLU(min of barycentric coordinates);
    exact on the whole plane for compactly supported ``f`` whose nonzero
    vertices have convex stars, and on the mesh domain for domain-restricted
    maps on convex meshes.  ``lattice``: max-min over the affine pieces; exact
    on convex mesh domains.

    ``offset`` (hat route, domain-restricted maps only) compiles
    c + sum (f(v) - c) * hat_v, which is the same function on the domain
    because the hats sum to one there.
    """
    if method == "auto":
        method = "hats" if _hat_route_ok(f) else "lattice"
    m = f.mesh
    if method == "hats":
        if not _hat_route_ok(f):
            raise MeshError("hat route needs convex vertex stars (and a convex domain)")
        c0 = Fraction(0)
        if offset is not None:
            if f.outside_value is not None:
                raise MeshError("an offset is only allowed for domain-restricted maps")
            c0 = as_fraction(offset)
        terms = [(val - c0, _hat_expr(circuit, m, v, x, y, rectify_first))
                 for v, val in enumerate(m.vertex_values) if val != c0]
        return lincomb(terms, c0)
    if method == "lattice":
        if not m.is_convex_domain():
            raise MeshError("lattice compilation needs a convex mesh domain; "
                            "add a zero collar or use a convex triangulation")
        return _lattice_expr(circuit, f, x, y)
    raise ValueError(f"unknown method {method!r}")


def compile_2d(f: CpwlFunction2D, method: str = "auto") -> ReluNetwork:
    """Exact ReLU realization of ``f`` on its mesh domain (see :func:`cpwl2d_expr`)."""
    c = Circuit(2)
    x, y = c.inputs
    out = cpwl2d_expr(c, f, x, y, method)
    return c.to_network([out], meta={"kind": "cpwl2d", "mesh": f.hash()})


# -- refinement -------------------------------------------------------------


def star_diameter(mesh: CpwlMesh, v: int) -> Fraction:
    pts = {u for t in mesh.vertex_triangles()[v] for u in mesh.triangles[t]}
    xs = [mesh.vertices[u][0] for u in pts]
    ys = [mesh.vertices[u][1] for u in pts]
    return max(max(xs) - min(xs), max(ys) - min(ys))


class _Builder:
    def __init__(self, mesh: CpwlMesh):
        self.verts = list(mesh.vertices)
        self.vals = list(mesh.vertex_values)
        self.index = {p: i for i, p in enumerate(self.verts)}

    def point(self, p, val) -> int:
        i = self.index.get(p)
        if i is None:
            i = len(self.verts)
            self.verts.append(p)
            self.vals.append(val)
            self.index[p] = i
        return i

    def mid(self, a: int, b: int) -> int:
        pa, pb = self.verts[a], self.verts[b]
        return self.point(((pa[0] + pb[0]) / 2, (pa[1] + pb[1]) / 2), (self.vals[a] + self.vals[b]) / 2)


def _barycentric_round(mesh: CpwlMesh) -> CpwlMesh:
    bld = _Builder(mesh)
    tris = []
    for i, j, k in mesh.triangles:
        pi, pj, pk = (mesh.vertices[v] for v in (i, j, k))
        c = bld.point(((pi[0] + pj[0] + pk[0]) / 3, (pi[1] + pj[1] + pk[1]) / 3),
                      (bld.vals[i] + bld.vals[j] + bld.vals[k]) / 3)
        mij, mjk, mki = bld.mid(i, j), bld.mid(j, k), bld.mid(k, i)
        tris += [(i, mij, c), (mij, j, c), (j, mjk, c), (mjk, k, c), (k, mki, c), (mki, i, c)]
    return CpwlMesh(tuple(bld.verts), tuple(tris), tuple(bld.vals))


def _red_round(mesh: CpwlMesh) -> CpwlMesh:
    bld = _Builder(mesh)
    tris = []
    for i, j, k in mesh.triangles:
        a, b, c = bld.mid(i, j), bld.mid(j, k), bld.mid(k, i)
        tris += [(i, a, c), (a, j, b), (c, b, k), (a, b, c)]
    return CpwlMesh(tuple(bld.verts), tuple(tris), tuple(bld.vals))


def _bisection_round(mesh: CpwlMesh, marks: list) -> tuple[CpwlMesh, list]:
    """Bisect every triangle across its marked edge (newest-vertex bisection).

    ``marks[t]`` is the vertex opposite the refinement edge of triangle t.
    """
    bld = _Builder(mesh)
    tris, new_marks = [], []
    for (i, j, k), apex in zip(mesh.triangles, marks):
        pos = (i, j, k).index(apex)
        a = (i, j, k)[pos]
        b = (i, j, k)[(pos + 1) % 3]
        c = (i, j, k)[(pos + 2) % 3]
        m = bld.mid(b, c)
        tris += [(a, b, m), (c, a, m)]
        new_marks += [m, m]
    return CpwlMesh(tuple(bld.verts), tuple(tris), tuple(bld.vals)), new_marks


def _longest_edge_marks(mesh: CpwlMesh) -> list:
    marks = []
    for tri in mesh.triangles:
        best = None
        for pos in range(3):
            b, c = mesh.vertices[tri[(pos + 1) % 3]], mesh.vertices[tri[(pos + 2) % 3]]
            d = (b[0] - c[0]) ** 2 + (b[1] - c[1]) ** 2
            if best is None or d > best[0]:
                best = (d, tri[pos])
        marks.append(best[1])
    return marks


def refine_mesh(m: CpwlMesh, max_star_diameter, method: str = "barycentric",
                strict: bool = True, max_rounds: int = 12) -> CpwlMesh:
    """Uniformly refine until every vertex star has l-inf diameter below the bound.

    ``strict=False`` accepts stars whose diameter equals the bound.  Methods:
    ``barycentric`` (6 children), ``red`` (4 midpoint children) and
    ``bisection`` (newest-vertex bisection from longest-edge marks, falling
    back to ``red`` if a round would leave hanging nodes).  Values at new
    vertices are interpolated, so the induced function is unchanged.
    """
    bound = as_fraction(max_star_diameter)
    if bound <= 0:
        raise ValueError("star diameter bound must be positive")

    def ok(mesh):
        d = max(star_diameter(mesh, v) for v in range(len(mesh.vertices)))
        return d < bound if strict else d <= bound

    marks = _longest_edge_marks(m) if method == "bisection" else None
    for _ in range(max_rounds + 1):
        if ok(m):
            return m
        if method == "barycentric":
            m = _barycentric_round(m)
        elif method == "red":
            m = _red_round(m)
        elif method == "bisection":
            try:
                m, marks = _bisection_round(m, marks)
            except MeshError:
                method = "red"
                m = _red_round(m)
        else:
            raise ValueError(f"unknown refinement method {method!r}")
    raise MeshError(f"star diameter bound {bound} not reached in {max_rounds} rounds")


def nodal_hats(m: CpwlMesh) -> list[tuple[Fraction, CpwlFunction2D]]:
    """One (vertex value, hat) pair per vertex; the hat lives on the vertex star.

    Hats of boundary vertices do not vanish on their star boundary and are
    returned as domain-restricted maps.
    """
    out = []
    boundary = m.boundary_vertices()
    for v in range(len(m.vertices)):
        tris = m.vertex_triangles()[v]
        used = sorted({u for t in tris for u in m.triangles[t]})
        loc = {u: i for i, u in enumerate(used)}
        mesh = CpwlMesh(
            tuple(m.vertices[u] for u in used),
            tuple(tuple(loc[u] for u in m.triangles[t]) for t in tris),
            tuple(Fraction(1) if u == v else Fraction(0) for u in used),
        )
        out.append((m.vertex_values[v], CpwlFunction2D(mesh, None if v in boundary else Fraction(0))))
    return out


# -- file format --------------------------------------------------------------


def mesh_to_json(m: CpwlMesh) -> dict:
    return {
        "vertices": [[format_rational(x), format_rational(y)] for x, y in m.vertices],
        "triangles": [list(t) for t in m.triangles],
        "values": [format_rational(v) for v in m.vertex_values],
    }


def function_to_json(f: CpwlFunction2D) -> dict:
    d = mesh_to_json(f.mesh)
    if f.outside_value is not None:
        d["outside_value"] = format_rational(f.outside_value)
    return d


def mesh_from_json(doc) -> CpwlFunction2D:
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    try:
        verts = [(parse_rational(p[0], f"vertices[{i}][0]"), parse_rational(p[1], f"vertices[{i}][1]"))
                 for i, p in enumerate(doc["vertices"])]
        tris = [tuple(int(v) for v in t) for t in doc["triangles"]]
        vals = [parse_rational(v, f"values[{i}]") for i, v in enumerate(doc["values"])]
    except (KeyError, TypeError, IndexError) as exc:
        raise MeshError(f"malformed mesh file: {exc}") from None
    ov = parse_rational(doc.get("outside_value", "0/1"), "outside_value")
    return CpwlFunction2D(CpwlMesh(tuple(verts), tuple(tris), tuple(vals)), ov)
