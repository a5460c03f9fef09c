"""Splitting a compactly supported CPwL seed into translated special atoms.

    g(z) = sum_nu a_nu * H_nu(z - delta_nu)

Each H_nu is a nodal hat of a refinement of g's mesh, translated so that its
star is centered in the inset square [rho, 1 - rho]^2.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .controller import check_special_atom
from .cpwl import (CpwlFunction2D, CpwlMesh, eval_mesh, function_to_json, mesh_from_json,
                   nodal_hats, refine_mesh)
from .rational import as_fraction, format_rational, parse_rational

__all__ = ["AtomTerm", "AtomDecomposition", "DecompositionReport", "decompose",
           "verify_decomposition", "check_points"]

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class AtomTerm:
    coefficient: Fraction
    shift: tuple
    atom: CpwlFunction2D

    def __call__(self, p) -> Fraction:
        return self.coefficient * eval_mesh(self.atom, (p[0] - self.shift[0], p[1] - self.shift[1]))


@dataclass(frozen=True)
class AtomDecomposition:
    terms: tuple
    rho: Fraction
    source_hash: str = ""
    refined_triangles: int = 0

    def __len__(self):
        return len(self.terms)

    def __call__(self, p) -> Fraction:
        p = (as_fraction(p[0]), as_fraction(p[1]))
        return sum((t(p) for t in self.terms), Fraction(0))

    def atom_shapes(self) -> dict:
        """Distinct atoms keyed by hash, with the indices of the terms using them."""
        out: dict = {}
        for i, t in enumerate(self.terms):
            out.setdefault(t.atom.hash(), []).append(i)
        return out

    def to_json(self) -> dict:
        return {
            "rho": format_rational(self.rho),
            "source": self.source_hash,
            "refined_triangles": self.refined_triangles,
            "atoms": [
                {"coefficient": format_rational(t.coefficient),
                 "shift": [format_rational(t.shift[0]), format_rational(t.shift[1])],
                 "triangles": len(t.atom.mesh.triangles),
                 "mesh": function_to_json(t.atom)}
                for t in self.terms
            ],
        }

    @classmethod
    def from_json(cls, doc) -> "AtomDecomposition":
        if isinstance(doc, (str, bytes)):
            doc = json.loads(doc)
        terms = tuple(
            AtomTerm(parse_rational(a["coefficient"], f"atoms[{i}].coefficient"),
                     (parse_rational(a["shift"][0]), parse_rational(a["shift"][1])),
                     mesh_from_json(a["mesh"]))
            for i, a in enumerate(doc["atoms"])
        )
        return cls(terms, parse_rational(doc["rho"], "rho"), doc.get("source", ""),
                   int(doc.get("refined_triangles", 0)))


def _translate(f: CpwlFunction2D, dx, dy) -> CpwlFunction2D:
    m = f.mesh
    mesh = CpwlMesh(tuple((x + dx, y + dy) for x, y in m.vertices), m.triangles, m.vertex_values)
    return CpwlFunction2D(mesh, f.outside_value)


def decompose(g: CpwlFunction2D, rho=Fraction(1, 4), method: str = "bisection") -> AtomDecomposition:
    """Refine until every vertex star fits in a square of side 1 - 2*rho, then
    translate each nonzero nodal hat into the inset square.

    Stars of diameter exactly 1 - 2*rho are accepted: their closed support
    still fits in the closed inset square.
    """
    rho = as_fraction(rho)
    if not 0 < rho < HALF:
        raise ValueError(f"rho must lie in (0, 1/2), got {rho}")
    if g.outside_value != 0:
        raise ValueError("only compactly supported seeds (outside value 0) can be decomposed")
    if all(v == 0 for v in g.mesh.vertex_values):
        return AtomDecomposition((), rho, g.hash(), 0)
    mesh = refine_mesh(g.mesh, 1 - 2 * rho, method=method, strict=False)
    terms = []
    for coef, hat in nodal_hats(mesh):
        if coef == 0:
            continue
        if hat.outside_value is None:
            raise AssertionError("a boundary vertex carries a nonzero value")
        x0, y0, x1, y1 = hat.mesh.bbox()
        if max(x1 - x0, y1 - y0) > 1 - 2 * rho:
            raise AssertionError(f"star of diameter {max(x1 - x0, y1 - y0)} does not fit")
        shift = ((x0 + x1) / 2 - HALF, (y0 + y1) / 2 - HALF)
        atom = _translate(hat, -shift[0], -shift[1])
        check_special_atom(atom, rho)
        terms.append(AtomTerm(coef, shift, atom))
    return AtomDecomposition(tuple(terms), rho, g.hash(), len(mesh.triangles))


def check_points(g: CpwlFunction2D, n_random: int = 1000, seed: int = 0, denom: int = 2 ** 12):
    """Vertices, edge midpoints, barycenters, plus random rationals in a box
    slightly larger than the mesh."""
    m = g.mesh
    pts = list(m.vertices)
    for a, b in m.edge_map():
        pa, pb = m.vertices[a], m.vertices[b]
        pts.append(((pa[0] + pb[0]) / 2, (pa[1] + pb[1]) / 2))
    for t in range(len(m.triangles)):
        q = m.tri_points(t)
        pts.append((sum(p[0] for p in q) / 3, sum(p[1] for p in q) / 3))
    x0, y0, x1, y1 = m.bbox()
    rnd = random.Random(seed)
    for _ in range(n_random):
        u, v = Fraction(rnd.randrange(denom + 1), denom), Fraction(rnd.randrange(denom + 1), denom)
        pts.append((x0 - HALF + u * (x1 - x0 + 1), y0 - HALF + v * (y1 - y0 + 1)))
    return pts


@dataclass
class DecompositionReport:
    ok: bool
    points_checked: int
    mismatches: int
    witness: tuple | None = None
    atom_failures: list = field(default_factory=list)

    def to_json(self) -> dict:
        w = None
        if self.witness is not None:
            p, got, want = self.witness
            w = {"point": [format_rational(p[0]), format_rational(p[1])],
                 "sum": format_rational(got), "seed": format_rational(want)}
        return {"ok": self.ok, "points_checked": self.points_checked,
                "mismatches": self.mismatches, "witness": w, "atom_failures": self.atom_failures}


def verify_decomposition(d: AtomDecomposition, g: CpwlFunction2D, n_random: int = 1000,
                         seed: int = 0) -> DecompositionReport:
    atom_failures = []
    for i, t in enumerate(d.terms):
        try:
            check_special_atom(t.atom, d.rho)
        except ValueError as exc:
            atom_failures.append({"atom": i, "reason": str(exc)})
    mismatches, witness = 0, None
    pts = check_points(g, n_random, seed)
    for p in pts:
        got, want = d(p), eval_mesh(g, p)
        if got != want:
            mismatches += 1
            if witness is None:
                witness = (p, got, want)
    return DecompositionReport(not mismatches and not atom_failures, len(pts), mismatches,
                               witness, atom_failures)
