import dataclasses
import json
import random
from fractions import Fraction as F

import pytest

from cascade_relu.cpwl import CpwlFunction2D, CpwlMesh, eval_mesh, refine_mesh
from cascade_relu.decomposition import AtomDecomposition, decompose, verify_decomposition
from cascade_relu.verify import pyramid_seed

RHO = F(1, 4)


def inset_ok(atom, rho):
    m = atom.mesh
    for tri in m.triangles:
        if any(m.vertex_values[v] for v in tri):
            if not all(rho <= m.vertices[v][c] <= 1 - rho for v in tri for c in (0, 1)):
                return False
    return all(v >= 0 for v in m.vertex_values) and atom.outside_value == 0


def test_pyramid_decomposition(pyramid, decomposition, rnd):
    d = decomposition
    refined = refine_mesh(pyramid.mesh, 1 - 2 * RHO, method="bisection", strict=False)
    assert len(d) == sum(1 for v in refined.vertex_values if v != 0)
    assert all(inset_ok(t.atom, RHO) for t in d.terms)
    pts = [(F(rnd.randint(-500, 2500), 1000), F(rnd.randint(-500, 2500), 997)) for _ in range(1000)]
    assert all(d(p) == eval_mesh(pyramid, p) for p in pts)
    rep = verify_decomposition(d, pyramid)
    assert rep.ok and rep.points_checked >= 1000 and rep.mismatches == 0


def test_shift_centers_star(decomposition):
    for t in decomposition.terms:
        x0, y0, x1, y1 = t.atom.mesh.bbox()
        assert (x0 + x1) / 2 == F(1, 2) and (y0 + y1) / 2 == F(1, 2)


def test_interior_atom_needs_no_refinement():
    verts = ((F(1, 4), F(1, 4)), (F(3, 4), F(1, 4)), (F(3, 4), F(3, 4)), (F(1, 4), F(3, 4)), (F(1, 2), F(1, 2)))
    tris = ((0, 1, 4), (1, 2, 4), (2, 3, 4), (3, 0, 4))
    g = CpwlFunction2D(CpwlMesh(verts, tris, (0, 0, 0, 0, F(3, 2))), F(0))
    d = decompose(g, RHO)
    assert len(d) == 1 and d.terms[0].coefficient == F(3, 2) and d.terms[0].shift == (0, 0)
    assert verify_decomposition(d, g).ok


def test_signed_coefficients():
    g = pyramid_seed(2, 2)
    neg = CpwlFunction2D(CpwlMesh(g.mesh.vertices, g.mesh.triangles, tuple(-v for v in g.mesh.vertex_values)), F(0))
    d = decompose(neg, RHO)
    assert all(t.coefficient < 0 for t in d.terms)
    assert all(inset_ok(t.atom, RHO) for t in d.terms)
    assert verify_decomposition(d, neg).ok


def test_zero_seed():
    g = pyramid_seed(2, 2)
    zero = CpwlFunction2D(CpwlMesh(g.mesh.vertices, g.mesh.triangles, (0,) * len(g.mesh.vertices)), F(0))
    d = decompose(zero, RHO)
    assert len(d) == 0
    assert verify_decomposition(d, zero).ok


def test_perturbed_coefficient_fails(decomposition, pyramid):
    terms = list(decomposition.terms)
    terms[0] = dataclasses.replace(terms[0], coefficient=terms[0].coefficient + F(1, 1000))
    bad = AtomDecomposition(tuple(terms), decomposition.rho)
    rep = verify_decomposition(bad, pyramid)
    assert not rep.ok and rep.mismatches > 0
    p, got, want = rep.witness
    assert got != want and got == bad(p) and want == eval_mesh(pyramid, p)


def test_atom_file_roundtrip(decomposition, pyramid):
    text = json.dumps(decomposition.to_json())
    doc = json.loads(text, parse_float=lambda v: pytest.fail(f"float literal {v}"))
    assert len(doc["atoms"]) == len(decomposition)
    back = AtomDecomposition.from_json(doc)
    assert [(t.coefficient, t.shift, t.atom.hash()) for t in back.terms] == \
        [(t.coefficient, t.shift, t.atom.hash()) for t in decomposition.terms]
    assert verify_decomposition(back, pyramid, n_random=100).ok


def test_bad_inputs(pyramid):
    with pytest.raises(ValueError):
        decompose(pyramid, F(1, 2))
    mesh = CpwlMesh(((0, 0), (1, 0), (0, 1)), ((0, 1, 2),), (1, 1, 1))
    with pytest.raises(ValueError):
        decompose(CpwlFunction2D(mesh, None), RHO)
