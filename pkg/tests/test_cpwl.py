import json
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from cascade_relu.controller import F_functions, ControllerParams, loop_F_boundary, readout_functions, loop_E
from cascade_relu.cpwl import (CpwlFunction2D, CpwlMesh, MeshError, PiecewiseLinear1D, compile_1d, compile_2d,
                               eval_mesh, function_to_json, mesh_from_json, nodal_hats, refine_mesh,
                               star_diameter)
from cascade_relu.network import evaluate, evaluate_batch

from conftest import rand_q


def pyramid_value(x, y):
    """Closed form of the apex-1 hat on [0,2]^2: 1 - max(|x-1|, |y-1|), clipped at 0."""
    return max(F(0), 1 - max(abs(x - 1), abs(y - 1)))


def unit_points(rnd, k, lo=0, hi=2, den=997):
    return [(F(rnd.randint(lo * den, hi * den), den), F(rnd.randint(lo * den, hi * den), den)) for _ in range(k)]


# -- eval_mesh -------------------------------------------------------------


def test_pyramid_examples(pyramid):
    assert eval_mesh(pyramid, (1, 1)) == 1
    assert eval_mesh(pyramid, (F(1, 2), F(1, 2))) == F(1, 2)
    for p in [(3, 3), (-1, F(1, 2)), (F(5, 2), 1), (1, -F(1, 100))]:
        assert eval_mesh(pyramid, p) == 0


def test_pyramid_matches_closed_form(pyramid, rnd):
    for p in unit_points(rnd, 1000, -1, 3):
        assert eval_mesh(pyramid, p) == pyramid_value(*p)


def test_continuity_across_edges(pyramid):
    m = refine_mesh(pyramid.mesh, F(1, 2))
    from cascade_relu.cpwl import affine_piece
    for (a, b), ts in m.edge_map().items():
        if len(ts) != 2:
            continue
        mid = tuple((m.vertices[a][i] + m.vertices[b][i]) / 2 for i in range(2))
        vals = set()
        for t in ts:
            A, B, C = affine_piece(m.tri_points(t), [m.vertex_values[v] for v in m.triangles[t]])
            vals.add(A * mid[0] + B * mid[1] + C)
        assert len(vals) == 1


def test_mesh_validation():
    with pytest.raises(MeshError):
        CpwlMesh(((0, 0), (1, 0), (2, 0)), ((0, 1, 2),), (0, 0, 0))
    with pytest.raises(MeshError):
        CpwlMesh(((0, 0), (1, 0), (0, 1)), ((0, 1, 3),), (0, 0, 0))
    # hanging node: big triangle next to two small ones
    with pytest.raises(MeshError):
        CpwlMesh(((0, 0), (2, 0), (0, 2), (2, 2), (1, 1)),
                 ((0, 1, 2), (1, 3, 4), (4, 3, 2)), (0, 0, 0, 0, 0))


def test_nonzero_boundary_rejected_for_compact():
    mesh = CpwlMesh(((0, 0), (1, 0), (0, 1)), ((0, 1, 2),), (1, 0, 0))
    with pytest.raises(MeshError):
        CpwlFunction2D(mesh, F(0))
    f = CpwlFunction2D(mesh, None)
    assert f((F(1, 4), F(1, 4))) == F(1, 2)


def test_file_roundtrip(pyramid):
    doc = json.loads(json.dumps(function_to_json(pyramid)))
    g = mesh_from_json(doc)
    assert g.hash() == pyramid.hash()
    with pytest.raises(MeshError):
        mesh_from_json({"vertices": []})


# -- compile_1d ------------------------------------------------------------------


def test_compile_1d_hat():
    f = PiecewiseLinear1D((0, 1, 2), (0, 1, 0))
    net = compile_1d(f)
    assert net.depth == 2
    assert evaluate(net, [F(1, 2)]) == [F(1, 2)]
    assert evaluate(net, [F(-5)]) == [0]


def test_compile_1d_readout_trace():
    from cascade_relu.controller import E_coordinate_functions
    from cascade_relu.cpwl import PiecewiseLinear1D as P
    # rho^- o E with eps_bar = 1/8, as a 1D trace: compiled and compared to the 2D readout
    rminus = readout_functions(ControllerParams(F(1, 4), F(1, 8)))[0]
    bps = [F(k, 48) for k in range(49)]
    tr = P(bps, [rminus(loop_E(t)) for t in bps])
    net = compile_1d(tr)
    assert evaluate(net, [F(1, 2)]) == [F(1, 2)]
    assert evaluate(net, [F(0)]) == [1]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.fractions(-5, 5, max_denominator=50), min_size=2, max_size=7, unique=True),
       st.data())
def test_compile_1d_everywhere(bps, data):
    bps = sorted(bps)
    vals = data.draw(st.lists(st.fractions(-3, 3, max_denominator=20), min_size=len(bps), max_size=len(bps)))
    sl, sr = data.draw(st.fractions(-2, 2, max_denominator=7)), data.draw(st.fractions(-2, 2, max_denominator=7))
    f = PiecewiseLinear1D(bps, vals, sl, sr)
    net = compile_1d(f)
    pts = list(bps) + [(a + b) / 2 for a, b in zip(bps, bps[1:])]
    pts += [data.draw(st.fractions(-20, 20, max_denominator=1000)) for _ in range(20)]
    assert evaluate_batch(net, [(t,) for t in pts]) == [[f(t)] for t in pts]


def test_compile_1d_1000_random(rnd):
    f = PiecewiseLinear1D((F(-1), F(1, 3), F(2)), (F(2), F(-1), F(5, 2)), F(1, 2), F(-3))
    pts = [(rand_q(rnd, -10, 10),) for _ in range(1000)]
    assert evaluate_batch(compile_1d(f), pts) == [[f(t)] for (t,) in pts]


def test_pl1d_validation():
    with pytest.raises(ValueError):
        PiecewiseLinear1D((0,), (1,))
    with pytest.raises(ValueError):
        PiecewiseLinear1D((1, 0), (0, 0))


# -- compile_2d -------------------------------------------------------------------


def test_affine_on_triangle(rnd):
    mesh = CpwlMesh(((0, 0), (1, 0), (0, 1)), ((0, 1, 2),), (F(1), F(3), F(-2)))
    f = CpwlFunction2D(mesh, None)
    net = compile_2d(f)
    for _ in range(100):
        a, b = F(rnd.randint(1, 300), 1000), F(rnd.randint(1, 300), 1000)
        assert evaluate(net, [a, b]) == [1 + 2 * a - 3 * b]


@pytest.mark.parametrize("method", ["hats", "lattice"])
def test_pyramid_compiled(pyramid, rnd, method):
    if method == "lattice":
        # lattice route needs a convex domain and is then exact only there
        net = compile_2d(CpwlFunction2D(pyramid.mesh, None), "lattice")
        pts = unit_points(rnd, 1000)
    else:
        net = compile_2d(pyramid, "hats")
        pts = unit_points(rnd, 1000, -2, 4)
        assert evaluate(net, [3, 3]) == [0]
    assert evaluate(net, [1, 1]) == [1]
    assert evaluate_batch(net, pts) == [[pyramid_value(*p)] for p in pts]


def test_compile_2d_vertices_midpoints_barycenters(pyramid):
    m = refine_mesh(pyramid.mesh, F(1, 2))
    g = CpwlFunction2D(m, F(0))
    net = compile_2d(g)
    pts = list(m.vertices)
    for (a, b) in m.edge_map():
        pts.append(tuple((m.vertices[a][i] + m.vertices[b][i]) / 2 for i in range(2)))
    for t in range(len(m.triangles)):
        P = m.tri_points(t)
        pts.append((sum(p[0] for p in P) / 3, sum(p[1] for p in P) / 3))
    assert evaluate_batch(net, pts) == [[pyramid_value(*p)] for p in pts]


def test_F_extension_on_loop(rnd):
    fx, fy = F_functions()
    from cascade_relu.network import juxtapose
    net = juxtapose([compile_2d(fx), compile_2d(fy)])
    for _ in range(200):
        t = F(rnd.randint(0, 6000), 6000)
        z = loop_E(t)
        assert tuple(evaluate(net, list(z))) == loop_F_boundary(z) == loop_E(2 * t % 1)


def test_lattice_rejects_nonconvex():
    # L-shaped domain, domain-restricted values
    verts = ((0, 0), (1, 0), (2, 0), (0, 1), (1, 1), (2, 1), (0, 2), (1, 2))
    tris = ((0, 1, 4), (0, 4, 3), (1, 2, 5), (1, 5, 4), (3, 4, 7), (3, 7, 6))
    f = CpwlFunction2D(CpwlMesh(verts, tris, (1,) * 8), None)
    with pytest.raises(MeshError):
        compile_2d(f, "lattice")


# -- refinement ---------------------------------------------------------------------


@pytest.mark.parametrize("method", ["barycentric", "red", "bisection"])
def test_refine_preserves_function(pyramid, rnd, method):
    m = refine_mesh(pyramid.mesh, F(1, 2), method=method)
    assert all(star_diameter(m, v) < F(1, 2) for v in range(len(m.vertices)))
    g = CpwlFunction2D(m, F(0))
    for p in unit_points(rnd, 1000, -1, 3):
        assert eval_mesh(g, p) == eval_mesh(pyramid, p)


def test_refine_noop_when_bound_large(pyramid):
    assert refine_mesh(pyramid.mesh, F(100)) is pyramid.mesh


def test_refine_bad_bound(pyramid):
    with pytest.raises(ValueError):
        refine_mesh(pyramid.mesh, 0)


# -- nodal hats ---------------------------------------------------------------------


def test_single_triangle_hats(rnd):
    mesh = CpwlMesh(((0, 0), (1, 0), (0, 1)), ((0, 1, 2),), (F(2), F(-1), F(1, 3)))
    hats = nodal_hats(mesh)
    assert len(hats) == 3
    for _ in range(50):
        a, b = F(rnd.randint(0, 50), 100), F(rnd.randint(0, 50), 100)
        assert sum(h((a, b)) for _, h in hats) == 1
        assert sum(c * h((a, b)) for c, h in hats) == eval_mesh(CpwlFunction2D(mesh, None), (a, b))


def test_pyramid_hats(pyramid, rnd):
    hats = nodal_hats(pyramid.mesh)
    apex = pyramid.mesh.vertices.index((1, 1))
    assert hats[apex][0] == 1
    assert all(c == 0 for i, (c, _) in enumerate(hats) if i != apex)
    m = refine_mesh(pyramid.mesh, F(1, 2), method="bisection")
    hats = nodal_hats(m)
    g = CpwlFunction2D(m, F(0))
    for p in unit_points(rnd, 1000):
        assert sum(c * h(p) for c, h in hats if c) == eval_mesh(g, p)
