import random
from fractions import Fraction as F

import pytest

from cascade_relu.cpwl import eval_mesh
from cascade_relu.dyadic import orbit_2d
from cascade_relu.refinement import (Mask, PatchIndexing, Window, check_window_preservation, devectorize,
                                     localize, matrix_bound, oracle_cascade, oracle_cascade_physical,
                                     oracle_direct, oracle_direct_batch, tensor_mask, transition_matrices,
                                     vectorize)

from conftest import rand_q


def hat1(t):
    return max(F(0), 1 - abs(t - 1))


def tensor_hat(p):
    """h(x)h(y) with h the hat on [0,2]; fixed by the tensor hat mask."""
    return hat1(p[0]) * hat1(p[1])


def window_points(rnd, k, w=Window(2, 2), den=1009):
    return [(F(rnd.randint(0, w.L1 * den), den), F(rnd.randint(0, w.L2 * den), den)) for _ in range(k)]


# -- masks and windows -------------------------------------------------------


def test_window_certificate(hat_mask, window):
    assert check_window_preservation(hat_mask, window).ok
    bad = check_window_preservation(Mask({(-1, 0): 1, (1, 1): 1}), window)
    assert not bad and [v.index for v in bad.violations] == [(-1, 0)]
    bad = check_window_preservation(Mask({(3, 0): F(1, 2)}), window)
    assert [v.index for v in bad.violations] == [(3, 0)]
    with pytest.raises(ValueError):
        transition_matrices(Mask({(3, 0): 1}), window)


def test_window_validation():
    with pytest.raises(ValueError):
        Window(0, 2)
    with pytest.raises(ValueError):
        Window(True, 2)


def test_mask_file_format(hat_mask):
    assert Mask.from_json(hat_mask.to_json()).entries == hat_mask.entries
    with pytest.raises(ValueError):
        Mask.from_json({"entries": [[0, 0, 0.5]]})
    with pytest.raises(ValueError):
        Mask.from_json({})


def test_patch_indexing():
    idx = PatchIndexing(Window(2, 3))
    assert [idx.index(a, b) for a, b in idx.pairs()] == list(range(6))
    assert idx.index(1, 1) == 0 and idx.index(2, 1) == 3


# -- transition matrices ------------------------------------------------------------


def test_transition_entries(tm):
    i = PatchIndexing(Window(2, 2)).index
    assert tm[(0, 0)][i(1, 1)][i(1, 1)] == F(1, 4)
    assert tm[(1, 1)][i(1, 1)][i(2, 2)] == F(1, 4)
    assert tm[(1, 0)][i(2, 1)][i(1, 2)] == 0


def test_transition_formula_by_substitution(hat_mask, tm):
    t = [F(1, 2), F(1), F(1, 2)]
    c = lambda j, k: t[j] * t[k] if 0 <= j <= 2 and 0 <= k <= 2 else F(0)
    pairs = [(1, 1), (1, 2), (2, 1), (2, 2)]
    for q in [(0, 0), (0, 1), (1, 0), (1, 1)]:
        for r, (a, b) in enumerate(pairs):
            for s, (al, be) in enumerate(pairs):
                assert tm[q][r][s] == c(q[0] + 2 * (a - 1) - (al - 1), q[1] + 2 * (b - 1) - (be - 1))


def test_matrix_bound(tm, rnd):
    B = matrix_bound(tm)
    assert B > 0
    for _ in range(1000):
        v = [rand_q(rnd) for _ in range(4)]
        q = rnd.choice(list(tm.matrices))
        assert max(abs(t) for t in tm.apply_transpose(q, v)) <= B * max(abs(t) for t in v)


# -- patches ---------------------------------------------------------------------------


def test_vectorize_examples(pyramid, window, atom):
    G = vectorize(lambda p: eval_mesh(pyramid, p), window)
    assert G((0, 0))[PatchIndexing(window).index(2, 2)] == 1
    H = vectorize(lambda p: eval_mesh(atom, p), window)
    rnd = random.Random(5)
    for _ in range(100):
        z = (F(rnd.randint(0, 100), 100), F(rnd.randint(0, 100), 100))
        assert H(z)[1:] == [0, 0, 0]


def test_devectorize_roundtrip(pyramid, window, rnd):
    G = vectorize(lambda p: eval_mesh(pyramid, p), window)
    for p in window_points(rnd, 1000) + [(0, 0), (1, 1), (2, 2), (1, 0), (0, 2)]:
        assert devectorize(G, window, p) == eval_mesh(pyramid, p)
    assert devectorize(G, window, (F(5, 2), 1)) == 0


def test_localize_edges(window):
    assert localize((1, 1), window) == ((1, 1), (1, 1))
    assert localize((0, 2), window) == ((1, 2), (0, 1))
    assert localize((F(3, 2), 0), window) == ((2, 1), (F(1, 2), 0))


# -- oracles ----------------------------------------------------------------------------


def test_direct_examples(pyramid, hat_mask):
    p = (F(1, 3), F(5, 7))
    assert oracle_direct(pyramid, hat_mask, 0, p) == eval_mesh(pyramid, p)
    assert oracle_direct(pyramid, Mask({}), 2, p) == 0
    assert oracle_direct(pyramid, hat_mask, 1, (1, 1)) == 1
    with pytest.raises(ValueError):
        oracle_direct(pyramid, hat_mask, -1, p)


def test_tensor_hat_is_fixed_point(hat_mask, rnd):
    # h(x)h(y) satisfies h = 1/2 h(2.) + h(2. - 1) + 1/2 h(2. - 2) in each variable
    for n in range(4):
        for p in window_points(rnd, 30):
            assert oracle_direct(tensor_hat, hat_mask, n, p) == tensor_hat(p)


def test_cascade_with_tensor_hat(tm, rnd):
    for n in range(5):
        for z in window_points(rnd, 30, Window(1, 1)):
            want = vectorize(tensor_hat, tm.window)(z)
            assert oracle_cascade(tensor_hat, tm, n, z) == want


def test_one_step_identity(pyramid, hat_mask, tm, rnd):
    """Vec(Vg)(z) = T_{Q(z)} Vec(g)(R(z))."""
    G = vectorize(lambda p: eval_mesh(pyramid, p), tm.window)
    VG = vectorize(lambda p: oracle_direct(pyramid, hat_mask, 1, p), tm.window)
    for z in window_points(rnd, 1000, Window(1, 1)):
        o = orbit_2d(z, 1)
        assert VG(z) == tm.apply(o.digits[0], G(o.terminal))


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_cascade_equals_direct(pyramid, hat_mask, tm, n):
    rnd = random.Random(100 + n)
    pts = window_points(rnd, 1000 if n <= 2 else 250)
    pts += [(1, 1), (2, 2), (0, 0), (F(1, 2), 2)]
    direct = oracle_direct_batch(pyramid, hat_mask, n, pts)
    assert [oracle_cascade_physical(pyramid, tm, n, p) for p in pts] == direct


def test_batch_equals_pure_recursion(pyramid, hat_mask, rnd):
    pts = window_points(rnd, 40) + [(F(-1, 3), 1), (3, 1)]
    for n in (1, 2, 3):
        assert oracle_direct_batch(pyramid, hat_mask, n, pts) == [oracle_direct(pyramid, hat_mask, n, p)
                                                                  for p in pts]


def test_sticky_endpoint_cascade(pyramid, tm):
    G = vectorize(lambda p: eval_mesh(pyramid, p), tm.window)
    vec = G((1, 1))
    for n in range(4):
        assert oracle_cascade(pyramid, tm, n, (1, 1)) == vec
        vec = tm.apply((1, 1), vec)


def test_vanishes_outside_window(pyramid, hat_mask, rnd):
    for n in range(1, 5):
        pts = []
        while len(pts) < 250:
            p = (rand_q(rnd, -3, 5, 97), rand_q(rnd, -3, 5, 97))
            if not Window(2, 2).contains(p):
                pts.append(p)
        assert set(oracle_direct_batch(pyramid, hat_mask, n, pts)) == {0}
