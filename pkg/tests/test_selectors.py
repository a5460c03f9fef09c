import itertools
import random
from fractions import Fraction as F

import pytest

from cascade_relu.controller import loop_E
from cascade_relu.network import evaluate, evaluate_batch, stats
from cascade_relu.selectors import SelectorParams, build_selector, product_gadget, selector_trace


def trapezoid(t, d):
    """chi_{0,n} o E written from its breakpoints 0, d, 1/2, 1/2 + d."""
    h = F(1, 2)
    return min(F(1), max(F(0), t / d)) if t <= h else max(F(0), 1 - (t - h) / d)


def loop_sample(rnd, k=1000):
    ts = [F(rnd.randint(0, 10 ** 6), 10 ** 6) for _ in range(k)]
    return ts + [F(0), F(1, 2), F(1, 3), F(2, 3), F(1)]


@pytest.mark.parametrize("n", [0, 1, 3, 6])
def test_selector_matches_trapezoid(n):
    p = SelectorParams(F(1, 2), F(1, 4), n)
    assert p.delta_n == F(1, 8) / 2 ** n
    s0, s1 = build_selector(0, p), build_selector(1, p)
    ts = loop_sample(random.Random(n))
    ts += [p.delta_n, p.delta_n / 3, F(1, 2) + p.delta_n / 2, F(1, 2) + p.delta_n]
    z = [loop_E(t) for t in ts]
    v0 = [v[0] for v in evaluate_batch(s0, z)]
    v1 = [v[0] for v in evaluate_batch(s1, z)]
    for t, a, b in zip(ts, v0, v1):
        assert a == trapezoid(t % 1, p.delta_n) == selector_trace(0, p)(t % 1)
        assert a + b == 1
        assert 0 <= a <= 1 and 0 <= b <= 1
        if not p.in_J(t % 1):
            assert (a, b) == ((1, 0) if t < F(1, 2) else (0, 1))


def test_selector_examples():
    p = SelectorParams(F(1, 2), F(1, 4), 3)
    s0, s1 = build_selector(0, p), build_selector(1, p)
    assert evaluate(s0, list(loop_E(F(1, 4)))) == [1]
    assert evaluate(s0, list(loop_E(F(3, 4)))) == [0]
    assert evaluate(s0, [0, 0]) == [0] and evaluate(s1, [0, 0]) == [1]


def test_selector_weights_double():
    w = [stats(build_selector(0, SelectorParams(F(1, 2), F(1, 4), n))).max_abs_weight for n in range(0, 9)]
    for a, b in zip(w[1:], w[2:]):
        assert b == 2 * a


def test_selector_param_validation():
    for bad in [dict(delta_bar=F(1)), dict(rho=F(1, 2)), dict(n=-1)]:
        with pytest.raises(ValueError):
            SelectorParams(**{"delta_bar": F(1, 2), "rho": F(1, 4), "n": 1, **bad})
    with pytest.raises(ValueError):
        selector_trace(2, SelectorParams())


# -- product gadget ---------------------------------------------------------------


def pi_formula(a, lam, ys):
    relu = lambda v: max(v, F(0))
    return [-relu(lam * a - y) - relu((1 - lam) * a - relu(-y)) + a for y in ys]


def test_gadget_examples():
    assert evaluate(product_gadget(2, 2), [1, F(3, 2), -1]) == [F(3, 2), -1]
    assert evaluate(product_gadget(2, 2), [0, F(3, 2), -1]) == [0, 0]
    assert evaluate(product_gadget(1, 1), [F(1, 2), 1]) == [F(1, 2)]


@pytest.mark.parametrize("a", [F(1), F(2), F(7, 3)])
def test_gadget_identity_grid(a):
    N = 2
    net = product_gadget(a, N)
    lams = [F(k, 4) for k in range(5)]
    yvals = [-a, -a / 2, F(0), a / 2, a]
    for lam in lams:
        for ys in itertools.product(yvals, repeat=N):
            out = evaluate(net, [lam, *ys])
            assert out == pi_formula(a, lam, ys)
            if lam == 1:
                assert out == list(ys)
            if lam == 0:
                assert out == [0] * N
            for i, y in enumerate(ys):
                if y == 0:
                    assert out[i] == 0


def test_gadget_shape_and_errors():
    s = stats(product_gadget(F(5, 2), 4))
    assert s.width == 9 and s.hidden_layers == 2
    with pytest.raises(ValueError):
        product_gadget(0, 2)
    with pytest.raises(ValueError):
        product_gadget(1, 0)
