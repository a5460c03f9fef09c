import math
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from cascade_relu.dyadic import bad_orbit_stage, in_transition_set, orbit_2d, residual_digits
from cascade_relu.selectors import SelectorParams
from cascade_relu.suites import bad_orbit_point

unit = st.fractions(0, 1, max_denominator=10 ** 6)


def binary_digits(t, n):
    """Oracle via the base-2 expansion of floor(2^n t), valid for t < 1."""
    s = math.floor(t * 2 ** n)
    return [(s >> (n - 1 - j)) & 1 for j in range(n)], t * 2 ** n - s


def test_endpoint_is_sticky():
    for n in range(65):
        assert residual_digits(F(1), n) == ([1] * n, 1)


def test_examples():
    assert residual_digits(F(5, 8), 2) == ([1, 0], F(1, 2))
    assert residual_digits(F(1, 3), 2) == ([0, 1], F(1, 3))


@given(unit, st.integers(0, 40))
def test_matches_binary_expansion(t, n):
    if t == 1:
        return
    assert residual_digits(t, n) == binary_digits(t, n)


def test_out_of_range():
    for bad in (F(-1, 3), F(4, 3)):
        with pytest.raises(ValueError):
            residual_digits(bad, 2)
        with pytest.raises(ValueError):
            orbit_2d((bad, 0), 2)


def test_orbit_examples():
    o = orbit_2d((0, 0), 5)
    assert o.digits == ((0, 0),) * 5 and o.terminal == (0, 0)
    assert orbit_2d((F(5, 8), F(1, 3)), 2).terminal == (F(1, 2), F(1, 3))
    o = orbit_2d((1, 1), 3)
    assert o.digits == ((1, 1),) * 3 and o.terminal == (1, 1)


@given(unit, unit, st.integers(0, 20))
def test_orbit_recursion_and_affine_form(x, y, n):
    o = orbit_2d((x, y), n)
    o.check()
    assert len(o.residuals) == n and o.residuals[:1] in ((), ((x, y),))
    for c, t in enumerate((x, y)):
        s = t * 2 ** n
        if s.denominator != 1:
            assert o.terminal[c] == s - math.floor(s)


def test_bad_orbit_examples():
    assert bad_orbit_stage((F(1, 2), F(1, 3)), 3, F(1, 64)) == 1
    assert bad_orbit_stage((F(1, 3), F(1, 3)), 3, F(1, 64)) is None
    assert bad_orbit_stage((0, F(1, 3)), 3, F(1, 64)) == 1
    with pytest.raises(ValueError):
        bad_orbit_stage((0, 0), 3, 0)


def test_transition_set():
    d = F(1, 64)
    assert in_transition_set(F(0), d) and in_transition_set(d, d) and in_transition_set(F(1, 2), d)
    assert not in_transition_set(d + F(1, 10 ** 6), d) and not in_transition_set(F(1), d)


@pytest.mark.parametrize("n", [1, 3, 6])
def test_residual_bound_on_bad_orbits(n):
    rho, dbar = F(1, 4), F(1, 2)
    sp = SelectorParams(dbar, rho, n)
    delta = sp.delta_n
    assert delta == dbar * rho / 2 ** n
    rnd = random.Random(n)
    for _ in range(1000):
        p = bad_orbit_point(rnd, n, sp)
        j = bad_orbit_stage(p, n, delta)
        assert j is not None
        term = orbit_2d(p, n, check_affine=False).terminal
        bound = dbar * rho * F(2) ** (1 - j)
        assert any(0 <= r <= bound for r in term)
        assert bound < rho
