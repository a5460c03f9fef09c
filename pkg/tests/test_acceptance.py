"""Acceptance criteria, one test each.  Every test prints a single
``[ACCEPT k] PASS|FAIL ...`` line to the terminal, also under capture.

All comparisons are exact rational equalities.  Criterion 1 runs the full
demo plan (several minutes on one core); the others take seconds to a few
minutes.
"""

from fractions import Fraction as F

import pytest

from cascade_relu import suites
from cascade_relu.assembler import build_seed_net
from cascade_relu.refinement import matrix_bound
from cascade_relu.verify import VerificationPlan, run_verification

K = 1000


@pytest.fixture
def announce(capsys):
    def say(idx: int, title: str, ok: bool, detail: str = "") -> None:
        with capsys.disabled():
            print(f"\n[ACCEPT {idx:2d}] {'PASS' if ok else 'FAIL'}  {title}" + (f"  ({detail})" if detail else ""))
    return say


def _suite(res) -> str:
    return f"{res.checked} checks, {res.failures} failures" + (f", witness {res.witness}" if res.witness else "")


@pytest.fixture(scope="module")
def nets(pyramid, hat_mask, window, params, decomposition):
    return {n: build_seed_net(pyramid, hat_mask, window, params, n, decomposition) for n in range(1, 9)}


@pytest.mark.slow
def test_01_end_to_end_exactness(announce):
    plan = VerificationPlan.demo(suites=False)
    assert plan.n_values == (1, 2, 3, 4, 5)
    s = plan.samples
    assert (s.grid_offset, s.random, s.dyadic_lines, s.window_boundary, s.outside) == (3, 500, 100, 100, 50)
    rep = run_verification(plan)
    points = sum(sum(r["samples"].values()) for r in rep.per_n)
    refs = {r["reference"] for r in rep.per_n}
    ok = rep.mismatches == 0 and refs == {"oracle_direct"}
    announce(1, "end-to-end exactness, demo plan n=1..5", ok,
             f"{points} points, {rep.mismatches} mismatches, {rep.timings['total']:.0f}s")
    assert refs == {"oracle_direct"}
    assert rep.mismatches == 0, [r["witnesses"][:1] for r in rep.per_n if r["mismatches"]]


@pytest.mark.slow
def test_02_width_constant_depth_linear(announce, nets):
    widths = {n: nets[n].stats.width for n in range(2, 9)}
    depths = {n: nets[n].stats.depth for n in range(2, 9)}
    incs = {n: depths[n] - depths[n - 1] for n in range(3, 9)}
    ok = len(set(widths.values())) == 1 and len(set(incs.values())) == 1
    announce(2, "width constant for n=2..8, depth increment constant for n=3..8", ok,
             f"widths {sorted(set(widths.values()))}, depth increments {sorted(set(incs.values()))}")
    assert len(set(widths.values())) == 1, widths
    assert len(set(incs.values())) == 1, depths


def test_03_oracle_cross_validation(announce, pyramid, tm, hat_mask):
    res = suites.oracle_suite(pyramid, tm, hat_mask, range(0, 5), K)
    announce(3, "oracle_direct = oracle_cascade at 10^3 points, n<=4", res.ok, _suite(res))
    assert res.checked == 5 * K
    assert res.ok, res.witness


def test_04_controller(announce):
    a = suites.controller_suite(32, K)
    b = suites.torus_suite(range(0, 9), K)
    ok = a.ok and b.ok
    announce(4, "controller F^k(E(t)) = E(r^k t), k<=32, and torus iterate", ok,
             f"1D: {_suite(a)}; torus: {_suite(b)}")
    assert a.checked == 33 * K and b.checked == 9 * K
    assert a.ok, a.witness
    assert b.ok, b.witness


def test_05_four_branch_readout(announce, atom, params):
    res = suites.readout_suite(atom, params, range(0, 7), K)
    announce(5, "four-branch readout = H(R_n), n<=6", res.ok, _suite(res))
    assert res.ok, res.witness


def test_06_boundary_localization(announce, atom, params):
    res = suites.boundary_suite(atom, params, range(1, 7), K)
    announce(6, "bad orbits: H(R_n) = 0 and residual bound", res.ok, _suite(res))
    assert res.details["points_per_n"] * 6 >= K - 6
    assert res.ok, res.witness


def test_07_gadget_and_selectors(announce, params):
    g = suites.gadget_suite()
    s = suites.selector_suite(params, range(0, 9), K)
    w = s.details["max_abs_weight"]
    doubling = all(w[str(n + 1)] == 2 * w[str(n)] for n in range(1, 8))
    ok = g.ok and s.ok and doubling
    announce(7, "product gadget identities, selector identities, weight doubling", ok,
             f"gadget: {_suite(g)}; selectors: {_suite(s)}; doubling {doubling}")
    assert g.ok, g.witness
    assert s.ok, s.witness
    assert doubling, w


def test_08_gluing(announce, atom, tm, params):
    res = suites.gluing_suite(atom, tm, params, 3, K, 50)
    announce(8, "gluing: patch values inside, 0 outside", res.ok, _suite(res))
    assert res.details["inside"] >= K and res.details["outside"] >= 50
    assert res.ok, res.witness


def test_09_decomposition_and_translation(announce, decomposition, pyramid, hat_mask, window, params):
    d = suites.decomposition_suite(decomposition, pyramid, K)
    t = suites.translation_suite(decomposition, hat_mask, window, params, range(0, 5), K, atoms=1)
    ok = d.ok and t.ok
    announce(9, "decomposition reconstruction and translation covariance, n<=4", ok,
             f"decomposition: {_suite(d)}; translation: {_suite(t)}")
    assert t.checked == 5 * K
    assert d.ok, d.witness
    assert t.ok, t.witness


@pytest.mark.slow
def test_10_weight_growth(announce, nets, tm):
    lam = max(F(2), matrix_bound(tm))
    c2 = nets[2].stats.max_abs_weight / lam ** 2
    ratios = {n: nets[n].stats.max_abs_weight / (c2 * lam ** n) for n in range(2, 9)}
    ok = all(r <= 1 for r in ratios.values())
    announce(10, "max_abs_weight(n) <= C2 * Lambda^n for n<=8", ok,
             f"Lambda={lam}, C2={c2}, worst ratio {max(ratios.values())}")
    assert ok, ratios
