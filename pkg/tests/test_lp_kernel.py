import numpy as np
import pytest

from certdecomp import model
from certdecomp.lp_kernel import (
    INFEASIBLE,
    OPTIMAL,
    IterationLimitError,
    bilinear_lower,
    bilinear_upper,
    block_saddle,
    dual_objective,
    farkas_margin,
    solve_bilinear_saddle,
    solve_lp,
)
from certdecomp.model import StandardLP
from certdecomp.solids import Box
from refs import box_saddle_value, vertex_enum_lp


def lp1(c, A, b, lo=-10.0, hi=10.0):
    n = len(c)
    return StandardLP(c, A, b, np.full(n, lo), np.full(n, hi))


def test_bound_active_optimum():
    r = solve_lp(lp1([1.0], [[1.0]], [1.0]))
    assert r.status == OPTIMAL
    assert r.x[0] == -10.0 and r.objective == -10.0 and r.y[0] == 0.0


def test_row_active_optimum():
    r = solve_lp(lp1([-1.0], [[1.0]], [1.0]))
    assert r.status == OPTIMAL
    assert r.x[0] == pytest.approx(1.0) and r.y[0] == pytest.approx(1.0)


def test_infeasible_farkas():
    lp = lp1([0.0], [[1.0]], [-20.0])
    r = solve_lp(lp)
    assert r.status == INFEASIBLE
    assert r.farkas[0] > 0
    assert farkas_margin(lp.A, lp.b, lp.lower, lp.upper, r.farkas) > 0


def test_no_rows():
    r = solve_lp(StandardLP([1.0, -2.0, 0.0], np.zeros((0, 3)), [], -np.ones(3), np.ones(3)))
    assert r.optimal and r.objective == -3.0


def test_iteration_cap():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(6, 6))
    with pytest.raises(IterationLimitError, match="cap of 1"):
        solve_lp(lp1(rng.normal(size=6), A, np.abs(rng.normal(size=6)) + 1), max_iter=1)


@pytest.mark.parametrize("rule", ["bland", "dantzig"])
def test_random_small_lps_vs_vertex_enumeration(rule):
    rng = np.random.default_rng(12)
    for _ in range(40):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 5))
        A = rng.normal(size=(m, n))
        b = rng.normal(scale=3.0, size=m)
        c = rng.normal(size=n)
        lo, hi = -rng.uniform(0.5, 3, n), rng.uniform(0.5, 3, n)
        lp = StandardLP(c, A, b, lo, hi)
        r = solve_lp(lp, pivot_rule=rule)
        ref, _ = vertex_enum_lp(c, A, b, lo, hi)
        if ref is None:
            assert r.status == INFEASIBLE
            assert farkas_margin(A, b, lo, hi, r.farkas) > 0
        else:
            assert r.status == OPTIMAL
            assert r.objective == pytest.approx(ref, abs=1e-7)
            assert np.all(A @ r.x <= b + 1e-9)
            # strong duality with the returned multipliers
            assert dual_objective(lp, r) == pytest.approx(r.objective, abs=1e-7)


def test_degenerate_lp_terminates():
    # many redundant rows through one vertex
    A = np.vstack([np.eye(2), -np.eye(2), np.ones((4, 2))])
    b = np.array([0, 0, 0, 0, 0, 0, 0, 0], float)
    r = solve_lp(lp1([-1.0, -1.0], A, b))
    assert r.optimal and r.objective == pytest.approx(0.0, abs=1e-12)


def test_saddle_xy_example():
    sp = solve_bilinear_saddle(np.zeros(1), np.array([[1.0]]), np.zeros(1),
                               Box.symmetric(1, 1.0), Box(np.zeros(1), np.ones(1)))
    assert sp.value == pytest.approx(0.0, abs=1e-9)
    assert sp.x_star[0] <= 1e-9
    assert sp.gap <= 1e-7


def test_saddle_decoupled_example():
    sp = solve_bilinear_saddle(np.array([1.0]), np.zeros((1, 1)), np.zeros(1),
                               Box.symmetric(1, 2.0), Box(np.zeros(1), np.ones(1)))
    assert sp.x_star[0] == pytest.approx(-2.0)
    assert sp.value == pytest.approx(-2.0)


def test_saddle_random_vs_reference():
    rng = np.random.default_rng(5)
    for _ in range(25):
        m, n = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        c, A, b = rng.normal(size=n), rng.normal(size=(m, n)), rng.normal(size=m)
        ub = rng.uniform(0.5, 3.0, m)
        sp = solve_bilinear_saddle(c, A, b, Box.symmetric(n, 2.0), Box(np.zeros(m), ub))
        assert sp.value == pytest.approx(box_saddle_value(c, A, b, 2.0, ub), abs=1e-7)
        up = bilinear_upper(c, A, b, sp.x_star, Box(np.zeros(m), ub))
        low = bilinear_lower(c, A, b, sp.y_star, Box.symmetric(n, 2.0))
        assert up - low <= 1e-7


def test_block_saddle_separable():
    inst = model.generate(2, 3, 2, 2, 2, seed=9)
    rng = np.random.default_rng(0)
    x2, y2 = rng.uniform(-3, 3, 2), rng.uniform(0, 2, 2)
    got = block_saddle(inst, x2, y2)
    total = 0.0
    for blk, rk in zip(inst.blocks, inst.dual_box):
        sp = solve_bilinear_saddle(blk.c1 + blk.A21.T @ y2, blk.A11, blk.b1 - blk.A12 @ x2,
                                   Box.symmetric(blk.n1, inst.R),
                                   Box(np.zeros(blk.m1), np.full(blk.m1, rk)))
        total += sp.value
    assert got["value"] == pytest.approx(total, abs=1e-9)


def test_block_saddle_single_block_matches_assembled():
    inst = model.generate(1, 2, 2, 1, 1, seed=3)
    x2, y2 = np.array([0.7]), np.array([0.4])
    got = block_saddle(inst, x2, y2)
    ub = np.full(inst.m1, inst.dual_box[0])
    ref = box_saddle_value(inst.c1 + inst.A21.T @ y2, inst.A11, inst.b1 - inst.A12 @ x2,
                           inst.R, ub)
    assert got["value"] == pytest.approx(ref, abs=1e-7)


def test_tolerance_env(monkeypatch):
    from certdecomp import tolerances
    monkeypatch.setenv("CERTDECOMP_TOL", "1e-6")
    assert tolerances.feasibility() == 1e-6
    monkeypatch.setenv("CERTDECOMP_TOL", "feas=1e-9,saddle=1e-5")
    assert tolerances.current() == {"feas": 1e-9, "saddle": 1e-5}
    monkeypatch.setenv("CERTDECOMP_TOL", "bogus=1")
    with pytest.raises(ValueError):
        tolerances.current()
