import numpy as np
import pytest

from certdecomp import model, oracles
from certdecomp.engines import default_Y2, solve_direct
from certdecomp.model import Block, BlockLPInstance
from certdecomp.solids import Box


def tiny_benders():
    return BlockLPInstance(
        blocks=[Block(A11=[[1.0]], A12=[[1.0]], A21=np.zeros((0, 1)), c1=[1.0], b1=[1.0])],
        A22=np.zeros((0, 1)), c2=[0.0], b2=[], R=10.0)


def test_psi_at_zero_and_naive_loop():
    inst = model.generate(2, 2, 2, 2, 2, seed=1)
    z1, z2 = np.zeros(inst.n1), np.zeros(inst.n2)
    w1, w2 = np.zeros(inst.m1), np.zeros(inst.m2)
    assert oracles.psi_value(inst, z1, z2, w1, w2) == 0.0
    rng = np.random.default_rng(0)
    x1, x2 = rng.normal(size=inst.n1), rng.normal(size=inst.n2)
    assert oracles.psi_value(inst, x1, x2, w1, w2) == pytest.approx(
        inst.c1 @ x1 + inst.c2 @ x2)
    y1, y2 = rng.uniform(size=inst.m1), rng.uniform(size=inst.m2)
    lp = model.assemble_full(inst)
    x, y = np.concatenate([x1, x2]), np.concatenate([y1, y2])
    naive = sum(lp.c[j] * x[j] for j in range(len(x)))
    for i in range(lp.m):
        naive += y[i] * (sum(lp.A[i, j] * x[j] for j in range(len(x))) - lp.b[i])
    assert oracles.psi_value(inst, x1, x2, y1, y2) == pytest.approx(naive, rel=1e-12)


def test_psi_gradients_zero_matrices():
    inst = BlockLPInstance(
        blocks=[Block(A11=np.zeros((1, 2)), A12=np.zeros((1, 1)), A21=np.zeros((1, 2)),
                      c1=[1.0, 2.0], b1=[1.0])],
        A22=np.zeros((1, 1)), c2=[3.0], b2=[4.0], R=1.0)
    g = oracles.psi_gradients(inst, np.ones(2), np.ones(1), np.ones(1), np.ones(1))
    assert np.array_equal(g["gx1"], [1.0, 2.0])
    assert np.array_equal(g["gy2"], [-4.0])


def test_benders_example_productive():
    r = oracles.benders_oracle(tiny_benders(), np.array([0.0]))
    assert r.productive
    assert r.x1[0] == -10.0 and r.f == -10.0 and r.y1[0] == 0.0 and r.g[0] == 0.0


def test_benders_example_separator():
    r = oracles.benders_oracle(tiny_benders(), np.array([12.0]))
    assert not r.productive
    assert r.e[0] > 0
    e = r.e / r.e[0]
    assert e[0] == pytest.approx(1.0)
    # every x2' for which the block is feasible satisfies x2' <= 11 < 12
    assert e[0] * 11.0 < e[0] * 12.0


def test_benders_separators_valid_on_generated():
    inst = model.generate(2, 3, 3, 2, 0, seed=4, force_infeasible_x2=True)
    rng = np.random.default_rng(0)
    seen = 0
    for _ in range(30):
        x2 = rng.uniform(-inst.R, inst.R, 2)
        r = oracles.benders_oracle(inst, x2)
        if r.productive:
            continue
        seen += 1
        # sampled feasible x2' must lie strictly on the near side
        for _ in range(20):
            x2p = rng.uniform(-inst.R, inst.R, 2)
            if oracles.benders_oracle(inst, x2p).productive:
                assert r.e @ x2p < r.e @ x2
    assert seen > 0


def test_benders_value_convex_along_lines():
    inst = model.generate(3, 3, 3, 2, 0, seed=2)
    rng = np.random.default_rng(1)
    for _ in range(10):
        a, b = rng.uniform(-1, 1, 2), rng.uniform(-1, 1, 2)
        ra, rb = oracles.benders_oracle(inst, a), oracles.benders_oracle(inst, b)
        rm = oracles.benders_oracle(inst, (a + b) / 2)
        if ra.productive and rb.productive:
            assert rm.f <= (ra.f + rb.f) / 2 + 1e-9
            # subgradient inequality
            assert rb.f >= ra.f + ra.g @ (b - a) - 1e-9


def test_lagrange_at_zero():
    inst = model.generate(2, 3, 2, 0, 2, seed=3)
    r = oracles.lagrange_oracle(inst, np.zeros(2))
    lp = model.StandardLP(inst.c1, inst.A11, inst.b1, np.full(inst.n1, -inst.R),
                          np.full(inst.n1, inst.R))
    from certdecomp.lp_kernel import solve_lp
    assert r.f == pytest.approx(-solve_lp(lp).objective, abs=1e-9)


def test_lagrange_subgradient_inequality():
    inst = model.generate(3, 3, 3, 0, 3, seed=6)
    rng = np.random.default_rng(2)
    for _ in range(10):
        u, v = rng.uniform(0, 3, 3), rng.uniform(0, 3, 3)
        ru, rv = oracles.lagrange_oracle(inst, u), oracles.lagrange_oracle(inst, v)
        assert rv.f >= ru.f + ru.g @ (v - u) - 1e-9


def test_lagrange_weak_duality():
    inst = model.generate(3, 3, 3, 0, 2, seed=8)
    d = solve_direct(inst)
    for y2 in (np.zeros(2), d.y2, d.y2 + 1.0):
        # -f(y2) is a lower bound of Opt
        assert -oracles.lagrange_oracle(inst, y2).f <= d.opt + 1e-9
    assert -oracles.lagrange_oracle(inst, d.y2).f == pytest.approx(d.opt, abs=1e-7)


def test_phi_decoupled():
    inst = BlockLPInstance(
        blocks=[Block(A11=[[1.0]], A12=np.zeros((1, 2)), A21=np.zeros((1, 1)), c1=[1.0],
                      b1=[1.0])],
        A22=np.zeros((1, 2)), c2=[1.0, -2.0], b2=[3.0], R=5.0)
    r = oracles.phi_oracle(inst, np.array([0.5, 0.5]), np.array([1.0]))
    assert np.allclose(r.e_x, [1.0, -2.0])
    assert np.allclose(r.e_y, [3.0])


def test_phi_monotone():
    inst = model.generate(3, 3, 3, 2, 2, seed=10)
    rng = np.random.default_rng(4)
    for _ in range(15):
        z = np.concatenate([rng.uniform(-5, 5, 2), rng.uniform(0, 5, 2)])
        w = np.concatenate([rng.uniform(-5, 5, 2), rng.uniform(0, 5, 2)])
        pz, pw = oracles.phi_oracle(inst, z[:2], z[2:]), oracles.phi_oracle(inst, w[:2], w[2:])
        ez = np.concatenate([pz.e_x, pz.e_y])
        ew = np.concatenate([pw.e_x, pw.e_y])
        assert (ez - ew) @ (z - w) >= -1e-7


def test_phi_value_is_reduced_saddle_inequality():
    # phi(z) gives a regular sub/supergradient of the reduced function
    inst = model.generate(2, 3, 3, 2, 2, seed=12)
    rng = np.random.default_rng(5)
    for _ in range(10):
        x, y = rng.uniform(-5, 5, 2), rng.uniform(0, 5, 2)
        xp, yp = rng.uniform(-5, 5, 2), rng.uniform(0, 5, 2)
        r = oracles.phi_oracle(inst, x, y)
        # convex in x2 at fixed y2
        assert oracles.phi_oracle(inst, xp, y).value >= r.value + r.e_x @ (xp - x) - 1e-7
        # concave in y2 at fixed x2: e_y is the negated supergradient
        assert oracles.phi_oracle(inst, x, yp).value <= r.value - r.e_y @ (yp - y) + 1e-7


def test_induced_side2_matches_phi():
    inst = model.generate(2, 2, 2, 2, 2, seed=1)
    x2, y2 = np.array([0.3, -1.0]), np.array([0.5, 0.1])
    Y2 = Box(np.zeros(2), np.full(2, 5.0))
    assert oracles.induced_value(inst, 2, x2, y2, Y2) == pytest.approx(
        oracles.phi_oracle(inst, x2, y2).value, abs=1e-9)


def test_eps_sad_at_exact_saddle():
    inst = model.generate(2, 3, 3, 2, 2, seed=14)
    Y2 = default_Y2(inst)
    sp = oracles.master_saddle(inst, Y2)
    assert oracles.eps_sad(inst, sp["x1"], sp["x2"], sp["y1"], sp["y2"], Y2) <= 1e-6
    d = solve_direct(inst)
    assert sp["value"] == pytest.approx(d.opt, abs=1e-6)


def test_eps_sad_nonnegative_and_induced_bounds():
    inst = model.generate(2, 2, 2, 2, 2, seed=15)
    Y2 = default_Y2(inst)
    rng = np.random.default_rng(7)
    for _ in range(10):
        x1 = rng.uniform(-inst.R, inst.R, inst.n1)
        x2 = rng.uniform(-inst.R, inst.R, inst.n2)
        y1 = rng.uniform(0, 1, inst.m1)
        y2 = rng.uniform(0, 1, inst.m2)
        g = oracles.eps_sad(inst, x1, x2, y1, y2, Y2)
        assert g >= -1e-9
        assert oracles.eps_sad_induced(inst, 1, x1, y1, Y2) <= g + 1e-8
        assert oracles.eps_sad_induced(inst, 2, x2, y2, Y2) <= g + 1e-8
