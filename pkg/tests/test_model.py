import json

import numpy as np
import pytest

from certdecomp import model
from certdecomp.engines import solve_direct
from certdecomp.model import Block, BlockLPInstance


def two_block():
    return BlockLPInstance(
        blocks=[Block(A11=[[1.0]], A12=[[1.0]], A21=[[1.0]], c1=[1.0], b1=[1.0]),
                Block(A11=[[2.0, 0.0]], A12=[[0.0]], A21=[[0.0, 1.0]], c1=[0.0, -1.0],
                      b1=[3.0])],
        A22=[[1.0]], c2=[0.5], b2=[4.0], R=10.0)


def test_validate_clean_instance():
    assert model.validate(two_block()) == []


def test_validate_reports_block_dims():
    inst = two_block()
    inst.blocks[1].A12 = np.zeros((1, 2))
    bad = model.validate(inst)
    assert len(bad) == 1 and "block 1" in bad[0] and "A12" in bad[0]


def test_validate_radius():
    inst = two_block()
    inst.R = 0.0
    assert any("radius" in v for v in model.validate(inst))


def test_assemble_tiny_layout():
    inst = BlockLPInstance(
        blocks=[Block(A11=[[2.0]], A12=[[3.0]], A21=[[5.0]], c1=[1.0], b1=[1.0])],
        A22=[[7.0]], c2=[2.0], b2=[4.0], R=1.0)
    lp = model.assemble_full(inst)
    assert np.array_equal(lp.A, [[2.0, 3.0], [5.0, 7.0]])
    assert np.array_equal(lp.b, [1.0, 4.0])
    assert np.array_equal(lp.c, [1.0, 2.0])
    assert np.array_equal(lp.lower, [-1.0, -1.0])


def test_assemble_case_a_has_m1_rows():
    inst = model.generate(3, 2, 4, 2, 0, seed=5)
    lp = model.assemble_full(inst)
    assert lp.A.shape == (inst.m1, inst.n1 + inst.n2) == (12, 8)


def test_assemble_block_pattern():
    inst = model.generate(3, 2, 2, 1, 1, seed=2)
    A = model.assemble_full(inst).A
    # off-diagonal parts of the first row block are zero
    assert np.all(A[0:2, 2:6] == 0)
    assert np.all(A[2:4, 0:2] == 0) and np.all(A[2:4, 4:6] == 0)


def test_assemble_rejects_invalid():
    inst = two_block()
    inst.R = -1.0
    with pytest.raises(model.InvalidInstanceError):
        model.assemble_full(inst)


def test_generate_deterministic():
    a = model.generate(4, 6, 5, 3, 2, seed=7)
    b = model.generate(4, 6, 5, 3, 2, seed=7)
    assert json.dumps(model.to_dict(a)) == json.dumps(model.to_dict(b))
    c = model.generate(4, 6, 5, 3, 2, seed=8)
    assert not a.equals(c)


@pytest.mark.parametrize("seed", range(5))
def test_generated_is_valid_and_feasible(seed):
    inst = model.generate(3, 4, 3, 2, 2, seed=seed, density=0.7)
    assert model.validate(inst) == []
    lp = model.assemble_full(inst)
    x0 = np.array(inst.meta["x0"])
    assert np.all(lp.A @ x0 <= lp.b)
    assert np.all(np.abs(x0) <= inst.R / 2)
    assert solve_direct(inst).status == "Optimal"


def test_force_infeasible_x2_region():
    inst = model.generate(2, 3, 3, 2, 0, seed=4, force_infeasible_x2=True)
    assert solve_direct(inst).status == "Optimal"
    from certdecomp.oracles import benders_oracle
    r = benders_oracle(inst, np.array([inst.R, 0.0]))
    assert not r.productive


def test_round_trip(tmp_path):
    inst = model.generate(2, 3, 2, 2, 1, seed=11)
    p = tmp_path / "i.json"
    model.save(inst, p)
    assert model.load(p).equals(inst)


def test_truncated_file(tmp_path):
    inst = model.generate(1, 2, 2, 1, 1, seed=0)
    text = json.dumps(model.to_dict(inst))
    p = tmp_path / "t.json"
    p.write_text(text[: len(text) // 2])
    with pytest.raises(model.InstanceFormatError, match="line"):
        model.load(p)


def test_missing_field_named(tmp_path):
    d = model.to_dict(model.generate(1, 2, 2, 1, 1, seed=0))
    del d["blocks"][0]["b1"]
    p = tmp_path / "m.json"
    p.write_text(json.dumps(d))
    with pytest.raises(model.InstanceFormatError, match="'b1'"):
        model.load(p)


def test_case_a_file_loads(tmp_path):
    inst = model.generate(2, 2, 2, 2, 0, seed=3)
    p = tmp_path / "a.json"
    model.save(inst, p)
    back = model.load(p)
    assert back.m2 == 0 and back.A21.shape == (0, 4) and back.A22.shape == (0, 2)


def test_default_dual_box():
    inst = two_block()
    assert inst.dual_box == [10.0 * (1 + 2.0)] * 2
