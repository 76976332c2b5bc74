import random

import pytest
from hypothesis import given, strategies as st

from covlab.compression import (
    CompressionInstance,
    DenseOrbitFailure,
    InductionStuck,
    NotEnoughRoom,
    RearrangementInstance,
    check_rearrangement,
    compress,
    rearrange,
    replay,
    shipped_compression,
    shipped_rearrangements,
    stages_from_json,
    sweep_ok,
    translates_from_first_factor,
)
from covlab.model import GroupModel, StructureError, is_graded_nwd

Z24 = GroupModel.cyclic_product((2, 2, 2, 2))


@pytest.fixture(scope="module")
def shipped():
    inst = shipped_compression()
    return inst, compress(inst)


def test_shipped_compression(shipped):
    inst, res = shipped
    assert len(res.Y) <= 4
    assert is_graded_nwd(res.C, inst.space).passed
    assert sweep_ok(inst, res)
    for x, y in res.covered.items():
        # x = y^-1 (y x) with y x in C
        assert inst.action(y, x) in res.C.members(inst.space)
        assert inst.action(Z24.inv(y), inst.action(y, x)) == x


def test_trace_clauses_all_hold(shipped):
    _, res = shipped
    assert len(res.trace) == len(shipped_compression().bases)
    assert all(all(s.clauses.values()) for s in res.trace)


def test_replay_is_bit_identical(shipped):
    inst, res = shipped
    assert replay(inst, res.trace).dumps() == res.dumps()
    from_disk = stages_from_json(res.to_json()["trace"])
    assert replay(inst, from_disk).dumps() == res.dumps()


def test_tampered_trace_is_caught(shipped):
    inst, res = shipped
    trace = stages_from_json(res.to_json()["trace"])
    trace[0].W = (1, 1, 1, 1)
    with pytest.raises(InductionStuck):
        replay(inst, trace)
    with pytest.raises(InductionStuck):
        replay(inst, trace[:-1])


def test_empty_piece_list():
    inst = CompressionInstance(Z24, Z24, [], 2)
    res = compress(inst)
    assert res.Y == () and res.covered == {}
    # one U per base stem, each base has a point outside the union
    assert is_graded_nwd(res.C, Z24).passed
    assert all(s.U[:len(s.base)] == s.base for s in res.trace)


def test_full_cylinder_piece_rejected():
    with pytest.raises(StructureError):
        CompressionInstance(Z24, Z24, [Z24.cylinder((0, 1))], 2)


def test_dense_orbit_check():
    # every element acts trivially, so orbits are single points
    inst = CompressionInstance(Z24, GroupModel.cyclic_product((2,)), [{(0, 0, 0, 0)}], 1,
                               action=lambda y, x: x)
    with pytest.raises(DenseOrbitFailure):
        compress(inst)


def test_non_bijective_action_rejected():
    with pytest.raises(StructureError):
        CompressionInstance(Z24, Z24, [], 1, action=lambda y, x: (0, 0, 0, 0))


def test_grade_must_be_below_depth():
    with pytest.raises(StructureError):
        CompressionInstance(Z24, Z24, [], 4)


@given(st.integers(0, 10**6))
def test_random_pieces_swept_or_stuck(seed):
    rng = random.Random(seed)
    pieces = [set(rng.sample(Z24.elements, rng.randint(0, 3))) for _ in range(rng.randint(0, 3))]
    inst = CompressionInstance(Z24, Z24, pieces, 2)
    try:
        res = compress(inst)
    except InductionStuck as exc:
        assert 0 <= exc.stage <= len(inst.bases)
        return
    assert sweep_ok(inst, res) and is_graded_nwd(res.C, Z24).passed
    C = res.C.members(Z24)
    swept = {Z24.op(Z24.inv(y), c) for y in res.Y for c in C}
    assert set().union(*inst.pieces) <= swept if inst.pieces else True
    assert replay(inst, res.trace).dumps() == res.dumps()


# rearrange


@pytest.mark.parametrize("inst", shipped_rearrangements(), ids=lambda i: i.name)
def test_shipped_rearrangements(inst):
    res = rearrange(inst)
    chk = check_rearrangement(inst, res)
    assert chk.passed, chk.witness
    assert len(res.Q) <= 4
    assert rearrange(inst).dumps() == res.dumps()


def test_halves_instance_shape():
    halves = shipped_rearrangements()[0]
    assert halves.xs == ((0, 0, 0, 0), (1, 0, 0, 0))
    res = rearrange(halves)
    assert res.Q == ((0, 0, 0, 0),)


def test_r_formula():
    inst = shipped_rearrangements()[1]
    res = rearrange(inst)
    for n, m, k, r in res.moves:
        assert Z24.op(r, inst.qs[n]) == inst.xs[k]


def test_single_piece_inside_first_translate():
    xs = translates_from_first_factor(Z24, (0,))
    piece = {(0, 0, 0, 1), (0, 1, 1, 0)}
    inst = RearrangementInstance(Z24, (0,), xs, xs, [piece], 2)
    res = rearrange(inst)
    assert len(res.Q) == 1
    r_inv = res.Q[0]
    assert {Z24.op(Z24.inv(r_inv), c) for c in piece} == res.C.members(Z24)


def test_empty_pieces():
    xs = translates_from_first_factor(Z24, (0,))
    res = rearrange(RearrangementInstance(Z24, (0,), xs, xs, [set(), set()], 2))
    assert res.Q == () and not res.C.members(Z24)


def test_overlapping_translates_rejected():
    with pytest.raises(StructureError):
        RearrangementInstance(Z24, (0,), ((0, 0, 0, 0), (0, 1, 0, 0)),
                              translates_from_first_factor(Z24, (0,)), [], 2)


def test_non_covering_qs_rejected():
    with pytest.raises(StructureError):
        RearrangementInstance(Z24, (0,), ((0, 0, 0, 0),), ((0, 0, 0, 0),), [], 2)


def test_not_enough_room():
    xs = translates_from_first_factor(Z24, (0,))
    pieces = [{(0, 0, 0, 0), (1, 1, 1, 1)}, {(0, 1, 1, 0), (1, 0, 0, 1)}]
    with pytest.raises(NotEnoughRoom):
        rearrange(RearrangementInstance(Z24, (0,), xs, xs, pieces, 2))


@given(st.integers(0, 10**6))
def test_random_rearrangements_pass(seed):
    rng = random.Random(seed)
    xs = translates_from_first_factor(Z24, (0, 0))
    pieces = [set(rng.sample(Z24.elements, rng.randint(0, 2))) for _ in range(rng.randint(0, 2))]
    inst = RearrangementInstance(Z24, (0, 0), xs, xs, pieces, 2)
    try:
        res = rearrange(inst)
    except NotEnoughRoom:
        return
    chk = check_rearrangement(inst, res)
    assert chk.passed, chk.witness
