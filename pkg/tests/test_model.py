import itertools

import pytest
from hypothesis import given, strategies as st

from covlab.config import ConfigError, load_model_config
from covlab.model import (
    BudgetExceeded,
    GradedNwdSet,
    GroupModel,
    Profile,
    StructureError,
    check_group_axioms,
    checked_product,
    enumerate_space,
    is_graded_dense_open,
    is_graded_nwd,
    translate,
)
from oracles import nwd_double_loop


def test_profile_rejects_unit_alphabet():
    with pytest.raises(ValueError):
        Profile((3, 1))
    with pytest.raises(ValueError):
        Profile(())


def test_profile_parse_and_cardinality():
    p = Profile.parse("3,3")
    assert p.sizes == (3, 3) and p.cardinality == 9 and str(p) == "3,3"
    with pytest.raises(ValueError):
        Profile.parse("3,x")


def test_cardinality_overflow_rejected():
    with pytest.raises(OverflowError):
        checked_product([2**40, 2**40])


@pytest.mark.parametrize("sizes,count,first,last", [
    ((2, 2), 4, (0, 0), (1, 1)),
    ((3,), 3, (0,), (2,)),
    ((3, 3), 9, (0, 0), (2, 2)),
])
def test_enumerate_space_lex(sizes, count, first, last):
    items = list(enumerate_space(Profile(sizes)))
    assert len(items) == count and items[0] == first and items[-1] == last
    assert items == sorted(items) and len(set(items)) == count


def test_enumerate_space_budget():
    with pytest.raises(BudgetExceeded) as exc:
        list(enumerate_space(Profile((10, 10, 10)), budget=999))
    assert exc.value.required == 1000


def test_translate_examples():
    Z32 = GroupModel.cyclic_product((3, 3))
    assert translate(Z32, (1, 0), {(0, 0)}) == {(1, 0)}
    S3 = GroupModel.symmetric(3)
    S = set(S3.elements[:4])
    assert translate(S3, S3.identity, S) == S
    Z23 = GroupModel.cyclic_product((2, 2, 2))
    assert translate(Z23, (1, 1, 1), {(0, 0, 0), (0, 1, 1)}) == {(1, 1, 1), (1, 0, 0)}
    with pytest.raises(ValueError):
        translate(Z23, (2, 0, 0), {(0, 0, 0)})


@pytest.mark.parametrize("model", [
    GroupModel.cyclic_product((3, 4)),
    GroupModel.symmetric(4),
    GroupModel.dyadic(5),
])
def test_group_axioms_exhaustive(model):
    rep = check_group_axioms(model)
    assert rep.passed and rep.mode == "exhaustive"


def test_group_axioms_sampled_on_large_model():
    rep = check_group_axioms(GroupModel.cyclic_product((5, 5, 5, 5, 5, 5)), seed=1)
    assert rep.passed and rep.mode == "sampled"


def test_permutation_composition_right_to_left():
    S3 = GroupModel.symmetric(3)
    a, b = (1, 0, 2), (0, 2, 1)
    assert S3.mul(a, b) == tuple(a[b[i]] for i in range(3))


@given(st.data())
def test_translate_inverse_and_size(data):
    model = data.draw(st.sampled_from([GroupModel.cyclic_product((3, 2, 2)), GroupModel.symmetric(4),
                                       GroupModel.dyadic(4)]))
    S = data.draw(st.sets(st.sampled_from(model.elements), max_size=8))
    g = data.draw(st.sampled_from(model.elements))
    T = translate(model, g, S)
    assert len(T) == len(S)
    assert translate(model, model.inv(g), T) == frozenset(S)


def _set(model, elems, grade):
    return GradedNwdSet.from_elements(model, elems, grade)


def test_nwd_examples():
    Z = GroupModel.cyclic_product((2,) * 4)
    assert is_graded_nwd(_set(Z, {(0, 0, 0, 0), (1, 1, 1, 1)}, 2), Z).passed
    half = [x for x in Z.elements if x[0] == 0]
    rep = is_graded_nwd(_set(Z, half, 1), Z)
    assert not rep.passed and rep.witness == (0,)
    assert is_graded_nwd(_set(Z, [], 3), Z).passed


def test_nwd_structural_errors():
    Z = GroupModel.cyclic_product((2,) * 4)
    with pytest.raises(StructureError):
        is_graded_nwd(GradedNwdSet(3, 1, frozenset()), Z)
    with pytest.raises(StructureError):
        GradedNwdSet(4, 4, frozenset())
    with pytest.raises(StructureError):
        is_graded_nwd(GradedNwdSet(4, 1, frozenset({(0, 0, 0, 5)})), Z)
    with pytest.raises(StructureError):
        GradedNwdSet.from_json({"depth": 4, "grade": 1, "stems": [], "extra": 1})


def test_nwd_json_round_trip():
    Z = GroupModel.cyclic_product((3, 3))
    S = _set(Z, {(0, 1), (2, 2)}, 1)
    assert GradedNwdSet.from_json(S.to_json()) == S


def test_dense_open_is_complement_check():
    Z = GroupModel.cyclic_product((2, 2, 2))
    U = [x for x in Z.elements if x[2] == 1]
    assert is_graded_dense_open(U, Z, 1).passed
    assert not is_graded_dense_open([x for x in Z.elements if x[0] == 1], Z, 1).passed


@given(st.sets(st.tuples(*(st.integers(0, 1),) * 4)), st.integers(0, 3))
def test_nwd_matches_double_loop(S, grade):
    Z = GroupModel.cyclic_product((2,) * 4)
    assert is_graded_nwd(_set(Z, S, grade), Z).passed == nwd_double_loop(S, (2,) * 4, grade)


@given(st.sets(st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(0, 1))), st.data())
def test_nwd_monotone_under_subsets(S, data):
    Z = GroupModel.cyclic_product((3, 3, 2))
    if not is_graded_nwd(_set(Z, S, 1), Z).passed:
        return
    sub = data.draw(st.sets(st.sampled_from(sorted(S)))) if S else set()
    assert is_graded_nwd(_set(Z, sub, 1), Z).passed


@given(st.integers(0, 2**16))
def test_complement_of_one_cylinder_per_stem(seed):
    # removing one depth-3 cylinder under each stem of depth <= 1 leaves a nowhere dense set
    import random
    rng = random.Random(seed)
    Z = GroupModel.cyclic_product((2, 3, 2))
    removed = set()
    for stem in Z.shallow_stems(1):
        ext = [x for x in Z.elements if x[:len(stem)] == stem]
        removed.add(rng.choice(ext))
    C = set(Z.elements) - removed
    assert is_graded_nwd(_set(Z, C, 1), Z).passed == nwd_double_loop(C, (2, 3, 2), 1) is True


def test_cylinders_and_stems():
    Z = GroupModel.cyclic_product((2, 3))
    assert Z.stems(1) == [(0,), (1,)]
    assert Z.cylinder((1,)) == {(1, 0), (1, 1), (1, 2)}
    assert Z.shallow_stems(1) == [(), (0,), (1,)]


def test_descriptor_round_trip():
    for m in (GroupModel.cyclic_product((2, 3)), GroupModel.symmetric(3), GroupModel.dyadic(4, depth=2)):
        back = GroupModel.from_descriptor(m.descriptor())
        assert back.elements == m.elements and back.depth == m.depth


def test_model_text_config():
    model, grade = load_model_config("[model]\nkind = dyadic\nbits = 4\ngrade = 2\n")
    assert len(model) == 16 and grade == 2
    model, grade = load_model_config("[model]\nkind = symmetric\npoints = 4\n")
    assert len(model) == 24 and grade == 3
    for bad in ("[model]\nkind = cyclic\nsizes = 2\ncolour = red\n",
                "[model]\nkind = torus\n",
                "[model]\nkind = cyclic\nsizes = 2,2\ngrade = 2\n",
                "[other]\n"):
        with pytest.raises(ConfigError):
            load_model_config(bad)


def test_dyadic_addition_carries_to_lower_indices():
    T = GroupModel.dyadic(3)
    # 0b011 + 0b001 = 0b100, digit 0 worth 1/2
    assert T.mul((0, 1, 1), (0, 0, 1)) == (1, 0, 0)
    assert T.inv((0, 0, 1)) == (1, 1, 1)


def test_symmetric_inverse():
    S4 = GroupModel.symmetric(4)
    for p in itertools.islice(S4.elements, 10):
        assert S4.mul(p, S4.inv(p)) == S4.identity
