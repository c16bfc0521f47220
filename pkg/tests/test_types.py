import random

import pytest
from hypothesis import given, settings, strategies as st

from migron.types import (
    ANY,
    BOOL,
    GROUND_TYPES,
    INT,
    STR,
    UNIT,
    Arrow,
    Pair,
    Ref,
    Vector,
    consistent,
    ground_of_typ,
    is_ground,
    join,
    type_precision,
    typ_of_ground,
    ALL_GROUNDS,
)
from genprog import random_typ


def typs(max_depth=3):
    base = st.sampled_from([INT, BOOL, STR, UNIT, ANY])
    return st.recursive(
        base,
        lambda sub: st.one_of(
            st.builds(Arrow, sub, sub),
            st.builds(Ref, sub),
            st.builds(Pair, sub, sub),
            st.builds(Vector, sub),
        ),
        max_leaves=2 ** max_depth,
    )


def test_consistency_examples():
    assert consistent(INT, ANY)
    assert not consistent(INT, BOOL)
    assert consistent(Arrow(ANY, INT), Arrow(BOOL, INT))


def test_consistency_not_transitive_witness():
    assert consistent(INT, ANY)
    assert consistent(ANY, BOOL)
    assert not consistent(INT, BOOL)


@given(typs(), typs())
def test_consistency_symmetric(s, t):
    assert consistent(s, t) == consistent(t, s)


@given(typs())
def test_consistency_reflexive(s):
    assert consistent(s, s)


def test_precision_examples():
    assert type_precision(ANY, INT)
    assert type_precision(Arrow(INT, ANY), Arrow(INT, INT))
    assert not type_precision(INT, BOOL)


@given(typs())
def test_precision_reflexive(s):
    assert type_precision(s, s)


@given(typs(5), typs(5))
def test_precision_antisymmetric(s, t):
    if type_precision(s, t) and type_precision(t, s):
        assert s == t


@given(typs(5), typs(5), typs(5))
def test_precision_transitive(s, t, u):
    if type_precision(s, t) and type_precision(t, u):
        assert type_precision(s, u)


def test_precision_transitive_random_depth5():
    rng = random.Random(5)
    for _ in range(2000):
        s, t, u = (random_typ(rng, 5) for _ in range(3))
        if type_precision(s, t) and type_precision(t, u):
            assert type_precision(s, u)


def test_ground_examples():
    assert is_ground(INT)
    assert is_ground(Arrow(ANY, ANY))
    assert not is_ground(Arrow(INT, INT))
    assert not is_ground(ANY)
    assert is_ground(Ref(ANY))
    assert is_ground(Pair(ANY, ANY))
    assert is_ground(Vector(ANY))


def test_ground_strict_subterms_are_unknown():
    # Every non-base ground has only unknown-type components.
    for g in GROUND_TYPES:
        match g:
            case Arrow(a, b) | Pair(a, b):
                assert a == ANY and b == ANY
            case Ref(a) | Vector(a):
                assert a == ANY
            case _:
                pass


def test_ground_bijection():
    seen = set()
    for g in ALL_GROUNDS:
        ty = typ_of_ground(g)
        assert is_ground(ty)
        assert ground_of_typ(ty) == g
        seen.add(ty)
    assert seen == set(GROUND_TYPES)
    assert ground_of_typ(ANY) is None


@given(typs(), typs())
def test_join_is_least_upper_bound(s, t):
    j = join(s, t)
    if j is None:
        assert not consistent(s, t)
    else:
        assert type_precision(s, j) and type_precision(t, j)
