from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st
from strategies import ground_types, subtypes, supertypes, value_types

from coop import types as T
from coop.oracle.generate import TABLES
from coop.parser import parse_type


@given(value_types())
def test_subtyping_is_reflexive(t):
    assert T.subtype_value(t, t)


@given(value_types().flatmap(lambda t: st.tuples(st.just(t), supertypes(t))))
def test_weakening_gives_supertypes(pair):
    t, s = pair
    assert T.subtype_value(t, s)


@given(value_types().flatmap(lambda t: supertypes(t).flatmap(lambda s: st.tuples(st.just(t), st.just(s), supertypes(s)))))
def test_subtyping_is_transitive(triple):
    a, b, c = triple
    assert T.subtype_value(a, b) and T.subtype_value(b, c)
    assert T.subtype_value(a, c)


@given(value_types(), value_types())
def test_subtyping_is_antisymmetric(a, b):
    if T.subtype_value(a, b) and T.subtype_value(b, a):
        assert a == b


@given(value_types().flatmap(lambda t: st.tuples(supertypes(t), supertypes(t))))
def test_join_is_least_upper_bound(pair):
    a, b = pair
    j = T.join(a, b)
    assert T.subtype_value(a, j) and T.subtype_value(b, j)


@given(value_types().flatmap(lambda t: st.tuples(st.just(t), supertypes(t), supertypes(t))))
def test_join_below_common_supertypes(triple):
    # t is a lower bound of both, so their join exists; any common upper bound sits above it
    t, a, b = triple
    j = T.join(a, b)
    for upper in (a, b):
        if T.subtype_value(a, upper) and T.subtype_value(b, upper):
            assert T.subtype_value(j, upper)


@given(value_types())
def test_show_type_round_trips(t):
    assert parse_type(T.show_type(t), TABLES) == t


@given(value_types())
def test_bottom_is_least(t):
    assert T.subtype_value(T.BOT, t)
    assert T.join(T.BOT, t) == t


def test_runner_ops_are_contravariant():
    big = T.TRunner(frozenset({"a", "b"}), frozenset(), frozenset(), T.INT)
    small = T.TRunner(frozenset({"a"}), frozenset(), frozenset(), T.INT)
    assert T.subtype_value(big, small)
    assert not T.subtype_value(small, big)


def test_runner_state_is_invariant():
    a = T.TRunner(frozenset(), frozenset(), frozenset(), T.INT)
    b = T.TRunner(frozenset(), frozenset(), frozenset(), T.BOOL)
    assert not T.subtype_value(a, b)
    with pytest.raises(T.NoJoin):
        T.join(a, b)


def test_kernel_state_is_invariant():
    k1 = T.KernelType(T.INT, frozenset(), frozenset(), frozenset(), T.INT)
    k2 = T.KernelType(T.INT, frozenset(), frozenset(), frozenset(), T.UNIT)
    assert not T.subtype_kernel(k1, k2)


def test_distinct_base_types_have_no_join():
    with pytest.raises(T.NoJoin):
        T.join(T.INT, T.BOOL)


@given(ground_types)
def test_ground_types_are_ground(t):
    assert T.is_ground(t)


def test_skeleton_erases_effects():
    a = T.TUserFun(T.INT, T.UserType(T.BOOL, frozenset({"op"}), frozenset({"e"})))
    b = T.TUserFun(T.INT, T.UserType(T.BOOL))
    assert T.skeleton(a) == T.skeleton(b)


@given(value_types().flatmap(lambda t: st.tuples(st.just(t), subtypes(t))))
def test_subtypes_share_skeleton(pair):
    t, s = pair
    assert T.skeleton(t) == T.skeleton(s)


def test_show_type_examples():
    t = T.TRunner(frozenset({"tick"}), frozenset(), frozenset(), T.INT)
    assert T.show_type(t) == "{tick} => ({}, {}, int)"
    assert T.show_type(T.TProd(T.INT, T.TSum(T.UNIT, T.BOOL))) == "int * (unit + bool)"
