"""Hypothesis strategies for types and generated terms."""

from __future__ import annotations

import random

from hypothesis import strategies as st

from coop import types as T
from coop.oracle.generate import EXCS, OPS, SIGS, Gen, GenConfig

names_ops = st.frozensets(st.sampled_from(OPS))
names_excs = st.frozensets(st.sampled_from(EXCS))
names_sigs = st.frozensets(st.sampled_from(SIGS))

base_types = st.sampled_from([T.INT, T.BOOL, T.STR, T.UNIT, T.EMPTY])

ground_types = st.recursive(
    base_types,
    lambda inner: st.builds(T.TProd, inner, inner) | st.builds(T.TSum, inner, inner),
    max_leaves=4,
)
state_types = st.sampled_from([T.INT, T.BOOL, T.UNIT, T.STR])


def value_types(max_leaves: int = 4):
    def extend(inner):
        user = st.builds(T.UserType, inner, names_ops, names_excs)
        kernel = st.builds(T.KernelType, inner, names_ops, names_excs, names_sigs, state_types)
        return (
            st.builds(T.TProd, inner, inner)
            | st.builds(T.TSum, inner, inner)
            | st.builds(T.TUserFun, inner, user)
            | st.builds(T.TKernelFun, inner, kernel)
            | st.builds(T.TRunner, names_ops, names_ops, names_sigs, state_types)
        )

    return st.recursive(base_types, extend, max_leaves=max_leaves)


@st.composite
def supertypes(draw, t):
    """A random supertype of ``t``, built by weakening effect rows."""
    if isinstance(t, T.TProd):
        return T.TProd(draw(supertypes(t.left)), draw(supertypes(t.right)))
    if isinstance(t, T.TSum):
        return T.TSum(draw(supertypes(t.left)), draw(supertypes(t.right)))
    if isinstance(t, T.TUserFun):
        r = t.result
        return T.TUserFun(
            draw(subtypes(t.arg)),
            T.UserType(draw(supertypes(r.carrier)), r.ops | draw(names_ops), r.excs | draw(names_excs)),
        )
    if isinstance(t, T.TKernelFun):
        r = t.result
        return T.TKernelFun(
            draw(subtypes(t.arg)),
            T.KernelType(
                draw(supertypes(r.carrier)), r.ops | draw(names_ops), r.excs | draw(names_excs),
                r.sigs | draw(names_sigs), r.state,
            ),
        )
    if isinstance(t, T.TRunner):
        return T.TRunner(t.ops & draw(names_ops), t.ext | draw(names_ops), t.sigs | draw(names_sigs), t.state)
    return t


@st.composite
def subtypes(draw, t):
    if isinstance(t, T.TProd):
        return T.TProd(draw(subtypes(t.left)), draw(subtypes(t.right)))
    if isinstance(t, T.TSum):
        return T.TSum(draw(subtypes(t.left)), draw(subtypes(t.right)))
    if isinstance(t, T.TUserFun):
        r = t.result
        return T.TUserFun(
            draw(supertypes(t.arg)),
            T.UserType(draw(subtypes(r.carrier)), r.ops & draw(names_ops), r.excs & draw(names_excs)),
        )
    if isinstance(t, T.TKernelFun):
        r = t.result
        return T.TKernelFun(
            draw(supertypes(t.arg)),
            T.KernelType(
                draw(subtypes(r.carrier)), r.ops & draw(names_ops), r.excs & draw(names_excs),
                r.sigs & draw(names_sigs), r.state,
            ),
        )
    if isinstance(t, T.TRunner):
        return T.TRunner(t.ops | draw(names_ops), t.ext & draw(names_ops), t.sigs & draw(names_sigs), t.state)
    return t


@st.composite
def pure_programs(draw, depth: int = 3):
    """A closed generated program, seeded from hypothesis."""
    seed = draw(st.integers(0, 2**32 - 1))
    g = Gen(random.Random(seed), GenConfig(depth=depth))
    return g.pure_program()[0]


@st.composite
def open_user_terms(draw, depth: int = 3):
    """A user computation with residual operations and a free variable ``p : int``."""
    seed = draw(st.integers(0, 2**32 - 1))
    g = Gen(random.Random(seed), GenConfig(depth=depth))
    ty = g.ground_type()
    return g.user(ty, frozenset(OPS), g.subset(EXCS), (("p", T.INT),), depth)
