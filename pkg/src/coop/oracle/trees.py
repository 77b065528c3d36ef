"""Finite computation trees of the free model, with Kleisli extension.

A :class:`Node` keeps its continuations as host functions, so a tree can be
applied to results outside any finite enumeration. :func:`freeze` turns a
tree into nested tuples by enumerating every operation's result domain; two
trees are equal when their frozen forms are.

Payloads are tagged tuples::

    user:   ("val", v) | ("exc", e)
    kernel: ("val", v, c) | ("exc", e, c) | ("sig", s)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from ..values import UNIT_V, InlV, InrV


class OracleBug(Exception):
    """The runtime-error operation was reached; well-typed input never does this."""


class OracleLimit(Exception):
    """A frozen tree exceeded the node budget."""


@dataclass(frozen=True)
class Leaf:
    payload: tuple


@dataclass(frozen=True)
class Node:
    op: str
    arg: object
    cont: Callable = field(compare=False)  # result -> tree
    excs: dict = field(compare=False, default_factory=dict)  # exception -> (() -> tree)


def ret(v) -> Leaf:
    return Leaf(("val", v))


def exc(e) -> Leaf:
    return Leaf(("exc", e))


def kleisli(f: Callable, t):
    """Extend ``f`` (payload -> tree) over every leaf of ``t``."""
    if isinstance(t, Leaf):
        return f(t.payload)
    return Node(
        t.op,
        t.arg,
        lambda b, t=t: kleisli(f, t.cont(b)),
        {e: (lambda k=k: kleisli(f, k())) for e, k in t.excs.items()},
    )


def bind(t, f: Callable):
    """User-monad bind: ``f`` receives returned values, exceptions pass through."""
    return kleisli(lambda p: f(p[1]) if p[0] == "val" else Leaf(p), t)


# -- finite enumeration -------------------------------------------------------


def enumerate_ground(ty, n: int = 3) -> list:
    """All values of a ground type, with ``int`` confined to ``[0, n)``."""
    from .. import types as T

    if isinstance(ty, T.TUnit):
        return [UNIT_V]
    if isinstance(ty, T.TEmpty):
        return []
    if isinstance(ty, T.TBase):
        if ty.name == "bool":
            return [False, True]
        if ty.name == "int":
            return list(range(n))
        raise ValueError(f"{ty.name} is outside the enumerable fragment")
    if isinstance(ty, T.TProd):
        return [(a, b) for a in enumerate_ground(ty.left, n) for b in enumerate_ground(ty.right, n)]
    if isinstance(ty, T.TSum):
        return [InlV(a) for a in enumerate_ground(ty.left, n)] + [InrV(b) for b in enumerate_ground(ty.right, n)]
    raise ValueError(f"not a ground type: {ty!r}")


def _key(v):
    return repr(v)


def freeze(t, domains: dict, budget: int = 10_000):
    """Materialise ``t`` over ``domains`` (op -> list of results)."""
    count = [0]

    def go(t):
        count[0] += 1
        if count[0] > budget:
            raise OracleLimit(f"tree has more than {budget} nodes")
        if isinstance(t, Leaf):
            return ("leaf", t.payload)
        kids = tuple((b, go(t.cont(b))) for b in domains[t.op])
        ekids = tuple((e, go(t.excs[e]())) for e in sorted(t.excs))
        return ("node", t.op, t.arg, kids, ekids)

    return go(t)


def trees_equal(a, b, domains: dict, budget: int = 10_000) -> bool:
    return freeze(a, domains, budget) == freeze(b, domains, budget)


def depth(t, domains: dict) -> int:
    if isinstance(t, Leaf):
        return 0
    subs = [t.cont(b) for b in domains[t.op]] + [k() for k in t.excs.values()]
    return 1 + max((depth(s, domains) for s in subs), default=0)


def thaw(frozen):
    """Rebuild a tree from its frozen form (continuations become table lookups)."""
    if frozen[0] == "leaf":
        return Leaf(frozen[1])
    _, op, arg, kids, ekids = frozen
    table = {_key(b): thaw(sub) for b, sub in kids}
    etable = {e: thaw(sub) for e, sub in ekids}

    def cont(b, table=table, op=op):
        try:
            return table[_key(b)]
        except KeyError:
            raise OracleBug(f"result {b!r} of {op} is outside the enumerated domain") from None

    return Node(op, arg, cont, {e: (lambda s=s: s) for e, s in etable.items()})
