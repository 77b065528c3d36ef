"""Abstract syntax: values, user computations and kernel computations.

Every binder lives in a :class:`Bind`, so free variables, substitution and
alpha-equivalence are written once, generically over dataclass fields.
Fields holding types, names or literals are opaque data to the traversal.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Optional

Pos = Optional[tuple]


@dataclass(frozen=True)
class Node:
    pos: Pos = field(default=None, compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Bind:
    vars: tuple
    body: "Node"


class Value(Node):
    pass


class UserComp(Node):
    pass


class KernelComp(Node):
    pass


# -- values -----------------------------------------------------------------


@dataclass(frozen=True)
class Var(Value):
    name: str


@dataclass(frozen=True)
class Lit(Value):
    value: object


@dataclass(frozen=True)
class UnitVal(Value):
    pass


@dataclass(frozen=True)
class Const(Value):
    name: str
    args: tuple


@dataclass(frozen=True)
class Pair(Value):
    left: Value
    right: Value


@dataclass(frozen=True)
class Inl(Value):
    value: Value
    annot: object = None


@dataclass(frozen=True)
class Inr(Value):
    value: Value
    annot: object = None


@dataclass(frozen=True)
class Fun(Value):
    annot: object
    body: Bind


@dataclass(frozen=True)
class FunK(Value):
    annot: object
    state: object
    body: Bind


@dataclass(frozen=True)
class RunnerLit(Value):
    clauses: tuple  # ((op, Bind((x,), K)), ...)
    state: object


@dataclass(frozen=True)
class Ascribe(Value):
    value: Value
    annot: object


# -- finally clauses --------------------------------------------------------


@dataclass(frozen=True)
class Finally(Node):
    ret: Bind  # vars (x, c)
    raises: tuple = ()  # ((e, Bind((c,), N)), ...)
    kills: tuple = ()  # ((s, N), ...)

    def raise_clause(self, e: str):
        for name, b in self.raises:
            if name == e:
                return b
        return None

    def kill_clause(self, s: str):
        for name, body in self.kills:
            if name == s:
                return body
        return None


# -- user computations ------------------------------------------------------


@dataclass(frozen=True)
class Return(UserComp):
    value: Value


@dataclass(frozen=True)
class App(UserComp):
    fn: Value
    arg: Value


@dataclass(frozen=True)
class Try(UserComp):
    comp: UserComp
    ret: Bind
    handlers: tuple = ()  # ((e, N), ...)


@dataclass(frozen=True)
class MatchPair(UserComp):
    value: Value
    body: Bind  # (x, y)


@dataclass(frozen=True)
class MatchEmpty(UserComp):
    value: Value
    annot: object


@dataclass(frozen=True)
class MatchSum(UserComp):
    value: Value
    left: Bind
    right: Bind


@dataclass(frozen=True)
class Op(UserComp):
    op: str
    arg: Value
    cont: Bind
    handlers: tuple = ()


@dataclass(frozen=True)
class Raise(UserComp):
    exc: str
    annot: object = None


@dataclass(frozen=True)
class Run(UserComp):
    runner: Value
    init: Value
    comp: UserComp
    fin: Finally


@dataclass(frozen=True)
class KernelSwitch(UserComp):
    comp: KernelComp
    init: Value
    fin: Finally


@dataclass(frozen=True)
class Let(UserComp):
    comp: UserComp
    body: Bind


# -- kernel computations ----------------------------------------------------


@dataclass(frozen=True)
class KReturn(KernelComp):
    value: Value


@dataclass(frozen=True)
class KApp(KernelComp):
    fn: Value
    arg: Value


@dataclass(frozen=True)
class KTry(KernelComp):
    comp: KernelComp
    ret: Bind
    handlers: tuple = ()


@dataclass(frozen=True)
class KMatchPair(KernelComp):
    value: Value
    body: Bind


@dataclass(frozen=True)
class KMatchEmpty(KernelComp):
    value: Value
    annot: object


@dataclass(frozen=True)
class KMatchSum(KernelComp):
    value: Value
    left: Bind
    right: Bind


@dataclass(frozen=True)
class KOp(KernelComp):
    op: str
    arg: Value
    cont: Bind
    handlers: tuple = ()


@dataclass(frozen=True)
class KRaise(KernelComp):
    exc: str
    annot: object = None


@dataclass(frozen=True)
class Kill(KernelComp):
    sig: str
    annot: object = None


@dataclass(frozen=True)
class Getenv(KernelComp):
    body: Bind  # (c,)


@dataclass(frozen=True)
class Setenv(KernelComp):
    value: Value
    comp: KernelComp


@dataclass(frozen=True)
class UserSwitch(KernelComp):
    comp: UserComp
    ret: Bind
    handlers: tuple = ()


@dataclass(frozen=True)
class KLet(KernelComp):
    comp: KernelComp
    body: Bind


def handler_map(handlers: tuple) -> dict:
    return dict(handlers)


# -- generic traversal ------------------------------------------------------

_FIELDS: dict[type, tuple[str, ...]] = {}


def _fields(cls) -> tuple[str, ...]:
    names = _FIELDS.get(cls)
    if names is None:
        names = tuple(f.name for f in dataclasses.fields(cls) if f.name != "pos")
        _FIELDS[cls] = names
    return names


def free_vars(x) -> frozenset:
    if isinstance(x, Var):
        return frozenset((x.name,))
    if isinstance(x, Node):
        out: frozenset = frozenset()
        for name in _fields(type(x)):
            out |= free_vars(getattr(x, name))
        return out
    if isinstance(x, Bind):
        return free_vars(x.body) - set(x.vars)
    if isinstance(x, tuple):
        out = frozenset()
        for item in x:
            out |= free_vars(item)
        return out
    return frozenset()


class NameSupply:
    """Monotone counter for deterministic fresh names (``x_1``, ``x_2``...)."""

    def __init__(self, start: int = 0, reserved=frozenset()):
        self.counter = start
        self.reserved = frozenset(reserved)

    def fresh(self, base: str, avoid=frozenset()) -> str:
        stem, _, suffix = base.rpartition("_")
        if not stem or not suffix.isdigit():
            stem = base
        stem = stem or "v"
        while True:
            self.counter += 1
            name = f"{stem}_{self.counter}"
            if name not in avoid and name not in self.reserved:
                return name


def substitute(body, var: str, replacement: Value, supply: NameSupply | None = None):
    """Capture-avoiding ``body[replacement/var]``."""
    return substitute_many(body, {var: replacement}, supply)


def substitute_many(body, mapping: dict, supply: NameSupply | None = None):
    if not mapping:
        return body
    if supply is None:
        supply = NameSupply()
    repl_fv = frozenset().union(*(free_vars(v) for v in mapping.values()))
    return _subst(body, mapping, repl_fv, supply)


def _subst(x, m: dict, repl_fv: frozenset, supply: NameSupply):
    if isinstance(x, Var):
        return m.get(x.name, x)
    if isinstance(x, Node):
        cls = type(x)
        changed = False
        vals = {}
        for name in _fields(cls):
            old = getattr(x, name)
            new = _subst(old, m, repl_fv, supply)
            changed = changed or new is not old
            vals[name] = new
        if not changed:
            return x
        return cls(**vals, pos=x.pos)
    if isinstance(x, Bind):
        inner = {k: v for k, v in m.items() if k not in x.vars}
        if not inner:
            return x
        body_fv = free_vars(x.body)
        if not any(k in body_fv for k in inner):
            return x
        new_vars = []
        renaming = {}
        for v in x.vars:
            if v in repl_fv:
                nv = supply.fresh(v, avoid=repl_fv | body_fv | set(inner))
                renaming[v] = Var(nv)
                new_vars.append(nv)
            else:
                new_vars.append(v)
        body = x.body
        if renaming:
            body = _subst(body, renaming, frozenset(r.name for r in renaming.values()), supply)
        return Bind(tuple(new_vars), _subst(body, inner, repl_fv, supply))
    if isinstance(x, tuple):
        items = tuple(_subst(i, m, repl_fv, supply) for i in x)
        if all(a is b for a, b in zip(items, x)):
            return x
        return items
    return x


def nameless(x, env: tuple = ()):
    """Index-based form: bound variables become distances to their binder."""
    if isinstance(x, Var):
        for i in range(len(env) - 1, -1, -1):
            if env[i] == x.name:
                return ("bv", len(env) - 1 - i)
        return ("fv", x.name)
    if isinstance(x, Lit):
        return ("Lit", type(x.value).__name__, x.value)
    if isinstance(x, Node):
        return (type(x).__name__,) + tuple(nameless(getattr(x, n), env) for n in _fields(type(x)))
    if isinstance(x, Bind):
        return ("bind", len(x.vars), nameless(x.body, env + tuple(x.vars)))
    if isinstance(x, tuple):
        return tuple(nameless(i, env) for i in x)
    return x


def alpha_equal(a, b) -> bool:
    return nameless(a) == nameless(b)


def subterms(x):
    """Yield every Node inside ``x`` (pre-order), including ``x`` itself."""
    if isinstance(x, Node):
        yield x
        for n in _fields(type(x)):
            yield from subterms(getattr(x, n))
    elif isinstance(x, Bind):
        yield from subterms(x.body)
    elif isinstance(x, tuple):
        for i in x:
            yield from subterms(i)


def bound_names(x) -> set:
    out = set()
    for t in subterms(x):
        for n in _fields(type(t)):
            v = getattr(t, n)
            for b in _binds_in(v):
                out.update(b.vars)
    return out


def _binds_in(v):
    if isinstance(v, Bind):
        yield v
    elif isinstance(v, tuple):
        for i in v:
            yield from _binds_in(i)
