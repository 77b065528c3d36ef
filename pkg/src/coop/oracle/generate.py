"""Seeded generator of well-typed terms over a small fixed signature.

Terms are built directly as abstract syntax, type-directed, so every
construct the generator emits is well-typed by construction; callers still
run the typechecker on the result. All ground types stay inside the
enumerable fragment: ``unit``, ``bool``, ``int`` (values in ``[0, n)``) and
products and sums of those.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .. import syntax as S
from .. import types as T
from .trees import enumerate_ground


def gen_tables() -> T.EffectTables:
    tables = T.EffectTables()
    tables.exceptions.update({"e1", "e2", "e3"})
    tables.signals.update({"s1", "s2"})
    tables.operations["flip"] = T.OpSig(T.UNIT, T.BOOL, frozenset())
    tables.operations["emit"] = T.OpSig(T.BOOL, T.UNIT, frozenset({"e1"}))
    tables.operations["count"] = T.OpSig(T.INT, T.INT, frozenset({"e2"}))
    return tables


TABLES = gen_tables()
OPS = tuple(sorted(TABLES.operations))
EXCS = tuple(sorted(TABLES.exceptions))
SIGS = tuple(sorted(TABLES.signals))
STATE_TYPES = (T.UNIT, T.BOOL, T.INT)


def domains(tables: T.EffectTables = TABLES, n: int = 3) -> dict:
    return {op: enumerate_ground(sig.result, n) for op, sig in tables.operations.items()}


@dataclass
class GenConfig:
    depth: int = 3
    int_bound: int = 3
    allow_run: bool = True


class Gen:
    """Type-directed generator. ``ctx`` is a tuple of ``(name, type)`` pairs."""

    def __init__(self, rng: random.Random, config: GenConfig | None = None, tables: T.EffectTables = TABLES):
        self.rng = rng
        self.cfg = config or GenConfig()
        self.tables = tables
        self.counter = 0

    def fresh(self, stem: str = "v") -> str:
        self.counter += 1
        return f"{stem}{self.counter}"

    def chance(self, p: float) -> bool:
        return self.rng.random() < p

    def subset(self, items, p: float = 0.5) -> frozenset:
        return frozenset(i for i in sorted(items) if self.chance(p))

    # -- types --------------------------------------------------------------

    def ground_type(self, depth: int = 1):
        r = self.rng.random()
        if depth <= 0 or r < 0.7:
            return self.rng.choice((T.UNIT, T.BOOL, T.INT))
        if r < 0.85:
            return T.TProd(self.ground_type(depth - 1), self.ground_type(depth - 1))
        return T.TSum(self.ground_type(depth - 1), self.ground_type(depth - 1))

    def state_type(self):
        return self.rng.choice(STATE_TYPES)

    # -- values -------------------------------------------------------------

    def value(self, ty, ctx, depth: int = 2):
        vars_ = [x for x, t in ctx if t == ty]
        if vars_ and self.chance(0.5):
            return S.Var(self.rng.choice(vars_))
        if isinstance(ty, T.TUnit):
            return S.UnitVal()
        if isinstance(ty, T.TBase) and ty.name == "bool":
            if depth > 0 and self.chance(0.3):
                op = self.rng.choice(("<", "="))
                return S.Const(op, (self.value(T.INT, ctx, depth - 1), self.value(T.INT, ctx, depth - 1)))
            return S.Lit(self.chance(0.5))
        if isinstance(ty, T.TBase) and ty.name == "int":
            if depth > 0 and self.chance(0.2):
                return S.Const("+", (self.value(T.INT, ctx, depth - 1), self.value(T.INT, ctx, depth - 1)))
            return S.Lit(self.rng.randrange(self.cfg.int_bound))
        if isinstance(ty, T.TProd):
            return S.Pair(self.value(ty.left, ctx, depth - 1), self.value(ty.right, ctx, depth - 1))
        if isinstance(ty, T.TSum):
            if self.chance(0.5):
                return S.Inl(self.value(ty.left, ctx, depth - 1), ty)
            return S.Inr(self.value(ty.right, ctx, depth - 1), ty)
        raise ValueError(f"cannot generate a value of {ty!r}")

    def closed_value(self, ty):
        return self.value(ty, (), 2)

    # -- user computations --------------------------------------------------

    def user(self, ty, ops: frozenset, excs: frozenset, ctx=(), depth: int | None = None):
        """A user computation of type ``ty ! (ops, excs)`` (or a subtype)."""
        d = self.cfg.depth if depth is None else depth
        if d <= 0:
            return self._user_leaf(ty, excs, ctx)
        forms = ["return", "let", "try", "match", "app"]
        if excs:
            forms.append("raise")
        if ops:
            forms += ["op", "op"]
        if self.cfg.allow_run:
            forms += ["run", "kernel"]
        form = self.rng.choice(forms)
        return getattr(self, "_user_" + form)(ty, ops, excs, ctx, d - 1)

    def _user_leaf(self, ty, excs, ctx):
        if excs and self.chance(0.25):
            return S.Raise(self.rng.choice(sorted(excs)), ty)
        return S.Return(self.value(ty, ctx))

    def _user_return(self, ty, ops, excs, ctx, d):
        return S.Return(self.value(ty, ctx))

    def _user_raise(self, ty, ops, excs, ctx, d):
        return S.Raise(self.rng.choice(sorted(excs)), ty)

    def op_call(self, op, ctx, cont, handler):
        sig = self.tables.operations[op]
        y = self.fresh("y")
        arg = self.value(sig.param, ctx)
        body = cont(y, sig.result)
        hs = tuple((e, handler(e)) for e in sorted(sig.excs))
        return arg, S.Bind((y,), body), hs

    def _user_op(self, ty, ops, excs, ctx, d):
        op = self.rng.choice(sorted(ops))
        arg, cont, hs = self.op_call(
            op,
            ctx,
            lambda y, b: self.user(ty, ops, excs, ctx + ((y, b),), d),
            lambda e: self.user(ty, ops, excs, ctx, d),
        )
        return S.Op(op, arg, cont, hs)

    def _user_let(self, ty, ops, excs, ctx, d):
        a = self.ground_type()
        x = self.fresh("x")
        return S.Let(self.user(a, ops, excs, ctx, d), S.Bind((x,), self.user(ty, ops, excs, ctx + ((x, a),), d)))

    def _user_try(self, ty, ops, excs, ctx, d):
        a = self.ground_type()
        inner = excs | self.subset(EXCS, 0.4)
        handled = [e for e in sorted(inner) if e not in excs or self.chance(0.5)]
        x = self.fresh("x")
        m = self.user(a, ops, inner, ctx, d)
        ret = S.Bind((x,), self.user(ty, ops, excs, ctx + ((x, a),), d))
        return S.Try(m, ret, tuple((e, self.user(ty, ops, excs, ctx, d)) for e in handled))

    def _user_match(self, ty, ops, excs, ctx, d):
        if self.chance(0.5):
            a, b = self.ground_type(0), self.ground_type(0)
            x, y = self.fresh("x"), self.fresh("x")
            v = self.value(T.TProd(a, b), ctx)
            return S.MatchPair(v, S.Bind((x, y), self.user(ty, ops, excs, ctx + ((x, a), (y, b)), d)))
        a, b = self.ground_type(0), self.ground_type(0)
        x, y = self.fresh("x"), self.fresh("x")
        v = self.value(T.TSum(a, b), ctx)
        return S.MatchSum(
            v,
            S.Bind((x,), self.user(ty, ops, excs, ctx + ((x, a),), d)),
            S.Bind((y,), self.user(ty, ops, excs, ctx + ((y, b),), d)),
        )

    def _user_app(self, ty, ops, excs, ctx, d):
        a = self.ground_type()
        x = self.fresh("x")
        body = self.user(ty, ops, excs, ctx + ((x, a),), d)
        return S.App(S.Fun(a, S.Bind((x,), body)), self.value(a, ctx))

    def finally_clauses(self, ty, ops, excs, ctx, carrier, state, inner_excs, sigs, d):
        x, c = self.fresh("x"), self.fresh("c")
        ret = S.Bind((x, c), self.user(ty, ops, excs, ctx + ((x, carrier), (c, state)), d))
        raises = []
        for e in sorted(inner_excs):
            c2 = self.fresh("c")
            raises.append((e, S.Bind((c2,), self.user(ty, ops, excs, ctx + ((c2, state),), d))))
        kills = tuple((s, self.user(ty, ops, excs, ctx, d)) for s in sorted(sigs))
        return S.Finally(ret, tuple(raises), kills)

    def runner(self, handled, ext, sigs, state, ctx, d):
        clauses = []
        for op in sorted(handled):
            sig = self.tables.operations[op]
            x = self.fresh("a")
            body = self.kernel(sig.result, ext, sig.excs, sigs, state, ctx + ((x, sig.param),), d)
            clauses.append((op, S.Bind((x,), body)))
        return S.RunnerLit(tuple(clauses), state)

    def _user_run(self, ty, ops, excs, ctx, d):
        handled = self.subset(OPS, 0.6) or frozenset({self.rng.choice(OPS)})
        ext = frozenset(o for o in sorted(ops) if self.chance(0.5))
        sigs = self.subset(SIGS, 0.3)
        state = self.state_type()
        a = self.ground_type()
        inner = self.subset(EXCS, 0.4)
        r = self.runner(handled, ext, sigs, state, ctx, d)
        m = self.user(a, handled, inner, ctx, d)
        fin = self.finally_clauses(ty, ops, excs, ctx, a, state, inner, sigs, d)
        return S.Run(r, self.value(state, ctx), m, fin)

    def _user_kernel(self, ty, ops, excs, ctx, d):
        sigs = self.subset(SIGS, 0.4)
        state = self.state_type()
        a = self.ground_type()
        inner = self.subset(EXCS, 0.4)
        k = self.kernel(a, ops, inner, sigs, state, ctx, d)
        fin = self.finally_clauses(ty, ops, excs, ctx, a, state, inner, sigs, d)
        return S.KernelSwitch(k, self.value(state, ctx), fin)

    # -- kernel computations ------------------------------------------------

    def kernel(self, ty, ops, excs, sigs, state, ctx=(), depth: int | None = None):
        d = self.cfg.depth if depth is None else depth
        if d <= 0:
            return self._kernel_leaf(ty, excs, sigs, state, ctx)
        forms = ["return", "let", "try", "getenv", "getenv", "setenv", "setenv", "user", "match", "app"]
        if excs:
            forms.append("raise")
        if sigs:
            forms.append("kill")
        if ops:
            forms += ["op", "op"]
        form = self.rng.choice(forms)
        return getattr(self, "_kernel_" + form)(ty, ops, excs, sigs, state, ctx, d - 1)

    def _kernel_leaf(self, ty, excs, sigs, state, ctx):
        r = self.rng.random()
        if excs and r < 0.15:
            return S.KRaise(self.rng.choice(sorted(excs)), (ty, state))
        if sigs and r < 0.25:
            return S.Kill(self.rng.choice(sorted(sigs)), (ty, state))
        if r < 0.5:
            c = self.fresh("c")
            return S.Getenv(S.Bind((c,), S.KReturn(self.value(ty, ctx + ((c, state),)))))
        return S.KReturn(self.value(ty, ctx))

    def _kernel_return(self, ty, ops, excs, sigs, state, ctx, d):
        return S.KReturn(self.value(ty, ctx))

    def _kernel_raise(self, ty, ops, excs, sigs, state, ctx, d):
        return S.KRaise(self.rng.choice(sorted(excs)), (ty, state))

    def _kernel_kill(self, ty, ops, excs, sigs, state, ctx, d):
        return S.Kill(self.rng.choice(sorted(sigs)), (ty, state))

    def _kernel_op(self, ty, ops, excs, sigs, state, ctx, d):
        op = self.rng.choice(sorted(ops))
        arg, cont, hs = self.op_call(
            op,
            ctx,
            lambda y, b: self.kernel(ty, ops, excs, sigs, state, ctx + ((y, b),), d),
            lambda e: self.kernel(ty, ops, excs, sigs, state, ctx, d),
        )
        return S.KOp(op, arg, cont, hs)

    def _kernel_let(self, ty, ops, excs, sigs, state, ctx, d):
        a = self.ground_type()
        x = self.fresh("x")
        first = self.kernel(a, ops, excs, sigs, state, ctx, d)
        return S.KLet(first, S.Bind((x,), self.kernel(ty, ops, excs, sigs, state, ctx + ((x, a),), d)))

    def _kernel_try(self, ty, ops, excs, sigs, state, ctx, d):
        a = self.ground_type()
        inner = excs | self.subset(EXCS, 0.4)
        handled = [e for e in sorted(inner) if e not in excs or self.chance(0.5)]
        x = self.fresh("x")
        k = self.kernel(a, ops, inner, sigs, state, ctx, d)
        ret = S.Bind((x,), self.kernel(ty, ops, excs, sigs, state, ctx + ((x, a),), d))
        return S.KTry(k, ret, tuple((e, self.kernel(ty, ops, excs, sigs, state, ctx, d)) for e in handled))

    def _kernel_getenv(self, ty, ops, excs, sigs, state, ctx, d):
        c = self.fresh("c")
        return S.Getenv(S.Bind((c,), self.kernel(ty, ops, excs, sigs, state, ctx + ((c, state),), d)))

    def _kernel_setenv(self, ty, ops, excs, sigs, state, ctx, d):
        return S.Setenv(self.value(state, ctx), self.kernel(ty, ops, excs, sigs, state, ctx, d))

    def _kernel_user(self, ty, ops, excs, sigs, state, ctx, d):
        a = self.ground_type()
        inner = self.subset(EXCS, 0.4)
        handled = [e for e in sorted(inner) if e not in excs or self.chance(0.5)]
        x = self.fresh("x")
        m = self.user(a, ops, inner, ctx, d)
        ret = S.Bind((x,), self.kernel(ty, ops, excs, sigs, state, ctx + ((x, a),), d))
        return S.UserSwitch(m, ret, tuple((e, self.kernel(ty, ops, excs, sigs, state, ctx, d)) for e in handled))

    def _kernel_match(self, ty, ops, excs, sigs, state, ctx, d):
        a, b = self.ground_type(0), self.ground_type(0)
        x, y = self.fresh("x"), self.fresh("x")
        if self.chance(0.5):
            v = self.value(T.TProd(a, b), ctx)
            return S.KMatchPair(v, S.Bind((x, y), self.kernel(ty, ops, excs, sigs, state, ctx + ((x, a), (y, b)), d)))
        v = self.value(T.TSum(a, b), ctx)
        return S.KMatchSum(
            v,
            S.Bind((x,), self.kernel(ty, ops, excs, sigs, state, ctx + ((x, a),), d)),
            S.Bind((y,), self.kernel(ty, ops, excs, sigs, state, ctx + ((y, b),), d)),
        )

    def _kernel_app(self, ty, ops, excs, sigs, state, ctx, d):
        a = self.ground_type()
        x = self.fresh("x")
        body = self.kernel(ty, ops, excs, sigs, state, ctx + ((x, a),), d)
        return S.KApp(S.FunK(a, state, S.Bind((x,), body)), self.value(a, ctx))

    # -- whole programs -----------------------------------------------------

    def pure_program(self, depth: int | None = None):
        """A closed user computation whose operations are all handled inside it."""
        d = self.cfg.depth if depth is None else depth
        ty = self.ground_type()
        excs = self.subset(EXCS, 0.3)
        if d >= 1 and self.chance(0.8):
            return self._user_run(ty, frozenset(), excs, (), d - 1), ty
        return self.user(ty, frozenset(), excs, (), d), ty


def generate_pure_programs(count: int, seed: int = 0, depth: int = 4):
    """``count`` closed well-typed programs with no residual operations."""
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        g = Gen(rng, GenConfig(depth=depth))
        out.append(g.pure_program()[0])
    return out


# -- random trees and runners (semantic objects, not syntax) ------------------


def random_frozen_tree(rng: random.Random, depth: int, leaf, ops=OPS, tables: T.EffectTables = TABLES, n: int = 3):
    """A frozen tree of height at most ``depth``; ``leaf()`` draws a payload."""
    if depth <= 0 or rng.random() < 0.3:
        return ("leaf", leaf())
    op = rng.choice(sorted(ops))
    sig = tables.operations[op]
    arg = rng.choice(enumerate_ground(sig.param, n))
    kids = tuple((b, random_frozen_tree(rng, depth - 1, leaf, ops, tables, n)) for b in enumerate_ground(sig.result, n))
    ekids = tuple((e, random_frozen_tree(rng, depth - 1, leaf, ops, tables, n)) for e in sorted(sig.excs))
    return ("node", op, arg, kids, ekids)


def user_leaf(rng: random.Random, carrier, excs=EXCS, n: int = 3):
    values = enumerate_ground(carrier, n)

    def draw():
        if excs and rng.random() < 0.3:
            return ("exc", rng.choice(sorted(excs)))
        return ("val", rng.choice(values))

    return draw


def kernel_leaf(rng: random.Random, carrier, state, excs=EXCS, sigs=SIGS, n: int = 3):
    values, states = enumerate_ground(carrier, n), enumerate_ground(state, n)

    def draw():
        r = rng.random()
        if excs and r < 0.2:
            return ("exc", rng.choice(sorted(excs)), rng.choice(states))
        if sigs and r < 0.3:
            return ("sig", rng.choice(sorted(sigs)))
        return ("val", rng.choice(values), rng.choice(states))

    return draw


def random_sem_runner(rng: random.Random, state, ext=OPS, sigs=SIGS, depth: int = 2, n: int = 3):
    """A finite runner on ``OPS``: a kernel tree per (operation, argument, state)."""
    from .denote import SemRunner
    from .trees import thaw

    coops = {}
    for op in OPS:
        sig = TABLES.operations[op]
        table = {}
        for a in enumerate_ground(sig.param, n):
            for c in enumerate_ground(state, n):
                leaf = kernel_leaf(rng, sig.result, state, sorted(sig.excs), sorted(sigs), n)
                table[repr((a, c))] = thaw(random_frozen_tree(rng, depth, leaf, ext, TABLES, n))
        coops[op] = lambda a, table=table: (lambda c: table[repr((a, c))])
    return SemRunner(coops, {op: TABLES.operations[op].excs for op in OPS})


def random_kleisli_fn(rng: random.Random, depth: int, leaf, n: int = 3):
    """A payload -> tree function, drawn lazily and memoised so it is a function."""
    from .trees import thaw

    memo: dict = {}
    seed = rng.random()

    def f(payload):
        key = repr(payload)
        if key not in memo:
            local = random.Random(f"{seed}:{key}")
            memo[key] = random_frozen_tree(local, depth, leaf_for(local), n=n)
        return thaw(memo[key])

    def leaf_for(local):
        return leaf(local)

    return f
