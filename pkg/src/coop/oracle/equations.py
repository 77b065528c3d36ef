"""Equation schemas of the calculus, checked by comparing denotations.

Every schema is a function from a generator to an :class:`Instance`, a pair
of terms that the equational theory identifies. :func:`check_equation`
typechecks both sides, denotes them, and compares the frozen trees for every
assignment of the free variables and (for kernel terms) every initial state.
``MUTATIONS`` holds deliberately wrong schemas that must fail on some
instance, which shows the comparison is able to fail.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

from .. import syntax as S
from .. import types as T
from ..errors import TypeCheckError
from ..typecheck import Checker
from .denote import Denoter, SemFun, SemFunK
from .generate import EXCS, OPS, SIGS, TABLES, Gen, GenConfig, domains
from .trees import enumerate_ground, freeze

INT_BOUND = 3
DEPTH = 2
MAX_ENVS = 64


class IllTyped(Exception):
    pass


@dataclass
class Instance:
    sort: str  # "user" | "kernel" | "value"
    lhs: object
    rhs: object
    ty: object = None  # value type, for sort "value"
    state: object = None  # kernel state type
    ctx: tuple = ()  # free variables ((name, ground type), ...)
    tables: T.EffectTables = field(default=TABLES, repr=False)


# -- checking -------------------------------------------------------------------


def _typecheck(inst: Instance):
    checker = Checker(inst.tables)
    ctx = dict(inst.ctx)
    try:
        for side in (inst.lhs, inst.rhs):
            if inst.sort == "user":
                checker.infer_user(dict(ctx), side)
            elif inst.sort == "kernel":
                checker.infer_kernel(dict(ctx), side, inst.state)
            else:
                t = checker.infer_value(dict(ctx), side)
                if not T.subtype_value(t, inst.ty):
                    raise TypeCheckError(f"value has type {T.show_type(t)}")
    except TypeCheckError as err:
        raise IllTyped(str(err)) from err


def _envs(ctx, n):
    names = [x for x, _ in ctx]
    spaces = [enumerate_ground(t, n) for _, t in ctx]
    for combo in itertools.islice(itertools.product(*spaces), MAX_ENVS):
        yield dict(zip(names, combo))


def _sem_equal(a, b, ty, dom, n) -> bool:
    if isinstance(a, SemFun):
        return all(freeze(a.fn(v), dom) == freeze(b.fn(v), dom) for v in enumerate_ground(ty.arg, n))
    if isinstance(a, SemFunK):
        states = enumerate_ground(ty.result.state, n)
        return all(
            freeze(a.fn(v)(c), dom) == freeze(b.fn(v)(c), dom)
            for v in enumerate_ground(ty.arg, n)
            for c in states
        )
    return a == b


def check_equation(schema_id: str, inst: Instance, int_bound: int = INT_BOUND) -> bool:
    """True iff both sides of ``inst`` denote the same thing.

    ``int`` ranges over ``[0, int_bound)`` wherever a domain is enumerated.
    Raises :class:`IllTyped` if either side fails to typecheck.
    """
    _typecheck(inst)
    dom = domains(inst.tables, int_bound)
    d = Denoter(inst.tables)
    for env in _envs(inst.ctx, int_bound):
        if inst.sort == "user":
            if freeze(d.user(env, inst.lhs), dom) != freeze(d.user(env, inst.rhs), dom):
                return False
        elif inst.sort == "kernel":
            for c in enumerate_ground(inst.state, int_bound):
                if freeze(d.kernel_at(env, inst.lhs, c), dom) != freeze(d.kernel_at(env, inst.rhs, c), dom):
                    return False
        else:
            if not _sem_equal(d.value(env, inst.lhs), d.value(env, inst.rhs), inst.ty, dom, int_bound):
                return False
    return True


# -- helpers for building instances ---------------------------------------------


def _sub(body, mapping: dict):
    return S.substitute_many(body, mapping)


class _Ctx:
    """Random choices shared by several schemas."""

    def __init__(self, g: Gen):
        self.g = g
        self.X = g.ground_type()
        self.A = g.ground_type()
        self.ops = g.subset(OPS, 0.5)
        self.excs = g.subset(EXCS, 0.4)
        self.sigs = g.subset(SIGS, 0.4)
        self.C = g.state_type()
        self.d = DEPTH

    def user(self, ty=None, ctx=(), excs=None, ops=None):
        return self.g.user(
            self.X if ty is None else ty,
            self.ops if ops is None else ops,
            self.excs if excs is None else excs,
            ctx,
            self.d,
        )

    def kernel(self, ty=None, ctx=(), excs=None, ops=None, sigs=None):
        return self.g.kernel(
            self.X if ty is None else ty,
            self.ops if ops is None else ops,
            self.excs if excs is None else excs,
            self.sigs if sigs is None else sigs,
            self.C,
            ctx,
            self.d,
        )

    def handlers(self, inner_excs, make):
        handled = [e for e in sorted(inner_excs) if e not in self.excs or self.g.chance(0.5)]
        return tuple((e, make()) for e in handled)

    def user_handlers(self, a, inner_excs):
        x = self.g.fresh("x")
        ret = S.Bind((x,), self.user(ctx=((x, a),)))
        return ret, self.handlers(inner_excs, lambda: self.user())

    def kernel_handlers(self, a, inner_excs):
        x = self.g.fresh("x")
        ret = S.Bind((x,), self.kernel(ctx=((x, a),)))
        return ret, self.handlers(inner_excs, lambda: self.kernel())

    def op(self):
        return self.g.rng.choice(OPS)

    def finally_(self, carrier, state, inner_excs, sigs):
        return self.g.finally_clauses(self.X, self.ops, self.excs, (), carrier, state, inner_excs, sigs, self.d)

    def val(self, ty, ctx=()):
        return self.g.value(ty, ctx)


def _user(lhs, rhs, ctx=()):
    return Instance("user", lhs, rhs, ctx=ctx)


def _kernel(lhs, rhs, state, ctx=()):
    return Instance("kernel", lhs, rhs, state=state, ctx=ctx)


# -- user-mode computational equations ------------------------------------------


def u_beta(c: _Ctx):
    x = c.g.fresh("x")
    m = c.user(ctx=((x, c.A),))
    v = c.val(c.A)
    return _user(S.App(S.Fun(c.A, S.Bind((x,), m)), v), _sub(m, {x: v}))


def u_try_return(c: _Ctx):
    inner = c.excs | c.g.subset(EXCS, 0.4)
    ret, hs = c.user_handlers(c.A, inner)
    v = c.val(c.A)
    return _user(S.Try(S.Return(v), ret, hs), _sub(ret.body, {ret.vars[0]: v}))


def u_try_raise(c: _Ctx):
    e = c.g.rng.choice(EXCS)
    ret, hs = c.user_handlers(c.A, c.excs | {e})
    hs = tuple(h for h in hs if h[0] != e) + ((e, c.user()),)
    return _user(S.Try(S.Raise(e, c.A), ret, hs), dict(hs)[e])


def u_try_op(c: _Ctx):
    op = c.op()
    ops = c.ops | {op}
    c.ops = ops
    sig = TABLES.operations[op]
    inner = c.excs | c.g.subset(EXCS, 0.4)
    y = c.g.fresh("y")
    v = c.val(sig.param)
    m = c.user(c.A, ((y, sig.result),), inner)
    ns = tuple((e, c.user(c.A, (), inner)) for e in sorted(sig.excs))
    ret, hs = c.user_handlers(c.A, inner)
    lhs = S.Try(S.Op(op, v, S.Bind((y,), m), ns), ret, hs)
    rhs = S.Op(op, v, S.Bind((y,), S.Try(m, ret, hs)), tuple((e, S.Try(n, ret, hs)) for e, n in ns))
    return _user(lhs, rhs)


def u_match_pair(c: _Ctx):
    b = c.g.ground_type()
    x, y = c.g.fresh("x"), c.g.fresh("x")
    m = c.user(ctx=((x, c.A), (y, b)))
    v, w = c.val(c.A), c.val(b)
    return _user(S.MatchPair(S.Pair(v, w), S.Bind((x, y), m)), _sub(m, {x: v, y: w}))


def u_match_empty(c: _Ctx):
    # holds vacuously: no environment supplies a value of the empty type
    z = c.g.fresh("z")
    ctx = ((z, T.EMPTY),)
    return _user(S.MatchEmpty(S.Var(z), c.X), c.user(ctx=ctx), ctx=ctx)


def _sum_parts(c: _Ctx, kernel: bool):
    b = c.g.ground_type()
    x, y = c.g.fresh("x"), c.g.fresh("x")
    gen = c.kernel if kernel else c.user
    m = gen(ctx=((x, c.A),))
    n = gen(ctx=((y, b),))
    return b, x, y, m, n


def u_match_inl(c: _Ctx):
    b, x, y, m, n = _sum_parts(c, False)
    v = c.val(c.A)
    lhs = S.MatchSum(S.Inl(v, T.TSum(c.A, b)), S.Bind((x,), m), S.Bind((y,), n))
    return _user(lhs, _sub(m, {x: v}))


def u_match_inr(c: _Ctx):
    b, x, y, m, n = _sum_parts(c, False)
    w = c.val(b)
    lhs = S.MatchSum(S.Inr(w, T.TSum(c.A, b)), S.Bind((x,), m), S.Bind((y,), n))
    return _user(lhs, _sub(n, {y: w}))


def _runner_setup(c: _Ctx):
    handled = c.g.subset(OPS, 0.6) or frozenset({c.op()})
    ext = frozenset(o for o in sorted(c.ops) if c.g.chance(0.5))
    r = c.g.runner(handled, ext, c.sigs, c.C, (), c.d)
    inner = c.g.subset(EXCS, 0.4)
    return handled, r, inner


def run_return(c: _Ctx):
    _h, r, inner = _runner_setup(c)
    fin = c.finally_(c.A, c.C, inner, c.sigs)
    v, w = c.val(c.A), c.val(c.C)
    x, cv = fin.ret.vars
    return _user(S.Run(r, w, S.Return(v), fin), _sub(fin.ret.body, {x: v, cv: w}))


def run_raise(c: _Ctx):
    _h, r, inner = _runner_setup(c)
    e = c.g.rng.choice(EXCS)
    inner = inner | {e}
    fin = c.finally_(c.A, c.C, inner, c.sigs)
    w = c.val(c.C)
    b = fin.raise_clause(e)
    return _user(S.Run(r, w, S.Raise(e, c.A), fin), _sub(b.body, {b.vars[0]: w}))


def _run_op_parts(c: _Ctx):
    handled, r, inner = _runner_setup(c)
    op = c.g.rng.choice(sorted(handled))
    sig = TABLES.operations[op]
    y = c.g.fresh("y")
    v = c.val(sig.param)
    m = c.user(c.A, ((y, sig.result),), inner, handled)
    ns = tuple((e, c.user(c.A, (), inner, handled)) for e in sorted(sig.excs))
    fin = c.finally_(c.A, c.C, inner, c.sigs)
    w = c.val(c.C)
    coop = dict(r.clauses)[op]
    k_op = _sub(coop.body, {coop.vars[0]: v})
    return r, op, v, y, m, ns, fin, w, k_op


def _run_op_rhs(c: _Ctx, r, y, m, ns, fin, w, k_op, stale: bool = False):
    c1 = c.g.fresh("c")
    resume_state = w if stale else S.Var(c1)
    ret = S.Bind((y, c1), S.Run(r, resume_state, m, fin))
    raises = []
    for e, n in ns:
        c2 = c.g.fresh("c")
        raises.append((e, S.Bind((c2,), S.Run(r, w if stale else S.Var(c2), n, fin))))
    fin2 = S.Finally(ret, tuple(raises), fin.kills)
    return S.KernelSwitch(k_op, w, fin2)


def run_op(c: _Ctx):
    r, op, v, y, m, ns, fin, w, k_op = _run_op_parts(c)
    lhs = S.Run(r, w, S.Op(op, v, S.Bind((y,), m), ns), fin)
    return _user(lhs, _run_op_rhs(c, r, y, m, ns, fin, w, k_op))


def _kswitch_setup(c: _Ctx):
    inner = c.g.subset(EXCS, 0.4)
    fin = c.finally_(c.A, c.C, inner, c.sigs)
    return inner, fin, c.val(c.C)


def kernel_return(c: _Ctx):
    _inner, fin, w = _kswitch_setup(c)
    v = c.val(c.A)
    x, cv = fin.ret.vars
    return _user(S.KernelSwitch(S.KReturn(v), w, fin), _sub(fin.ret.body, {x: v, cv: w}))


def kernel_raise(c: _Ctx):
    e = c.g.rng.choice(EXCS)
    inner = c.g.subset(EXCS, 0.4) | {e}
    fin = c.finally_(c.A, c.C, inner, c.sigs)
    w = c.val(c.C)
    b = fin.raise_clause(e)
    return _user(S.KernelSwitch(S.KRaise(e, (c.A, c.C)), w, fin), _sub(b.body, {b.vars[0]: w}))


def kernel_kill(c: _Ctx):
    s = c.g.rng.choice(SIGS)
    sigs = c.sigs | {s}
    inner = c.g.subset(EXCS, 0.4)
    fin = c.finally_(c.A, c.C, inner, sigs)
    w = c.val(c.C)
    return _user(S.KernelSwitch(S.Kill(s, (c.A, c.C)), w, fin), fin.kill_clause(s))


def kernel_getenv(c: _Ctx):
    inner, fin, w = _kswitch_setup(c)
    cv = c.g.fresh("c")
    k = c.kernel(c.A, ((cv, c.C),), inner)
    return _user(S.KernelSwitch(S.Getenv(S.Bind((cv,), k)), w, fin), S.KernelSwitch(_sub(k, {cv: w}), w, fin))


def kernel_setenv(c: _Ctx):
    inner, fin, w = _kswitch_setup(c)
    k = c.kernel(c.A, (), inner)
    v = c.val(c.C)
    return _user(S.KernelSwitch(S.Setenv(v, k), w, fin), S.KernelSwitch(k, v, fin))


def kernel_op(c: _Ctx):
    op = c.op()
    c.ops = c.ops | {op}
    sig = TABLES.operations[op]
    inner, fin, w = _kswitch_setup(c)
    y = c.g.fresh("y")
    v = c.val(sig.param)
    k = c.kernel(c.A, ((y, sig.result),), inner)
    ls = tuple((e, c.kernel(c.A, (), inner)) for e in sorted(sig.excs))
    lhs = S.KernelSwitch(S.KOp(op, v, S.Bind((y,), k), ls), w, fin)
    rhs = S.Op(op, v, S.Bind((y,), S.KernelSwitch(k, w, fin)), tuple((e, S.KernelSwitch(l, w, fin)) for e, l in ls))
    return _user(lhs, rhs)


# -- kernel-mode computational equations ----------------------------------------


def k_beta(c: _Ctx):
    x = c.g.fresh("x")
    k = c.kernel(ctx=((x, c.A),))
    v = c.val(c.A)
    return _kernel(S.KApp(S.FunK(c.A, c.C, S.Bind((x,), k)), v), _sub(k, {x: v}), c.C)


def k_try_return(c: _Ctx):
    ret, hs = c.kernel_handlers(c.A, c.excs | c.g.subset(EXCS, 0.4))
    v = c.val(c.A)
    return _kernel(S.KTry(S.KReturn(v), ret, hs), _sub(ret.body, {ret.vars[0]: v}), c.C)


def k_try_raise(c: _Ctx):
    e = c.g.rng.choice(EXCS)
    ret, hs = c.kernel_handlers(c.A, c.excs | {e})
    hs = tuple(h for h in hs if h[0] != e) + ((e, c.kernel()),)
    return _kernel(S.KTry(S.KRaise(e, (c.A, c.C)), ret, hs), dict(hs)[e], c.C)


def k_try_kill(c: _Ctx):
    s = c.g.rng.choice(SIGS)
    c.sigs = c.sigs | {s}
    ret, hs = c.kernel_handlers(c.A, c.excs | c.g.subset(EXCS, 0.4))
    return _kernel(S.KTry(S.Kill(s, (c.A, c.C)), ret, hs), S.Kill(s, (c.X, c.C)), c.C)


def _k_try_op_parts(c: _Ctx):
    op = c.op()
    c.ops = c.ops | {op}
    sig = TABLES.operations[op]
    inner = c.excs | c.g.subset(EXCS, 0.4)
    y = c.g.fresh("y")
    v = c.val(sig.param)
    k = c.kernel(c.A, ((y, sig.result),), inner)
    ls = tuple((e, c.kernel(c.A, (), inner)) for e in sorted(sig.excs))
    return op, inner, y, v, k, ls


def k_try_op(c: _Ctx):
    op, inner, y, v, k, ls = _k_try_op_parts(c)
    ret, hs = c.kernel_handlers(c.A, inner)
    lhs = S.KTry(S.KOp(op, v, S.Bind((y,), k), ls), ret, hs)
    rhs = S.KOp(op, v, S.Bind((y,), S.KTry(k, ret, hs)), tuple((e, S.KTry(l, ret, hs)) for e, l in ls))
    return _kernel(lhs, rhs, c.C)


def k_try_getenv(c: _Ctx):
    inner = c.excs | c.g.subset(EXCS, 0.4)
    cv = c.g.fresh("c")
    k = c.kernel(c.A, ((cv, c.C),), inner)
    ret, hs = c.kernel_handlers(c.A, inner)
    lhs = S.KTry(S.Getenv(S.Bind((cv,), k)), ret, hs)
    return _kernel(lhs, S.Getenv(S.Bind((cv,), S.KTry(k, ret, hs))), c.C)


def k_try_setenv(c: _Ctx):
    inner = c.excs | c.g.subset(EXCS, 0.4)
    k = c.kernel(c.A, (), inner)
    v = c.val(c.C)
    ret, hs = c.kernel_handlers(c.A, inner)
    return _kernel(S.KTry(S.Setenv(v, k), ret, hs), S.Setenv(v, S.KTry(k, ret, hs)), c.C)


def k_match_pair(c: _Ctx):
    b = c.g.ground_type()
    x, y = c.g.fresh("x"), c.g.fresh("x")
    k = c.kernel(ctx=((x, c.A), (y, b)))
    v, w = c.val(c.A), c.val(b)
    return _kernel(S.KMatchPair(S.Pair(v, w), S.Bind((x, y), k)), _sub(k, {x: v, y: w}), c.C)


def k_match_empty(c: _Ctx):
    # holds vacuously, as in the user-mode schema
    z = c.g.fresh("z")
    ctx = ((z, T.EMPTY),)
    return _kernel(S.KMatchEmpty(S.Var(z), (c.X, c.C)), c.kernel(ctx=ctx), c.C, ctx)


def k_match_inl(c: _Ctx):
    b, x, y, k, l = _sum_parts(c, True)
    v = c.val(c.A)
    lhs = S.KMatchSum(S.Inl(v, T.TSum(c.A, b)), S.Bind((x,), k), S.Bind((y,), l))
    return _kernel(lhs, _sub(k, {x: v}), c.C)


def k_match_inr(c: _Ctx):
    b, x, y, k, l = _sum_parts(c, True)
    w = c.val(b)
    lhs = S.KMatchSum(S.Inr(w, T.TSum(c.A, b)), S.Bind((x,), k), S.Bind((y,), l))
    return _kernel(lhs, _sub(l, {y: w}), c.C)


def user_return(c: _Ctx):
    ret, hs = c.kernel_handlers(c.A, c.g.subset(EXCS, 0.4))
    v = c.val(c.A)
    return _kernel(S.UserSwitch(S.Return(v), ret, hs), _sub(ret.body, {ret.vars[0]: v}), c.C)


def user_raise(c: _Ctx):
    e = c.g.rng.choice(EXCS)
    ret, hs = c.kernel_handlers(c.A, c.g.subset(EXCS, 0.4) | {e})
    hs = tuple(h for h in hs if h[0] != e) + ((e, c.kernel()),)
    return _kernel(S.UserSwitch(S.Raise(e, c.A), ret, hs), dict(hs)[e], c.C)


def user_op(c: _Ctx):
    op = c.op()
    c.ops = c.ops | {op}
    sig = TABLES.operations[op]
    inner = c.g.subset(EXCS, 0.4)
    y = c.g.fresh("y")
    v = c.val(sig.param)
    m = c.user(c.A, ((y, sig.result),), inner)
    ns = tuple((e, c.user(c.A, (), inner)) for e in sorted(sig.excs))
    ret, hs = c.kernel_handlers(c.A, inner)
    lhs = S.UserSwitch(S.Op(op, v, S.Bind((y,), m), ns), ret, hs)
    rhs = S.KOp(op, v, S.Bind((y,), S.UserSwitch(m, ret, hs)), tuple((e, S.UserSwitch(n, ret, hs)) for e, n in ns))
    return _kernel(lhs, rhs, c.C)


# -- other equations: eta laws and the kernel theory ----------------------------


def unit_eta(c: _Ctx):
    u = c.g.fresh("u")
    ctx = ((u, T.UNIT),)
    v = S.Var(u) if c.g.chance(0.7) else c.val(T.UNIT, ctx)
    return Instance("value", v, S.UnitVal(), ty=T.UNIT, ctx=ctx)


def fun_eta(c: _Ctx):
    z, x = c.g.fresh("z"), c.g.fresh("x")
    v = S.Fun(c.A, S.Bind((z,), c.user(ctx=((z, c.A),))))
    ty = T.TUserFun(c.A, T.UserType(c.X, frozenset(c.ops), frozenset(c.excs)))
    return Instance("value", S.Fun(c.A, S.Bind((x,), S.App(v, S.Var(x)))), v, ty=ty)


def funk_eta(c: _Ctx):
    z, x = c.g.fresh("z"), c.g.fresh("x")
    v = S.FunK(c.A, c.C, S.Bind((z,), c.kernel(ctx=((z, c.A),))))
    ty = T.TKernelFun(c.A, T.KernelType(c.X, frozenset(c.ops), frozenset(c.excs), frozenset(c.sigs), c.C))
    return Instance("value", S.FunK(c.A, c.C, S.Bind((x,), S.KApp(v, S.Var(x)))), v, ty=ty)


def try_eta(c: _Ctx):
    m = c.user()
    x = c.g.fresh("x")
    hs = tuple((e, S.Raise(e, c.X)) for e in sorted(c.excs))
    return _user(S.Try(m, S.Bind((x,), S.Return(S.Var(x))), hs), m)


def ktry_eta(c: _Ctx):
    k = c.kernel()
    x = c.g.fresh("x")
    hs = tuple((e, S.KRaise(e, (c.X, c.C))) for e in sorted(c.excs))
    return _kernel(S.KTry(k, S.Bind((x,), S.KReturn(S.Var(x))), hs), k, c.C)


def getenv_setenv(c: _Ctx):
    k = c.kernel()
    cv = c.g.fresh("c")
    return _kernel(S.Getenv(S.Bind((cv,), S.Setenv(S.Var(cv), k))), k, c.C)


def setenv_getenv(c: _Ctx):
    cv = c.g.fresh("c")
    k = c.kernel(ctx=((cv, c.C),))
    v = c.val(c.C)
    return _kernel(S.Setenv(v, S.Getenv(S.Bind((cv,), k))), S.Setenv(v, _sub(k, {cv: v})), c.C)


def setenv_setenv(c: _Ctx):
    k = c.kernel()
    v, w = c.val(c.C), c.val(c.C)
    return _kernel(S.Setenv(v, S.Setenv(w, k)), S.Setenv(w, k), c.C)


def getenv_kill(c: _Ctx):
    s = c.g.rng.choice(SIGS)
    cv = c.g.fresh("c")
    kill = S.Kill(s, (c.X, c.C))
    return _kernel(S.Getenv(S.Bind((cv,), kill)), kill, c.C)


def setenv_kill(c: _Ctx):
    s = c.g.rng.choice(SIGS)
    kill = S.Kill(s, (c.X, c.C))
    return _kernel(S.Setenv(c.val(c.C), kill), kill, c.C)


def _op_parts(c: _Ctx, extra_ctx=()):
    op = c.op()
    c.ops = c.ops | {op}
    sig = TABLES.operations[op]
    y = c.g.fresh("y")
    v = c.val(sig.param)
    k = c.kernel(ctx=extra_ctx + ((y, sig.result),))
    ls = tuple((e, c.kernel(ctx=extra_ctx)) for e in sorted(sig.excs))
    return op, v, y, k, ls


def getenv_op(c: _Ctx):
    cv = c.g.fresh("c")
    op, v, y, k, ls = _op_parts(c, ((cv, c.C),))
    lhs = S.Getenv(S.Bind((cv,), S.KOp(op, v, S.Bind((y,), k), ls)))
    rhs = S.KOp(
        op, v, S.Bind((y,), S.Getenv(S.Bind((cv,), k))), tuple((e, S.Getenv(S.Bind((cv,), l))) for e, l in ls)
    )
    return _kernel(lhs, rhs, c.C)


def setenv_op(c: _Ctx):
    op, v, y, k, ls = _op_parts(c)
    w = c.val(c.C)
    lhs = S.Setenv(w, S.KOp(op, v, S.Bind((y,), k), ls))
    rhs = S.KOp(op, v, S.Bind((y,), S.Setenv(w, k)), tuple((e, S.Setenv(w, l)) for e, l in ls))
    return _kernel(lhs, rhs, c.C)


SCHEMAS = {
    # user mode
    "beta": u_beta,
    "try-return": u_try_return,
    "try-raise": u_try_raise,
    "try-op": u_try_op,
    "match-pair": u_match_pair,
    "match-empty": u_match_empty,
    "match-inl": u_match_inl,
    "match-inr": u_match_inr,
    "run-return": run_return,
    "run-raise": run_raise,
    "run-op": run_op,
    "kernel-return": kernel_return,
    "kernel-raise": kernel_raise,
    "kernel-kill": kernel_kill,
    "kernel-getenv": kernel_getenv,
    "kernel-setenv": kernel_setenv,
    "kernel-op": kernel_op,
    # kernel mode
    "k-beta": k_beta,
    "k-try-return": k_try_return,
    "k-try-raise": k_try_raise,
    "k-try-kill": k_try_kill,
    "k-try-op": k_try_op,
    "k-try-getenv": k_try_getenv,
    "k-try-setenv": k_try_setenv,
    "k-match-pair": k_match_pair,
    "k-match-empty": k_match_empty,
    "k-match-inl": k_match_inl,
    "k-match-inr": k_match_inr,
    "user-return": user_return,
    "user-raise": user_raise,
    "user-op": user_op,
    # eta laws and kernel theory
    "unit-eta": unit_eta,
    "fun-eta": fun_eta,
    "funk-eta": funk_eta,
    "try-eta": try_eta,
    "k-try-eta": ktry_eta,
    "getenv-setenv": getenv_setenv,
    "setenv-getenv": setenv_getenv,
    "setenv-setenv": setenv_setenv,
    "getenv-kill": getenv_kill,
    "setenv-kill": setenv_kill,
    "getenv-op": getenv_op,
    "setenv-op": setenv_op,
}


# -- mutations: wrong schemas that must fail --------------------------------------


def _observe_state(c: _Ctx):
    """A kernel computation returning the current state, after random work."""
    cv = c.g.fresh("c")
    c.X = c.C
    return S.Getenv(S.Bind((cv,), S.KReturn(S.Var(cv))))


def _distinct(c: _Ctx, ty, avoid):
    for v in enumerate_ground(ty, INT_BOUND):
        lit = _lit(v)
        if lit is not None and v != avoid:
            return lit
    return None


def _lit(v):
    if v == ():
        return S.UnitVal()
    if isinstance(v, (bool, int)):
        return S.Lit(v)
    return None


def _pick_nonunit_state(c: _Ctx):
    c.C = c.g.rng.choice((T.BOOL, T.INT))


def mut_setenv_setenv(c: _Ctx):
    _pick_nonunit_state(c)
    k = _observe_state(c)
    v, w = c.val(c.C), c.val(c.C)
    return _kernel(S.Setenv(v, S.Setenv(w, k)), S.Setenv(v, k), c.C)


def mut_setenv_getenv_stale(c: _Ctx):
    _pick_nonunit_state(c)
    cv = c.g.fresh("c")
    c.X = c.C
    k = S.KReturn(S.Var(cv))
    v, w = c.val(c.C), c.val(c.C)
    return _kernel(S.Setenv(v, S.Getenv(S.Bind((cv,), k))), S.Setenv(v, _sub(k, {cv: w})), c.C)


def mut_getenv_setenv_const(c: _Ctx):
    _pick_nonunit_state(c)
    k = _observe_state(c)
    cv = c.g.fresh("c")
    return _kernel(S.Getenv(S.Bind((cv,), S.Setenv(S.Var(cv), k))), S.Setenv(c.val(c.C), k), c.C)


def mut_try_raise_as_return(c: _Ctx):
    e = c.g.rng.choice(EXCS)
    ret, hs = c.user_handlers(c.A, c.excs | {e})
    hs = tuple(h for h in hs if h[0] != e) + ((e, c.user()),)
    return _user(S.Try(S.Raise(e, c.A), ret, hs), _sub(ret.body, {ret.vars[0]: c.val(c.A)}))


def mut_run_return_wrong_state(c: _Ctx):
    _pick_nonunit_state(c)
    _h, r, inner = _runner_setup(c)
    c.X = T.TProd(c.A, c.C)
    fin = c.finally_(c.A, c.C, inner, c.sigs)
    x, cv = fin.ret.vars
    fin = S.Finally(S.Bind((x, cv), S.Return(S.Pair(S.Var(x), S.Var(cv)))), fin.raises, fin.kills)
    v, w = c.val(c.A), c.val(c.C)
    w2 = c.val(c.C)
    return _user(S.Run(r, w, S.Return(v), fin), _sub(fin.ret.body, {x: v, cv: w2}))


def mut_kill_to_raise_clause(c: _Ctx):
    s = c.g.rng.choice(SIGS)
    e = c.g.rng.choice(EXCS)
    inner = c.g.subset(EXCS, 0.4) | {e}
    fin = c.finally_(c.A, c.C, inner, c.sigs | {s})
    w = c.val(c.C)
    b = fin.raise_clause(e)
    return _user(S.KernelSwitch(S.Kill(s, (c.A, c.C)), w, fin), _sub(b.body, {b.vars[0]: w}))


def mut_match_inl_as_inr(c: _Ctx):
    x, y = c.g.fresh("x"), c.g.fresh("x")
    c.X = c.A
    m = S.Return(S.Inl(S.Var(x), T.TSum(c.A, c.A)))
    n = S.Return(S.Inr(S.Var(y), T.TSum(c.A, c.A)))
    c.X = T.TSum(c.A, c.A)
    v = c.val(c.A)
    lhs = S.MatchSum(S.Inl(v, T.TSum(c.A, c.A)), S.Bind((x,), m), S.Bind((y,), n))
    return _user(lhs, _sub(n, {y: v}))


def mut_try_kill_caught(c: _Ctx):
    s = c.g.rng.choice(SIGS)
    c.sigs = c.sigs | {s}
    ret, hs = c.kernel_handlers(c.A, c.excs | c.g.subset(EXCS, 0.4))
    return _kernel(S.KTry(S.Kill(s, (c.A, c.C)), ret, hs), _sub(ret.body, {ret.vars[0]: c.val(c.A)}), c.C)


def mut_user_raise_as_return(c: _Ctx):
    e = c.g.rng.choice(EXCS)
    ret, hs = c.kernel_handlers(c.A, c.g.subset(EXCS, 0.4) | {e})
    hs = tuple(h for h in hs if h[0] != e) + ((e, c.kernel()),)
    return _kernel(S.UserSwitch(S.Raise(e, c.A), ret, hs), _sub(ret.body, {ret.vars[0]: c.val(c.A)}), c.C)


def mut_kernel_setenv_ignored(c: _Ctx):
    _pick_nonunit_state(c)
    inner = frozenset()
    c.X = c.C
    fin = c.finally_(c.C, c.C, inner, frozenset())
    x, cv = fin.ret.vars
    fin = S.Finally(S.Bind((x, cv), S.Return(S.Var(x))), (), ())
    k = _observe_state(c)
    v, w = c.val(c.C), c.val(c.C)
    return _user(S.KernelSwitch(S.Setenv(v, k), w, fin), S.KernelSwitch(k, w, fin))


def mut_run_op_stale_state(c: _Ctx):
    _pick_nonunit_state(c)
    r, op, v, y, m, ns, fin, w, k_op = _run_op_parts(c)
    # make the co-operation change the state and the finaliser expose it
    cv = c.g.fresh("c")
    sig = TABLES.operations[op]
    new = _distinct(c, c.C, None)
    coop = S.Setenv(new, S.Getenv(S.Bind((cv,), S.KReturn(c.val(sig.result)))))
    x = dict(r.clauses)[op].vars[0]
    r = S.RunnerLit(tuple((o, S.Bind((x,), coop) if o == op else b) for o, b in r.clauses), r.state)
    c.X = c.C
    xr, cr = fin.ret.vars
    fin = S.Finally(
        S.Bind((xr, cr), S.Return(S.Var(cr))),
        tuple((e, S.Bind(b.vars, S.Return(S.Var(b.vars[0])))) for e, b in fin.raises),
        tuple((s, S.Return(c.val(c.C))) for s, _ in fin.kills),
    )
    k_op = _sub(coop, {x: v})
    lhs = S.Run(r, w, S.Op(op, v, S.Bind((y,), m), ns), fin)
    return _user(lhs, _run_op_rhs(c, r, y, m, ns, fin, w, k_op, stale=True))


def mut_beta_wrong_arg(c: _Ctx):
    x = c.g.fresh("x")
    c.X = c.A
    m = S.Return(S.Var(x))
    v, v2 = c.val(c.A), c.val(c.A)
    return _user(S.App(S.Fun(c.A, S.Bind((x,), m)), v), _sub(m, {x: v2}))


def mut_try_op_unwrapped(c: _Ctx):
    op = c.op()
    c.ops = c.ops | {op}
    sig = TABLES.operations[op]
    y = c.g.fresh("y")
    v = c.val(sig.param)
    c.A = c.X
    m = c.user(c.A, ((y, sig.result),), c.excs)
    ns = tuple((e, c.user(c.A, (), c.excs)) for e in sorted(sig.excs))
    x = c.g.fresh("x")
    ret = S.Bind((x,), S.Return(c.val(c.X)))
    lhs = S.Try(S.Op(op, v, S.Bind((y,), m), ns), ret, ())
    return _user(lhs, S.Op(op, v, S.Bind((y,), m), ns))


MUTATIONS = {
    "mut-setenv-setenv-keeps-first": mut_setenv_setenv,
    "mut-setenv-getenv-stale": mut_setenv_getenv_stale,
    "mut-getenv-setenv-constant": mut_getenv_setenv_const,
    "mut-try-raise-as-return": mut_try_raise_as_return,
    "mut-run-return-wrong-state": mut_run_return_wrong_state,
    "mut-kill-to-raise-clause": mut_kill_to_raise_clause,
    "mut-match-inl-as-inr": mut_match_inl_as_inr,
    "mut-try-kill-caught": mut_try_kill_caught,
    "mut-user-raise-as-return": mut_user_raise_as_return,
    "mut-kernel-setenv-ignored": mut_kernel_setenv_ignored,
    "mut-run-op-stale-state": mut_run_op_stale_state,
    "mut-beta-wrong-arg": mut_beta_wrong_arg,
    "mut-try-op-unwrapped": mut_try_op_unwrapped,
}


# -- driving ----------------------------------------------------------------------


@dataclass
class SchemaReport:
    schema: str
    cases: int = 0
    failures: int = 0
    rejected: int = 0
    first_failure: Instance | None = None

    @property
    def passed(self) -> bool:
        return self.failures == 0 and self.cases > 0


def make_instance(
    schema_id: str, seed: int, index: int, attempt: int = 0, depth: int = DEPTH, int_bound: int = INT_BOUND
) -> Instance:
    """The ``index``-th instance of a schema; fully determined by the arguments."""
    fn = SCHEMAS.get(schema_id) or MUTATIONS[schema_id]
    rng = random.Random(f"{seed}:{schema_id}:{index}:{attempt}")
    c = _Ctx(Gen(rng, GenConfig(depth=depth, int_bound=int_bound)))
    c.d = depth
    return fn(c)


def run_schema(
    schema_id: str,
    cases: int = 100,
    seed: int = 0,
    depth: int = DEPTH,
    int_bound: int = INT_BOUND,
    max_attempts: int = 20,
) -> SchemaReport:
    rep = SchemaReport(schema_id)
    for i in range(cases):
        for attempt in range(max_attempts):
            inst = make_instance(schema_id, seed, i, attempt, depth, int_bound)
            try:
                ok = check_equation(schema_id, inst, int_bound)
            except IllTyped:
                rep.rejected += 1
                continue
            rep.cases += 1
            if not ok:
                rep.failures += 1
                if rep.first_failure is None:
                    rep.first_failure = inst
            break
    return rep


def run_suite(schemas=None, cases: int = 100, seed: int = 0, depth: int = DEPTH, int_bound: int = INT_BOUND):
    ids = sorted(SCHEMAS) if schemas is None else sorted(schemas)
    return [run_schema(s, cases, seed, depth, int_bound) for s in ids]
