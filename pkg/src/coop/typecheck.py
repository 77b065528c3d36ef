"""Bidirectional type-and-effect checking.

Values synthesise their least type; computations synthesise their least
effect row. Where an annotation supplies an expected type (ascriptions,
function and runner annotations) it is pushed down into the term so the
diagnostic names the rule at the leaf that breaks it.

Unannotated ``raise``/``kill``/injections get the internal bottom type,
which joins with anything; carriers of branches are joined structurally.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import syntax as S
from . import types as T
from .errors import TypeCheckError
from .types import (
    BOT,
    KernelType,
    NoJoin,
    TBot,
    TKernelFun,
    TProd,
    TRunner,
    TSum,
    TUserFun,
    UserType,
    show_type,
)

_EMPTY = frozenset()

_USER_RULES = {
    S.Return: "TyUser-Return",
    S.App: "TyUser-Apply",
    S.Try: "TyUser-Try",
    S.MatchPair: "TyUser-MatchPair",
    S.MatchEmpty: "TyUser-MatchEmpty",
    S.MatchSum: "TyUser-MatchSum",
    S.Op: "TyUser-Op",
    S.Raise: "TyUser-Raise",
    S.Run: "TyUser-Run",
    S.KernelSwitch: "TyUser-Kernel",
    S.Let: "TyUser-Try",
}

_KERNEL_RULES = {
    S.KReturn: "TyKernel-Return",
    S.KApp: "TyKernel-Apply",
    S.KTry: "TyKernel-Try",
    S.KMatchPair: "TyKernel-MatchPair",
    S.KMatchEmpty: "TyKernel-MatchEmpty",
    S.KMatchSum: "TyKernel-MatchSum",
    S.KOp: "TyKernel-Op",
    S.KRaise: "TyKernel-Raise",
    S.Kill: "TyKernel-Kill",
    S.Getenv: "TyKernel-Getenv",
    S.Setenv: "TyKernel-Setenv",
    S.UserSwitch: "TyKernel-User",
    S.KLet: "TyKernel-Try",
}


def _names(s) -> str:
    return "{" + ", ".join(sorted(s)) + "}"


class Checker:
    def __init__(self, tables: T.EffectTables):
        self.tables = tables
        # exception rows of let-bound computations, keyed by node id; used to
        # expand lets into explicit try-with after checking
        self.let_excs: dict[int, frozenset] = {}
        self.try_excs: dict[int, frozenset] = {}

    def fail(self, node, rule: str, msg: str):
        raise TypeCheckError(msg, getattr(node, "pos", None), rule)

    # -- joins --------------------------------------------------------------

    def join_user(self, node, rule, types: list) -> UserType:
        out = UserType(BOT)
        for t in types:
            try:
                out = T.join_user(out, t)
            except NoJoin:
                self.fail(node, rule, f"branches have incompatible types {show_type(out.carrier)} and {show_type(t.carrier)}")
        return out

    def join_kernel(self, node, rule, types: list, state) -> KernelType:
        out = KernelType(BOT, _EMPTY, _EMPTY, _EMPTY, state)
        for t in types:
            try:
                out = T.join_kernel(out, t)
            except NoJoin:
                self.fail(node, rule, f"branches have incompatible types {show_type(out.carrier)} and {show_type(t.carrier)}")
        return out

    # -- values -------------------------------------------------------------

    def infer_value(self, ctx: dict, v):
        if isinstance(v, S.Var):
            if v.name not in ctx:
                self.fail(v, "TyValue-Var", f"unbound variable {v.name}")
            return ctx[v.name]
        if isinstance(v, S.Lit):
            if isinstance(v.value, bool):
                return T.BOOL
            if isinstance(v.value, int):
                return T.INT
            if isinstance(v.value, str):
                return T.STR
            self.fail(v, "TyValue-Const", f"unsupported literal {v.value!r}")
        if isinstance(v, S.UnitVal):
            return T.UNIT
        if isinstance(v, S.Const):
            sig = self.tables.constants.get(v.name)
            if sig is None:
                self.fail(v, "TyValue-Const", f"unknown constant {v.name}")
            if len(sig.args) != len(v.args):
                self.fail(v, "TyValue-Const", f"{v.name} expects {len(sig.args)} argument(s), got {len(v.args)}")
            for arg, ty in zip(v.args, sig.args):
                self.check_value(ctx, arg, ty, "TyValue-Const")
            return sig.result
        if isinstance(v, S.Pair):
            return TProd(self.infer_value(ctx, v.left), self.infer_value(ctx, v.right))
        if isinstance(v, (S.Inl, S.Inr)):
            left = isinstance(v, S.Inl)
            rule = "TyValue-Inl" if left else "TyValue-Inr"
            if v.annot is not None:
                if not isinstance(v.annot, TSum):
                    self.fail(v, rule, f"injection annotated with non-sum type {show_type(v.annot)}")
                self.check_value(ctx, v.value, v.annot.left if left else v.annot.right, rule)
                return v.annot
            t = self.infer_value(ctx, v.value)
            return TSum(t, BOT) if left else TSum(BOT, t)
        if isinstance(v, S.Fun):
            (x,) = v.body.vars
            res = self.infer_user({**ctx, x: v.annot}, v.body.body)
            return TUserFun(v.annot, res)
        if isinstance(v, S.FunK):
            if v.state is None:
                self.fail(v, "TyValue-KernelFun", "kernel function needs a state annotation '@ C'")
            (x,) = v.body.vars
            res = self.infer_kernel({**ctx, x: v.annot}, v.body.body, v.state)
            return TKernelFun(v.annot, res)
        if isinstance(v, S.RunnerLit):
            return self.infer_runner(ctx, v, None)
        if isinstance(v, S.Ascribe):
            self.check_value(ctx, v.value, v.annot, "Sub-Value")
            return v.annot
        raise TypeError(f"not a value: {v!r}")

    def infer_runner(self, ctx, v: S.RunnerLit, expected: TRunner | None) -> TRunner:
        state = v.state
        if not T.is_ground(state):
            self.fail(v, "TyValue-Runner", f"runner state must be ground, got {show_type(state)}")
        if expected is not None:
            if expected.state != state:
                self.fail(v, "TyValue-Runner", f"runner state {show_type(state)} does not match expected {show_type(expected.state)}")
            missing = expected.ops - {op for op, _ in v.clauses}
            if missing:
                self.fail(v, "TyValue-Runner", f"runner does not implement {_names(missing)}")
        ext: set = set()
        sigs: set = set()
        for op, b in v.clauses:
            sig = self.tables.operations[op]
            (x,) = b.vars
            want = None
            if expected is not None:
                want = KernelType(sig.result, expected.ext, sig.excs, expected.sigs, state)
            kt = self.infer_kernel({**ctx, x: sig.param}, b.body, state, want)
            if not T.subtype_value(kt.carrier, sig.result):
                self.fail(b.body, "TyValue-Runner", f"co-operation for {op} returns {show_type(kt.carrier)}, expected {show_type(sig.result)}")
            extra = kt.excs - sig.excs
            if extra:
                self.fail(b.body, "TyValue-Runner", f"co-operation for {op} raises {_names(extra)} outside its signature {_names(sig.excs)}")
            ext |= kt.ops
            sigs |= kt.sigs
        return TRunner(frozenset(op for op, _ in v.clauses), frozenset(ext), frozenset(sigs), state)

    def check_value(self, ctx, v, expected, rule: str):
        if isinstance(v, S.Fun) and isinstance(expected, TUserFun):
            if not T.subtype_value(expected.arg, v.annot):
                self.fail(v, "Sub-UserFun", f"parameter type {show_type(v.annot)} does not accept {show_type(expected.arg)}")
            (x,) = v.body.vars
            self.infer_user({**ctx, x: v.annot}, v.body.body, expected.result)
            return
        if isinstance(v, S.FunK) and isinstance(expected, TKernelFun):
            if not T.subtype_value(expected.arg, v.annot):
                self.fail(v, "Sub-KernelFun", f"parameter type {show_type(v.annot)} does not accept {show_type(expected.arg)}")
            state = v.state if v.state is not None else expected.result.state
            if state != expected.result.state:
                self.fail(v, "Sub-KernelFun", f"kernel state {show_type(state)} does not match {show_type(expected.result.state)}")
            (x,) = v.body.vars
            self.infer_kernel({**ctx, x: v.annot}, v.body.body, state, expected.result)
            return
        if isinstance(v, S.RunnerLit) and isinstance(expected, TRunner):
            self.infer_runner(ctx, v, expected)
            return
        if isinstance(v, S.Pair) and isinstance(expected, TProd):
            self.check_value(ctx, v.left, expected.left, rule)
            self.check_value(ctx, v.right, expected.right, rule)
            return
        if isinstance(v, (S.Inl, S.Inr)) and v.annot is None and isinstance(expected, TSum):
            part = expected.left if isinstance(v, S.Inl) else expected.right
            self.check_value(ctx, v.value, part, rule)
            return
        t = self.infer_value(ctx, v)
        if not T.subtype_value(t, expected):
            self.fail(v, rule, f"expected a value of type {show_type(expected)}, got {show_type(t)}")

    # -- user computations --------------------------------------------------

    def infer_user(self, ctx: dict, m, expected: UserType | None = None) -> UserType:
        u = self._user(ctx, m, expected)
        if expected is not None and not T.subtype_user(u, expected):
            rule = _USER_RULES.get(type(m), "Sub-User")
            self.fail(m, rule, f"computation has type {show_type(u)} but {show_type(expected)} was expected")
        return u

    def _user(self, ctx, m, expected):
        if isinstance(m, S.Return):
            if expected is not None:
                self.check_value(ctx, m.value, expected.carrier, "TyUser-Return")
            return UserType(self.infer_value(ctx, m.value))
        if isinstance(m, S.App):
            f = self.infer_value(ctx, m.fn)
            if isinstance(f, TBot):
                self.infer_value(ctx, m.arg)
                return UserType(BOT)
            if not isinstance(f, TUserFun):
                self.fail(m, "TyUser-Apply", f"expected a user function, got {show_type(f)}")
            self.check_value(ctx, m.arg, f.arg, "TyUser-Apply")
            return f.result
        if isinstance(m, (S.Try, S.Let)):
            return self.user_try(ctx, m, expected)
        if isinstance(m, S.MatchPair):
            t = self.infer_value(ctx, m.value)
            if isinstance(t, TBot):
                t = TProd(BOT, BOT)
            if not isinstance(t, TProd):
                self.fail(m, "TyUser-MatchPair", f"expected a pair, got {show_type(t)}")
            x, y = m.body.vars
            return self.infer_user({**ctx, x: t.left, y: t.right}, m.body.body, expected)
        if isinstance(m, S.MatchEmpty):
            t = self.infer_value(ctx, m.value)
            if not isinstance(t, (T.TEmpty, TBot)):
                self.fail(m, "TyUser-MatchEmpty", f"expected a value of type empty, got {show_type(t)}")
            return UserType(m.annot)
        if isinstance(m, S.MatchSum):
            t = self.infer_value(ctx, m.value)
            if isinstance(t, TBot):
                t = TSum(BOT, BOT)
            if not isinstance(t, TSum):
                self.fail(m, "TyUser-MatchSum", f"expected a sum, got {show_type(t)}")
            (x,), (y,) = m.left.vars, m.right.vars
            a = self.infer_user({**ctx, x: t.left}, m.left.body, expected)
            b = self.infer_user({**ctx, y: t.right}, m.right.body, expected)
            return self.join_user(m, "TyUser-MatchSum", [a, b])
        if isinstance(m, S.Op):
            sig = self.tables.operations.get(m.op)
            if sig is None:
                self.fail(m, "TyUser-Op", f"undeclared operation {m.op}")
            if expected is not None and m.op not in expected.ops:
                self.fail(m, "TyUser-Op", f"operation {m.op} is not allowed by {show_type(expected)}")
            self.check_value(ctx, m.arg, sig.param, "TyUser-Op")
            self.check_handler_set(m, "TyUser-Op", m.handlers, sig.excs)
            (x,) = m.cont.vars
            parts = [self.infer_user({**ctx, x: sig.result}, m.cont.body, expected)]
            parts += [self.infer_user(ctx, n, expected) for _, n in m.handlers]
            out = self.join_user(m, "TyUser-Op", parts)
            return UserType(out.carrier, out.ops | {m.op}, out.excs)
        if isinstance(m, S.Raise):
            if m.exc not in self.tables.exceptions:
                self.fail(m, "TyUser-Raise", f"undeclared exception {m.exc}")
            if expected is not None and m.exc not in expected.excs:
                self.fail(m, "TyUser-Raise", f"exception {m.exc} is not in the allowed set {_names(expected.excs)}")
            return UserType(m.annot if m.annot is not None else BOT, _EMPTY, frozenset((m.exc,)))
        if isinstance(m, S.Run):
            return self.user_run(ctx, m, expected)
        if isinstance(m, S.KernelSwitch):
            return self.user_kernel(ctx, m, expected)
        raise TypeError(f"not a user computation: {m!r}")

    def check_handler_set(self, node, rule, handlers, excs):
        names = [e for e, _ in handlers]
        if sorted(names) != sorted(excs) or len(set(names)) != len(names):
            self.fail(node, rule, f"exception continuations {_names(names)} must match {_names(excs)}")

    def user_try(self, ctx, m, expected):
        um = self.infer_user(ctx, m.comp)
        if isinstance(m, S.Let):
            ret, handlers = m.body, ()
            self.let_excs[id(m)] = um.excs
        else:
            ret, handlers = m.ret, m.handlers
            self.try_excs[id(m)] = um.excs
        handled = {e for e, _ in handlers}
        for e in handled:
            if e not in self.tables.exceptions:
                self.fail(m, "TyUser-Try", f"undeclared exception {e}")
        (x,) = ret.vars
        parts = [self.infer_user({**ctx, x: um.carrier}, ret.body, expected)]
        parts += [self.infer_user(ctx, n, expected) for _, n in handlers]
        passthrough = um.excs - handled
        if expected is not None and not passthrough <= expected.excs:
            self.fail(m, "TyUser-Try", f"exceptions {_names(passthrough - expected.excs)} escape but are not allowed")
        parts.append(UserType(BOT, um.ops, passthrough))
        return self.join_user(m, "TyUser-Try", parts)

    def finally_types(self, ctx, m, fin: S.Finally, carrier, state, excs, sigs, rule, expected):
        for e in sorted(excs):
            if fin.raise_clause(e) is None:
                self.fail(m, rule, f"missing finalisation clause for raise {e}")
        for s in sorted(sigs):
            if fin.kill_clause(s) is None:
                self.fail(m, rule, f"missing finalisation clause for kill {s}")
        x, c = fin.ret.vars
        parts = [self.infer_user({**ctx, x: carrier, c: state}, fin.ret.body, expected)]
        for _e, b in fin.raises:
            (c2,) = b.vars
            parts.append(self.infer_user({**ctx, c2: state}, b.body, expected))
        for _s, n in fin.kills:
            parts.append(self.infer_user(ctx, n, expected))
        return self.join_user(m, rule, parts)

    def user_run(self, ctx, m: S.Run, expected):
        tr = self.infer_value(ctx, m.runner)
        if isinstance(tr, TBot):
            raise _Cascade("runner comes from a binding that failed to check", m.pos, "TyUser-Run")
        if not isinstance(tr, TRunner):
            self.fail(m, "TyUser-Run", f"expected a runner, got {show_type(tr)}")
        self.check_value(ctx, m.init, tr.state, "TyUser-Run")
        um = self.infer_user(ctx, m.comp)
        uncovered = um.ops - tr.ops
        if uncovered:
            self.fail(m, "TyUser-Run", f"runner does not implement operation(s) {_names(uncovered)} used by the computation")
        out = self.finally_types(ctx, m, m.fin, um.carrier, tr.state, um.excs, tr.sigs, "TyUser-Run", expected)
        ops = out.ops | tr.ext
        if expected is not None and not tr.ext <= expected.ops:
            self.fail(m, "TyUser-Run", f"runner performs {_names(tr.ext - expected.ops)} which are not allowed")
        return UserType(out.carrier, ops, out.excs)

    def user_kernel(self, ctx, m: S.KernelSwitch, expected):
        state = self.infer_value(ctx, m.init)
        if not T.is_ground(state):
            self.fail(m, "TyUser-Kernel", f"kernel state must have a ground type, got {show_type(state)}")
        uk = self.infer_kernel(ctx, m.comp, state)
        if expected is not None and not uk.ops <= expected.ops:
            self.fail(m, "TyUser-Kernel", f"operations {_names(uk.ops - expected.ops)} are not allowed")
        out = self.finally_types(ctx, m, m.fin, uk.carrier, state, uk.excs, uk.sigs, "TyUser-Kernel", expected)
        return UserType(out.carrier, out.ops | uk.ops, out.excs)

    # -- kernel computations ------------------------------------------------

    def infer_kernel(self, ctx: dict, k, state, expected: KernelType | None = None) -> KernelType:
        if expected is not None and expected.state != state:
            self.fail(k, _KERNEL_RULES.get(type(k), "Sub-Kernel"), f"kernel state {show_type(state)} does not match {show_type(expected.state)}")
        kt = self._kernel(ctx, k, state, expected)
        if expected is not None and not T.subtype_kernel(kt, expected):
            rule = _KERNEL_RULES.get(type(k), "Sub-Kernel")
            self.fail(k, rule, f"kernel computation has type {show_type(kt)} but {show_type(expected)} was expected")
        return kt

    def kt(self, carrier, state, ops=_EMPTY, excs=_EMPTY, sigs=_EMPTY) -> KernelType:
        return KernelType(carrier, frozenset(ops), frozenset(excs), frozenset(sigs), state)

    def _annot_state(self, k, annot, state, rule):
        if annot is None:
            return BOT
        carrier, c = annot
        if c is not None and c != state:
            self.fail(k, rule, f"state annotation {show_type(c)} does not match the ambient kernel state {show_type(state)}")
        return carrier

    def _kernel(self, ctx, k, state, expected):
        if isinstance(k, S.KReturn):
            if expected is not None:
                self.check_value(ctx, k.value, expected.carrier, "TyKernel-Return")
            return self.kt(self.infer_value(ctx, k.value), state)
        if isinstance(k, S.KApp):
            f = self.infer_value(ctx, k.fn)
            if isinstance(f, TBot):
                self.infer_value(ctx, k.arg)
                return self.kt(BOT, state)
            if not isinstance(f, TKernelFun):
                self.fail(k, "TyKernel-Apply", f"expected a kernel function, got {show_type(f)}")
            if f.result.state != state:
                self.fail(k, "TyKernel-Apply", f"kernel function uses state {show_type(f.result.state)}, but the ambient state is {show_type(state)}")
            self.check_value(ctx, k.arg, f.arg, "TyKernel-Apply")
            return f.result
        if isinstance(k, (S.KTry, S.KLet)):
            return self.kernel_try(ctx, k, state, expected)
        if isinstance(k, S.KMatchPair):
            t = self.infer_value(ctx, k.value)
            if isinstance(t, TBot):
                t = TProd(BOT, BOT)
            if not isinstance(t, TProd):
                self.fail(k, "TyKernel-MatchPair", f"expected a pair, got {show_type(t)}")
            x, y = k.body.vars
            return self.infer_kernel({**ctx, x: t.left, y: t.right}, k.body.body, state, expected)
        if isinstance(k, S.KMatchEmpty):
            t = self.infer_value(ctx, k.value)
            if not isinstance(t, (T.TEmpty, TBot)):
                self.fail(k, "TyKernel-MatchEmpty", f"expected a value of type empty, got {show_type(t)}")
            return self.kt(self._annot_state(k, k.annot, state, "TyKernel-MatchEmpty"), state)
        if isinstance(k, S.KMatchSum):
            t = self.infer_value(ctx, k.value)
            if isinstance(t, TBot):
                t = TSum(BOT, BOT)
            if not isinstance(t, TSum):
                self.fail(k, "TyKernel-MatchSum", f"expected a sum, got {show_type(t)}")
            (x,), (y,) = k.left.vars, k.right.vars
            a = self.infer_kernel({**ctx, x: t.left}, k.left.body, state, expected)
            b = self.infer_kernel({**ctx, y: t.right}, k.right.body, state, expected)
            return self.join_kernel(k, "TyKernel-MatchSum", [a, b], state)
        if isinstance(k, S.KOp):
            sig = self.tables.operations.get(k.op)
            if sig is None:
                self.fail(k, "TyKernel-Op", f"undeclared operation {k.op}")
            if expected is not None and k.op not in expected.ops:
                self.fail(k, "TyKernel-Op", f"operation {k.op} is not allowed by {show_type(expected)}")
            self.check_value(ctx, k.arg, sig.param, "TyKernel-Op")
            self.check_handler_set(k, "TyKernel-Op", k.handlers, sig.excs)
            (x,) = k.cont.vars
            parts = [self.infer_kernel({**ctx, x: sig.result}, k.cont.body, state, expected)]
            parts += [self.infer_kernel(ctx, n, state, expected) for _, n in k.handlers]
            out = self.join_kernel(k, "TyKernel-Op", parts, state)
            return KernelType(out.carrier, out.ops | {k.op}, out.excs, out.sigs, state)
        if isinstance(k, S.KRaise):
            if k.exc not in self.tables.exceptions:
                self.fail(k, "TyKernel-Raise", f"undeclared exception {k.exc}")
            if expected is not None and k.exc not in expected.excs:
                self.fail(k, "TyKernel-Raise", f"exception {k.exc} is not in the allowed set {_names(expected.excs)}")
            return self.kt(self._annot_state(k, k.annot, state, "TyKernel-Raise"), state, excs={k.exc})
        if isinstance(k, S.Kill):
            if k.sig not in self.tables.signals:
                self.fail(k, "TyKernel-Kill", f"undeclared signal {k.sig}")
            if expected is not None and k.sig not in expected.sigs:
                self.fail(k, "TyKernel-Kill", f"signal {k.sig} is not in the allowed set {_names(expected.sigs)}")
            return self.kt(self._annot_state(k, k.annot, state, "TyKernel-Kill"), state, sigs={k.sig})
        if isinstance(k, S.Getenv):
            (c,) = k.body.vars
            return self.infer_kernel({**ctx, c: state}, k.body.body, state, expected)
        if isinstance(k, S.Setenv):
            self.check_value(ctx, k.value, state, "TyKernel-Setenv")
            return self.infer_kernel(ctx, k.comp, state, expected)
        if isinstance(k, S.UserSwitch):
            return self.kernel_user(ctx, k, state, expected)
        raise TypeError(f"not a kernel computation: {k!r}")

    def kernel_try(self, ctx, k, state, expected):
        uk = self.infer_kernel(ctx, k.comp, state)
        if isinstance(k, S.KLet):
            ret, handlers = k.body, ()
            self.let_excs[id(k)] = uk.excs
        else:
            ret, handlers = k.ret, k.handlers
            self.try_excs[id(k)] = uk.excs
        handled = {e for e, _ in handlers}
        (x,) = ret.vars
        parts = [self.infer_kernel({**ctx, x: uk.carrier}, ret.body, state, expected)]
        parts += [self.infer_kernel(ctx, n, state, expected) for _, n in handlers]
        passthrough = uk.excs - handled
        if expected is not None:
            if not passthrough <= expected.excs:
                self.fail(k, "TyKernel-Try", f"exceptions {_names(passthrough - expected.excs)} escape but are not allowed")
            if not uk.sigs <= expected.sigs:
                self.fail(k, "TyKernel-Try", f"signals {_names(uk.sigs - expected.sigs)} escape but are not allowed")
        parts.append(KernelType(BOT, uk.ops, passthrough, uk.sigs, state))
        return self.join_kernel(k, "TyKernel-Try", parts, state)

    def kernel_user(self, ctx, k: S.UserSwitch, state, expected):
        um = self.infer_user(ctx, k.comp)
        self.try_excs[id(k)] = um.excs
        handled = {e for e, _ in k.handlers}
        (x,) = k.ret.vars
        parts = [self.infer_kernel({**ctx, x: um.carrier}, k.ret.body, state, expected)]
        parts += [self.infer_kernel(ctx, n, state, expected) for _, n in k.handlers]
        passthrough = um.excs - handled
        if expected is not None and not passthrough <= expected.excs:
            self.fail(k, "TyKernel-User", f"exceptions {_names(passthrough - expected.excs)} escape but are not allowed")
        parts.append(KernelType(BOT, um.ops, passthrough, _EMPTY, state))
        return self.join_kernel(k, "TyKernel-User", parts, state)


# -- programs ---------------------------------------------------------------


@dataclass
class ProgramTypes:
    bindings: list = field(default_factory=list)  # [(source name, UserType)]
    main: UserType | None = None
    errors: list = field(default_factory=list)
    checker: Checker | None = None


def initial_context(tables: T.EffectTables) -> dict:
    return dict(tables.externals)


class _Cascade(TypeCheckError):
    """An error caused only by an earlier failed binding; not reported."""


def check_program(program) -> ProgramTypes:
    """Check every top-level binding and the main computation.

    A failing binding is recorded and its name is bound at bottom type so
    later declarations are still checked.
    """
    checker = Checker(program.tables)
    ctx = initial_context(program.tables)
    out = ProgramTypes(checker=checker)
    for src, name, _annot, comp in program.bindings:
        try:
            u = checker.infer_user(ctx, comp)
        except TypeCheckError as err:
            if not isinstance(err, _Cascade):
                out.errors.append(err)
            ctx[name] = BOT
            continue
        ctx[name] = u.carrier
        out.bindings.append((src, u))
    if program.main is not None:
        try:
            out.main = checker.infer_user(ctx, program.main)
        except TypeCheckError as err:
            if not isinstance(err, _Cascade):
                out.errors.append(err)
    return out


def show_binding_type(u: UserType) -> str:
    if not u.ops and not u.excs:
        return show_type(u.carrier)
    return show_type(u)


def infer_user(ctx, m, tables) -> UserType:
    return Checker(tables).infer_user(dict(ctx), m)


def infer_kernel(ctx, k, state, tables) -> KernelType:
    return Checker(tables).infer_kernel(dict(ctx), k, state)


def infer_value(ctx, v, tables):
    return Checker(tables).infer_value(dict(ctx), v)


# -- let expansion ----------------------------------------------------------


def expand_lets(term, checker: Checker):
    """Rewrite ``let`` into ``try`` with explicit re-raise clauses.

    Missing raise clauses of ``try`` and ``user ... with`` are filled in the
    same way, so the result mentions every exception explicitly. Uses the
    exception rows recorded by ``checker`` while it typed ``term``.
    """
    return _expand(term, checker)


def _expand(x, checker: Checker):
    if isinstance(x, (S.Let, S.KLet)):
        excs = checker.let_excs.get(id(x), frozenset())
        comp = _expand(x.comp, checker)
        body = S.Bind(x.body.vars, _expand(x.body.body, checker))
        if isinstance(x, S.Let):
            hs = tuple((e, S.Raise(e, pos=x.pos)) for e in sorted(excs))
            return S.Try(comp, body, hs, pos=x.pos)
        hs = tuple((e, S.KRaise(e, pos=x.pos)) for e in sorted(excs))
        return S.KTry(comp, body, hs, pos=x.pos)
    if isinstance(x, (S.Try, S.KTry, S.UserSwitch)):
        excs = checker.try_excs.get(id(x), frozenset())
        comp = _expand(x.comp, checker)
        ret = S.Bind(x.ret.vars, _expand(x.ret.body, checker))
        given = {e: _expand(n, checker) for e, n in x.handlers}
        raise_cls = S.Raise if isinstance(x, S.Try) else S.KRaise
        for e in sorted(excs):
            if e not in given:
                given[e] = raise_cls(e, pos=x.pos)
        hs = tuple(sorted(given.items()))
        return type(x)(comp, ret, hs, pos=x.pos)
    if isinstance(x, S.Node):
        cls = type(x)
        vals = {n: _expand(getattr(x, n), checker) for n in S._fields(cls)}
        return cls(**vals, pos=x.pos)
    if isinstance(x, S.Bind):
        return S.Bind(x.vars, _expand(x.body, checker))
    if isinstance(x, tuple):
        return tuple(_expand(i, checker) for i in x)
    return x


# -- skeletal typing --------------------------------------------------------


class SkeletonError(Exception):
    pass


def _sk_join(a, b):
    if isinstance(a, TBot):
        return b
    if isinstance(b, TBot):
        return a
    if isinstance(a, TProd) and isinstance(b, TProd):
        return TProd(_sk_join(a.left, b.left), _sk_join(a.right, b.right))
    if isinstance(a, TSum) and isinstance(b, TSum):
        return TSum(_sk_join(a.left, b.left), _sk_join(a.right, b.right))
    if a == b:
        return a
    raise SkeletonError(f"skeletons differ: {a} and {b}")


class SkeletalChecker:
    """Annotation-only typing with all effect information erased.

    It never looks at effect rows, so its result can be compared with the
    skeleton of what :class:`Checker` infers.
    """

    def __init__(self, tables: T.EffectTables):
        self.tables = tables

    def value(self, ctx, v):
        if isinstance(v, S.Var):
            return ctx[v.name]
        if isinstance(v, S.Lit):
            return T.BOOL if isinstance(v.value, bool) else T.INT if isinstance(v.value, int) else T.STR
        if isinstance(v, S.UnitVal):
            return T.UNIT
        if isinstance(v, S.Const):
            return self.tables.constants[v.name].result
        if isinstance(v, S.Pair):
            return TProd(self.value(ctx, v.left), self.value(ctx, v.right))
        if isinstance(v, (S.Inl, S.Inr)):
            if v.annot is not None:
                return T.skeleton(v.annot)
            t = self.value(ctx, v.value)
            return TSum(t, BOT) if isinstance(v, S.Inl) else TSum(BOT, t)
        if isinstance(v, S.Fun):
            (x,) = v.body.vars
            arg = T.skeleton(v.annot)
            return T.SkUserFun(arg, T.SkUser(self.user({**ctx, x: arg}, v.body.body)))
        if isinstance(v, S.FunK):
            (x,) = v.body.vars
            arg = T.skeleton(v.annot)
            return T.SkKernelFun(arg, T.SkKernel(self.kernel({**ctx, x: arg}, v.body.body, v.state), v.state))
        if isinstance(v, S.RunnerLit):
            for op, b in v.clauses:
                sig = self.tables.operations[op]
                self.kernel({**ctx, b.vars[0]: sig.param}, b.body, v.state)
            return T.SkRunner(v.state)
        if isinstance(v, S.Ascribe):
            self.value(ctx, v.value)
            return T.skeleton(v.annot)
        raise TypeError(v)

    def user(self, ctx, m):
        if isinstance(m, S.Return):
            return self.value(ctx, m.value)
        if isinstance(m, S.App):
            f = self.value(ctx, m.fn)
            return BOT if isinstance(f, TBot) else f.result.carrier
        if isinstance(m, S.Let):
            x = self.user(ctx, m.comp)
            return self.user({**ctx, m.body.vars[0]: x}, m.body.body)
        if isinstance(m, S.Try):
            x = self.user(ctx, m.comp)
            out = self.user({**ctx, m.ret.vars[0]: x}, m.ret.body)
            for _, n in m.handlers:
                out = _sk_join(out, self.user(ctx, n))
            return out
        if isinstance(m, S.MatchPair):
            t = self.value(ctx, m.value)
            t = TProd(BOT, BOT) if isinstance(t, TBot) else t
            x, y = m.body.vars
            return self.user({**ctx, x: t.left, y: t.right}, m.body.body)
        if isinstance(m, S.MatchEmpty):
            return T.skeleton(m.annot)
        if isinstance(m, S.MatchSum):
            t = self.value(ctx, m.value)
            t = TSum(BOT, BOT) if isinstance(t, TBot) else t
            a = self.user({**ctx, m.left.vars[0]: t.left}, m.left.body)
            b = self.user({**ctx, m.right.vars[0]: t.right}, m.right.body)
            return _sk_join(a, b)
        if isinstance(m, S.Op):
            sig = self.tables.operations[m.op]
            out = self.user({**ctx, m.cont.vars[0]: sig.result}, m.cont.body)
            for _, n in m.handlers:
                out = _sk_join(out, self.user(ctx, n))
            return out
        if isinstance(m, S.Raise):
            return T.skeleton(m.annot) if m.annot is not None else BOT
        if isinstance(m, S.Run):
            r = self.value(ctx, m.runner)
            x = self.user(ctx, m.comp)
            return self.fin(ctx, m.fin, x, r.state)
        if isinstance(m, S.KernelSwitch):
            state = self.value(ctx, m.init)
            x = self.kernel(ctx, m.comp, state)
            return self.fin(ctx, m.fin, x, state)
        raise TypeError(m)

    def fin(self, ctx, fin, x, state):
        xv, c = fin.ret.vars
        out = self.user({**ctx, xv: x, c: state}, fin.ret.body)
        for _, b in fin.raises:
            out = _sk_join(out, self.user({**ctx, b.vars[0]: state}, b.body))
        for _, n in fin.kills:
            out = _sk_join(out, self.user(ctx, n))
        return out

    def kernel(self, ctx, k, state):
        if isinstance(k, S.KReturn):
            return self.value(ctx, k.value)
        if isinstance(k, S.KApp):
            f = self.value(ctx, k.fn)
            return BOT if isinstance(f, TBot) else f.result.carrier
        if isinstance(k, S.KLet):
            x = self.kernel(ctx, k.comp, state)
            return self.kernel({**ctx, k.body.vars[0]: x}, k.body.body, state)
        if isinstance(k, S.KTry):
            x = self.kernel(ctx, k.comp, state)
            out = self.kernel({**ctx, k.ret.vars[0]: x}, k.ret.body, state)
            for _, n in k.handlers:
                out = _sk_join(out, self.kernel(ctx, n, state))
            return out
        if isinstance(k, S.KMatchPair):
            t = self.value(ctx, k.value)
            t = TProd(BOT, BOT) if isinstance(t, TBot) else t
            x, y = k.body.vars
            return self.kernel({**ctx, x: t.left, y: t.right}, k.body.body, state)
        if isinstance(k, S.KMatchEmpty):
            return T.skeleton(k.annot[0])
        if isinstance(k, S.KMatchSum):
            t = self.value(ctx, k.value)
            t = TSum(BOT, BOT) if isinstance(t, TBot) else t
            a = self.kernel({**ctx, k.left.vars[0]: t.left}, k.left.body, state)
            b = self.kernel({**ctx, k.right.vars[0]: t.right}, k.right.body, state)
            return _sk_join(a, b)
        if isinstance(k, S.KOp):
            sig = self.tables.operations[k.op]
            out = self.kernel({**ctx, k.cont.vars[0]: sig.result}, k.cont.body, state)
            for _, n in k.handlers:
                out = _sk_join(out, self.kernel(ctx, n, state))
            return out
        if isinstance(k, (S.KRaise, S.Kill)):
            return T.skeleton(k.annot[0]) if k.annot is not None else BOT
        if isinstance(k, S.Getenv):
            return self.kernel({**ctx, k.body.vars[0]: state}, k.body.body, state)
        if isinstance(k, S.Setenv):
            return self.kernel(ctx, k.comp, state)
        if isinstance(k, S.UserSwitch):
            x = self.user(ctx, k.comp)
            out = self.kernel({**ctx, k.ret.vars[0]: x}, k.ret.body, state)
            for _, n in k.handlers:
                out = _sk_join(out, self.kernel(ctx, n, state))
            return out
        raise TypeError(k)


def skeletal_context(ctx: dict) -> dict:
    return {k: T.skeleton(v) for k, v in ctx.items()}
