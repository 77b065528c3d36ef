"""Environment-based big-step evaluator.

User computations evaluate to a :class:`UserStep` and kernel computations to
a :class:`KernelStep`. An operation call suspends evaluation as an ``OpCall``
step whose continuations are host closures; each enclosing construct
(``try``, ``run``, ``kernel``, ``user``) wraps those continuations, which is
how the algebraicity equations are realised. Every continuation is affine:
calling one twice, or calling two members of the same operation call, is
reported as an internal error and counted.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

from . import syntax as S
from .errors import StuckError, UnhandledOperation
from .values import (
    UNIT_V,
    InlV,
    InrV,
    KernelClosure,
    NativeRunner,
    Outcome,
    RunnerClosure,
    UserClosure,
    apply_constant,
)

# -- steps ------------------------------------------------------------------


@dataclass(frozen=True)
class URet:
    value: object


@dataclass(frozen=True)
class URaise:
    exc: str


@dataclass(frozen=True)
class UOp:
    op: str
    arg: object
    succ: Callable  # value -> UserStep
    exc: dict  # exception -> (() -> UserStep)


@dataclass(frozen=True)
class KRet:
    value: object
    state: object


@dataclass(frozen=True)
class KRaise:
    exc: str
    state: object


@dataclass(frozen=True)
class KKill:
    sig: str


@dataclass(frozen=True)
class KOp:
    op: str
    arg: object
    succ: Callable  # value -> KernelStep (state captured)
    exc: dict


class AffinityViolation(StuckError):
    pass


class ContGroup:
    """The continuations of one operation call; at most one may run, once."""

    __slots__ = ("session", "used")

    def __init__(self, session):
        self.session = session
        self.used = False
        session.stats["groups"] += 1

    def wrap(self, fn):
        def cont(*args):
            self.session.stats["invocations"] += 1
            if self.used:
                self.session.stats["violations"] += 1
                raise AffinityViolation("a continuation was resumed twice")
            self.used = True
            return fn(*args)

        return cont


# -- finalisation log -------------------------------------------------------


@dataclass
class Instance:
    id: int
    kind: str  # "run" | "kernel"
    pos: object
    parent: "Instance | None"
    depth: int
    fired: list = field(default_factory=list)
    bypassed: bool = False
    killed_at: int | None = None

    @property
    def finished(self) -> bool:
        return bool(self.fired)


@dataclass
class FinalisationLog:
    instances: list = field(default_factory=list)
    reads: list = field(default_factory=list)  # (instance id, time)

    def counts(self) -> dict:
        return {i.id: len(i.fired) for i in self.instances}

    def by_site(self) -> dict:
        out: dict = {}
        for inst in self.instances:
            out.setdefault((inst.kind, inst.pos), []).append(inst.fired[0] if inst.fired else None)
        return out

    def violations(self) -> list:
        """Instances that break 'exactly one clause, unless bypassed'."""
        bad = []
        for inst in self.instances:
            n = len(inst.fired)
            if inst.bypassed:
                if n > 1:
                    bad.append(inst)
            elif n != 1:
                bad.append(inst)
        return bad

    def reads_after_kill(self) -> list:
        killed = {i.id: i.killed_at for i in self.instances if i.killed_at is not None}
        return [(iid, t) for iid, t in self.reads if iid in killed and t > killed[iid]]

    def outer_kills(self) -> bool:
        return any(i.bypassed for i in self.instances)


# -- session ----------------------------------------------------------------


class Session:
    """State of one evaluation: trace, finalisation log, affinity counters."""

    def __init__(self, container=None, trace: bool = False):
        self.container = container
        self.log = FinalisationLog()
        self.trace_events: list | None = [] if trace else None
        self.stats = {"groups": 0, "invocations": 0, "violations": 0}
        self._ids = itertools.count(1)
        self._clock = itertools.count(1)

    # bookkeeping
    def emit(self, event: str, depth: int, **fields):
        if self.trace_events is not None:
            rec = {"event": event}
            rec.update({k: v for k, v in fields.items() if v is not None})
            rec["runDepth"] = depth
            self.trace_events.append(rec)

    def new_instance(self, kind, pos, parent) -> Instance:
        depth = parent.depth + 1 if parent is not None else 1
        inst = Instance(next(self._ids), kind, pos, parent, depth)
        self.log.instances.append(inst)
        return inst

    def fire(self, inst: Instance, clause: str, name: str | None = None):
        inst.fired.append(clause if name is None else f"{clause} {name}")
        self.emit("finally", inst.depth, clause=clause, exception=name if clause == "raise" else None,
                  signal=name if clause == "kill" else None)

    def bypass_descendants(self, inst: Instance | None):
        for other in self.log.instances:
            if other is inst or other.finished:
                continue
            p = other.parent
            while p is not None and p is not inst:
                p = p.parent
            if inst is None or p is inst:
                other.bypassed = True

    # values
    def val(self, env: dict, v):
        if isinstance(v, S.Var):
            try:
                return env[v.name]
            except KeyError:
                raise StuckError(f"unbound variable {v.name}") from None
        if isinstance(v, S.Lit):
            return v.value
        if isinstance(v, S.UnitVal):
            return UNIT_V
        if isinstance(v, S.Const):
            return apply_constant(v.name, tuple(self.val(env, a) for a in v.args))
        if isinstance(v, S.Pair):
            return (self.val(env, v.left), self.val(env, v.right))
        if isinstance(v, S.Inl):
            return InlV(self.val(env, v.value))
        if isinstance(v, S.Inr):
            return InrV(self.val(env, v.value))
        if isinstance(v, S.Fun):
            return UserClosure(v.body.vars[0], v.body.body, env)
        if isinstance(v, S.FunK):
            return KernelClosure(v.body.vars[0], v.body.body, env)
        if isinstance(v, S.RunnerLit):
            return RunnerClosure({op: (b.vars[0], b.body) for op, b in v.clauses}, env, v.state)
        if isinstance(v, S.Ascribe):
            return self.val(env, v.value)
        raise StuckError(f"not a value: {v!r}")

    # continuations
    def op_conts(self, succ, excs: dict):
        g = ContGroup(self)
        return g.wrap(succ), {e: g.wrap(f) for e, f in excs.items()}

    # user mode
    def eval_user(self, env: dict, m, inst: Instance | None = None):
        if isinstance(m, S.Return):
            return URet(self.val(env, m.value))
        if isinstance(m, S.App):
            f = self.val(env, m.fn)
            if not isinstance(f, UserClosure):
                raise StuckError(f"applying a non-function {f!r}")
            return self.eval_user({**f.env, f.param: self.val(env, m.arg)}, f.body, inst)
        if isinstance(m, (S.Try, S.Let)):
            if isinstance(m, S.Let):
                ret, handlers = m.body, {}
            else:
                ret, handlers = m.ret, dict(m.handlers)
            return self.user_try(env, self.eval_user(env, m.comp, inst), ret, handlers, inst)
        if isinstance(m, S.MatchPair):
            v = self.val(env, m.value)
            x, y = m.body.vars
            return self.eval_user({**env, x: v[0], y: v[1]}, m.body.body, inst)
        if isinstance(m, S.MatchEmpty):
            raise StuckError("matched a value of the empty type")
        if isinstance(m, S.MatchSum):
            v = self.val(env, m.value)
            if isinstance(v, InlV):
                return self.eval_user({**env, m.left.vars[0]: v.value}, m.left.body, inst)
            if isinstance(v, InrV):
                return self.eval_user({**env, m.right.vars[0]: v.value}, m.right.body, inst)
            raise StuckError(f"matched a non-sum {v!r}")
        if isinstance(m, S.Op):
            arg = self.val(env, m.arg)
            x = m.cont.vars[0]
            body = m.cont.body
            succ, exc = self.op_conts(
                lambda b: self.eval_user({**env, x: b}, body, inst),
                {e: (lambda n=n: self.eval_user(env, n, inst)) for e, n in m.handlers},
            )
            return UOp(m.op, arg, succ, exc)
        if isinstance(m, S.Raise):
            return URaise(m.exc)
        if isinstance(m, S.Run):
            runner = self.val(env, m.runner)
            state = self.val(env, m.init)
            run = self.new_instance("run", m.pos, inst)
            step = self.eval_user(env, m.comp, run)
            return self.run_step(runner, state, step, m.fin, env, run)
        if isinstance(m, S.KernelSwitch):
            state = self.val(env, m.init)
            ks = self.new_instance("kernel", m.pos, inst)
            step = self.eval_kernel(env, state, m.comp, ks, ks)
            return self.kernel_switch_step(step, m.fin, env, ks)
        raise StuckError(f"not a user computation: {m!r}")

    def user_try(self, env, step, ret: S.Bind, handlers: dict, inst):
        if isinstance(step, URet):
            return self.eval_user({**env, ret.vars[0]: step.value}, ret.body, inst)
        if isinstance(step, URaise):
            n = handlers.get(step.exc)
            if n is None:
                return step
            return self.eval_user(env, n, inst)
        succ, exc = self.op_conts(
            lambda b: self.user_try(env, step.succ(b), ret, handlers, inst),
            {e: (lambda f=f: self.user_try(env, f(), ret, handlers, inst)) for e, f in step.exc.items()},
        )
        return UOp(step.op, step.arg, succ, exc)

    def finalise_return(self, fin: S.Finally, env, value, state, inst):
        self.fire(inst, "return")
        x, c = fin.ret.vars
        return self.eval_user({**env, x: value, c: state}, fin.ret.body, inst.parent)

    def finalise_raise(self, fin: S.Finally, env, exc, state, inst):
        b = fin.raise_clause(exc)
        if b is None:
            raise StuckError(f"no finalisation clause for exception {exc}")
        self.fire(inst, "raise", exc)
        return self.eval_user({**env, b.vars[0]: state}, b.body, inst.parent)

    def finalise_kill(self, fin: S.Finally, env, sig, inst):
        n = fin.kill_clause(sig)
        if n is None:
            raise StuckError(f"no finalisation clause for signal {sig}")
        inst.killed_at = next(self._clock)
        self.bypass_descendants(inst)
        self.fire(inst, "kill", sig)
        return self.eval_user(env, n, inst.parent)

    def run_step(self, runner, state, step, fin: S.Finally, env, inst: Instance):
        if isinstance(step, URet):
            return self.finalise_return(fin, env, step.value, state, inst)
        if isinstance(step, URaise):
            return self.finalise_raise(fin, env, step.exc, state, inst)
        if step.op not in runner.ops:
            raise StuckError(f"runner does not implement {step.op}")
        self.emit("op", inst.depth, op=step.op)
        kstep = self.coop(runner, step.op, step.arg, state, inst)
        return self.coop_result(runner, kstep, step, fin, env, inst)

    def coop(self, runner, op, arg, state, inst):
        if isinstance(runner, NativeRunner):
            return runner.coops[op](self, arg, state, inst)
        x, body = runner.clauses[op]
        return self.eval_kernel({**runner.env, x: arg}, state, body, inst, inst)

    def coop_result(self, runner, kstep, call: UOp, fin, env, inst):
        if isinstance(kstep, KRet):
            self.emit("coop-return", inst.depth, op=call.op)
            return self.run_step(runner, kstep.state, call.succ(kstep.value), fin, env, inst)
        if isinstance(kstep, KRaise):
            self.emit("coop-raise", inst.depth, op=call.op, exception=kstep.exc)
            k = call.exc.get(kstep.exc)
            if k is None:
                raise StuckError(f"co-operation for {call.op} raised {kstep.exc} outside its signature")
            return self.run_step(runner, kstep.state, k(), fin, env, inst)
        if isinstance(kstep, KKill):
            self.emit("coop-kill", inst.depth, op=call.op, signal=kstep.sig)
            return self.finalise_kill(fin, env, kstep.sig, inst)
        succ, exc = self.op_conts(
            lambda b: self.coop_result(runner, kstep.succ(b), call, fin, env, inst),
            {e: (lambda f=f: self.coop_result(runner, f(), call, fin, env, inst)) for e, f in kstep.exc.items()},
        )
        return UOp(kstep.op, kstep.arg, succ, exc)

    def kernel_switch_step(self, step, fin: S.Finally, env, inst: Instance):
        if isinstance(step, KRet):
            return self.finalise_return(fin, env, step.value, step.state, inst)
        if isinstance(step, KRaise):
            return self.finalise_raise(fin, env, step.exc, step.state, inst)
        if isinstance(step, KKill):
            return self.finalise_kill(fin, env, step.sig, inst)
        succ, exc = self.op_conts(
            lambda b: self.kernel_switch_step(step.succ(b), fin, env, inst),
            {e: (lambda f=f: self.kernel_switch_step(f(), fin, env, inst)) for e, f in step.exc.items()},
        )
        return UOp(step.op, step.arg, succ, exc)

    # kernel mode
    def eval_kernel(self, env: dict, state, k, inst: Instance | None = None, owner: Instance | None = None):
        if isinstance(k, S.KReturn):
            return KRet(self.val(env, k.value), state)
        if isinstance(k, S.KApp):
            f = self.val(env, k.fn)
            if not isinstance(f, KernelClosure):
                raise StuckError(f"applying a non-kernel-function {f!r}")
            return self.eval_kernel({**f.env, f.param: self.val(env, k.arg)}, state, f.body, inst, owner)
        if isinstance(k, (S.KTry, S.KLet)):
            if isinstance(k, S.KLet):
                ret, handlers = k.body, {}
            else:
                ret, handlers = k.ret, dict(k.handlers)
            return self.kernel_try(env, self.eval_kernel(env, state, k.comp, inst, owner), ret, handlers, inst, owner)
        if isinstance(k, S.KMatchPair):
            v = self.val(env, k.value)
            x, y = k.body.vars
            return self.eval_kernel({**env, x: v[0], y: v[1]}, state, k.body.body, inst, owner)
        if isinstance(k, S.KMatchEmpty):
            raise StuckError("matched a value of the empty type")
        if isinstance(k, S.KMatchSum):
            v = self.val(env, k.value)
            if isinstance(v, InlV):
                return self.eval_kernel({**env, k.left.vars[0]: v.value}, state, k.left.body, inst, owner)
            if isinstance(v, InrV):
                return self.eval_kernel({**env, k.right.vars[0]: v.value}, state, k.right.body, inst, owner)
            raise StuckError(f"matched a non-sum {v!r}")
        if isinstance(k, S.KOp):
            arg = self.val(env, k.arg)
            x = k.cont.vars[0]
            body = k.cont.body
            succ, exc = self.op_conts(
                lambda b: self.eval_kernel({**env, x: b}, state, body, inst, owner),
                {e: (lambda n=n: self.eval_kernel(env, state, n, inst, owner)) for e, n in k.handlers},
            )
            return KOp(k.op, arg, succ, exc)
        if isinstance(k, S.KRaise):
            return KRaise(k.exc, state)
        if isinstance(k, S.Kill):
            return KKill(k.sig)
        if isinstance(k, S.Getenv):
            if owner is not None:
                self.log.reads.append((owner.id, next(self._clock)))
            return self.eval_kernel({**env, k.body.vars[0]: state}, state, k.body.body, inst, owner)
        if isinstance(k, S.Setenv):
            return self.eval_kernel(env, self.val(env, k.value), k.comp, inst, owner)
        if isinstance(k, S.UserSwitch):
            step = self.eval_user(env, k.comp, inst)
            return self.user_switch_step(env, state, step, k.ret, dict(k.handlers), inst, owner)
        raise StuckError(f"not a kernel computation: {k!r}")

    def kernel_try(self, env, step, ret, handlers, inst, owner):
        if isinstance(step, KRet):
            return self.eval_kernel({**env, ret.vars[0]: step.value}, step.state, ret.body, inst, owner)
        if isinstance(step, KRaise):
            n = handlers.get(step.exc)
            if n is None:
                return step
            return self.eval_kernel(env, step.state, n, inst, owner)
        if isinstance(step, KKill):
            return step
        succ, exc = self.op_conts(
            lambda b: self.kernel_try(env, step.succ(b), ret, handlers, inst, owner),
            {e: (lambda f=f: self.kernel_try(env, f(), ret, handlers, inst, owner)) for e, f in step.exc.items()},
        )
        return KOp(step.op, step.arg, succ, exc)

    def user_switch_step(self, env, state, step, ret, handlers, inst, owner):
        if isinstance(step, URet):
            return self.eval_kernel({**env, ret.vars[0]: step.value}, state, ret.body, inst, owner)
        if isinstance(step, URaise):
            n = handlers.get(step.exc)
            if n is None:
                return KRaise(step.exc, state)
            return self.eval_kernel(env, state, n, inst, owner)
        succ, exc = self.op_conts(
            lambda b: self.user_switch_step(env, state, step.succ(b), ret, handlers, inst, owner),
            {e: (lambda f=f: self.user_switch_step(env, state, f(), ret, handlers, inst, owner)) for e, f in step.exc.items()},
        )
        return KOp(step.op, step.arg, succ, exc)

    # top level
    def run_toplevel(self, m, env: dict | None = None) -> Outcome:
        """Drive ``m`` to completion, sending residual operations to the container."""
        step = self.eval_user(dict(env or {}), m, None)
        while isinstance(step, UOp):
            self.emit("op", 0, op=step.op)
            if self.container is None or step.op not in self.container.signature:
                raise UnhandledOperation(step.op)
            reply = self.container.handle(step.op, step.arg)
            if reply.kind == "return":
                step = step.succ(reply.value)
            elif reply.kind == "raise":
                k = step.exc.get(reply.value)
                if k is None:
                    raise StuckError(f"container raised {reply.value} outside the signature of {step.op}")
                step = k()
            else:
                self.bypass_descendants(None)
                return Outcome("kill", reply.value)
        if isinstance(step, URet):
            return Outcome("return", step.value)
        return Outcome("raise", step.exc)


def run_program(program, container=None, trace: bool = False):
    """Evaluate a parsed program; returns ``(Outcome, Session)``."""
    session = Session(container, trace)
    env = {}
    if container is not None:
        env.update(container.externals())
    return session.run_toplevel(program.body, env), session
