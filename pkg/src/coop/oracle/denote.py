"""Denotations of values and computations as computation trees.

User computations denote trees with user payloads; kernel computations denote
functions from an initial state to trees with kernel payloads. A runner
denotes one co-operation per operation, each a function from arguments to
kernel denotations. Running ``M`` maps its tree through the monad morphism
the runner induces and then Kleisli-extends the finalisation map over the
result. Reaching the runtime-error operation raises :class:`OracleBug`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from .. import syntax as S
from ..values import UNIT_V, InlV, InrV
from .trees import Leaf, Node, OracleBug, kleisli


def _const(name, args):
    table = {
        "+": lambda a, b: a + b,
        "-": lambda a, b: a - b,
        "*": lambda a, b: a * b,
        "=": lambda a, b: a == b,
        "<": lambda a, b: a < b,
        "concat": lambda a, b: a + b,
        "test": lambda a: InlV(UNIT_V) if a else InrV(UNIT_V),
    }
    return table[name](*args)


@dataclass(frozen=True)
class SemFun:
    fn: Callable  # value -> user tree


@dataclass(frozen=True)
class SemFunK:
    fn: Callable  # value -> state -> kernel tree


@dataclass(frozen=True)
class SemRunner:
    coops: dict  # op -> (arg -> state -> kernel tree)
    excs: dict = field(default_factory=dict)  # op -> allowed exceptions (for the guard)


@dataclass
class FinalisationRecord:
    phi: Callable
    witness: object
    result: object


class Denoter:
    """Carries the effect tables and an optional log of finalisation witnesses."""

    def __init__(self, tables, record: bool = False):
        self.tables = tables
        self.records: list[FinalisationRecord] | None = [] if record else None

    def op_excs(self, op: str) -> frozenset:
        return self.tables.operations[op].excs

    # values
    def value(self, env, v):
        if isinstance(v, S.Var):
            return env[v.name]
        if isinstance(v, S.Lit):
            return v.value
        if isinstance(v, S.UnitVal):
            return UNIT_V
        if isinstance(v, S.Const):
            return _const(v.name, [self.value(env, a) for a in v.args])
        if isinstance(v, S.Pair):
            return (self.value(env, v.left), self.value(env, v.right))
        if isinstance(v, S.Inl):
            return InlV(self.value(env, v.value))
        if isinstance(v, S.Inr):
            return InrV(self.value(env, v.value))
        if isinstance(v, S.Ascribe):
            return self.value(env, v.value)
        if isinstance(v, S.Fun):
            (x,) = v.body.vars
            return SemFun(lambda a: self.user({**env, x: a}, v.body.body))
        if isinstance(v, S.FunK):
            (x,) = v.body.vars
            return SemFunK(lambda a: self.kernel({**env, x: a}, v.body.body))
        if isinstance(v, S.RunnerLit):
            coops = {}
            for op, b in v.clauses:
                (x,) = b.vars
                coops[op] = lambda a, b=b, x=x: self.kernel({**env, x: a}, b.body)
            return SemRunner(coops, {op: self.op_excs(op) for op, _ in v.clauses})
        raise OracleBug(f"not a value: {v!r}")

    # user computations: env -> tree
    def user(self, env, m):
        if isinstance(m, S.Return):
            return Leaf(("val", self.value(env, m.value)))
        if isinstance(m, S.App):
            return self.value(env, m.fn).fn(self.value(env, m.arg))
        if isinstance(m, (S.Try, S.Let)):
            ret, handlers = (m.body, {}) if isinstance(m, S.Let) else (m.ret, dict(m.handlers))
            (x,) = ret.vars

            def h(p):
                if p[0] == "val":
                    return self.user({**env, x: p[1]}, ret.body)
                n = handlers.get(p[1])
                return Leaf(p) if n is None else self.user(env, n)

            return kleisli(h, self.user(env, m.comp))
        if isinstance(m, S.MatchPair):
            a, b = self.value(env, m.value)
            x, y = m.body.vars
            return self.user({**env, x: a, y: b}, m.body.body)
        if isinstance(m, S.MatchEmpty):
            raise OracleBug("matched a value of the empty type")
        if isinstance(m, S.MatchSum):
            v = self.value(env, m.value)
            b = m.left if isinstance(v, InlV) else m.right
            return self.user({**env, b.vars[0]: v.value}, b.body)
        if isinstance(m, S.Op):
            (x,) = m.cont.vars
            hs = dict(m.handlers)
            return Node(
                m.op,
                self.value(env, m.arg),
                lambda b: self.user({**env, x: b}, m.cont.body),
                {e: (lambda e=e: self.user(env, hs[e]) if e in hs else Leaf(("exc", e))) for e in self.op_excs(m.op)},
            )
        if isinstance(m, S.Raise):
            return Leaf(("exc", m.exc))
        if isinstance(m, S.Run):
            r = self.value(env, m.runner)
            w = self.value(env, m.init)
            witness = runner_to_morphism(r)(self.user(env, m.comp))(w)
            return self.finalise(env, m.fin, witness)
        if isinstance(m, S.KernelSwitch):
            w = self.value(env, m.init)
            witness = self.kernel(env, m.comp)(w)
            return self.finalise(env, m.fin, witness)
        raise OracleBug(f"not a user computation: {m!r}")

    def finalisation_map(self, env, fin: S.Finally) -> Callable:
        def phi(p):
            if p[0] == "val":
                x, c = fin.ret.vars
                return self.user({**env, x: p[1], c: p[2]}, fin.ret.body)
            if p[0] == "exc":
                b = fin.raise_clause(p[1])
                if b is None:
                    raise OracleBug(f"no finalisation clause for {p[1]}")
                return self.user({**env, b.vars[0]: p[2]}, b.body)
            n = fin.kill_clause(p[1])
            if n is None:
                raise OracleBug(f"no finalisation clause for {p[1]}")
            return self.user(env, n)

        return phi

    def finalise(self, env, fin, witness):
        phi = self.finalisation_map(env, fin)
        result, witness = finalisation_apply(phi, witness)
        if self.records is not None:
            self.records.append(FinalisationRecord(phi, witness, result))
        return result

    # kernel computations: env -> state -> tree
    def kernel(self, env, k) -> Callable:
        return lambda c: self.kernel_at(env, k, c)

    def kernel_at(self, env, k, c):
        if isinstance(k, S.KReturn):
            return Leaf(("val", self.value(env, k.value), c))
        if isinstance(k, S.KApp):
            return self.value(env, k.fn).fn(self.value(env, k.arg))(c)
        if isinstance(k, (S.KTry, S.KLet)):
            ret, handlers = (k.body, {}) if isinstance(k, S.KLet) else (k.ret, dict(k.handlers))
            (x,) = ret.vars

            def h(p):
                if p[0] == "val":
                    return self.kernel_at({**env, x: p[1]}, ret.body, p[2])
                if p[0] == "exc" and p[1] in handlers:
                    return self.kernel_at(env, handlers[p[1]], p[2])
                return Leaf(p)

            return kleisli(h, self.kernel_at(env, k.comp, c))
        if isinstance(k, S.KMatchPair):
            a, b = self.value(env, k.value)
            x, y = k.body.vars
            return self.kernel_at({**env, x: a, y: b}, k.body.body, c)
        if isinstance(k, S.KMatchEmpty):
            raise OracleBug("matched a value of the empty type")
        if isinstance(k, S.KMatchSum):
            v = self.value(env, k.value)
            b = k.left if isinstance(v, InlV) else k.right
            return self.kernel_at({**env, b.vars[0]: v.value}, b.body, c)
        if isinstance(k, S.KOp):
            (x,) = k.cont.vars
            hs = dict(k.handlers)
            return Node(
                k.op,
                self.value(env, k.arg),
                lambda b: self.kernel_at({**env, x: b}, k.cont.body, c),
                {
                    e: (lambda e=e: self.kernel_at(env, hs[e], c) if e in hs else Leaf(("exc", e, c)))
                    for e in self.op_excs(k.op)
                },
            )
        if isinstance(k, S.KRaise):
            return Leaf(("exc", k.exc, c))
        if isinstance(k, S.Kill):
            return Leaf(("sig", k.sig))
        if isinstance(k, S.Getenv):
            return self.kernel_at({**env, k.body.vars[0]: c}, k.body.body, c)
        if isinstance(k, S.Setenv):
            return self.kernel_at(env, k.comp, self.value(env, k.value))
        if isinstance(k, S.UserSwitch):
            (x,) = k.ret.vars
            hs = dict(k.handlers)

            def h(p):
                if p[0] == "val":
                    return self.kernel_at({**env, x: p[1]}, k.ret.body, c)
                if p[1] in hs:
                    return self.kernel_at(env, hs[p[1]], c)
                return Leaf(("exc", p[1], c))

            return kleisli(h, self.user(env, k.comp))
        raise OracleBug(f"not a kernel computation: {k!r}")


# -- runners as monad morphisms ------------------------------------------------


def runner_to_morphism(r: SemRunner) -> Callable:
    """The homomorphism induced by ``r``: user tree -> state -> kernel tree."""

    def morph(t):
        def at(c):
            if isinstance(t, Leaf):
                if t.payload[0] == "val":
                    return Leaf(("val", t.payload[1], c))
                return Leaf(("exc", t.payload[1], c))
            coop = r.coops.get(t.op)
            if coop is None:
                raise OracleBug(f"runner does not cover {t.op}")
            allowed = r.excs.get(t.op)

            def resume(p):
                if p[0] == "val":
                    return morph(t.cont(p[1]))(p[2])
                if p[0] == "exc":
                    # the rho guard: only exceptions of the operation may come back
                    if (allowed is not None and p[1] not in allowed) or p[1] not in t.excs:
                        raise OracleBug(f"co-operation for {t.op} raised {p[1]}")
                    return morph(t.excs[p[1]]())(p[2])
                return Leaf(p)

            return kleisli(resume, coop(t.arg)(c))

        return at

    return morph


def generic_tree(op: str, arg, excs) -> Node:
    """``op(a, return, raise)``: the generic effect as a one-node tree."""
    return Node(op, arg, lambda b: Leaf(("val", b)), {e: (lambda e=e: Leaf(("exc", e))) for e in excs})


def recover_coops(morph: Callable, op_excs: dict) -> SemRunner:
    """Read a runner back from a morphism by applying it to generic effects."""
    return SemRunner(
        {op: (lambda a, op=op: morph(generic_tree(op, a, op_excs[op]))) for op in op_excs},
        dict(op_excs),
    )


def finalisation_apply(phi: Callable, t):
    """Return ``(phi-dagger(t), t)``; the second component witnesses the factoring."""
    return kleisli(phi, t), t


def denote_user(m, tables, env: dict | None = None, record: bool = False):
    d = Denoter(tables, record)
    out = d.user(dict(env or {}), m)
    return (out, d) if record else out


def denote_kernel(k, tables, env: dict | None = None):
    return Denoter(tables).kernel(dict(env or {}), k)


def denote_value(v, tables, env: dict | None = None):
    return Denoter(tables).value(dict(env or {}), v)
