"""Helpers shared by the test modules: scripted containers and populations."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from coop import syntax as S
from coop import types as T
from coop.containers import Container, Reply
from coop.evaluator import Session
from coop.oracle import Denoter, freeze, kleisli
from coop.oracle.generate import OPS, TABLES, Gen, GenConfig, domains
from coop.typecheck import Checker
from coop.values import Outcome


class ScriptedContainer(Container):
    """Handles the generator's operations with seeded replies.

    ``kill_at`` (0-based call index) makes that call answer with a signal.
    """

    name = "scripted"
    signature = frozenset(OPS)
    op_excs = {op: TABLES.operations[op].excs for op in OPS}

    def __init__(self, seed: int = 0, kill_at: int | None = None, raise_rate: float = 0.2):
        self.seed = seed
        self.kill_at = kill_at
        self.raise_rate = raise_rate
        self.reset()

    def reset(self):
        self.rng = random.Random(self.seed)
        self.calls = 0

    def handle(self, op, arg):
        index = self.calls
        self.calls += 1
        if index == self.kill_at:
            return Reply.kill("s1")
        excs = sorted(self.op_excs[op])
        if excs and self.rng.random() < self.raise_rate:
            return Reply.raise_(self.rng.choice(excs))
        if op == "flip":
            return Reply.ret(self.rng.random() < 0.5)
        if op == "count":
            return Reply.ret(arg + 1)
        return Reply.ret()


def instrumented(m, carrier, excs):
    """``using Instr @ 0 run m finally {... -> return c}``.

    ``Instr`` forwards every operation unchanged and bumps an integer counter
    first, so the result is the number of operations that left ``m``.
    """
    clauses = []
    for op in OPS:
        sig = TABLES.operations[op]
        x, c, y = f"{op}_arg", f"{op}_c", f"{op}_res"
        fwd = S.KOp(
            op,
            S.Var(x),
            S.Bind((y,), S.KReturn(S.Var(y))),
            tuple((e, S.KRaise(e, (sig.result, T.INT))) for e in sorted(sig.excs)),
        )
        body = S.Getenv(S.Bind((c,), S.Setenv(S.Const("+", (S.Var(c), S.Lit(1))), fwd)))
        clauses.append((op, S.Bind((x,), body)))
    runner = S.RunnerLit(tuple(clauses), T.INT)
    fin = S.Finally(
        S.Bind(("res", "cost"), S.Return(S.Var("cost"))),
        tuple((e, S.Bind(("cost",), S.Return(S.Var("cost")))) for e in sorted(excs)),
        (),
    )
    return S.Run(runner, S.Lit(0), m, fin)


def agree(outcome: Outcome, tree) -> bool:
    if not hasattr(tree, "payload"):
        return False
    p = tree.payload
    if outcome.kind == "return":
        return p == ("val", outcome.value)
    return outcome.kind == "raise" and p == ("exc", outcome.value)


@dataclass
class Population:
    """Generated closed programs with evaluator and oracle results."""

    programs: list = field(default_factory=list)
    outcomes: list = field(default_factory=list)
    sessions: list = field(default_factory=list)
    mismatches: list = field(default_factory=list)
    ill_typed: int = 0
    seconds: float = 0.0


def pure_population(count: int = 1000, seed: int = 0, depth: int = 5) -> Population:
    """Generate, typecheck, evaluate and denote ``count`` pure programs."""
    start = time.perf_counter()
    pop = Population()
    rng = random.Random(seed)
    checker = Checker(TABLES)
    for i in range(count):
        m, _ty = Gen(rng, GenConfig(depth=depth)).pure_program()
        try:
            checker.infer_user({}, m)
        except Exception:
            pop.ill_typed += 1
            continue
        session = Session(None)
        outcome = session.run_toplevel(m)
        tree = Denoter(TABLES).user({}, m)
        pop.programs.append(m)
        pop.outcomes.append(outcome)
        pop.sessions.append(session)
        if not agree(outcome, tree):
            pop.mismatches.append((i, outcome, tree))
    pop.seconds = time.perf_counter() - start
    return pop


def open_program(rng: random.Random, depth: int = 3):
    """A closed program whose operations are left for the container."""
    g = Gen(rng, GenConfig(depth=depth))
    ty = g.ground_type()
    excs = g.subset(TABLES.exceptions, 0.3)
    return g.user(ty, frozenset(OPS), excs, (), depth), ty, excs


def witness_checks(m) -> tuple[int, int]:
    """Check ``phi-dagger(witness) == result`` for every finalisation in ``m``."""
    d = Denoter(TABLES, record=True)
    d.user({}, m)
    dom = domains(TABLES)
    ok = 0
    for rec in d.records:
        if freeze(kleisli(rec.phi, rec.witness), dom) == freeze(rec.result, dom):
            ok += 1
    return ok, len(d.records)
