"""Acceptance criteria. Each test prints one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the lines are repeated in
the terminal summary under "acceptance criteria".
"""

from __future__ import annotations

import random
import time

from support import ScriptedContainer, instrumented, open_program, witness_checks

from coop import corpus
from coop.containers import FsSimConfig, FsSimContainer, make_container
from coop.evaluator import Session
from coop.oracle import equations, freeze, kleisli, recover_coops, runner_to_morphism
from coop.oracle.generate import (
    EXCS,
    OPS,
    STATE_TYPES,
    TABLES,
    domains,
    random_frozen_tree,
    random_kleisli_fn,
    random_sem_runner,
    user_leaf,
)
from coop.oracle.trees import Leaf, enumerate_ground, thaw
from coop.pipeline import run_source
from coop.typecheck import Checker
from coop import types as T

DOM = domains(TABLES)


def _line(n: int, ok: bool, text: str, seconds: float, limit: float | None = None) -> str:
    budget = f" (limit {limit:g}s)" if limit is not None else ""
    return f"AC{n} {'PASS' if ok else 'FAIL'}: {text} [{seconds:.2f}s{budget}]"


# 1 ------------------------------------------------------------------------------


def test_ac1_corpus(report):
    start = time.perf_counter()
    pos = corpus.check_positive()
    neg = corpus.check_negative()
    seconds = time.perf_counter() - start
    n_pos, n_neg = sum(r.ok for r in pos), sum(r.ok for r in neg)
    ok = n_pos == len(pos) == 6 and n_neg == len(neg) == 6 and seconds < 1.0
    report(_line(1, ok, f"corpus {n_pos}/6 programs, {n_neg}/6 negative variants rejected by the intended rule",
                 seconds, 1))
    assert ok, [r for r in pos + neg if not r.ok]


# 2 ------------------------------------------------------------------------------


def test_ac2_equations(report):
    start = time.perf_counter()
    reps = equations.run_suite(cases=100, seed=0)
    muts = equations.run_suite(equations.MUTATIONS, cases=100, seed=0)
    seconds = time.perf_counter() - start
    good = [r for r in reps if r.passed and r.cases >= 100]
    caught = [r for r in muts if r.failures >= 1]
    ok = (
        len(reps) >= 35
        and len(good) == len(reps)
        and len(muts) >= 10
        and len(caught) == len(muts)
        and seconds < 60
    )
    report(_line(2, ok, f"{len(good)}/{len(reps)} schemas x 100 instances hold; "
                        f"{len(caught)}/{len(muts)} mutations refuted", seconds, 60))
    assert ok, [(r.schema, r.cases, r.failures) for r in reps + muts if r not in good + caught]


# 3 ------------------------------------------------------------------------------


def test_ac3_agreement(population, report):
    n = len(population.programs)
    ok = n >= 1000 and not population.mismatches and population.ill_typed == 0 and population.seconds < 120
    report(_line(3, ok, f"{n} programs (depth 5), {len(population.mismatches)} evaluator/oracle mismatches",
                 population.seconds, 120))
    assert ok


# 4 ------------------------------------------------------------------------------


def _corpus_sessions():
    out = []
    for entry in corpus.manifest()["programs"]:
        out.append(corpus.run_positive(entry).session)
    return out


def test_ac4_finalisation(population, report):
    start = time.perf_counter()
    # exactly one clause per run construct that no outer kill bypassed
    exact, runs, inner_bypassed = True, 0, 0
    for s in population.sessions + _corpus_sessions():
        for inst in s.log.instances:
            if inst.bypassed:
                inner_bypassed += 1
                exact &= len(inst.fired) <= 1
            else:
                runs += 1
                exact &= len(inst.fired) == 1
        exact &= not s.log.reads_after_kill()
    # injected container kills: at most one clause, some bypassed
    rng = random.Random(4)
    at_most_one, bypassed, killed = True, 0, 0
    for i in range(300):
        m, _ty, _e = open_program(rng, depth=4)
        Checker(TABLES).infer_user({}, m)
        s = Session(ScriptedContainer(seed=i, kill_at=rng.randrange(4)))
        out = s.run_toplevel(m)
        killed += out.kind == "kill"
        at_most_one &= not s.log.violations() and all(c <= 1 for c in s.log.counts().values())
        at_most_one &= not s.log.reads_after_kill()
        bypassed += sum(inst.bypassed for inst in s.log.instances)
    fs = FsSimContainer(FsSimConfig(fail_at_write=0))
    res = run_source(corpus.read("nesting.coop"), "nesting.coop", fs)
    at_most_one &= not res.session.log.violations()
    # the factoring witness
    wit_ok = wit_total = 0
    for m in population.programs:
        a, b = witness_checks(m)
        wit_ok, wit_total = wit_ok + a, wit_total + b
    seconds = time.perf_counter() - start
    ok = exact and at_most_one and killed > 0 and bypassed > 0 and wit_ok == wit_total > 0
    report(_line(4, ok, f"{runs} run/kernel instances fire exactly once ({inner_bypassed} bypassed by a "
                        f"co-operation kill, <= 1); {killed} container-killed runs keep counts <= 1 "
                        f"({bypassed} bypassed); witness {wit_ok}/{wit_total}", seconds))
    assert ok


# 5 ------------------------------------------------------------------------------


def test_ac5_runner_morphism_roundtrip(report):
    start = time.perf_counter()
    rng = random.Random(5)
    op_excs = {op: TABLES.operations[op].excs for op in OPS}
    runners = coop_checks = tree_checks = 0
    ok = True
    for i in range(24):
        state = STATE_TYPES[i % len(STATE_TYPES)]
        r = random_sem_runner(rng, state)
        morph = runner_to_morphism(r)
        back = recover_coops(morph, op_excs)
        for op in OPS:
            for a in enumerate_ground(TABLES.operations[op].param):
                for c in enumerate_ground(state):
                    coop_checks += 1
                    ok &= freeze(back.coops[op](a)(c), DOM) == freeze(r.coops[op](a)(c), DOM)
        again = runner_to_morphism(back)
        for _ in range(40):
            t = thaw(random_frozen_tree(rng, 3, user_leaf(rng, T.INT)))
            for c in enumerate_ground(state):
                tree_checks += 1
                ok &= freeze(again(t)(c), DOM) == freeze(morph(t)(c), DOM)
        runners += 1
    seconds = time.perf_counter() - start
    ok &= runners >= 20
    report(_line(5, ok, f"{runners} runners: {coop_checks} co-operation round trips, "
                        f"{tree_checks} morphism round trips on trees of depth <= 3", seconds))
    assert ok


# 6 ------------------------------------------------------------------------------


def test_ac6_monad_laws(report):
    start = time.perf_counter()
    rng = random.Random(6)
    laws = 0
    ok = True
    def leaf_factory(r):
        return user_leaf(r, T.BOOL, EXCS)

    for _ in range(500):
        t = thaw(random_frozen_tree(rng, 4, leaf_factory(rng)))
        f = random_kleisli_fn(rng, 2, leaf_factory)
        g = random_kleisli_fn(rng, 2, leaf_factory)
        p = leaf_factory(rng)()
        ok &= freeze(kleisli(f, Leaf(p)), DOM) == freeze(f(p), DOM)
        ok &= freeze(kleisli(Leaf, t), DOM) == freeze(t, DOM)
        lhs = kleisli(g, kleisli(f, t))
        rhs = kleisli(lambda q: kleisli(g, f(q)), t)
        ok &= freeze(lhs, DOM) == freeze(rhs, DOM)
        laws += 3
    seconds = time.perf_counter() - start
    report(_line(6, ok, f"500 trees of depth <= 4: {laws} unit/associativity instances hold", seconds))
    assert ok


# 7 ------------------------------------------------------------------------------


def _fileio(config: FsSimConfig):
    fs = FsSimContainer(config)
    res = run_source(corpus.read("fileio.coop"), "fileio.coop", fs)
    fired = [f for inst in res.session.log.instances for f in inst.fired]
    return res.outcome.show(), fs.calls["close"], fired, fs


def test_ac7_resources(report):
    start = time.perf_counter()
    rows = {
        "success": _fileio(FsSimConfig()),
        "quota": _fileio(FsSimConfig(quota=5)),
        "ioerror": _fileio(FsSimConfig(fail_at_write=0)),
    }
    matrix = (
        rows["success"][:3] == ("return ()", 1, ["return"])
        and rows["success"][3].files["hello.txt"] == "Hello, world."
        and rows["quota"][:3] == ("return ()", 1, ["raise QuotaExceeded"])
        and rows["ioerror"][:3] == ("return ()", 0, ["kill IOError"])
    )
    fs = make_container("fs-sim")
    res = run_source(corpus.read("nesting.coop"), "nesting.coop", fs)
    nesting = (
        res.outcome.show() == "return ()"
        and fs.calls["write"] == 1
        and list(fs.files.values()) == ["Hello, world.Hello, again."]
    )
    rng = random.Random(7)
    cost_ok = 0
    for i in range(50):
        m, ty, excs = open_program(rng, depth=4)
        prog = instrumented(m, ty, excs)
        Checker(TABLES).infer_user({}, prog)
        box = ScriptedContainer(seed=i)
        out = Session(box).run_toplevel(prog)
        cost_ok += out.kind == "return" and out.value == box.calls
    seconds = time.perf_counter() - start
    ok = matrix and nesting and cost_ok == 50
    report(_line(7, ok, f"file-IO matrix {'matches' if matrix else 'differs'}; nesting "
                        f"{'one write' if nesting else 'wrong'}; instrumentation cost exact on {cost_ok}/50", seconds))
    assert ok


# 8 ------------------------------------------------------------------------------


def test_ac8_affinity(population, report):
    start = time.perf_counter()
    sessions = list(population.sessions) + _corpus_sessions()
    rng = random.Random(8)
    for i in range(200):
        m, _ty, _e = open_program(rng, depth=4)
        s = Session(ScriptedContainer(seed=i, kill_at=rng.choice((None, 1, 3))))
        s.run_toplevel(m)
        sessions.append(s)
    groups = sum(s.stats["groups"] for s in sessions)
    invocations = sum(s.stats["invocations"] for s in sessions)
    violations = sum(s.stats["violations"] for s in sessions)
    seconds = time.perf_counter() - start
    ok = violations == 0 and groups > 0 and invocations <= groups
    report(_line(8, ok, f"{len(sessions)} evaluations: {groups} continuation groups, {invocations} resumptions, "
                        f"{violations} reused", seconds))
    assert ok
