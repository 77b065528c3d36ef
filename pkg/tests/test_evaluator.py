from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import given, settings
from strategies import pure_programs
from support import ScriptedContainer

from coop import syntax as S
from coop import types as T
from coop.containers import make_container
from coop.errors import UnhandledOperation
from coop.evaluator import AffinityViolation, ContGroup, Session, run_program
from coop.oracle import equations
from coop.oracle.generate import TABLES
from coop.parser import parse_program
from coop.pipeline import run_source
from coop.typecheck import Checker
from coop.values import Outcome

HERE = Path(__file__).parent


def run(src, container="pure", **kw):
    return run_source(src, "t.coop", container, **kw)


def test_tick_program():
    res = run((HERE / "programs" / "tick.coop").read_text())
    assert res.outcome == Outcome("return", (1, 2))
    assert res.outcome.show() == "return (1, 2)"


def test_return_in_pure_container_has_empty_log():
    res = run("return 1")
    assert res.outcome.show() == "return 1"
    assert res.session.log.instances == []


def test_uncaught_exception_and_exit_codes():
    assert run("exception e\nraise e").outcome.exit_code == 1
    src = "signal s\nusing ({} @ unit) @ () run return 1 finally { return x @ c -> return x }"
    assert run(src).outcome.exit_code == 0


def test_kill_from_coop_routes_to_kill_clause_and_discards_state():
    src = (
        "signal s\noperation tick : unit ~> int\n"
        "using ({ tick x -> kill s } @ int) @ 0 run tick ()\n"
        "finally { return x @ c -> return c, kill s -> return 42 }"
    )
    res = run(src)
    assert res.outcome.show() == "return 42"
    (inst,) = res.session.log.instances
    assert inst.fired == ["kill s"]
    assert res.session.log.reads_after_kill() == []


def test_try_catches_exception_raised_by_coop():
    src = (
        "exception e\noperation tick : unit ~> int ! {e}\n"
        "using ({ tick x -> raise e } @ int) @ 0 run\n"
        "  try tick () with { return y -> return y, raise e -> return 7 }\n"
        "finally { return x @ c -> return x, raise e @ c -> return 0 }"
    )
    assert run(src).outcome.show() == "return 7"


def test_getenv_setenv_thread_state():
    src = (
        "operation tick : unit ~> int\n"
        "kernel (getenv (c. setenv (c + 5, getenv (d. return (c, d))))) @ 1\n"
        "finally { return x @ c -> return (x, c) }"
    )
    assert run(src).outcome.show() == "return ((1, 6), 6)"


def test_user_switch_inside_kernel():
    src = (
        "exception e\n"
        "kernel (user (raise e) with { return x -> return 1, raise e -> getenv (c. return c) }) @ 9\n"
        "finally { return x @ c -> return x, raise e @ c -> return 0 }"
    )
    assert run(src).outcome.show() == "return 9"


def test_residual_operation_reaches_container():
    box = ScriptedContainer(seed=1, raise_rate=0.0)
    m = S.Op("count", S.Lit(4), S.Bind(("y",), S.Return(S.Var("y"))), ())
    out = Session(box).run_toplevel(m)
    assert out == Outcome("return", 5) and box.calls == 1


def test_unhandled_operation_is_dynamic_error_without_check():
    src = "operation op : unit ~> unit\nop ()"
    with pytest.raises(UnhandledOperation):
        run(src, check=False)


def test_container_kill_is_an_outer_kill():
    box = ScriptedContainer(seed=0, kill_at=0)
    session = Session(box)
    out = session.run_toplevel(_flip_through_runner())
    assert out == Outcome("kill", "s1")
    (inst,) = session.log.instances
    assert inst.bypassed and inst.fired == []
    assert session.log.violations() == []


def _flip_through_runner():
    """A runner that forwards ``flip`` to the container."""
    forward = S.KOp("flip", S.Var("a"), S.Bind(("r",), S.KReturn(S.Var("r"))), ())
    runner = S.RunnerLit((("flip", S.Bind(("a",), forward)),), T.UNIT)
    body = S.Op("flip", S.UnitVal(), S.Bind(("b",), S.Return(S.Var("b"))), ())
    fin = S.Finally(S.Bind(("x", "c"), S.Return(S.Var("x"))), (), ())
    return S.Run(runner, S.UnitVal(), body, fin)


def test_continuations_are_affine():
    session = Session()
    group = ContGroup(session)
    k1, k2 = group.wrap(lambda: 1), group.wrap(lambda: 2)
    assert k1() == 1
    with pytest.raises(AffinityViolation):
        k2()
    assert session.stats["violations"] == 1


def test_trace_events_follow_schema():
    res = run((HERE / "programs" / "tick.coop").read_text(), trace=True)
    events = res.session.trace_events
    assert [e["event"] for e in events] == ["op", "coop-return", "op", "coop-return", "finally"]
    for e in events:
        assert set(e) <= {"event", "op", "exception", "signal", "clause", "runDepth"}
        assert isinstance(e["runDepth"], int)


@settings(max_examples=60, deadline=None)
@given(pure_programs(depth=4))
def test_evaluation_is_deterministic(m):
    a, b = Session(), Session()
    assert a.run_toplevel(m) == b.run_toplevel(m)
    assert a.log.counts() == b.log.counts()
    assert a.stats == b.stats


@settings(max_examples=60, deadline=None)
@given(pure_programs(depth=4))
def test_finalisation_exactly_once_unless_bypassed(m):
    s = Session()
    s.run_toplevel(m)
    assert s.log.violations() == []
    assert s.stats["violations"] == 0


OBSERVABLE_SCHEMAS = [
    sid for sid in sorted(equations.SCHEMAS)
    if sid not in ("match-empty", "k-match-empty", "unit-eta", "fun-eta", "funk-eta")
]


def _observe(inst, state):
    """Close a kernel instance side into a user computation exposing everything."""
    checker = Checker(TABLES)
    carrier = T.join(*(checker.infer_kernel({}, k, inst.state).carrier for k in (inst.lhs, inst.rhs)))
    out = T.TSum(T.TProd(carrier, inst.state), T.INT)
    sigs = sorted(TABLES.signals)
    fin = S.Finally(
        S.Bind(("x", "c"), S.Return(S.Inl(S.Pair(S.Var("x"), S.Var("c")), out))),
        tuple((e, S.Bind(("c",), S.Raise(e, out))) for e in sorted(TABLES.exceptions)),
        tuple((s, S.Return(S.Inr(S.Lit(i), out))) for i, s in enumerate(sigs)),
    )
    return [S.KernelSwitch(k, state, fin) for k in (inst.lhs, inst.rhs)]


@pytest.mark.parametrize("schema", OBSERVABLE_SCHEMAS)
def test_equations_hold_observationally(schema):
    """Both sides of closed instances give the evaluator the same outcome."""
    from coop.oracle.trees import enumerate_ground

    def lit(v):
        if isinstance(v, bool) or isinstance(v, int):
            return S.Lit(v)
        return S.UnitVal()

    checked = 0
    for i in range(30):
        inst = equations.make_instance(schema, 11, i)
        if inst.ctx:
            continue
        if inst.sort == "user":
            pairs = [(inst.lhs, inst.rhs)]
        else:
            pairs = [_observe(inst, lit(c)) for c in enumerate_ground(inst.state)]
        for lhs, rhs in pairs:
            a = Session(ScriptedContainer(seed=i)).run_toplevel(lhs)
            b = Session(ScriptedContainer(seed=i)).run_toplevel(rhs)
            assert a == b, (schema, i)
            checked += 1
    assert checked > 0


def test_fs_program_needs_its_container():
    from coop import corpus
    from coop.pipeline import MissingExternal

    with pytest.raises(MissingExternal):
        run(corpus.read("fileio.coop"), "pure")
    p = parse_program(corpus.read("fileio.coop"))
    out, _session = run_program(p, make_container("fs-sim"))
    assert out.show() == "return ()"
