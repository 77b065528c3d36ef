from __future__ import annotations

import pytest
from hypothesis import given, settings
from strategies import pure_programs

from coop import types as T
from coop.errors import TypeCheckError
from coop.oracle.generate import TABLES
from coop.parser import parse_program
from coop.pipeline import check_source
from coop.typecheck import Checker

TICK = "operation tick : unit ~> int\n"


def types_of(src):
    _p, types = check_source(src)
    return types


def rules(src):
    return [e.rule for e in types_of(src).errors]


def test_tick_runner_type():
    t = types_of(TICK + "let r = { tick x -> getenv (c. setenv (c + 1, return c)) } @ int\nreturn ()")
    ((name, ty),) = t.bindings
    assert name == "r"
    assert ty.carrier == T.TRunner(frozenset({"tick"}), frozenset(), frozenset(), T.INT)


def test_run_removes_handled_operations():
    src = TICK + (
        "using ({ tick x -> getenv (c. setenv (c + 1, return c)) } @ int) @ 0 run\n"
        "  let a = tick () in return a\n"
        "finally { return x @ c -> return (x, c) }"
    )
    t = types_of(src)
    assert not t.errors
    assert t.main == T.UserType(T.TProd(T.INT, T.INT), frozenset(), frozenset())


def test_external_operations_of_a_runner_surface():
    src = TICK + "operation out : int ~> unit\n" + (
        "using ({ tick x -> out 1; return 0 } @ unit) @ () run tick ()\n"
        "finally { return x @ c -> return x }"
    )
    assert types_of(src).main.ops == frozenset({"out"})


def test_try_removes_handled_exceptions():
    src = "exception e\nexception f\ntry raise e with { return x -> return x, raise e -> return 1 }"
    t = types_of(src)
    assert not t.errors and t.main.excs == frozenset()


@pytest.mark.parametrize(
    "src, rule",
    [
        ("return (1 + true)", "TyValue-Const"),
        ("exception e\nlet f : unit -> int ! ({}, {}) = fun (x : unit) -> raise e in f ()", "TyUser-Raise"),
        (TICK + "let r = { tick x -> setenv (true, return 1) } @ int\nreturn ()", "TyKernel-Setenv"),
        (TICK + "signal s\nlet r : {tick} => ({}, {}, int) = { tick x -> kill s } @ int\nreturn ()", "TyKernel-Kill"),
        ("exception e\n" + TICK + "let r = { tick x -> raise e } @ int\nreturn ()", "TyValue-Runner"),
        (TICK + "using ({} @ int) @ 0 run tick () finally { return x @ c -> return x }", "TyUser-Run"),
        (TICK + "signal s\nusing ({ tick x -> kill s } @ int) @ 0 run tick () finally { return x @ c -> return x }",
         "TyUser-Run"),
        ("match 1 with { (a, b) -> return a }", "TyUser-MatchPair"),
        ("match 1 with { inl a -> return a, inr b -> return b }", "TyUser-MatchSum"),
        ("let f = 1 in f 2", "TyUser-Apply"),
    ],
)
def test_rejections_name_the_rule(src, rule):
    assert rule in rules(src)


def test_first_error_is_not_followed_by_cascade():
    src = TICK + "let r = { tick x -> setenv (true, return 1) } @ int\nusing r @ 0 run tick () finally { return x @ c -> return x }"
    assert rules(src) == ["TyKernel-Setenv"]


def test_extra_finally_clauses_are_allowed():
    src = "exception e\nsignal s\n" + TICK + (
        "using ({ tick x -> return 0 } @ int) @ 0 run tick ()\n"
        "finally { return x @ c -> return x, raise e @ c -> return 0, kill s -> return 0 }"
    )
    assert rules(src) == []


def test_subsumption_on_function_arguments():
    src = "exception e\n" + (
        "let apply : (int -> int ! ({}, {e})) -> int ! ({}, {e}) = fun (f : int -> int ! ({}, {e})) -> f 1 in\n"
        "apply (fun (y : int) -> return y)"
    )
    assert rules(src) == []


def test_diagnostic_format_has_position_and_rule():
    _p, t = check_source("return (1 + true)", "bad.coop")
    (err,) = t.errors
    assert err.format("bad.coop").startswith("bad.coop:1:")
    assert ": TyValue-Const: " in err.format("bad.coop")


@settings(max_examples=100, deadline=None)
@given(pure_programs(depth=3))
def test_generated_programs_typecheck(m):
    ty = Checker(TABLES).infer_user({}, m)
    assert ty.ops == frozenset()


def test_checker_raises_on_ill_typed_term():
    m = parse_program("return (1 + true)").main
    with pytest.raises(TypeCheckError):
        Checker(T.EffectTables()).infer_user({}, m)
