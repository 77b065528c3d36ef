from __future__ import annotations

import pytest
from hypothesis import given, settings
from strategies import pure_programs

from coop import syntax as S
from coop import types as T
from coop.errors import CoopError, ParseError
from coop.oracle.generate import TABLES
from coop.parser import parse_comp, parse_program, parse_value, tokenize
from coop.printer import show_comp, show_program, show_value


def test_tokenizer_tracks_positions():
    toks = tokenize("let x =\n  1")
    one = [t for t in toks if t.text == "1"][0]
    assert (one.line, one.col) == (2, 3)


def test_declarations_populate_tables():
    p = parse_program(
        "exception E\nsignal S\noperation op : int ~> bool ! {E}\nreturn ()"
    )
    assert p.tables.operations["op"] == T.OpSig(T.INT, T.BOOL, frozenset({"E"}))
    assert "E" in p.tables.exceptions and "S" in p.tables.signals


def test_generic_effect_elaborates_to_operation_call():
    p = parse_program("exception E\noperation op : int ~> int ! {E}\nop 1")
    m = p.main
    assert isinstance(m, S.Op) and m.op == "op"
    (y,) = m.cont.vars
    assert m.cont.body == S.Return(S.Var(y))
    assert m.handlers == (("E", S.Raise("E", None)),)


def test_value_let_means_return():
    m = parse_program("let x = 1 in return x").main
    assert isinstance(m, S.Let) and m.comp == S.Return(S.Lit(1))


def test_computations_in_value_position_are_hoisted():
    m = parse_program("let f = fun (x : int) -> return x in return (f 1, 2)").main
    # the application is bound by a let before the pair is formed
    inner = m.body.body
    assert isinstance(inner, S.Let) and isinstance(inner.comp, S.App)


def test_strict_values_rejects_hoisting():
    with pytest.raises(CoopError):
        parse_program("let f = fun (x : int) -> return x in return (f 1, 2)", strict_values=True)


def test_binders_are_made_distinct():
    m = parse_program("let x = 1 in let x = 2 in return x").main
    names = S.bound_names(m)
    assert len(names) == 2


def test_string_escapes():
    assert parse_program('return "a\\"b\\n"').main == S.Return(S.Lit('a"b\n'))


def test_curried_constant_application():
    v = parse_value('concat "a" "b"', TABLES)
    assert v == S.Const("concat", (S.Lit("a"), S.Lit("b")))


@pytest.mark.parametrize(
    "src, fragment",
    [
        ("return (1", "expected ')'"),
        ("return x", "unbound variable x"),
        ("exception e\nexception e\nreturn ()", "already declared"),
        ("try return 1 with {raise nope -> return 2}", "undeclared exception nope"),
    ],
)
def test_parse_errors_carry_positions(src, fragment):
    with pytest.raises(ParseError) as info:
        parse_program(src, "f.coop")
    text = info.value.format("f.coop")
    assert text.startswith("f.coop:") and fragment in text


@settings(max_examples=150, deadline=None)
@given(pure_programs(depth=3))
def test_print_parse_round_trip(m):
    again = parse_comp(show_comp(m), TABLES)
    assert S.alpha_equal(again, m)


@settings(max_examples=50, deadline=None)
@given(pure_programs(depth=2))
def test_printing_is_idempotent_through_parsing(m):
    once = parse_comp(show_comp(m), TABLES)
    twice = parse_comp(show_comp(once), TABLES)
    assert S.alpha_equal(once, twice)


def test_program_printer_round_trips_corpus():
    from coop import corpus

    for entry in corpus.manifest()["programs"]:
        p = parse_program(corpus.read(entry["file"]), entry["file"])
        q = parse_program(show_program(p), entry["file"])
        assert S.alpha_equal(p.body, q.body), entry["file"]


def test_value_printing_is_fully_parenthesised():
    v = S.Pair(S.Lit(1), S.Inl(S.Lit(True), T.TSum(T.BOOL, T.UNIT)))
    assert show_value(v) == "(1, ((inl true) : bool + unit))"
