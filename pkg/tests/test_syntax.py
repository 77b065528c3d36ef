from __future__ import annotations

from hypothesis import given, settings
from strategies import open_user_terms, pure_programs

from coop import syntax as S
from coop.printer import show_comp


def lam(x, body):
    return S.Fun(None, S.Bind((x,), body))


def test_free_vars_respect_binders():
    m = S.App(lam("x", S.Return(S.Pair(S.Var("x"), S.Var("y")))), S.Var("z"))
    assert S.free_vars(m) == {"y", "z"}


def test_substitution_avoids_capture():
    # (fun x -> return (x, y))[x/y] must not capture the free x
    body = lam("x", S.Return(S.Pair(S.Var("x"), S.Var("y"))))
    out = S.substitute(body, "y", S.Var("x"))
    (bound,) = out.body.vars
    assert bound != "x"
    assert out.body.body == S.Return(S.Pair(S.Var(bound), S.Var("x")))


def test_substitution_stops_at_shadowing_binder():
    body = lam("y", S.Return(S.Var("y")))
    assert S.substitute(body, "y", S.Lit(1)) is body


def test_fresh_names_are_deterministic_and_avoid_reserved():
    a = S.NameSupply(reserved={"x_1"})
    b = S.NameSupply(reserved={"x_1"})
    assert a.fresh("x") == b.fresh("x") == "x_2"
    assert a.fresh("x_2") == "x_3"


def test_alpha_equality_ignores_bound_names_only():
    a = lam("x", S.Return(S.Var("x")))
    b = lam("y", S.Return(S.Var("y")))
    c = lam("y", S.Return(S.Var("x")))
    assert S.alpha_equal(a, b)
    assert not S.alpha_equal(a, c)


def test_literal_kinds_are_distinguished():
    assert not S.alpha_equal(S.Lit(1), S.Lit(True))


@settings(max_examples=60, deadline=None)
@given(pure_programs())
def test_closed_programs_have_no_free_variables(m):
    assert S.free_vars(m) == frozenset()


@settings(max_examples=60, deadline=None)
@given(open_user_terms())
def test_substitution_eliminates_the_variable(m):
    out = S.substitute(m, "p", S.Lit(2))
    assert "p" not in S.free_vars(out)
    assert S.free_vars(out) <= S.free_vars(m)


@settings(max_examples=60, deadline=None)
@given(open_user_terms())
def test_substituting_a_variable_for_itself_is_identity(m):
    assert S.alpha_equal(S.substitute(m, "p", S.Var("p")), m)


@settings(max_examples=60, deadline=None)
@given(open_user_terms())
def test_renaming_free_variable_round_trips(m):
    # p -> q -> p is the identity up to alpha whenever q is not already free
    assert "q" not in S.free_vars(m)
    there = S.substitute(m, "p", S.Var("q"))
    back = S.substitute(there, "q", S.Var("p"))
    assert S.alpha_equal(back, m)


@settings(max_examples=60, deadline=None)
@given(pure_programs())
def test_alpha_equal_is_reflexive_and_printing_is_stable(m):
    assert S.alpha_equal(m, m)
    assert show_comp(m) == show_comp(m)


def test_subterms_visit_every_node():
    m = S.Let(S.Return(S.Lit(1)), S.Bind(("x",), S.Return(S.Var("x"))))
    kinds = [type(t).__name__ for t in S.subterms(m)]
    assert kinds == ["Let", "Return", "Lit", "Return", "Var"]
    assert S.bound_names(m) == {"x"}
