from __future__ import annotations

import pytest

from coop import syntax as S
from coop import types as T
from coop.oracle import equations
from coop.oracle.equations import IllTyped, Instance, check_equation


def test_schema_count():
    assert len(equations.SCHEMAS) >= 35
    assert len(equations.MUTATIONS) >= 10
    assert not set(equations.SCHEMAS) & set(equations.MUTATIONS)


@pytest.mark.parametrize("schema", sorted(equations.SCHEMAS))
def test_schema_holds(schema):
    rep = equations.run_schema(schema, cases=30, seed=3)
    assert rep.cases == 30
    assert rep.failures == 0, rep.first_failure


@pytest.mark.parametrize("mutation", sorted(equations.MUTATIONS))
def test_mutation_is_refuted(mutation):
    rep = equations.run_schema(mutation, cases=60, seed=3)
    assert rep.failures >= 1


def test_instances_are_reproducible():
    a = equations.make_instance("run-op", 5, 7)
    b = equations.make_instance("run-op", 5, 7)
    assert S.alpha_equal(a.lhs, b.lhs) and S.alpha_equal(a.rhs, b.rhs)




def test_setenv_overwrites():
    get = S.Getenv(S.Bind(("c",), S.KReturn(S.Var("c"))))
    inst = Instance("kernel", S.Setenv(S.Lit(1), S.Setenv(S.Lit(2), get)), S.Setenv(S.Lit(2), get), state=T.INT)
    assert check_equation("setenv-setenv", inst)
    wrong = Instance("kernel", inst.lhs, S.Setenv(S.Lit(1), get), state=T.INT)
    assert not check_equation("setenv-setenv", wrong)


def test_try_eta_on_a_raise():
    m = S.Raise("e1", T.INT)
    lhs = S.Try(m, S.Bind(("x",), S.Return(S.Var("x"))), (("e1", S.Raise("e1", T.INT)),))
    assert check_equation("try-eta", Instance("user", lhs, m))


def test_ill_typed_instance_is_rejected():
    inst = Instance("user", S.Return(S.Const("+", (S.Lit(1), S.Lit(True)))), S.Return(S.Lit(1)))
    with pytest.raises(IllTyped):
        check_equation("beta", inst)


def test_open_instance_quantifies_over_environments():
    lhs = S.Return(S.Var("u"))
    inst = Instance("user", lhs, S.Return(S.Lit(0)), ctx=(("u", T.INT),))
    assert not check_equation("beta", inst)
    inst = Instance("user", S.Return(S.Var("u")), S.Return(S.Var("u")), ctx=(("u", T.BOOL),))
    assert check_equation("beta", inst)
