from __future__ import annotations

import pytest

from ccm.core import eval_guard, eval_update
from ccm.dsl import parse_expr
from ccm.expr import (
    TRUE,
    And,
    Const,
    DomainError,
    Not,
    Var,
    VarDecl,
    VarSpace,
    evaluate,
    render,
    variables,
)


def test_guard_examples():
    assert eval_guard(Not(Var("y")), {"x": True, "y": False})
    assert eval_guard(TRUE, {})
    g = parse_expr("x || b && y")
    assert eval_guard(g, {"x": False, "b": True, "y": True})


def test_update_examples():
    s = {"x": True, "b": False, "y": True}
    assert eval_update((), s) == s
    u = (("x", Const(False)), ("b", Const(True)))
    assert eval_update(u, s) == {"x": False, "b": True, "y": True}


def test_parallel_swap():
    space = VarSpace([VarDecl("x", 3), VarDecl("y", 3, 1)])
    u = (("x", Var("y")), ("y", Var("x")))
    assert eval_update(u, {"x": 0, "y": 1}, space) == {"x": 1, "y": 0}
    f = space.compile_update(u)
    assert f((0, 1)) == (1, 0)


def test_domain_error_names_variable():
    space = VarSpace([VarDecl("n", 2)])
    f = space.compile_update((("n", Const(3)),))
    with pytest.raises(DomainError) as info:
        f((0,))
    assert "n" in str(info.value)


def test_undeclared_variable_is_static_error():
    space = VarSpace([VarDecl("x")])
    with pytest.raises(Exception):
        space.check_guard(Var("zz"))


def test_render_round_trips_precedence():
    for text in ["x || b && y", "(x || b) && y", "!(x == y)", "!x != y", "x && (y || !b)"]:
        e = parse_expr(text)
        assert parse_expr(render(e)) == e


def test_variables_and_evaluate():
    e = And((Var("a"), Not(Var("b"))))
    assert variables(e) == {"a", "b"}
    assert evaluate(e, {"a": True, "b": False}) is True


def test_state_space_size_and_order():
    space = VarSpace([VarDecl("a"), VarDecl("n", 2)])
    states = list(space.states())
    assert len(states) == space.size() == 6
    assert states[0] == (False, 0)
