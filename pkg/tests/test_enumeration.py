from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccm.core import CapExceeded, Operation, Program, Valid, validate_execution
from ccm.enumeration import (
    behaviors,
    desugar_reads,
    enumerate_cc,
    enumerate_cc_oracle,
    enumerate_sc,
)
from ccm.expr import FALSE, Const, Eq, Not, Var, VarDecl, VarSpace

from conftest import CORPUS, bools, program

T, F = Const(True), Const(False)


class TestDesugar:
    def test_no_weak_reads(self, sb):
        assert desugar_reads(sb) == [sb]

    def test_boolean_read(self):
        p = Program(bools("v", "r"), [Operation("o", read=("r", "v"))])
        out = desugar_reads(p)
        assert [q.ops[0].guard for q in out] == [Eq(Var("v"), F), Eq(Var("v"), T)]
        assert all(q.is_concrete for q in out)

    def test_int_read(self):
        space = VarSpace([VarDecl("v", 3), VarDecl("r", 3)])
        p = Program(space, [Operation("o", read=("r", "v"))])
        assert len(desugar_reads(p)) == 4


class TestCC:
    def test_sb_complete(self, sb):
        res = enumerate_cc(sb, sb.space.initial, True)
        assert len(res) >= 1
        assert behaviors(res) == {sb.space.state(x=True, y=True)}

    def test_lowenstein_has_no_complete_execution(self):
        p = program("lowenstein-annotated")
        assert len(enumerate_cc(p, p.space.initial, True)) == 0
        assert len(enumerate_cc(program("lowenstein"), program("lowenstein").space.initial, True)) == 0

    def test_fig2_from_every_init(self):
        p = program("fig2")
        for s in p.space.states():
            assert len(enumerate_cc(p, s, True)) > 0
            assert len(enumerate_sc(p, s, True)) == 0

    def test_every_result_validates(self, lowenstein):
        for ex in enumerate_cc(lowenstein, lowenstein.space.initial):
            assert isinstance(validate_execution(ex.program, ex.order, ex.carrier, ex.init), Valid)

    def test_op_cap(self, sb):
        with pytest.raises(CapExceeded):
            enumerate_cc(sb, sb.space.initial, max_ops=3)

    def test_downset_cap(self, sb):
        with pytest.raises(CapExceeded):
            enumerate_cc(sb, sb.space.initial, max_downsets=3)

    def test_conflict_variables_force_order(self):
        ops = [Operation("a", update=(("x", T),), conflict_vars=frozenset({"c"})),
               Operation("b", update=(("y", T),), conflict_vars=frozenset({"c"}))]
        p = Program(bools("x", "y"), ops)
        for ex in enumerate_cc(p, (False, False), True):
            assert ("a", "b") in ex.order or ("b", "a") in ex.order

    def test_weak_reads_key_includes_value(self):
        ops = [Operation("w", update=(("v", T),)), Operation("o", read=("r", "v"))]
        p = Program(bools("v", "r"), ops)
        res = enumerate_cc(p, (False, False), True)
        assert {ex.reads for ex in res} == {(("o", False),), (("o", True),)}
        assert res.keys() == enumerate_cc_oracle(p, (False, False), True).keys()


class TestOracle:
    def test_single_op(self):
        p = Program(bools("x"), [Operation("o", update=(("x", T),))])
        res = enumerate_cc_oracle(p, (False,))
        assert sorted(sorted(e.carrier) for e in res) == [[], ["o"]]

    def test_false_guard(self):
        p = Program(bools("x"), [Operation("o", guard=FALSE)])
        assert [e.carrier for e in enumerate_cc_oracle(p, (False,))] == [frozenset()]

    @pytest.mark.parametrize("path", sorted(CORPUS.glob("*.ccm")), ids=lambda p: p.stem)
    def test_corpus_agreement(self, path):
        from ccm import dsl

        p = dsl.load(path).program()
        if len(p.ops) > 6:
            pytest.skip("beyond the oracle's size")
        for complete in (False, True):
            a = enumerate_cc(p, p.space.initial, complete)
            b = enumerate_cc_oracle(p, p.space.initial, complete)
            assert a.keys() == b.keys()
            assert behaviors(a) == behaviors(b)

    def test_sb_oracle_behaviors(self, sb):
        init = sb.space.initial
        assert behaviors(enumerate_cc_oracle(sb, init, True)) == behaviors(enumerate_cc(sb, init, True))


class TestSC:
    def test_sb_has_no_complete_run(self, sb):
        assert len(enumerate_sc(sb, sb.space.initial, True)) == 0

    def test_straight_line(self):
        ops = [Operation("a", update=(("x", T),)), Operation("b", guard=Var("x"))]
        p = Program(bools("x"), ops, [("a", "b")])
        assert len(enumerate_sc(p, (False,), True)) == 1

    def test_empty_behaviors(self, sb):
        assert behaviors(enumerate_sc(sb, sb.space.initial, True)) == frozenset()


@st.composite
def random_programs(draw):
    n = draw(st.integers(1, 4))
    ops = []
    for i in range(n):
        guard = draw(st.sampled_from([Const(True), Var("x"), Not(Var("y")), Not(Var("x"))]))
        upd = draw(st.sampled_from([(), (("x", T),), (("y", T),), (("x", F),), (("y", Not(Var("x"))),)]))
        ops.append(Operation(f"o{i}", guard=guard, update=upd))
    pairs = [(f"o{i}", f"o{j}") for i in range(n) for j in range(i + 1, n) if draw(st.booleans())]
    return Program(bools("x", "y"), ops, pairs)


@settings(max_examples=120, deadline=None)
@given(random_programs(), st.booleans(), st.booleans())
def test_cc_matches_oracle(p, x, y):
    init = (x, y)
    fast, slow = enumerate_cc(p, init), enumerate_cc_oracle(p, init)
    assert fast.keys() == slow.keys()


@settings(max_examples=80, deadline=None)
@given(random_programs(), st.booleans(), st.booleans())
def test_sc_behaviors_are_cc_behaviors(p, x, y):
    init = (x, y)
    assert enumerate_sc(p, init).keys() <= enumerate_cc(p, init).keys()
