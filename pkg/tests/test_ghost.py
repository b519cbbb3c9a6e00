from __future__ import annotations

import dataclasses

import pytest

from ccm.core import Operation, Program
from ccm.enumeration import enumerate_cc
from ccm.expr import Const, Not, Var, VarDecl, VarSpace
from ccm.ghost import (
    Augmentation,
    GhostError,
    check_commutation_preservation,
    check_ghost,
    check_ghost_soundness_semantics,
    check_projection,
    project,
)

from conftest import load, program

T = Const(True)


def aug_of(name):
    return Augmentation.from_program(program(name))


def space_xw():
    return VarSpace([VarDecl("x"), VarDecl("y"), VarDecl("xw", ghost=True), VarDecl("yw", ghost=True)])


class TestProject:
    def test_drops_ghosts(self):
        s = VarSpace([VarDecl("x"), VarDecl("xw", ghost=True)])
        assert project((True, False), s) == (True,)

    def test_identity_without_ghosts(self):
        s = VarSpace([VarDecl("x"), VarDecl("y")])
        assert project((False, True), s) == (False, True)

    def test_four_variables(self):
        assert project((False, True, True, False), space_xw()) == (False, True)


class TestProjection:
    def test_race_passes(self):
        assert check_projection(aug_of("ghost-race")).passed

    def test_ghost_writing_concrete_state(self):
        space = space_xw()
        base = Program(VarSpace([VarDecl("x"), VarDecl("y")]), [Operation("a")])
        full = Program(space, [Operation("a", update=(("x", Var("xw")),))])
        r = check_projection(Augmentation(base, full))
        assert not r.passed
        assert r.witnesses[0].states[0][space.index["xw"]] != r.witnesses[0].states[0][space.index["x"]]

    def test_no_ghosts(self, sb):
        assert check_projection(Augmentation.from_program(sb)).passed


class TestCommutation:
    def test_race_fails_at_all_false(self):
        a = aug_of("ghost-race")
        r = check_commutation_preservation(a)
        assert not r.passed
        first = r.witnesses[0]
        assert first.ops == ("w1", "w2")
        assert first.states[0] == (False, False, False, False)

    def test_done_flags(self):
        assert check_commutation_preservation(aug_of("ghost-doneflags")).passed

    def test_no_ghosts(self, sb):
        assert check_commutation_preservation(Augmentation.from_program(sb)).passed

    def test_conflict_variables_remove_the_obligation(self):
        doc = dataclasses.replace(load("ghost-race"), conflicts=(("w1", ("cv",)), ("w2", ("cv",))))
        assert check_commutation_preservation(Augmentation.from_program(doc.program())).passed

    def test_rejects_concrete_writes(self):
        space = space_xw()
        base = Program(VarSpace([VarDecl("x"), VarDecl("y")]), [Operation("a")])
        full = Program(space, [Operation("a", update=(("x", T),))])
        with pytest.raises(GhostError):
            check_commutation_preservation(Augmentation(base, full))


class TestSemantics:
    def test_race_fails(self):
        a = aug_of("ghost-race")
        r = check_ghost_soundness_semantics(a, a.aug.space.initial)
        assert not r.passed
        # the failing executions leave the two writes unordered
        for w in r.witnesses:
            assert {"w1", "w2"} <= set(w.ops)

    def test_done_flags(self):
        a = aug_of("ghost-doneflags")
        assert check_ghost_soundness_semantics(a, a.aug.space.initial).passed

    def test_no_ghosts(self, sb):
        a = Augmentation.from_program(sb)
        assert check_ghost_soundness_semantics(a, sb.space.initial).passed

    def test_check_ghost_combines(self):
        assert check_ghost(aug_of("ghost-doneflags"), program("ghost-doneflags").space.initial).passed
        r = check_ghost(aug_of("ghost-race"), program("ghost-race").space.initial)
        assert r.by_condition("commutation") and r.by_condition("simulation")


def test_conflict_variables_make_race_ghosts_harmless():
    """With the two writes in conflict, augmenting adds no and removes no executions."""
    doc = dataclasses.replace(load("ghost-race"), conflicts=(("w1", ("cv",)), ("w2", ("cv",))))
    a = Augmentation.from_program(doc.program())
    init = a.aug.space.initial
    full = enumerate_cc(a.aug, init)
    base = enumerate_cc(a.base, a.project(init))
    assert full.keys() == base.keys()
    assert check_ghost_soundness_semantics(a, init).passed


def test_ghost_guards_rejected():
    space = space_xw()
    p = Program(space, [Operation("a", guard=Not(Var("xw")), update=(("yw", T),))])
    with pytest.raises(GhostError):
        Augmentation.from_program(p)
