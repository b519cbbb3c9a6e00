from __future__ import annotations

import pytest

from ccm.annotate import (
    ALWAYS,
    Annotation,
    AnnotationError,
    Predicate,
    check_annotation,
    check_local,
    check_noninterference,
    check_soundness_conclusion,
    derived_pre,
    random_soundness_harness,
    replay_trial,
    restrict,
    synth_strongest,
)
from ccm.core import Operation, Program
from ccm.dsl import parse_expr
from ccm.expr import Const, Var

from conftest import bools, load, program

T = Const(True)


def ann(name):
    return load(name).annotation_map(), program(name)


class TestDerivedPre:
    def test_minimal_op(self):
        A, p = ann("sb-annotated")
        assert derived_pre(A, p, "I").is_true

    def test_sb_wait(self):
        A, p = ann("sb-annotated")
        got = derived_pre(A, p, "r1").extension(p.space)
        assert got == Predicate(Var("x")).extension(p.space)

    def test_two_in_edges_conjoin(self):
        ops = [Operation("a"), Operation("b"), Operation("c")]
        p = Program(bools("x", "y"), ops, [("a", "c"), ("b", "c")])
        A = Annotation({("a", "c"): Predicate(Var("x")), ("b", "c"): Predicate(Var("y"))})
        want = Predicate(parse_expr("x && y")).extension(p.space)
        assert derived_pre(A, p, "c").extension(p.space) == want

    def test_lowenstein_final_is_empty(self):
        A, p = ann("lowenstein-annotated")
        assert derived_pre(A, p, "F").extension(p.space) == frozenset()


class TestLocal:
    def test_sb_outline(self):
        A, p = ann("sb-annotated")
        assert check_local(A, p).passed

    def test_all_true(self, lowenstein):
        assert check_local(Annotation({}), lowenstein).passed

    def test_contradicted_postcondition(self):
        ops = [Operation("w", update=(("x", T),)), Operation("f")]
        p = Program(bools("x"), ops, [("w", "f")])
        A = Annotation({("w", "f"): Predicate(parse_expr("!x"))})
        r = check_local(A, p)
        assert not r.passed
        assert all(w.states[1] == (True,) for w in r.witnesses)


class TestNoninterference:
    def test_sb_outline(self):
        A, p = ann("sb-annotated")
        assert check_noninterference(A, p).passed

    def test_strengthened_variant(self):
        A, p = ann("sb-strengthened")
        r = check_noninterference(A, p)
        assert [(w.ops, w.states) for w in r.witnesses] == [
            (("r1", "F", "w2"), (p.space.state(x=True, y=False), p.space.state(x=True, y=True)))
        ]

    def test_weak_read_ghost(self):
        A, p = ann("ghost-weakread")
        r = check_noninterference(A, p)
        assert not r.passed
        assert {w.ops[2] for w in r.witnesses} == {"r1", "r2"}
        assert any(p.op(w.ops[2]).update == (("xw", T),) for w in r.witnesses)

    def test_interferer_guard_is_not_assumed(self):
        # the interferer only runs when !x, but that guard may not be used
        ops = [Operation("a"), Operation("b"), Operation("w", guard=parse_expr("!x"), update=(("y", T),))]
        p = Program(bools("x", "y"), ops, [("a", "b")])
        A = Annotation({("a", "b"): Predicate(parse_expr("x || !y"))})
        assert not check_noninterference(A, p).passed


class TestCheckAnnotation:
    def test_lowenstein_outline(self):
        A, p = ann("lowenstein-annotated")
        assert check_annotation(A, p).passed

    def test_race_ghost_outline(self):
        A, p = ann("ghost-race")
        assert check_annotation(A, p).passed

    def test_empty_map(self, sb):
        assert check_annotation(Annotation({}), sb).passed

    def test_self_edge_rejected(self):
        with pytest.raises(AnnotationError):
            Annotation({("a", "a"): ALWAYS})


class TestSoundness:
    def test_sb(self):
        A, p = ann("sb-annotated")
        assert check_soundness_conclusion(A, p, p.space.initial).passed

    def test_lowenstein_never_reaches_final(self):
        A, p = ann("lowenstein-annotated")
        from ccm.enumeration import enumerate_cc

        assert check_soundness_conclusion(A, p, p.space.initial).passed
        assert all("F" not in ex.carrier for ex in enumerate_cc(p, p.space.initial))

    def test_all_true(self, lowenstein):
        assert check_soundness_conclusion(Annotation({}), lowenstein, lowenstein.space.initial).passed

    def test_invalid_annotation_raises(self):
        A, p = ann("sb-strengthened")
        with pytest.raises(AnnotationError):
            check_soundness_conclusion(A, p, p.space.initial)

    def test_oracle_path_agrees(self):
        A, p = ann("sb-annotated")
        assert check_soundness_conclusion(A, p, p.space.initial, oracle=True).passed


class TestSynthesis:
    FIGURE = {("I", "w1"): "!x", ("w1", "r1"): "x", ("r1", "F"): "x",
              ("I", "w2"): "!y", ("w2", "r2"): "y", ("r2", "F"): "y"}

    def test_sb_figure(self):
        p = program("sb-annotated")
        S = synth_strongest(p, list(p.space.states()))
        sub = p.space.sub(["x", "y"])
        for edge, text in self.FIGURE.items():
            assert restrict(S[edge], p.space, ["x", "y"]) == Predicate(parse_expr(text)).extension(sub)

    def test_reverse_program_order_is_empty(self, sb):
        S = synth_strongest(sb, [sb.space.initial])
        assert S[("r1", "w1")].extension(sb.space) == frozenset()

    def test_single_write(self):
        ops = [Operation("o", update=(("x", T),)), Operation("f")]
        p = Program(bools("x"), ops, [("o", "f")])
        S = synth_strongest(p, [(False,)])
        assert S[("o", "f")].extension(p.space) == {(True,)}

    def test_strongest_annotation_is_valid(self):
        p = program("sb-annotated")
        S = synth_strongest(p, [p.space.initial])
        edges = Annotation({k: v for k, v in S.edges.items() if p.lt(*k)})
        assert check_annotation(edges, p).passed


class TestHarness:
    def test_seed_one(self):
        r = random_soundness_harness(seed=1, trials=200)
        assert r.passed, [w.describe() for w in r.witnesses]
        assert r.stats["nontrivial_passing"] > 0

    def test_zero_trials(self):
        r = random_soundness_harness(seed=1, trials=0)
        assert r.passed and r.stats["trials"] == 0

    def test_reproducible(self):
        a = [replay_trial(3, i) for i in range(10)]
        b = [replay_trial(3, i) for i in range(10)]
        for (pa, Aa, ia), (pb, Ab, ib) in zip(a, b):
            assert pa.ids == pb.ids and pa.pairs == pb.pairs and ia == ib
            assert [op.update for op in pa.ops] == [op.update for op in pb.ops]
            assert Aa.edges.keys() == Ab.edges.keys()
        assert random_soundness_harness(5, 20).stats == random_soundness_harness(5, 20).stats
