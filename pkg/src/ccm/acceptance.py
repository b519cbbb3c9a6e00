"""The acceptance matrix run by ``ccm corpus`` and by the acceptance tests.

Each criterion is a function returning ``(ok, detail)``; :func:`run_all`
wraps them in :class:`Row` objects, turning any exception (a corrupted corpus
file, say) into a failing row instead of a crash.
"""

from __future__ import annotations

import contextlib
import io
import json
import time
from collections.abc import Callable
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from ccm import annotate, dsl, ghost, tso
from ccm.core import Program
from ccm.enumeration import behaviors, enumerate_cc, enumerate_cc_oracle, enumerate_sc
from ccm.expr import Const, State

ORACLE_LIMIT = 6

LOWENSTEIN_TRACE = [
    (tso.ISSUE, "w0"),
    (tso.READ, "r0"),
    (tso.ISSUE, "w1"),
    (tso.DRAIN, "w1"),
    (tso.ISSUE, "w2"),
    (tso.DRAIN, "w2"),
    (tso.DRAIN, "w0"),
    (tso.READ, "r1"),
]


def default_corpus_dir() -> Path:
    return Path(str(resources.files("ccm") / "corpus"))


@dataclass(frozen=True)
class Row:
    criterion: int
    name: str
    ok: bool
    detail: str
    seconds: float

    def to_json(self) -> dict:
        return {
            "criterion": self.criterion,
            "name": self.name,
            "verdict": "pass" if self.ok else "fail",
            "detail": self.detail,
        }


class Corpus:
    def __init__(self, root: Path | str | None = None) -> None:
        self.root = Path(root) if root is not None else default_corpus_dir()
        self._docs: dict[str, dsl.SourceDocument] = {}

    def files(self) -> list[Path]:
        return sorted(self.root.glob("*.ccm"))

    def doc(self, name: str) -> dsl.SourceDocument:
        if name not in self._docs:
            self._docs[name] = dsl.load(self.root / f"{name}.ccm")
        return self._docs[name]

    def program(self, name: str) -> Program:
        return self.doc(name).program()


# ---------------------------------------------------------------------------
# Criteria
# ---------------------------------------------------------------------------


def c1_sb_litmus(corpus: Corpus) -> tuple[bool, str]:
    p = corpus.program("sb")
    init = p.space.initial
    sc = enumerate_sc(p, init, True)
    cc = enumerate_cc(p, init, True)
    want = {p.space.state(x=True, y=True)}
    traces = tso.explore(p, init, "plain", complete_only=True).complete
    ok = len(sc) == 0 and len(cc) >= 1 and behaviors(cc) == want and len(traces) >= 1
    return ok, f"sc={len(sc)} cc={len(cc)} cc behaviors={sorted(map(p.space.fmt, behaviors(cc)))} tso-plain={len(traces)}"


def c2_sb_annotation(corpus: Corpus) -> tuple[bool, str]:
    p = corpus.program("sb-annotated")
    A = corpus.doc("sb-annotated").annotation_map()
    local = annotate.check_local(A, p)
    nonint = annotate.check_noninterference(A, p)
    ps = corpus.program("sb-strengthened")
    As = corpus.doc("sb-strengthened").annotation_map()
    strong = annotate.check_noninterference(As, ps)
    sp = ps.space
    expected = [("r1", "F", "w2", sp.state(x=True, y=False), sp.state(x=True, y=True))]
    got = [(*w.ops, *w.states) for w in strong.witnesses]
    ok = local.passed and nonint.passed and got == expected
    detail = "; ".join(w.describe(sp) for w in strong.witnesses) or "no witness"
    return ok, f"outline local={local.passed} noninterference={nonint.passed}; strengthened: {detail}"


def c3_lowenstein(corpus: Corpus) -> tuple[bool, str]:
    pa = corpus.program("lowenstein-annotated")
    A = corpus.doc("lowenstein-annotated").annotation_map()
    ann = annotate.check_annotation(A, pa)
    pre_f = annotate.derived_pre(A, pa, "F")
    empty_pre = not pre_f.extension(pa.space)
    p = corpus.program("lowenstein")
    init = p.space.initial
    cc = enumerate_cc(p, init, True)
    plain = tso.explore(p, init, "plain", complete_only=True).complete
    exact = [t for t in plain if t.summary() == LOWENSTEIN_TRACE]
    minimal = [t for t in plain if _lowenstein_shape(t)]
    disc = tso.explore(p, init, "disciplined", complete_only=True).complete
    ok = ann.passed and empty_pre and len(cc) == 0 and bool(exact) and bool(minimal) and len(disc) == 0
    return ok, (
        f"annotation={ann.passed} pre(F) empty={empty_pre} cc complete={len(cc)} "
        f"plain traces matching={len(exact)} (shape {len(minimal)}) disciplined complete={len(disc)}"
    )


def _lowenstein_shape(trace: tso.TsoTrace) -> bool:
    ts = {(a.kind, a.op): a.ts for a in trace.actions}
    try:
        d0, d1, d2, r1 = ts[(tso.DRAIN, "w0")], ts[(tso.DRAIN, "w1")], ts[(tso.DRAIN, "w2")], ts[(tso.READ, "r1")]
    except KeyError:
        return False
    return d1 < d0 and d2 < d0 and r1 > d0


def c4_fig2(corpus: Corpus) -> tuple[bool, str]:
    p = corpus.program("fig2")
    space = p.space
    parts = []
    ok = True
    for x in (False, True):
        for y in (False, True):
            init = space.state(x=x, y=y)
            cc = len(enumerate_cc(p, init, True))
            sc = len(enumerate_sc(p, init, True))
            ok &= cc > 0 and sc == 0
            parts.append(f"[{space.fmt(init)}] cc={cc} sc={sc}")
    return ok, "; ".join(parts)


def c5_ghosts(corpus: Corpus) -> tuple[bool, str]:
    pw = corpus.program("ghost-weakread")
    nonint = annotate.check_noninterference(corpus.doc("ghost-weakread").annotation_map(), pw)
    xw_true = (("xw", Const(True)),)
    by_xw = [w for w in nonint.witnesses if pw.op(w.ops[2]).update == xw_true]
    weakread_ok = not nonint.passed and bool(by_xw)

    pr = corpus.program("ghost-race")
    race_ann = annotate.check_annotation(corpus.doc("ghost-race").annotation_map(), pr)
    aug = ghost.Augmentation.from_program(pr)
    comm = ghost.check_commutation_preservation(aug)
    sem = ghost.check_ghost_soundness_semantics(aug, pr.space.initial)
    race_ok = race_ann.passed and not comm.passed and not sem.passed

    pd = corpus.program("ghost-doneflags")
    done = ghost.check_ghost(ghost.Augmentation.from_program(pd), pd.space.initial)
    ok = weakread_ok and race_ok and done.passed
    return ok, (
        f"weakread A4 witnesses={len(nonint.witnesses)} (xw:=T interferers {len(by_xw)}); "
        f"race annotation={race_ann.passed} commutation={comm.passed} semantics={sem.passed}; "
        f"doneflags={done.passed}"
    )


def c6_soundness(corpus: Corpus) -> tuple[bool, str]:
    r = annotate.random_soundness_harness(seed=1, trials=200)
    stats = ", ".join(f"{k}={v}" for k, v in sorted(r.stats.items()))
    first = f"; first: {r.witnesses[0].describe()}" if r.witnesses else ""
    return r.passed, f"violations={len(r.witnesses)} {stats}{first}"


def c7_oracle(corpus: Corpus) -> tuple[bool, str]:
    ok = True
    parts = []
    for path in corpus.files():
        p = corpus.program(path.stem)
        if len(p.ops) > ORACLE_LIMIT:
            continue
        init = p.space.initial
        for complete in (False, True):
            fast = enumerate_cc(p, init, complete)
            slow = enumerate_cc_oracle(p, init, complete)
            same = fast.keys() == slow.keys() and behaviors(fast) == behaviors(slow)
            ok &= same
            if not complete:
                parts.append(f"{path.stem}={len(fast)}{'' if same else '(MISMATCH)'}")
            elif not same:
                parts.append(f"{path.stem} complete-only MISMATCH")
    return ok and bool(parts), " ".join(parts)


def c8_bridge(corpus: Corpus) -> tuple[bool, str]:
    ok = True
    parts = []
    for name in ("sb", "lowenstein"):
        p = corpus.program(name)
        init = p.space.initial
        traces = tso.explore(p, init, "disciplined", complete_only=True).complete
        bad = 0
        for t in traces:
            try:
                order = tso.derived_order(t, p)
            except tso.TsoError:
                bad += 1
                continue
            if not order.is_strict() or not order.extends(p.order) or tso.check_trace(p, init, t):
                bad += 1
        ok &= bad == 0
        parts.append(f"{name} disciplined: {len(traces)} complete, {bad} failing")
    p = corpus.program("lowenstein")
    plain = tso.bridge_check(p, p.space.initial, "plain")
    ok &= not plain.passed
    parts.append(f"lowenstein plain: {len(plain.witnesses)} of {plain.stats['traces']} traces fail CC")
    return ok, "; ".join(parts)


def c9_single_writer(corpus: Corpus) -> tuple[bool, str]:
    ok = True
    parts = []
    for name in ("sb", "fig2"):
        p = corpus.program(name)
        init = p.space.initial
        plain = tso.tso_behaviors(p, init, "plain")
        disc = tso.tso_behaviors(p, init, "disciplined")
        cc = behaviors(enumerate_cc(p, init, True))
        fine = plain == disc and plain <= cc and disc <= cc
        ok &= fine
        parts.append(f"{name}: plain={len(plain)} disciplined={len(disc)} cc={len(cc)} {'ok' if fine else 'MISMATCH'}")
    return ok, "; ".join(parts)


FIGURE_EDGES = {
    ("I", "w1"): "!x",
    ("w1", "r1"): "x",
    ("r1", "F"): "x",
    ("I", "w2"): "!y",
    ("w2", "r2"): "y",
    ("r2", "F"): "y",
}


def c10_synthesis(corpus: Corpus) -> tuple[bool, str]:
    p = corpus.program("sb-annotated")
    S = annotate.synth_strongest(p, [p.space.initial])
    names = ("x", "y")
    sub = p.space.sub(names)
    bad = []
    for edge, text in FIGURE_EDGES.items():
        want = annotate.Predicate(dsl.parse_expr(text)).extension(sub)
        got = annotate.restrict(S[edge], p.space, names)
        if got != want:
            bad.append(f"{edge[0]}->{edge[1]}")
    return not bad, "all six edges match" if not bad else "mismatch on " + ", ".join(bad)


def c11_roundtrip(corpus: Corpus) -> tuple[bool, str]:
    from ccm import cli

    bad = []
    files = corpus.files()
    for path in files:
        doc = dsl.load(path)
        if dsl.parse(dsl.serialize(doc)) != doc:
            bad.append(path.name)
    runs = [
        ["enumerate", str(corpus.root / "sb.ccm"), "--model", "cc", "--json"],
        ["enumerate", str(corpus.root / "lowenstein.ccm"), "--model", "tso-plain", "--complete-only", "--json"],
        ["check", str(corpus.root / "sb-strengthened.ccm"), "--annotation", "--json"],
    ]
    nondeterministic = []
    for argv in runs:
        outs = [_run_json(cli.main, argv) for _ in range(2)]
        if outs[0] != outs[1]:
            nondeterministic.append(argv[1])
    ok = bool(files) and not bad and not nondeterministic
    return ok, f"{len(files)} files round-trip{'' if not bad else ' except ' + ', '.join(bad)}; repeated CLI JSON identical={not nondeterministic}"


def _run_json(main: Callable, argv: list[str]) -> str:
    buf = io.StringIO()
    with contextlib.redirect_stdout(buf):
        main(argv)
    report = json.loads(buf.getvalue())
    report.pop("wall_time", None)
    return json.dumps(report, sort_keys=True)


CRITERIA: list[tuple[int, str, Callable[[Corpus], tuple[bool, str]]]] = [
    (1, "sb-litmus", c1_sb_litmus),
    (2, "sb-annotation", c2_sb_annotation),
    (3, "lowenstein", c3_lowenstein),
    (4, "fig2-all-inits", c4_fig2),
    (5, "ghost-examples", c5_ghosts),
    (6, "soundness-harness", c6_soundness),
    (7, "oracle-equivalence", c7_oracle),
    (8, "tso-bridge", c8_bridge),
    (9, "single-writer", c9_single_writer),
    (10, "strongest-annotation", c10_synthesis),
    (11, "roundtrip-determinism", c11_roundtrip),
]


def run_criterion(k: int, corpus: Corpus | None = None) -> Row:
    corpus = corpus or Corpus()
    number, name, fn = CRITERIA[k - 1]
    start = time.perf_counter()
    try:
        ok, detail = fn(corpus)
    except Exception as exc:  # a broken corpus must show up as a failing row
        ok, detail = False, f"{type(exc).__name__}: {exc}"
    return Row(number, name, bool(ok), detail, time.perf_counter() - start)


def run_all(corpus_dir: Path | str | None = None) -> list[Row]:
    corpus = Corpus(corpus_dir)
    return [run_criterion(k, corpus) for k, _, _ in CRITERIA]


if __name__ == "__main__":
    import sys

    from ccm.cli import main

    sys.exit(main(["corpus", *sys.argv[1:]]))
