"""Annotations on ordered operation pairs and their checks.

An annotation maps ``(o, o2)`` to a predicate meant to hold whenever ``o``
has executed and ``o2`` has not.  It is valid when it is locally correct
(A3: ``o``'s update establishes every outgoing predicate) and interference
free (A4: no operation that can run between ``o`` and ``o2`` breaks the
predicate, assuming only that operation's derived precondition, never its
guard).  All quantification is over the whole declared state space.
"""

from __future__ import annotations

import random
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass

from ccm.core import Operation, Program, _bits
from ccm.enumeration import DEFAULT_MAX_DOWNSETS, enumerate_cc, enumerate_cc_oracle
from ccm.expr import (
    FALSE,
    TRUE,
    And,
    Const,
    Eq,
    Expr,
    Not,
    Or,
    State,
    Var,
    VarDecl,
    VarSpace,
    conj,
    render,
)
from ccm.report import CheckReport, Witness


class AnnotationError(ValueError):
    """The annotation is malformed or does not satisfy A3/A4 when required."""


@dataclass(frozen=True)
class Predicate:
    """A state predicate: an expression, or an explicit set of states."""

    expr: Expr | None = None
    states: frozenset[State] | None = None

    def __post_init__(self) -> None:
        if (self.expr is None) == (self.states is None):
            raise ValueError("give exactly one of expr or states")

    @property
    def is_true(self) -> bool:
        return self.expr == TRUE

    def compile(self, space: VarSpace) -> Callable[[State], bool]:
        if self.expr is not None:
            return space.compile(self.expr)
        members = self.states
        return lambda s: s in members

    def extension(self, space: VarSpace) -> frozenset[State]:
        f = self.compile(space)
        return frozenset(s for s in space.states() if f(s))

    def render(self, space: VarSpace) -> str:
        if self.expr is not None:
            return render(self.expr)
        return "{" + "; ".join(space.fmt(s) for s in sorted(self.states)) + "}"


ALWAYS = Predicate(TRUE)


class Annotation:
    """Ordered pairs of operation ids to predicates; missing pairs are true."""

    def __init__(self, edges: Mapping[tuple[str, str], Predicate] | None = None) -> None:
        self.edges: dict[tuple[str, str], Predicate] = dict(edges or {})
        for a, b in self.edges:
            if a == b:
                raise AnnotationError(f"annotation on ({a}, {a}) is not allowed")

    def __getitem__(self, pair: tuple[str, str]) -> Predicate:
        return self.edges.get(pair, ALWAYS)

    def __len__(self) -> int:
        return len(self.edges)

    def __repr__(self) -> str:
        return f"Annotation({len(self.edges)} edges)"

    def nontrivial(self) -> list[tuple[tuple[str, str], Predicate]]:
        return [(k, p) for k, p in self.edges.items() if not p.is_true]

    def check_keys(self, program: Program) -> None:
        for a, b in self.edges:
            for o in (a, b):
                if o not in program.index:
                    raise AnnotationError(f"annotation names unknown operation {o!r}")

    def weaken(self, pair: tuple[str, str]) -> Annotation:
        edges = dict(self.edges)
        edges.pop(pair, None)
        return Annotation(edges)


class _Compiled:
    """Annotation predicates compiled against one program's state space."""

    def __init__(self, A: Annotation, program: Program) -> None:
        A.check_keys(program)
        self.program = program
        space = program.space
        self.space = space
        self.states = list(space.states())
        n = len(program.ops)
        ids = program.ids
        self.edges: dict[tuple[int, int], Callable[[State], bool]] = {}
        for (a, b), p in A.nontrivial():
            self.edges[(program.index[a], program.index[b])] = p.compile(space)
        self.pre: list[Callable[[State], bool]] = []
        for i in range(n):
            incoming = [
                self.edges[(j, i)] for j in _bits(program.order.pred[i]) if (j, i) in self.edges
            ]
            self.pre.append(_all(incoming))
        self.ids = ids


def _all(fs: list[Callable[[State], bool]]) -> Callable[[State], bool]:
    if not fs:
        return lambda s: True
    if len(fs) == 1:
        return fs[0]
    return lambda s: all(f(s) for f in fs)


def derived_pre(A: Annotation, program: Program, o: str) -> Predicate:
    """Conjunction of the annotations on the program edges into ``o``."""
    i = program.index[o]
    incoming = [A[(program.ids[j], o)] for j in _bits(program.order.pred[i])]
    incoming = [p for p in incoming if not p.is_true]
    if all(p.expr is not None for p in incoming):
        return Predicate(conj(*(p.expr for p in incoming)))
    space = program.space
    ext = frozenset(space.states())
    for p in incoming:
        ext &= p.extension(space)
    return Predicate(states=ext)


def check_local(A: Annotation, program: Program) -> CheckReport:
    """A3: from ``guard && pre(o)``, ``o``'s update establishes each ``A(o, o2)``."""
    c = _Compiled(A, program)
    report = CheckReport(stats={"obligations": 0})
    for (i, k), post in sorted(c.edges.items()):
        guard, pre, upd = program.guards[i], c.pre[i], program.updates[i]
        for s in c.states:
            if not (guard(s) and pre(s)):
                continue
            report.stats["obligations"] += 1
            t = upd(s)
            if not post(t):
                report.witnesses.append(Witness("A3", (c.ids[i], c.ids[k]), (s, t)))
    return report


def check_noninterference(A: Annotation, program: Program) -> CheckReport:
    """A4: each ``A(o, o2)`` survives any ``o3`` that may run between them.

    The interferer contributes only its derived precondition; its guard is
    deliberately not assumed.
    """
    c = _Compiled(A, program)
    pred = program.order.pred
    n = len(program.ops)
    report = CheckReport(stats={"obligations": 0})
    for (i, k), p in sorted(c.edges.items()):
        for m in range(n):
            if m == i or m == k or pred[i] >> m & 1 or pred[m] >> k & 1:
                continue
            pre_m, upd = c.pre[m], program.updates[m]
            for s in c.states:
                if not (p(s) and pre_m(s)):
                    continue
                report.stats["obligations"] += 1
                t = upd(s)
                if not p(t):
                    report.witnesses.append(Witness("A4", (c.ids[i], c.ids[k], c.ids[m]), (s, t)))
    return report


def check_annotation(A: Annotation, program: Program) -> CheckReport:
    return check_local(A, program).merge(check_noninterference(A, program))


def check_soundness_conclusion(
    A: Annotation,
    program: Program,
    init: State,
    *,
    max_downsets: int = DEFAULT_MAX_DOWNSETS,
    oracle: bool = False,
) -> CheckReport:
    """Every prefix execution satisfies ``A(o, o1)`` for executed ``o``, unexecuted ``o1``.

    A witness here means the enumerator or checker is wrong, not the theory.
    """
    if not check_annotation(A, program).passed:
        raise AnnotationError("annotation does not satisfy local correctness and noninterference")
    c = _Compiled(A, program)
    if oracle:
        result = enumerate_cc_oracle(program, init)
    else:
        result = enumerate_cc(program, init, max_downsets=max_downsets)
    report = CheckReport(stats={"executions": len(result), "obligations": 0})
    idx = program.index
    for ex in result:
        carrier = sum(1 << idx[o] for o in ex.carrier)
        for (i, k), p in sorted(c.edges.items()):
            if carrier >> i & 1 and not carrier >> k & 1:
                report.stats["obligations"] += 1
                if not p(ex.final):
                    report.witnesses.append(
                        Witness(
                            "soundness",
                            (c.ids[i], c.ids[k]),
                            (ex.final,),
                            "order " + ", ".join(f"{a}<{b}" for a, b in sorted(ex.order)),
                        )
                    )
    return report


def synth_strongest(
    program: Program, inits: Iterable[State], *, max_downsets: int = DEFAULT_MAX_DOWNSETS
) -> Annotation:
    """The semantic strongest annotation: reachable states per (executed, pending) pair."""
    seen: dict[tuple[str, str], set[State]] = {
        (a, b): set() for a in program.ids for b in program.ids if a != b
    }
    for init in inits:
        for ex in enumerate_cc(program, init, max_downsets=max_downsets):
            for a in ex.carrier:
                for b in program.ids:
                    if b not in ex.carrier:
                        seen[(a, b)].add(ex.final)
    return Annotation({k: Predicate(states=frozenset(v)) for k, v in seen.items()})


def restrict(pred: Predicate, space: VarSpace, names: Iterable[str]) -> frozenset[State]:
    """Project a predicate's extension onto a subset of variables."""
    target = space.sub(names)
    proj = space.projector(target)
    return frozenset(proj(s) for s in pred.extension(space))


# ---------------------------------------------------------------------------
# Randomized soundness harness
# ---------------------------------------------------------------------------

_VARS = ("a", "b", "c")


def _rand_literal(rng: random.Random, names: tuple[str, ...]) -> Expr:
    v = Var(rng.choice(names))
    return Not(v) if rng.random() < 0.5 else v


def _rand_guard(rng: random.Random, names: tuple[str, ...]) -> Expr:
    r = rng.random()
    if r < 0.4:
        return TRUE
    if r < 0.75:
        return _rand_literal(rng, names)
    if r < 0.85 and len(names) > 1:
        x, y = rng.sample(names, 2)
        return Eq(Var(x), Var(y))
    parts = (_rand_literal(rng, names), _rand_literal(rng, names))
    return And(parts) if rng.random() < 0.5 else Or(parts)


def _rand_update(rng: random.Random, names: tuple[str, ...]) -> tuple:
    k = rng.choice((0, 1, 1, 1, 2))
    targets = rng.sample(names, min(k, len(names)))
    out = []
    for t in targets:
        r = rng.random()
        if r < 0.6:
            rhs: Expr = Const(rng.random() < 0.5)
        else:
            rhs = _rand_literal(rng, names)
        out.append((t, rhs))
    return tuple(out)


def random_program(rng: random.Random) -> Program:
    nvars = rng.randint(1, 3)
    names = _VARS[:nvars]
    space = VarSpace(VarDecl(n, None, rng.random() < 0.5) for n in names)
    nops = rng.randint(1, 5)
    ops = [
        Operation(f"o{i}", _rand_guard(rng, names), _rand_update(rng, names)) for i in range(nops)
    ]
    edges = [(f"o{i}", f"o{j}") for i in range(nops) for j in range(i + 1, nops) if rng.random() < 0.35]
    return Program(space, ops, edges)


def _rand_predicate(rng: random.Random, names: tuple[str, ...]) -> Expr:
    r = rng.random()
    if r < 0.5:
        return _rand_literal(rng, names)
    if r < 0.8:
        return Or((_rand_literal(rng, names), _rand_literal(rng, names)))
    return And((_rand_literal(rng, names), _rand_literal(rng, names)))


def weaken_until_valid(A: Annotation, program: Program) -> Annotation:
    """Drop every edge named by a witness until A3 and A4 both hold."""
    while True:
        report = check_annotation(A, program)
        if report.passed:
            return A
        bad = {w.ops[:2] for w in report.witnesses}
        A = Annotation({k: p for k, p in A.edges.items() if k not in bad})


def random_annotation(rng: random.Random, program: Program) -> Annotation:
    """Mostly-true annotations; sometimes a weakened strongest annotation."""
    ids = program.ids
    names = program.space.names
    if rng.random() < 0.4:
        inits = list(program.space.states())
        strongest = synth_strongest(program, rng.sample(inits, rng.randint(1, len(inits))))
        all_states = list(program.space.states())
        edges = {}
        for k, p in strongest.edges.items():
            if rng.random() < 0.5:
                continue
            extra = {s for s in all_states if rng.random() < 0.25}
            edges[k] = Predicate(states=p.states | frozenset(extra))
        return Annotation(edges)
    edges = {}
    for a in ids:
        for b in ids:
            if a == b:
                continue
            bias = 0.45 if program.lt(a, b) else 0.1
            if rng.random() < bias:
                edges[(a, b)] = Predicate(_rand_predicate(rng, names))
    return Annotation(edges)


def random_soundness_harness(seed: int, trials: int) -> CheckReport:
    """Check the soundness conclusion on random programs with passing annotations.

    Trial ``i`` draws from ``random.Random(f"{seed}:{i}")`` so any failure can be
    replayed alone with :func:`replay_trial`.
    """
    report = CheckReport(stats={"trials": 0, "annotations_passing": 0, "nontrivial_passing": 0, "obligations": 0})
    for i in range(trials):
        for w in _trial(seed, i, report.stats):
            report.witnesses.append(w)
    return report


def replay_trial(seed: int, i: int) -> tuple[Program, Annotation, list[State]]:
    rng = random.Random(f"{seed}:{i}")
    program = random_program(rng)
    A = random_annotation(rng, program)
    if rng.random() < 0.5:
        A = weaken_until_valid(A, program)
    states = list(program.space.states())
    inits = rng.sample(states, min(2, len(states)))
    return program, A, inits


def _trial(seed: int, i: int, stats: dict) -> list[Witness]:
    program, A, inits = replay_trial(seed, i)
    stats["trials"] += 1
    if not check_annotation(A, program).passed:
        return []
    stats["annotations_passing"] += 1
    if A.nontrivial():
        stats["nontrivial_passing"] += 1
    out = []
    for init in inits:
        r = check_soundness_conclusion(A, program, init)
        stats["obligations"] += r.stats["obligations"]
        for w in r.witnesses:
            triage = "oracle"
            if len(program.ops) <= 6:
                o = check_soundness_conclusion(A, program, init, oracle=True)
                triage = "oracle agrees" if o.witnesses else "oracle disagrees (enumerator bug)"
            out.append(
                Witness(w.condition, w.ops, w.states, f"seed={seed} trial={i} init={init}; {triage}; {w.detail}")
            )
    return out


__all__ = [
    "ALWAYS",
    "FALSE",
    "Annotation",
    "AnnotationError",
    "Predicate",
    "check_annotation",
    "check_local",
    "check_noninterference",
    "check_soundness_conclusion",
    "derived_pre",
    "random_soundness_harness",
    "replay_trial",
    "restrict",
    "synth_strongest",
    "weaken_until_valid",
]
