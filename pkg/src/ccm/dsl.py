"""The ``.ccm`` litmus format: parser and canonical serializer.

A document is a sequence of brace-delimited sections::

    vars { x: bool = false; n: int[0..3] = 0 }
    ghost { xw: bool = false }
    shared { x }
    unshared { y: t1 }
    init { I: x, y := false, false }
    thread t0 { w1: x := true; r1: wait !y }
    final { F: skip }
    order { w1 < F }
    conflict { w1: cv1 }
    annotation { (w1, r1): x }

Statements are ``L: v1, v2 := e1, e2``, ``L: wait g``, ``L: wait g -> v := e``,
``L: read r := v``, ``L: rmw v: g -> v := e`` and ``L: skip``.  Newlines and
``;`` both separate entries; ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ccm.core import Operation, Program, ProgramError
from ccm.expr import (
    FALSE,
    TRUE,
    And,
    Assignment,
    Const,
    Eq,
    Expr,
    Ne,
    Not,
    Or,
    Var,
    VarDecl,
    VarSpace,
    render,
)


class ParseError(ValueError):
    def __init__(self, reason: str, line: int = 0, col: int = 0) -> None:
        super().__init__(f"{line}:{col}: {reason}")
        self.reason = reason
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Stmt:
    label: str
    kind: str  # write | wait | read | rmw | skip
    guard: Expr = TRUE
    assigns: tuple[Assignment, ...] = ()
    read: tuple[str, str] | None = None


@dataclass(frozen=True)
class ThreadDecl:
    name: str
    stmts: tuple[Stmt, ...]


@dataclass
class SourceDocument:
    vars: tuple[VarDecl, ...] = ()
    ghosts: tuple[VarDecl, ...] = ()
    shared: tuple[str, ...] = ()
    unshared: tuple[tuple[str, str], ...] = ()
    init: Stmt | None = None
    threads: tuple[ThreadDecl, ...] = ()
    final: Stmt | None = None
    order: tuple[tuple[str, str], ...] = ()
    conflicts: tuple[tuple[str, tuple[str, ...]], ...] = ()
    annotation: tuple[tuple[str, str, Expr], ...] = ()
    positions: dict[str, tuple[int, int]] = field(default_factory=dict, compare=False, repr=False)

    # -- derived objects -------------------------------------------------------

    @property
    def space(self) -> VarSpace:
        return VarSpace(self.vars + self.ghosts)

    def statements(self) -> list[tuple[Stmt, str | None]]:
        out: list[tuple[Stmt, str | None]] = []
        if self.init is not None:
            out.append((self.init, None))
        for t in self.threads:
            out.extend((s, t.name) for s in t.stmts)
        if self.final is not None:
            out.append((self.final, None))
        return out

    def program(self) -> Program:
        space = self.space
        ghost_names = {d.name for d in self.ghosts}
        conflicts = {label: frozenset(cvs) for label, cvs in self.conflicts}
        ops = []
        for st, thread in self.statements():
            targets = frozenset(n for n, _ in st.assigns) & ghost_names
            ops.append(
                Operation(
                    id=st.label,
                    guard=st.guard,
                    update=st.assigns,
                    thread=thread,
                    conflict_vars=conflicts.get(st.label, frozenset()),
                    ghost_targets=targets,
                    kind=st.kind,
                    read=st.read,
                )
            )
        edges: list[tuple[str, str]] = []
        body = [s.label for t in self.threads for s in t.stmts]
        for t in self.threads:
            edges.extend((a.label, b.label) for a, b in zip(t.stmts, t.stmts[1:]))
        if self.init is not None:
            edges.extend((self.init.label, o) for o in body)
        if self.final is not None:
            edges.extend((o, self.final.label) for o in body)
            if self.init is not None:
                edges.append((self.init.label, self.final.label))
        edges.extend(self.order)
        return Program(space, ops, edges)

    def annotation_map(self):
        from ccm.annotate import Annotation, Predicate

        return Annotation({(a, b): Predicate(e) for a, b, e in self.annotation})

    def declared_classes(self) -> dict[str, str | None]:
        """``{var: None}`` for shared, ``{var: owner}`` for unshared declarations."""
        out: dict[str, str | None] = {v: None for v in self.shared}
        out.update(dict(self.unshared))
        return out


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|->|==|!=|&&|\|\||\.\.|[{}()\[\],:;=<!])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # int | ident | op | sep | eof
    text: str
    line: int
    col: int


def _lex(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    line, start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        col = pos - start + 1
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        if kind == "nl":
            toks.append(_Tok("sep", "\n", line, col))
            line += 1
            start = m.end()
        elif kind == "op" and m.group() == ";":
            toks.append(_Tok("sep", ";", line, col))
        elif kind in ("int", "ident", "op"):
            toks.append(_Tok(kind, m.group(), line, col))
        pos = m.end()
    toks.append(_Tok("eof", "", line, pos - start + 1))
    return toks


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_KEYWORDS = {"true", "false", "skip", "wait", "read", "rmw", "bool", "int"}
_SECTIONS = ("vars", "ghost", "shared", "unshared", "init", "thread", "final", "order", "conflict", "annotation")


class _Parser:
    def __init__(self, text: str) -> None:
        self.toks = _lex(text)
        self.i = 0
        self.doc_parts: dict[str, list] = {k: [] for k in _SECTIONS}
        self.positions: dict[str, tuple[int, int]] = {}
        self.seen_single: set[str] = set()

    # token helpers
    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def fail(self, reason: str, tok: _Tok | None = None):
        t = tok or self.tok
        raise ParseError(reason, t.line, t.col)

    def next(self) -> _Tok:
        t = self.tok
        self.i += 1
        return t

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "ident") and self.tok.text == text

    def expect(self, text: str) -> _Tok:
        if not self.at(text):
            self.fail(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return self.next()

    def ident(self, what: str = "identifier") -> _Tok:
        if self.tok.kind != "ident" or self.tok.text in _KEYWORDS:
            self.fail(f"expected {what}, found {self.tok.text or 'end of input'!r}")
        return self.next()

    def skip_seps(self) -> None:
        while self.tok.kind == "sep":
            self.i += 1

    def end_entry(self) -> None:
        if self.at("}"):
            return
        if self.tok.kind != "sep":
            self.fail(f"unexpected {self.tok.text!r}")
        self.skip_seps()

    def block(self, entry) -> None:
        self.expect("{")
        self.skip_seps()
        while not self.at("}"):
            if self.tok.kind == "eof":
                self.fail("unterminated section")
            entry()
            self.end_entry()
        self.expect("}")

    # document
    def document(self) -> SourceDocument:
        self.skip_seps()
        while self.tok.kind != "eof":
            t = self.ident("section name")
            name = t.text
            if name not in _SECTIONS:
                self.fail(f"unknown section {name!r}", t)
            if name in ("init", "final"):
                if name in self.seen_single:
                    self.fail(f"duplicate {name} section", t)
                self.seen_single.add(name)
            getattr(self, "sec_" + name)()
            self.skip_seps()
        p = self.doc_parts
        return SourceDocument(
            vars=tuple(p["vars"]),
            ghosts=tuple(p["ghost"]),
            shared=tuple(p["shared"]),
            unshared=tuple(p["unshared"]),
            init=p["init"][0] if p["init"] else None,
            threads=tuple(p["thread"]),
            final=p["final"][0] if p["final"] else None,
            order=tuple(p["order"]),
            conflicts=tuple(p["conflict"]),
            annotation=tuple(p["annotation"]),
            positions=self.positions,
        )

    def _decl(self, ghost: bool) -> VarDecl:
        t = self.ident("variable name")
        self.positions.setdefault("var:" + t.text, (t.line, t.col))
        self.expect(":")
        hi = None
        if self.at("bool"):
            self.next()
        elif self.at("int"):
            self.next()
            self.expect("[")
            lo = self.integer()
            self.expect("..")
            hi = self.integer()
            self.expect("]")
            if lo != 0:
                self.fail("integer ranges must start at 0", t)
        else:
            self.fail("expected 'bool' or 'int'")
        self.expect("=")
        vt = self.tok
        init = self.literal()
        try:
            return VarDecl(t.text, hi, init, ghost)
        except ValueError as exc:
            raise ParseError(f"domain mismatch: {exc}", vt.line, vt.col) from None

    def integer(self) -> int:
        if self.tok.kind != "int":
            self.fail("expected integer")
        return int(self.next().text)

    def literal(self):
        if self.at("true") or self.at("false"):
            return self.next().text == "true"
        return self.integer()

    def sec_vars(self) -> None:
        self.block(lambda: self.doc_parts["vars"].append(self._decl(False)))

    def sec_ghost(self) -> None:
        self.block(lambda: self.doc_parts["ghost"].append(self._decl(True)))

    def sec_shared(self) -> None:
        def entry():
            self.doc_parts["shared"].append(self.ident("variable").text)
            while self.at(","):
                self.next()
                self.doc_parts["shared"].append(self.ident("variable").text)

        self.block(entry)

    def sec_unshared(self) -> None:
        def entry():
            v = self.ident("variable").text
            self.expect(":")
            self.doc_parts["unshared"].append((v, self.ident("thread name").text))

        self.block(entry)

    def _single(self, key: str) -> None:
        self.expect("{")
        self.skip_seps()
        self.doc_parts[key].append(self.stmt())
        self.skip_seps()
        self.expect("}")

    def sec_init(self) -> None:
        self._single("init")

    def sec_final(self) -> None:
        self._single("final")

    def sec_thread(self) -> None:
        name = self.ident("thread name")
        self.positions.setdefault("thread:" + name.text, (name.line, name.col))
        stmts: list[Stmt] = []
        self.block(lambda: stmts.append(self.stmt()))
        self.doc_parts["thread"].append(ThreadDecl(name.text, tuple(stmts)))

    def sec_order(self) -> None:
        def entry():
            t = self.tok
            chain = [self.ident("label").text]
            self.expect("<")
            chain.append(self.ident("label").text)
            while self.at("<"):
                self.next()
                chain.append(self.ident("label").text)
            for a, b in zip(chain, chain[1:]):
                self.positions.setdefault(f"order:{a}<{b}", (t.line, t.col))
                self.doc_parts["order"].append((a, b))

        self.block(entry)

    def sec_conflict(self) -> None:
        def entry():
            t = self.ident("label")
            self.expect(":")
            cvs = [self.ident("conflict variable").text]
            while self.at(","):
                self.next()
                cvs.append(self.ident("conflict variable").text)
            self.positions.setdefault("conflict:" + t.text, (t.line, t.col))
            self.doc_parts["conflict"].append((t.text, tuple(cvs)))

        self.block(entry)

    def sec_annotation(self) -> None:
        def entry():
            t = self.expect("(")
            a = self.ident("label").text
            self.expect(",")
            b = self.ident("label").text
            self.expect(")")
            self.expect(":")
            self.positions.setdefault(f"annotation:{a},{b}", (t.line, t.col))
            self.doc_parts["annotation"].append((a, b, self.expr()))

        self.block(entry)

    # statements
    def stmt(self) -> Stmt:
        t = self.ident("statement label")
        label = t.text
        if "label:" + label in self.positions:
            self.fail(f"duplicate label {label!r}", t)
        self.positions["label:" + label] = (t.line, t.col)
        self.expect(":")
        if self.at("skip"):
            self.next()
            return Stmt(label, "skip")
        if self.at("wait"):
            self.next()
            g = self.expr()
            if self.at("->"):
                self.next()
                return Stmt(label, "wait", g, self.assigns())
            return Stmt(label, "wait", g)
        if self.at("read"):
            self.next()
            r = self.ident("variable").text
            self.expect(":=")
            v = self.ident("variable").text
            return Stmt(label, "read", read=(r, v))
        if self.at("rmw"):
            self.next()
            v = self.ident("variable")
            self.expect(":")
            g = self.expr()
            self.expect("->")
            a = self.assigns()
            if len(a) != 1 or a[0][0] != v.text:
                self.fail(f"rmw must assign exactly its variable {v.text!r}", v)
            return Stmt(label, "rmw", g, a)
        return Stmt(label, "write", TRUE, self.assigns())

    def assigns(self) -> tuple[Assignment, ...]:
        lhs = [self.ident("variable").text]
        while self.at(","):
            self.next()
            lhs.append(self.ident("variable").text)
        t = self.expect(":=")
        rhs = [self.expr()]
        while self.at(","):
            self.next()
            rhs.append(self.expr())
        if len(lhs) != len(rhs):
            self.fail(f"{len(lhs)} targets but {len(rhs)} values", t)
        return tuple(zip(lhs, rhs))

    # expressions
    def expr(self) -> Expr:
        parts = [self.conj()]
        while self.at("||"):
            self.next()
            parts.append(self.conj())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conj(self) -> Expr:
        parts = [self.cmp()]
        while self.at("&&"):
            self.next()
            parts.append(self.cmp())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def cmp(self) -> Expr:
        left = self.unary()
        if self.at("=="):
            self.next()
            return Eq(left, self.unary())
        if self.at("!="):
            self.next()
            return Ne(left, self.unary())
        return left

    def unary(self) -> Expr:
        if self.at("!"):
            self.next()
            return Not(self.unary())
        return self.atom()

    def atom(self) -> Expr:
        if self.at("("):
            self.next()
            e = self.expr()
            self.expect(")")
            return e
        if self.at("true"):
            self.next()
            return TRUE
        if self.at("false"):
            self.next()
            return FALSE
        if self.tok.kind == "int":
            return Const(int(self.next().text))
        return Var(self.ident("expression").text)


def parse(text: str) -> SourceDocument:
    """Parse and check a document; errors carry line and column."""
    doc = _Parser(text).document()
    _check(doc)
    return doc


def parse_expr(text: str) -> Expr:
    """Parse a standalone guard or annotation expression."""
    parser = _Parser(text)
    parser.skip_seps()
    e = parser.expr()
    parser.skip_seps()
    if parser.tok.kind != "eof":
        parser.fail(f"unexpected {parser.tok.text!r} after expression")
    return e


def _check(doc: SourceDocument) -> None:
    pos = doc.positions

    def at(key: str) -> tuple[int, int]:
        return pos.get(key, (0, 0))

    names: set[str] = set()
    for d in doc.vars + doc.ghosts:
        if d.name in names:
            raise ParseError(f"duplicate variable {d.name!r}", *at("var:" + d.name))
        names.add(d.name)
    space = doc.space
    labels = set()
    for st, _ in doc.statements():
        labels.add(st.label)
        try:
            space.check_guard(st.guard)
            space.check_update(st.assigns)
            if st.read is not None:
                for v in st.read:
                    if v not in space:
                        raise ValueError(f"unknown variable {v!r}")
        except (TypeError, ValueError) as exc:
            raise ParseError(str(exc), *at("label:" + st.label)) from None
    threads = [t.name for t in doc.threads]
    if len(set(threads)) != len(threads):
        dup = next(t for t in threads if threads.count(t) > 1)
        raise ParseError(f"duplicate thread {dup!r}", *at("thread:" + dup))
    for a, b in doc.order:
        for x in (a, b):
            if x not in labels:
                raise ParseError(f"unknown label {x!r}", *at(f"order:{a}<{b}"))
    for label, _ in doc.conflicts:
        if label not in labels:
            raise ParseError(f"unknown label {label!r}", *at("conflict:" + label))
    for a, b, e in doc.annotation:
        key = f"annotation:{a},{b}"
        for x in (a, b):
            if x not in labels:
                raise ParseError(f"unknown label {x!r}", *at(key))
        if a == b:
            raise ParseError("annotation pairs must name distinct operations", *at(key))
        try:
            space.check_guard(e)
        except (TypeError, ValueError) as exc:
            raise ParseError(str(exc), *at(key)) from None
    for v in list(doc.shared) + [v for v, _ in doc.unshared]:
        if v not in space:
            raise ParseError(f"unknown variable {v!r} in sharing declaration")
    for v, owner in doc.unshared:
        if owner not in threads:
            raise ParseError(f"unknown owner thread {owner!r} for {v!r}")
    try:
        doc.program()
    except ProgramError as exc:
        raise ParseError(str(exc)) from None


# ---------------------------------------------------------------------------
# Serializer
# ---------------------------------------------------------------------------


def _literal(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _decl_text(d: VarDecl) -> str:
    ty = "bool" if d.hi is None else f"int[0..{d.hi}]"
    return f"{d.name}: {ty} = {_literal(d.init)}"


def stmt_text(st: Stmt) -> str:
    def assigns(a):
        return ", ".join(n for n, _ in a) + " := " + ", ".join(render(e) for _, e in a)

    if st.kind == "skip":
        body = "skip"
    elif st.kind == "read":
        body = f"read {st.read[0]} := {st.read[1]}"
    elif st.kind == "rmw":
        body = f"rmw {st.assigns[0][0]}: {render(st.guard)} -> {assigns(st.assigns)}"
    elif st.kind == "wait":
        body = "wait " + render(st.guard)
        if st.assigns:
            body += " -> " + assigns(st.assigns)
    else:
        body = assigns(st.assigns)
    return f"{st.label}: {body}"


def serialize(doc: SourceDocument) -> str:
    """Canonical text; ``parse(serialize(d)) == d``."""
    out: list[str] = []

    def section(head: str, lines: list[str]) -> None:
        if lines:
            out.append(head + " {")
            out.extend("  " + ln for ln in lines)
            out.append("}")

    section("vars", [_decl_text(d) for d in doc.vars])
    section("ghost", [_decl_text(d) for d in doc.ghosts])
    if doc.shared:
        section("shared", [", ".join(doc.shared)])
    section("unshared", [f"{v}: {t}" for v, t in doc.unshared])
    if doc.init is not None:
        section("init", [stmt_text(doc.init)])
    for t in doc.threads:
        if t.stmts:
            section(f"thread {t.name}", [stmt_text(s) for s in t.stmts])
        else:
            out.append(f"thread {t.name} {{\n}}")
    if doc.final is not None:
        section("final", [stmt_text(doc.final)])
    section("order", [f"{a} < {b}" for a, b in doc.order])
    section("conflict", [f"{label}: {', '.join(cvs)}" for label, cvs in doc.conflicts])
    section("annotation", [f"({a}, {b}): {render(e)}" for a, b, e in doc.annotation])
    return "\n".join(out) + "\n"


def load(path) -> SourceDocument:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())
