"""Programs as finite partial orders of guarded updates, and execution validation.

An execution is a strict order extending the program order on a downset of
the program, together with a map from downsets of that order to states.  The
map is built by :func:`build_red`; :func:`validate_execution` checks that it
is coherent and that every guard holds in the state its operation sees.

Orders are stored as predecessor bitmasks over the program's operation
indices; downsets cross the public API as ``frozenset`` of operation ids.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

from ccm import kernels
from ccm.expr import (
    TRUE,
    Assignment,
    DomainError,
    Expr,
    State,
    Value,
    VarSpace,
    evaluate,
    render,
    variables,
)

Downset = frozenset


class ProgramError(ValueError):
    """A program, order or execution request is malformed."""


class CapExceeded(RuntimeError):
    """A configured resource cap was hit; results would be incomplete."""


# ---------------------------------------------------------------------------
# Operations and programs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Operation:
    """A guard plus a deterministic parallel assignment.

    ``read`` marks weak-read sugar ``target := source``; such an operation is
    resolved into concrete guard/update pairs by ``enumeration.desugar_reads``.
    ``kind`` is the surface statement form and only matters to the TSO shapes.
    """

    id: str
    guard: Expr = TRUE
    update: tuple[Assignment, ...] = ()
    thread: str | None = None
    conflict_vars: frozenset[str] = frozenset()
    ghost_targets: frozenset[str] = frozenset()
    kind: str = "op"
    read: tuple[str, str] | None = None

    @property
    def targets(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.update)

    @property
    def reads_vars(self) -> frozenset[str]:
        out = variables(self.guard)
        for _, rhs in self.update:
            out |= variables(rhs)
        return out

    def describe(self) -> str:
        parts = []
        if self.guard != TRUE:
            parts.append(render(self.guard))
        if self.update:
            lhs = ", ".join(n for n, _ in self.update)
            rhs = ", ".join(render(e) for _, e in self.update)
            parts.append(f"{lhs} := {rhs}")
        return f"{self.id}: " + (" -> ".join(parts) if parts else "skip")


def _popcount(m: int) -> int:
    return bin(m).count("1")


def _bits(m: int) -> list[int]:
    out = []
    while m:
        low = m & -m
        out.append(low.bit_length() - 1)
        m ^= low
    return out


@dataclass(frozen=True)
class Order:
    """A strict order on a carrier subset of ``ids``, as predecessor masks."""

    ids: tuple[str, ...]
    pred: tuple[int, ...]
    carrier: int

    @classmethod
    def from_pairs(
        cls,
        ids: Sequence[str],
        pairs: Iterable[tuple[str, str]],
        carrier: Iterable[str] | None = None,
        close: bool = True,
    ) -> Order:
        ids = tuple(ids)
        index = {o: i for i, o in enumerate(ids)}
        pred = [0] * len(ids)
        for a, b in pairs:
            if a not in index or b not in index:
                raise ProgramError(f"order edge ({a}, {b}) names an unknown operation")
            pred[index[b]] |= 1 << index[a]
        if close:
            pred = kernels.transitive_closure(pred)
        cmask = (1 << len(ids)) - 1 if carrier is None else sum(1 << index[o] for o in carrier)
        return cls(ids, tuple(pred), cmask)

    @cached_property
    def index(self) -> dict[str, int]:
        return {o: i for i, o in enumerate(self.ids)}

    @cached_property
    def succ(self) -> tuple[int, ...]:
        s = [0] * len(self.ids)
        for i, p in enumerate(self.pred):
            for j in _bits(p):
                s[j] |= 1 << i
        return tuple(s)

    @property
    def pairs(self) -> frozenset[tuple[str, str]]:
        return frozenset(
            (self.ids[j], self.ids[i])
            for i in _bits(self.carrier)
            for j in _bits(self.pred[i] & self.carrier)
        )

    @property
    def members(self) -> frozenset[str]:
        return self.names(self.carrier)

    def names(self, mask: int) -> frozenset[str]:
        return frozenset(self.ids[i] for i in _bits(mask))

    def mask(self, names: Iterable[str]) -> int:
        m = 0
        for o in names:
            if o not in self.index:
                raise KeyError(f"unknown operation {o!r}")
            m |= 1 << self.index[o]
        return m

    def lt(self, a: str, b: str) -> bool:
        return bool(self.pred[self.index[b]] >> self.index[a] & 1)

    def is_strict(self) -> bool:
        """Irreflexive and transitive on the carrier."""
        for i in _bits(self.carrier):
            p = self.pred[i] & self.carrier
            if p >> i & 1:
                return False
            for j in _bits(p):
                if self.pred[j] & self.carrier & ~p:
                    return False
        return True

    def restrict(self, mask: int) -> Order:
        keep = mask & self.carrier
        pred = tuple(p & keep if keep >> i & 1 else 0 for i, p in enumerate(self.pred))
        return Order(self.ids, pred, keep)

    def extends(self, other: Order) -> bool:
        """Whether every edge of ``other`` inside our carrier is also ours."""
        c = self.carrier
        return all(other.pred[i] & c & ~self.pred[i] == 0 for i in _bits(c))

    def is_downset(self, mask: int) -> bool:
        if mask & ~self.carrier:
            return False
        return all(self.pred[i] & ~mask == 0 for i in _bits(mask))

    def topo(self) -> list[int]:
        """Carrier indices in a linear extension (ties broken by index)."""
        out, done = [], 0
        remaining = _bits(self.carrier)
        while remaining:
            for i in remaining:
                if self.pred[i] & self.carrier & ~done == 0:
                    out.append(i)
                    done |= 1 << i
                    remaining.remove(i)
                    break
            else:
                raise ProgramError("order is cyclic")
        return out

    def sort_key(self, mask: int) -> tuple[int, tuple[str, ...]]:
        return (_popcount(mask), tuple(sorted(self.ids[i] for i in _bits(mask))))

    def downset_masks(self) -> list[int]:
        """Every downset as a mask, by size then sorted ids."""
        pred = [p & self.carrier for p in self.pred]
        return sorted(kernels.downset_masks(pred, self.topo()), key=self.sort_key)

    def maximal(self, mask: int) -> list[int]:
        succ = self.succ
        return [i for i in _bits(mask) if succ[i] & mask == 0]

    def before_mask(self, i: int) -> int:
        return self.pred[i] & self.carrier

    def not_after_mask(self, i: int) -> int:
        return self.carrier & ~self.succ[i]


def downsets(order: Order) -> list[Downset]:
    """All predecessor-closed subsets of the order's carrier, in canonical order."""
    return [order.names(m) for m in order.downset_masks()]


def _lookup(order: Order, o: str) -> int:
    i = order.index.get(o)
    if i is None or not order.carrier >> i & 1:
        raise KeyError(f"operation {o!r} not in the order's carrier")
    return i


def before(order: Order, o: str) -> Downset:
    return order.names(order.before_mask(_lookup(order, o)))


def not_after(order: Order, o: str) -> Downset:
    return order.names(order.not_after_mask(_lookup(order, o)))


def without(order: Order, o: str) -> Downset:
    i = _lookup(order, o)
    return order.names(order.not_after_mask(i) & ~(1 << i))


class Program:
    """Variables, operations and a strict program order (transitively closed)."""

    def __init__(
        self,
        space: VarSpace,
        ops: Iterable[Operation],
        order: Iterable[tuple[str, str]] = (),
        read_choices: tuple[tuple[str, Value], ...] = (),
    ) -> None:
        self.space = space
        # weak-read values fixed when this program was desugared
        self.read_choices = read_choices
        self.ops: tuple[Operation, ...] = tuple(ops)
        self.ids = tuple(o.id for o in self.ops)
        if len(set(self.ids)) != len(self.ids):
            dup = sorted({o for o in self.ids if self.ids.count(o) > 1})
            raise ProgramError(f"duplicate operation ids: {dup}")
        self.order = Order.from_pairs(self.ids, order)
        if not self.order.is_strict():
            raise ProgramError("program order is cyclic")
        self.index = self.order.index
        for op in self.ops:
            self._check_op(op)
        by_thread: dict[str, list[int]] = {}
        for i, op in enumerate(self.ops):
            if op.thread is not None:
                by_thread.setdefault(op.thread, []).append(i)
        for t, members in by_thread.items():
            for a in members:
                for b in members:
                    if a < b and not (self.order.pred[b] >> a & 1 or self.order.pred[a] >> b & 1):
                        raise ProgramError(
                            f"operations {self.ids[a]} and {self.ids[b]} of thread {t} are unordered"
                        )
        self.threads: dict[str, tuple[str, ...]] = {
            t: tuple(self.ids[i] for i in sorted(m, key=lambda i: _popcount(self.order.pred[i])))
            for t, m in by_thread.items()
        }
        self.guards = [space.compile(op.guard) for op in self.ops]
        self.updates = [space.compile_update(op.update) for op in self.ops]

    def _check_op(self, op: Operation) -> None:
        try:
            self.space.check_guard(op.guard)
            self.space.check_update(op.update)
        except (TypeError, ValueError) as exc:
            raise ProgramError(f"operation {op.id}: {exc}") from exc
        if not op.ghost_targets <= set(op.targets):
            raise ProgramError(f"operation {op.id}: ghost targets must be assigned")
        if op.read is not None:
            r, v = op.read
            if r not in self.space or v not in self.space:
                raise ProgramError(f"operation {op.id}: weak read names undeclared variables")
            if self.space.decl(r).domain != self.space.decl(v).domain:
                raise ProgramError(f"operation {op.id}: read target and source domains differ")

    def __repr__(self) -> str:
        return f"Program({len(self.ops)} ops, {self.space!r})"

    def __len__(self) -> int:
        return len(self.ops)

    def op(self, o: str) -> Operation:
        return self.ops[self.index[o]]

    @property
    def pairs(self) -> frozenset[tuple[str, str]]:
        return self.order.pairs

    @property
    def is_concrete(self) -> bool:
        return all(op.read is None for op in self.ops)

    def lt(self, a: str, b: str) -> bool:
        return self.order.lt(a, b)

    def replace(
        self,
        ops: Iterable[Operation],
        space: VarSpace | None = None,
        read_choices: tuple[tuple[str, Value], ...] = (),
    ) -> Program:
        """Same order, different operations (matched by position)."""
        return Program(space or self.space, ops, self.pairs, read_choices)

    def conflicts_declared(self, i: int, j: int) -> bool:
        return bool(self.ops[i].conflict_vars & self.ops[j].conflict_vars)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def eval_guard(g: Expr, s: Mapping[str, Value]) -> bool:
    return bool(evaluate(g, s))


def eval_update(
    u: Iterable[Assignment], s: Mapping[str, Value], space: VarSpace | None = None
) -> dict[str, Value]:
    """Parallel assignment: every right-hand side is read from ``s``."""
    new = [(name, evaluate(rhs, s)) for name, rhs in u]
    out = dict(s)
    for name, v in new:
        if space is not None and not space.decl(name).admits(v):
            raise DomainError(name, v)
        out[name] = v
    return out


def commute_at(
    u1: Iterable[Assignment],
    u2: Iterable[Assignment],
    s: Mapping[str, Value],
    space: VarSpace | None = None,
) -> bool:
    u1, u2 = tuple(u1), tuple(u2)
    a = eval_update(u1, eval_update(u2, s, space), space)
    b = eval_update(u2, eval_update(u1, s, space), space)
    return a == b


def static_conflict(o1: Operation | str, o2: Operation | str, program: Program) -> bool:
    """Declared conflict, or non-commuting updates somewhere in the state space."""
    i = program.index[o1 if isinstance(o1, str) else o1.id]
    j = program.index[o2 if isinstance(o2, str) else o2.id]
    if program.conflicts_declared(i, j):
        return True
    f, g = program.updates[i], program.updates[j]
    return any(f(g(s)) != g(f(s)) for s in program.space.states())


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Valid:
    ok = True

    def describe(self, space: VarSpace) -> str:
        return "valid"


@dataclass(frozen=True)
class E1Violation:
    op: str
    state: State
    ok = False

    def describe(self, space: VarSpace) -> str:
        return f"guard of {self.op} fails in its prestate [{space.fmt(self.state)}]"


@dataclass(frozen=True)
class E2Violation:
    downset: Downset
    ops: tuple[str, str]
    states: tuple[State, State]
    ok = False

    def describe(self, space: VarSpace) -> str:
        a, b = self.ops
        return (
            f"incoherent prefix {{{', '.join(sorted(self.downset))}}}: "
            f"via {a} [{space.fmt(self.states[0])}] but via {b} [{space.fmt(self.states[1])}]"
        )


@dataclass(frozen=True)
class OrderViolation:
    missing: tuple[str, str]
    reason: str = "program order"
    ok = False

    def describe(self, space: VarSpace) -> str:
        a, b = self.missing
        return f"{a} and {b} must be ordered ({self.reason})"


Verdict = Union[Valid, E1Violation, E2Violation, OrderViolation]


class CoherenceError(Exception):
    """Raised by :func:`build_red` when maximal operations disagree."""

    def __init__(self, violation: E2Violation) -> None:
        super().__init__("incoherent prefix")
        self.violation = violation


# ---------------------------------------------------------------------------
# The prefix-to-state map
# ---------------------------------------------------------------------------


def red_masks(program: Program, order: Order, init: State, max_downsets: int | None = None) -> dict[int, State]:
    """Mask-keyed prefix map; raises :class:`CoherenceError` on disagreement."""
    downs = order.downset_masks()
    if max_downsets is not None and len(downs) > max_downsets:
        raise CapExceeded(f"{len(downs)} downsets exceed the cap of {max_downsets}")
    updates = program.updates
    ids = order.ids
    red: dict[int, State] = {0: init}
    for d in downs[1:]:
        maxes = sorted(order.maximal(d), key=lambda i: ids[i])
        first = maxes[0]
        s = updates[first](red[d & ~(1 << first)])
        for i in maxes[1:]:
            t = updates[i](red[d & ~(1 << i)])
            if t != s:
                raise CoherenceError(E2Violation(order.names(d), (ids[first], ids[i]), (s, t)))
        red[d] = s
    return red


def build_red(order: Order, init: State, program: Program) -> dict[Downset, State]:
    """Map every downset of ``order`` to its state, processing by increasing size."""
    red = red_masks(program, order, init)
    return {order.names(m): s for m, s in red.items()}


def _as_order(program: Program, order: Order | Iterable[tuple[str, str]], carrier) -> Order:
    if isinstance(order, Order):
        if carrier is not None:
            order = order.restrict(order.mask(carrier))
        return order
    return Order.from_pairs(program.ids, order, carrier=carrier, close=False)


def validate_execution(
    program: Program,
    order: Order | Iterable[tuple[str, str]],
    carrier: Iterable[str] | None,
    init: State,
) -> Verdict:
    """Check conditions E1 and E2 for ``order`` restricted to ``carrier``.

    ``order`` may be an :class:`Order` or an iterable of edges; edges are
    taken literally (a non-transitive edge set is rejected, not closed).
    """
    if not program.is_concrete:
        raise ProgramError("program still contains weak reads; desugar first")
    order = _as_order(program, order, None if carrier is None else list(carrier))
    if order.ids != program.ids:
        raise ProgramError("order is over a different set of operations")
    if not program.order.is_downset(order.carrier):
        raise ProgramError("carrier is not a downset of the program order")
    if not order.is_strict():
        raise ProgramError("execution order is not a strict order")
    ids = program.ids
    members = _bits(order.carrier)
    for i in members:
        missing = program.order.pred[i] & ~order.pred[i]
        if missing:
            j = _bits(missing)[0]
            return OrderViolation((ids[j], ids[i]))
    for a in members:
        for b in members:
            if a < b and program.conflicts_declared(a, b):
                if not (order.pred[b] >> a & 1 or order.pred[a] >> b & 1):
                    shared = sorted(program.ops[a].conflict_vars & program.ops[b].conflict_vars)
                    return OrderViolation((ids[a], ids[b]), "conflict variables " + ", ".join(shared))
    try:
        red = red_masks(program, order, init)
    except CoherenceError as exc:
        return exc.violation
    for i in members:
        seen = red[order.before_mask(i)]
        if not program.guards[i](seen):
            return E1Violation(ids[i], seen)
    return Valid()


@dataclass(frozen=True)
class Execution:
    """A validated execution: carrier, order pairs and the final state.

    ``reads`` records the value each executed weak read observed; it is part
    of the execution's identity because different reads give different
    concrete programs.
    """

    carrier: frozenset[str]
    order: frozenset[tuple[str, str]]
    final: State
    reads: tuple[tuple[str, Value], ...] = ()
    program: Program | None = field(default=None, compare=False, repr=False)
    init: State | None = field(default=None, compare=False, repr=False)

    @property
    def key(self) -> tuple:
        return (self.carrier, self.order, self.reads)

    def as_order(self) -> Order:
        assert self.program is not None
        return Order.from_pairs(self.program.ids, self.order, self.carrier, close=False)

    def red(self) -> dict[Downset, State]:
        assert self.program is not None and self.init is not None
        return build_red(self.as_order(), self.init, self.program)
