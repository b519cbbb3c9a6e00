"""Enumerate causal (CC) and sequentially consistent (SC) executions.

``enumerate_cc`` grows executions one operation at a time, choosing the set
of operations the new one sees; ``enumerate_cc_oracle`` instead tries every
strict order on every prefix and keeps what ``validate_execution`` accepts.
The two are expected to agree exactly and are cross-checked in the tests.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterator
from dataclasses import dataclass, field, replace

from ccm import kernels
from ccm.core import (
    CapExceeded,
    Execution,
    Order,
    Program,
    Valid,
    _bits,
    red_masks,
    validate_execution,
)
from ccm.expr import Const, Eq, State, Var

DEFAULT_MAX_OPS = 16
DEFAULT_MAX_DOWNSETS = 4096
ORACLE_MAX_OPS = 6


@dataclass
class EnumerationResult:
    model: str
    complete_only: bool
    executions: tuple[Execution, ...]
    stats: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.executions)

    def __iter__(self) -> Iterator[Execution]:
        return iter(self.executions)

    def keys(self) -> frozenset[tuple]:
        return frozenset(e.key for e in self.executions)


def desugar_reads(program: Program) -> list[Program]:
    """One concrete program per choice of value for every weak read."""
    sugared = [i for i, op in enumerate(program.ops) if op.read is not None]
    if not sugared:
        return [program]
    domains = [program.space.decl(program.ops[i].read[1]).domain for i in sugared]
    out = []
    for values in itertools.product(*domains):
        ops = list(program.ops)
        for i, c in zip(sugared, values):
            op = ops[i]
            target, source = op.read
            ops[i] = _concrete_read(op, target, source, c)
        choices = tuple(sorted((program.ids[i], c) for i, c in zip(sugared, values)))
        out.append(program.replace(ops, read_choices=choices))
    return out


def _concrete_read(op, target, source, c):
    return replace(op, guard=Eq(Var(source), Const(c)), update=((target, Const(c)),), read=None)


def _executed_reads(program: Program, carrier: int) -> tuple:
    if not program.read_choices:
        return ()
    idx = program.index
    return tuple((o, v) for o, v in program.read_choices if carrier >> idx[o] & 1)


def _execution(program: Program, init: State, order: Order, final: State) -> Execution:
    return Execution(
        carrier=order.members,
        order=order.pairs,
        final=final,
        reads=_executed_reads(program, order.carrier),
        program=program,
        init=init,
    )


def _sort_key(e: Execution) -> tuple:
    return (len(e.carrier), sorted(e.carrier), sorted(e.order), e.reads)


def _collect(model: str, complete_only: bool, found: dict, stats: dict) -> EnumerationResult:
    execs = tuple(sorted(found.values(), key=_sort_key))
    return EnumerationResult(model, complete_only, execs, stats)


def _check_ops(program: Program, max_ops: int) -> None:
    if len(program.ops) > max_ops:
        raise CapExceeded(f"{len(program.ops)} operations exceed the cap of {max_ops}")


# ---------------------------------------------------------------------------
# CC by incremental placement
# ---------------------------------------------------------------------------


def enumerate_cc(
    program: Program,
    init: State,
    complete_only: bool = False,
    *,
    max_ops: int = DEFAULT_MAX_OPS,
    max_downsets: int = DEFAULT_MAX_DOWNSETS,
) -> EnumerationResult:
    """All CC executions of ``program`` from ``init`` (or only complete ones).

    Every reachable (carrier, order) pair is visited once.  A new operation
    ``o`` is placed after a downset ``B`` of the current order that contains
    its program predecessors and every placed operation sharing a conflict
    variable with it; the guard is checked at ``red(B)`` and the new prefixes
    ``D + o`` (``B <= D``) are checked for coherence before the state is kept.
    """
    _check_ops(program, max_ops)
    stats = {"candidates": 0, "pruned": 0, "states": 0}
    found: dict[tuple, Execution] = {}
    for concrete in desugar_reads(program):
        for carrier, pred, red in _cc_states(concrete, init, max_downsets, stats):
            if complete_only and carrier != (1 << len(concrete.ops)) - 1:
                continue
            order = Order(concrete.ids, pred, carrier)
            ex = _execution(concrete, init, order, red[carrier])
            found.setdefault(ex.key, ex)
    return _collect("cc", complete_only, found, stats)


def _cc_states(program: Program, init: State, max_downsets: int, stats: dict):
    n = len(program.ops)
    ids = program.ids
    ppred = program.order.pred
    guards, updates = program.guards, program.updates
    conflict = [0] * n
    for a in range(n):
        for b in range(n):
            if a != b and program.conflicts_declared(a, b):
                conflict[a] |= 1 << b
    placement = program.order.topo()

    start = (0, (0,) * n)
    seen = {start}
    stack = [(0, (0,) * n, {0: init})]
    while stack:
        carrier, pred, red = stack.pop()
        stats["states"] += 1
        yield carrier, pred, red
        order = Order(ids, pred, carrier)
        downs = sorted(red, key=order.sort_key)
        for o in placement:
            obit = 1 << o
            if carrier & obit or ppred[o] & ~carrier:
                continue
            need = ppred[o] | (conflict[o] & carrier)
            for b in downs:
                if b & need != need:
                    continue
                stats["candidates"] += 1
                if not guards[o](red[b]):
                    stats["pruned"] += 1
                    continue
                grown = _extend(order, red, downs, o, b, updates)
                if grown is None:
                    stats["pruned"] += 1
                    continue
                if len(grown) > max_downsets:
                    raise CapExceeded(f"{len(grown)} downsets exceed the cap of {max_downsets}")
                new_pred = pred[:o] + (b,) + pred[o + 1 :]
                key = (carrier | obit, new_pred)
                if key in seen:
                    continue
                seen.add(key)
                stack.append((carrier | obit, new_pred, grown))


def _extend(order: Order, red: dict, downs: list, o: int, b: int, updates) -> dict | None:
    """Prefix map after placing ``o`` above downset ``b``; None if incoherent."""
    obit = 1 << o
    new = dict(red)
    upd_o = updates[o]
    for d in downs:
        if d & b != b:
            continue
        s = upd_o(red[d])
        for m in order.maximal(d):
            mbit = 1 << m
            if b & mbit:
                continue
            if updates[m](new[(d & ~mbit) | obit]) != s:
                return None
        new[d | obit] = s
    return new


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------


def enumerate_cc_oracle(
    program: Program, init: State, complete_only: bool = False, *, max_ops: int = ORACLE_MAX_OPS
) -> EnumerationResult:
    """Ground truth by exhaustion: every strict order on every prefix, validated."""
    _check_ops(program, max_ops)
    stats = {"candidates": 0, "pruned": 0}
    found: dict[tuple, Execution] = {}
    for concrete in desugar_reads(program):
        n = len(concrete.ops)
        full = (1 << n) - 1
        ppred = concrete.order.pred
        for carrier in range(1 << n):
            if complete_only and carrier != full:
                continue
            members = _bits(carrier)
            if any(ppred[i] & ~carrier for i in members):
                continue
            base = [ppred[i] & carrier if carrier >> i & 1 else 0 for i in range(n)]
            cand = [
                (a, b)
                for a in members
                for b in members
                if a != b and not ppred[b] >> a & 1 and not ppred[a] >> b & 1
            ]
            ca = [a for a, _ in cand]
            cb = [b for _, b in cand]
            for sub in kernels.strict_orders(base, ca, cb, carrier):
                pred = list(base)
                for j in _bits(sub):
                    pred[cb[j]] |= 1 << ca[j]
                order = Order(concrete.ids, tuple(pred), carrier)
                stats["candidates"] += 1
                if not isinstance(validate_execution(concrete, order, None, init), Valid):
                    stats["pruned"] += 1
                    continue
                final = red_masks(concrete, order, init)[carrier]
                ex = _execution(concrete, init, order, final)
                found.setdefault(ex.key, ex)
    return _collect("cc-oracle", complete_only, found, stats)


# ---------------------------------------------------------------------------
# SC: linear executions
# ---------------------------------------------------------------------------


def enumerate_sc(
    program: Program,
    init: State,
    complete_only: bool = False,
    *,
    max_ops: int = DEFAULT_MAX_OPS,
) -> EnumerationResult:
    """Interleavings in which each guard holds on the running state."""
    _check_ops(program, max_ops)
    stats = {"candidates": 0, "pruned": 0}
    found: dict[tuple, Execution] = {}
    for concrete in desugar_reads(program):
        n = len(concrete.ops)
        full = (1 << n) - 1
        ids = concrete.ids
        ppred = concrete.order.pred
        guards, updates = concrete.guards, concrete.updates

        def emit(seq: list[int], state: State) -> None:
            pred = [0] * n
            done = 0
            for i in seq:
                pred[i] = done
                done |= 1 << i
            order = Order(ids, tuple(pred), done)
            ex = _execution(concrete, init, order, state)
            found.setdefault(ex.key, ex)

        stack: list[tuple[list[int], int, State]] = [([], 0, init)]
        while stack:
            seq, done, state = stack.pop()
            if not complete_only or done == full:
                emit(seq, state)
            for o in range(n):
                if done >> o & 1 or ppred[o] & ~done:
                    continue
                stats["candidates"] += 1
                if not guards[o](state):
                    stats["pruned"] += 1
                    continue
                stack.append((seq + [o], done | 1 << o, updates[o](state)))
    return _collect("sc", complete_only, found, stats)


def behaviors(result: EnumerationResult) -> frozenset[State]:
    """Final states of the executions in ``result``."""
    return frozenset(e.final for e in result.executions)
