"""An x86-TSO store-buffer simulator and the bridge back to CC executions.

Every thread owns a FIFO store buffer.  Buffered writes become visible to
other threads only when drained; the issuing thread sees its own newest
buffered value first.  Interlocked operations need an empty buffer and update
memory atomically.  In *disciplined* mode a write is buffered only when every
variable it targets is owned by the issuing thread; otherwise it is
interlocked.  In *plain* mode every write is buffered and only
read-modify-writes are interlocked.

Operations outside any thread (an explicit ``init`` or ``final``) run as
singleton threads that own nothing.  An operation whose program-order
predecessors live on other threads waits until those have executed and their
writes have reached memory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

from ccm.core import CapExceeded, Order, Program, Valid, red_masks, validate_execution
from ccm.expr import TRUE, State, Value, variables
from ccm.report import CheckReport, Witness

Mode = Literal["plain", "disciplined"]
MODES: tuple[str, ...] = ("plain", "disciplined")
DEFAULT_MAX_STATES = 200_000

ISSUE = "issue-buffered-write"
INTERLOCKED = "interlocked-commit"
READ = "read-pass"
DRAIN = "drain"


class TsoError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Variable classification and shape checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VarClass:
    owner: str | None = None

    @property
    def shared(self) -> bool:
        return self.owner is None

    def __str__(self) -> str:
        return "shared" if self.shared else f"owned by {self.owner}"


SHARED = VarClass()


def _writers(program: Program) -> dict[str, set[str]]:
    out: dict[str, set[str]] = {n: set() for n in program.space.names}
    for op in program.ops:
        if op.thread is not None:
            for v in op.targets:
                out[v].add(op.thread)
    return out


def _readers(program: Program) -> dict[str, set[str]]:
    out: dict[str, set[str]] = {n: set() for n in program.space.names}
    for op in program.ops:
        if op.thread is not None:
            for v in op.reads_vars:
                out[v].add(op.thread)
    return out


def classify_variables(
    program: Program, declared: dict[str, str | None] | None = None
) -> dict[str, VarClass]:
    """Shared or owned, per variable.

    Declarations (``{var: None}`` for shared, ``{var: thread}`` for owned) win
    over inference.  Otherwise a variable written by two or more threads is
    shared, one with a single writing thread is owned by it, and a variable
    nobody writes is owned by its only reader if there is one.  Only threaded
    operations count; ``init`` and ``final`` belong to no thread.
    """
    writers, readers = _writers(program), _readers(program)
    declared = dict(declared or {})
    out: dict[str, VarClass] = {}
    for v in program.space.names:
        if v in declared:
            owner = declared[v]
            if owner is not None:
                if owner not in program.threads:
                    raise TsoError(f"variable {v}: owner {owner} is not a thread")
                others = writers[v] - {owner}
                if others:
                    raise TsoError(
                        f"variable {v} is declared unshared (owner {owner}) "
                        f"but is also written by {', '.join(sorted(others))}"
                    )
            out[v] = VarClass(owner)
        elif len(writers[v]) >= 2:
            out[v] = SHARED
        elif len(writers[v]) == 1:
            out[v] = VarClass(next(iter(writers[v])))
        elif len(readers[v]) == 1:
            out[v] = VarClass(next(iter(readers[v])))
        else:
            out[v] = SHARED
    return out


def _op_kind(op) -> str:
    if not op.update:
        return "read"
    return "write" if op.guard == TRUE else "rmw"


def check_shapes(program: Program, classes: dict[str, VarClass] | None = None) -> CheckReport:
    """Every operation must be a single-variable read, a write, or an rmw.

    Writes and rmws by a thread may touch only shared variables or variables
    that thread owns.
    """
    if classes is None:
        classes = classify_variables(program)
    report = CheckReport(stats={"ops": len(program.ops)})

    def bad(op, why: str) -> None:
        report.witnesses.append(Witness("shape", (op.id,), (), why))

    for op in program.ops:
        if op.read is not None:
            bad(op, "weak reads have no TSO counterpart")
            continue
        gvars = variables(op.guard)
        kind = _op_kind(op)
        if kind == "read":
            if len(gvars) > 1:
                bad(op, f"guard reads {len(gvars)} variables")
            continue
        rhs = set().union(*(variables(e) for _, e in op.update))
        if kind == "write":
            if rhs:
                bad(op, "write values must be constants; use an rmw to read and write")
                continue
        else:
            targets = set(op.targets)
            if len(targets) != 1 or not gvars <= targets or not rhs <= targets:
                bad(op, "an rmw must read and write a single variable")
                continue
        if op.thread is None:
            continue
        for v in op.targets:
            c = classes[v]
            if not c.shared and c.owner != op.thread:
                bad(op, f"writes {v}, which is owned by {c.owner}")
    return report


# ---------------------------------------------------------------------------
# Configurations and steps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BufferedWrite:
    assigns: tuple[tuple[int, Value], ...]
    op: str

    def names(self, program: Program) -> tuple[str, ...]:
        return tuple(program.space.names[i] for i, _ in self.assigns)


@dataclass(frozen=True)
class TsoConfiguration:
    memory: State
    buffers: tuple[tuple[BufferedWrite, ...], ...]
    pcs: tuple[int, ...]


@dataclass(frozen=True)
class Action:
    kind: str
    thread: str
    op: str
    values: tuple[tuple[str, Value], ...] = ()
    ts: int = 0

    def describe(self) -> str:
        vals = ", ".join(f"{n}={'T' if v is True else 'F' if v is False else v}" for n, v in self.values)
        return f"{self.ts:>3} {self.kind} {self.thread}:{self.op}" + (f" [{vals}]" if vals else "")


@dataclass(frozen=True)
class TsoTrace:
    actions: tuple[Action, ...]
    final: TsoConfiguration
    complete: bool

    @property
    def executed(self) -> dict[str, int]:
        """Timestamp at which each operation executed (issued, for buffered writes)."""
        return {a.op: a.ts for a in self.actions if a.kind != DRAIN}

    @property
    def committed(self) -> dict[str, int]:
        """Timestamp at which each write reached memory."""
        return {a.op: a.ts for a in self.actions if a.kind in (DRAIN, INTERLOCKED)}

    @property
    def observed(self) -> dict[str, dict[str, Value]]:
        """Values each guarded operation saw, per guard variable."""
        return {
            a.op: dict(a.values) for a in self.actions if a.kind in (READ, INTERLOCKED) and a.values
        }

    def summary(self) -> list[tuple[str, str]]:
        return [(a.kind, a.op) for a in self.actions]


class TsoMachine:
    """The transition relation for one program under one mode."""

    def __init__(
        self, program: Program, mode: Mode, classes: dict[str, VarClass] | None = None
    ) -> None:
        if mode not in MODES:
            raise ValueError(f"unknown TSO mode {mode!r}")
        if not program.is_concrete:
            raise TsoError("weak reads have no TSO counterpart")
        self.program = program
        self.mode = mode
        self.classes = classify_variables(program) if classes is None else classes
        shapes = check_shapes(program, self.classes)
        if not shapes.passed:
            raise TsoError("; ".join(w.describe() for w in shapes.witnesses))
        idx = program.index
        chains: list[tuple[str, list[int]]] = [
            (t, [idx[o] for o in ids]) for t, ids in program.threads.items()
        ]
        chains += [(op.id, [i]) for i, op in enumerate(program.ops) if op.thread is None]
        self.names = tuple(name for name, _ in chains)
        self.chains = tuple(tuple(c) for _, c in chains)
        self.chain_of = [0] * len(program.ops)
        self.pos = [0] * len(program.ops)
        for c, chain in enumerate(self.chains):
            for k, i in enumerate(chain):
                self.chain_of[i] = c
                self.pos[i] = k
        self.kind = [_op_kind(op) for op in program.ops]
        self.buffered = [self._buffers(i) for i in range(len(program.ops))]
        ppred = program.order.pred
        self.remote = [
            [p for p in range(len(program.ops)) if ppred[i] >> p & 1 and self.chain_of[p] != self.chain_of[i]]
            for i in range(len(program.ops))
        ]
        self.gvars = [
            tuple(sorted(program.space.index[v] for v in variables(op.guard))) for op in program.ops
        ]

    def _buffers(self, i: int) -> bool:
        op = self.program.ops[i]
        if self.kind[i] != "write":
            return False
        if self.mode == "plain":
            return True
        return op.thread is not None and all(self.classes[v].owner == op.thread for v in op.targets)

    def initial(self, init: State) -> TsoConfiguration:
        n = len(self.chains)
        return TsoConfiguration(tuple(init), ((),) * n, (0,) * n)

    def is_final(self, cfg: TsoConfiguration) -> bool:
        return all(pc == len(ch) for pc, ch in zip(cfg.pcs, self.chains)) and not any(cfg.buffers)

    def view(self, cfg: TsoConfiguration, c: int) -> State:
        """Memory as thread ``c`` sees it: its newest buffered value, else memory."""
        if not cfg.buffers[c]:
            return cfg.memory
        s = list(cfg.memory)
        for w in cfg.buffers[c]:
            for v, val in w.assigns:
                s[v] = val
        return tuple(s)

    def _ready(self, cfg: TsoConfiguration, i: int) -> bool:
        for p in self.remote[i]:
            c = self.chain_of[p]
            if cfg.pcs[c] <= self.pos[p]:
                return False
            if any(w.op == self.program.ids[p] for w in cfg.buffers[c]):
                return False
        return True

    def step(self, cfg: TsoConfiguration) -> list[tuple[Action, TsoConfiguration]]:
        program = self.program
        names = program.space.names
        out: list[tuple[Action, TsoConfiguration]] = []
        for c, chain in enumerate(self.chains):
            pc = cfg.pcs[c]
            if pc < len(chain):
                i = chain[pc]
                if self._ready(cfg, i):
                    move = self._execute(cfg, c, i, names)
                    if move is not None:
                        out.append(move)
            if cfg.buffers[c]:
                w = cfg.buffers[c][0]
                mem = list(cfg.memory)
                for v, val in w.assigns:
                    mem[v] = val
                buffers = _set(cfg.buffers, c, cfg.buffers[c][1:])
                act = Action(DRAIN, self.names[c], w.op, tuple((names[v], val) for v, val in w.assigns))
                out.append((act, TsoConfiguration(tuple(mem), buffers, cfg.pcs)))
        return out

    def _execute(self, cfg, c, i, names):
        program = self.program
        op_id = program.ids[i]
        pcs = _set(cfg.pcs, c, cfg.pcs[c] + 1)
        if self.kind[i] == "read":
            view = self.view(cfg, c)
            if not program.guards[i](view):
                return None
            seen = tuple((names[v], view[v]) for v in self.gvars[i])
            return Action(READ, self.names[c], op_id, seen), TsoConfiguration(cfg.memory, cfg.buffers, pcs)
        if self.buffered[i]:
            view = self.view(cfg, c)
            after = program.updates[i](view)
            assigns = tuple(
                (program.space.index[n], after[program.space.index[n]]) for n in program.ops[i].targets
            )
            w = BufferedWrite(assigns, op_id)
            buffers = _set(cfg.buffers, c, cfg.buffers[c] + (w,))
            act = Action(ISSUE, self.names[c], op_id, tuple((names[v], val) for v, val in assigns))
            return act, TsoConfiguration(cfg.memory, buffers, pcs)
        if cfg.buffers[c] or not program.guards[i](cfg.memory):
            return None
        seen = tuple((names[v], cfg.memory[v]) for v in self.gvars[i])
        after = program.updates[i](cfg.memory)
        return Action(INTERLOCKED, self.names[c], op_id, seen), TsoConfiguration(after, cfg.buffers, pcs)


def _set(t: tuple, k: int, value) -> tuple:
    return t[:k] + (value,) + t[k + 1 :]


def step(
    config: TsoConfiguration,
    mode: Mode,
    program: Program,
    classes: dict[str, VarClass] | None = None,
) -> list[tuple[Action, TsoConfiguration]]:
    """Enabled successors of ``config``; disabled actions are simply absent."""
    return TsoMachine(program, mode, classes).step(config)


# ---------------------------------------------------------------------------
# Exploration
# ---------------------------------------------------------------------------


@dataclass
class Exploration:
    traces: list[TsoTrace]
    stats: dict[str, int] = field(default_factory=dict)

    @property
    def complete(self) -> list[TsoTrace]:
        return [t for t in self.traces if t.complete]

    def __len__(self) -> int:
        return len(self.traces)

    def __iter__(self):
        return iter(self.traces)


def explore(
    program: Program,
    init: State,
    mode: Mode,
    classes: dict[str, VarClass] | None = None,
    *,
    complete_only: bool = False,
    max_states: int = DEFAULT_MAX_STATES,
) -> Exploration:
    """Every maximal trace from ``init``, by depth-first search.

    A trace is complete when every operation ran and every buffer drained;
    maximal traces stuck on a failed wait are kept and flagged incomplete.
    """
    machine = TsoMachine(program, mode, classes)
    stats = {"traces": 0, "complete": 0, "steps": 0}
    traces: list[TsoTrace] = []
    # Configurations from which no trace can finish, so complete-only runs
    # can skip them.
    dead: set[TsoConfiguration] = set()

    def dfs(cfg: TsoConfiguration, path: list[Action]) -> bool:
        stats["steps"] += 1
        if stats["steps"] > max_states:
            raise CapExceeded(f"TSO exploration exceeded {max_states} steps")
        if complete_only and cfg in dead:
            return False
        succ = machine.step(cfg)
        if not succ:
            complete = machine.is_final(cfg)
            if complete or not complete_only:
                stats["traces"] += 1
                stats["complete"] += complete
                traces.append(TsoTrace(tuple(path), cfg, complete))
            return complete
        any_complete = False
        for act, nxt in succ:
            path.append(Action(act.kind, act.thread, act.op, act.values, len(path) + 1))
            any_complete |= dfs(nxt, path)
            path.pop()
        if not any_complete:
            dead.add(cfg)
        return any_complete

    dfs(machine.initial(init), [])
    return Exploration(traces, stats)


def tso_behaviors(
    program: Program,
    init: State,
    mode: Mode,
    classes: dict[str, VarClass] | None = None,
    *,
    max_states: int = DEFAULT_MAX_STATES,
) -> frozenset[State]:
    """Final memories of complete runs, by search over distinct configurations."""
    machine = TsoMachine(program, mode, classes)
    start = machine.initial(init)
    seen = {start}
    stack = [start]
    finals: set[State] = set()
    while stack:
        cfg = stack.pop()
        if machine.is_final(cfg):
            finals.add(cfg.memory)
        for _, nxt in machine.step(cfg):
            if nxt not in seen:
                seen.add(nxt)
                if len(seen) > max_states:
                    raise CapExceeded(f"more than {max_states} TSO configurations")
                stack.append(nxt)
    return frozenset(finals)


def trace_behaviors(traces) -> frozenset[State]:
    return frozenset(t.final.memory for t in traces if t.complete)


# ---------------------------------------------------------------------------
# Derived order and the bridge check
# ---------------------------------------------------------------------------


def derived_order(trace: TsoTrace, program: Program) -> Order:
    """Program order plus "a write that reached memory before ``o`` ran".

    ``o' < o`` iff ``o'`` precedes ``o`` in the program, or some write ``w``
    commits strictly before ``o`` executes and ``o'`` is ``w`` or precedes it
    in the program.
    """
    if not trace.complete:
        raise TsoError("the derived order is defined for complete traces only")
    idx = program.index
    ppred = program.order.pred
    executed, committed = trace.executed, trace.committed
    n = len(program.ops)
    pred = list(ppred)
    for o in range(n):
        t = executed[program.ids[o]]
        for w_id, ct in committed.items():
            if ct < t:
                w = idx[w_id]
                pred[o] |= (1 << w) | ppred[w]
    order = Order(program.ids, tuple(pred), (1 << n) - 1)
    for o in range(n):
        if pred[o] >> o & 1:
            raise TsoError(f"derived order is reflexive at {program.ids[o]}")
        for m in range(n):
            if pred[o] >> m & 1 and pred[m] & ~pred[o]:
                k = (pred[m] & ~pred[o]).bit_length() - 1
                raise TsoError(
                    "derived order is not transitive: "
                    f"{program.ids[k]} < {program.ids[m]} < {program.ids[o]}"
                )
    return order


def check_trace(program: Program, init: State, trace: TsoTrace) -> list[Witness]:
    """Bridge obligations for one complete trace."""
    order = derived_order(trace, program)
    ops = tuple(dict.fromkeys(a.op for a in trace.actions))
    detail = " ".join(f"{k}:{o}" for k, o in trace.summary())
    if not order.extends(program.order):
        return [Witness("bridge", ops, (), f"derived order misses program order; {detail}")]
    verdict = validate_execution(program, order, None, init)
    if not isinstance(verdict, Valid):
        return [Witness("bridge", ops, (), f"{verdict.describe(program.space)}; trace {detail}")]
    red = red_masks(program, order, init)
    out = []
    space = program.space
    for op_id, seen in trace.observed.items():
        s = red[order.before_mask(program.index[op_id])]
        for v, val in seen.items():
            if s[space.index[v]] != val:
                out.append(
                    Witness(
                        "read-value",
                        (op_id,),
                        (s,),
                        f"{v} read {val} operationally but the prefix state has {s[space.index[v]]}",
                    )
                )
    return out


def bridge_check(
    program: Program,
    init: State,
    mode: Mode,
    classes: dict[str, VarClass] | None = None,
    *,
    max_states: int = DEFAULT_MAX_STATES,
) -> CheckReport:
    """Check every complete trace's derived order against the CC axioms.

    Expected to pass in disciplined mode.  In plain mode the result is
    informational: failures show where plain TSO leaves CC.
    """
    result = explore(program, init, mode, classes, complete_only=True, max_states=max_states)
    report = CheckReport(stats={"traces": len(result.complete), "steps": result.stats["steps"]})
    for trace in result.complete:
        report.witnesses.extend(check_trace(program, init, trace))
    return report
