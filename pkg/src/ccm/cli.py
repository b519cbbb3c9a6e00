"""Command-line interface: ``ccm enumerate``, ``ccm check`` and ``ccm corpus``.

Exit codes:

* ``enumerate``: 0 on success, 2 on a parse or validation error, 3 when a cap
  is exceeded.
* ``check``: 0 when the check passes, 1 when it fails, 2 on a parse or
  validation error, 3 on a cap, 64 when the file lacks the needed section.
* ``corpus``: 0 iff every acceptance row passes.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from collections.abc import Sequence
from pathlib import Path

from ccm.core import CapExceeded, Order, ProgramError
from ccm.dsl import ParseError, SourceDocument, parse
from ccm.expr import DomainError, ExprTypeError, State, VarSpace

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INVALID = 2
EXIT_CAP = 3
EXIT_USAGE = 64

MODELS = ("cc", "cc-oracle", "sc", "tso-plain", "tso-disciplined")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def _digest(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def _parse_value(space: VarSpace, name: str, text: str):
    decl = space.decl(name)
    if decl.hi is None:
        if text.lower() in ("true", "t", "1"):
            return True
        if text.lower() in ("false", "f", "0"):
            return False
        raise ValueError(f"{name} is boolean; got {text!r}")
    value = int(text)
    if not decl.admits(value):
        raise ValueError(f"{name} ranges over 0..{decl.hi}; got {value}")
    return value


def initial_state(space: VarSpace, overrides: Sequence[str]) -> State:
    """The declared initial state with ``name=value`` overrides applied."""
    values = dict(zip(space.names, space.initial))
    for item in overrides:
        name, sep, text = item.partition("=")
        name = name.strip()
        if not sep or name not in space.index:
            raise ValueError(f"bad --init {item!r}: expected NAME=VALUE for a declared variable")
        values[name] = _parse_value(space, name, text.strip())
    return space.state(values)


def _state_json(space: VarSpace, s: State) -> dict:
    return dict(sorted(space.asdict(s).items()))


def _behaviors_json(space: VarSpace, states) -> list[dict]:
    return [_state_json(space, s) for s in sorted(states, key=lambda s: space.fmt(s))]


def _topo_listing(ids: Sequence[str], carrier: frozenset[str], order: frozenset) -> list[str]:
    o = Order.from_pairs(tuple(ids), order, carrier, close=False)
    return [ids[i] for i in o.topo() if ids[i] in carrier]


def _emit(report: dict, as_json: bool, text_lines: list[str]) -> None:
    if as_json:
        print(json.dumps(report, sort_keys=True, indent=2))
    else:
        for line in text_lines:
            print(line)


def _load(path: str) -> tuple[SourceDocument, bytes]:
    data = Path(path).read_bytes()
    return parse(data.decode("utf-8")), data


# ---------------------------------------------------------------------------
# enumerate
# ---------------------------------------------------------------------------


def cmd_enumerate(args: argparse.Namespace) -> int:
    from ccm import enumeration, tso

    start = time.perf_counter()
    doc, data = _load(args.file)
    program = doc.program()
    space = program.space
    init = initial_state(space, args.init)
    caps: dict = {}
    report: dict = {
        "command": "enumerate " + " ".join(args.argv),
        "input": _digest(data),
        "verdict": "ok",
        "witnesses": [],
    }
    lines: list[str] = []
    if args.model.startswith("tso-"):
        mode = args.model[4:]
        classes = tso.classify_variables(program, doc.declared_classes() or None)
        if args.max_states is not None:
            caps["max_states"] = args.max_states
        result = tso.explore(program, init, mode, classes, complete_only=args.complete_only, **caps)
        traces = result.traces
        finals = tso.trace_behaviors(traces)
        report["executions"] = [
            {
                "complete": t.complete,
                "actions": [
                    {"kind": a.kind, "thread": a.thread, "op": a.op, "ts": a.ts, "values": [list(v) for v in a.values]}
                    for a in t.actions
                ],
                "final": _state_json(space, t.final.memory),
            }
            for t in traces
        ]
        report["stats"] = dict(result.stats)
        lines.append(f"{len(traces)} trace(s), {len(result.complete)} complete ({args.model})")
        for k, t in enumerate(traces):
            lines.append(f"trace {k} ({'complete' if t.complete else 'blocked'}): final [{space.fmt(t.final.memory)}]")
            lines.extend("  " + a.describe() for a in t.actions)
    else:
        if args.max_ops is not None:
            caps["max_ops"] = args.max_ops
        if args.model == "cc":
            if args.max_states is not None:
                caps["max_downsets"] = args.max_states
            result = enumeration.enumerate_cc(program, init, args.complete_only, **caps)
        elif args.model == "cc-oracle":
            result = enumeration.enumerate_cc_oracle(program, init, args.complete_only, **caps)
        else:
            result = enumeration.enumerate_sc(program, init, args.complete_only, **caps)
        finals = enumeration.behaviors(result)
        report["executions"] = [
            {
                "carrier": sorted(e.carrier),
                "order": [list(p) for p in sorted(e.order)],
                "reads": [list(r) for r in e.reads],
                "final": _state_json(space, e.final),
            }
            for e in result
        ]
        report["stats"] = dict(result.stats)
        lines.append(f"{len(result)} execution(s) ({args.model}{', complete only' if args.complete_only else ''})")
        for k, e in enumerate(result):
            edges = ", ".join(f"{a}<{b}" for a, b in sorted(e.order)) or "none"
            seq = " ".join(_topo_listing(program.ids, e.carrier, e.order))
            reads = "".join(f" {o}={v}" for o, v in e.reads)
            lines.append(f"execution {k}: edges [{edges}] order [{seq}]{reads} final [{space.fmt(e.final)}]")
    report["behaviors"] = _behaviors_json(space, finals)
    lines.append("behaviors:")
    lines.extend(f"  [{space.fmt(s)}]" for s in sorted(finals, key=space.fmt))
    report["wall_time"] = round(time.perf_counter() - start, 6)
    _emit(report, args.json, lines)
    return EXIT_OK


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def cmd_check(args: argparse.Namespace) -> int:
    from ccm import annotate, ghost, tso

    start = time.perf_counter()
    doc, data = _load(args.file)
    program = doc.program()
    space = program.space
    init = initial_state(space, args.init)
    if args.annotation or args.soundness:
        kind = "annotation" if args.annotation else "soundness"
        if not doc.annotation:
            raise UsageError(f"{args.file} has no annotation section")
        A = doc.annotation_map()
        A.check_keys(program)
        result = annotate.check_annotation(A, program)
        if args.soundness and result.passed:
            result = result.merge(annotate.check_soundness_conclusion(A, program, init))
    elif args.ghost:
        kind = "ghost"
        if not doc.ghosts:
            raise UsageError(f"{args.file} declares no ghost variables")
        aug = ghost.Augmentation.from_program(program)
        result = ghost.check_ghost(aug, init)
    else:
        kind = "bridge"
        model = args.model or "tso-disciplined"
        if not model.startswith("tso-"):
            raise UsageError("--bridge needs --model tso-plain or tso-disciplined")
        classes = tso.classify_variables(program, doc.declared_classes() or None)
        caps = {} if args.max_states is None else {"max_states": args.max_states}
        result = tso.bridge_check(program, init, model[4:], classes, **caps)
    verdict = "pass" if result.passed else "fail"
    report = {
        "command": "check " + " ".join(args.argv),
        "input": _digest(data),
        "check": kind,
        "verdict": verdict,
        "witnesses": [w.to_json(space) for w in result.witnesses],
        "behaviors": [],
        "stats": dict(result.stats),
        "wall_time": round(time.perf_counter() - start, 6),
    }
    lines = [f"{kind}: {verdict}"]
    lines.extend("  " + w.describe(space) for w in result.witnesses)
    lines.append("stats: " + ", ".join(f"{k}={v}" for k, v in sorted(result.stats.items())))
    _emit(report, args.json, lines)
    return EXIT_OK if result.passed else EXIT_FAIL


# ---------------------------------------------------------------------------
# corpus
# ---------------------------------------------------------------------------


def cmd_corpus(args: argparse.Namespace) -> int:
    from ccm import acceptance

    rows = acceptance.run_all(args.corpus_dir)
    if args.json:
        for row in rows:
            print(json.dumps(row.to_json(), sort_keys=True))
    else:
        width = max(len(r.name) for r in rows)
        for row in rows:
            print(f"{row.criterion:>2}  {row.name:<{width}}  {'PASS' if row.ok else 'FAIL'}  {row.detail}")
        print(f"{sum(r.ok for r in rows)}/{len(rows)} passed")
    return EXIT_OK if all(r.ok for r in rows) else EXIT_FAIL


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccm", description="Coherent causal memory litmus tool")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("enumerate", help="enumerate executions or TSO traces")
    p.add_argument("file")
    p.add_argument("--model", choices=MODELS, default="cc")
    p.add_argument("--init", action="append", default=[], metavar="NAME=VALUE")
    p.add_argument("--complete-only", action="store_true")
    p.add_argument("--json", action="store_true")
    p.add_argument("--max-ops", type=int, default=None)
    p.add_argument("--max-states", type=int, default=None)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("check", help="check an annotation, ghost code or the TSO bridge")
    p.add_argument("file")
    which = p.add_mutually_exclusive_group(required=True)
    which.add_argument("--annotation", action="store_true")
    which.add_argument("--ghost", action="store_true")
    which.add_argument("--soundness", action="store_true")
    which.add_argument("--bridge", action="store_true")
    p.add_argument("--model", choices=MODELS, default=None)
    p.add_argument("--init", action="append", default=[], metavar="NAME=VALUE")
    p.add_argument("--json", action="store_true")
    p.add_argument("--max-states", type=int, default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("corpus", help="run the acceptance matrix on the bundled corpus")
    p.add_argument("--json", action="store_true")
    p.add_argument("--corpus-dir", default=None)
    p.set_defaults(func=cmd_corpus)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    args.argv = argv[1:]
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"ccm: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapExceeded as exc:
        print(f"ccm: cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (ParseError, ProgramError, DomainError, ExprTypeError, ValueError, KeyError, OSError) as exc:
        print(f"ccm: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
