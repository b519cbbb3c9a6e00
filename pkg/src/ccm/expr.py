"""Boolean/bounded-integer expressions, variable declarations and state spaces.

States are plain tuples ordered like the owning :class:`VarSpace`; the
space converts between tuples and ``{name: value}`` dicts.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Iterable, Iterator, Mapping
from dataclasses import dataclass
from typing import Union

Value = Union[bool, int]

MAX_INT = 7


class DomainError(ValueError):
    """A value falls outside its variable's declared domain."""

    def __init__(self, var: str, value: object) -> None:
        super().__init__(f"value {value!r} outside the domain of {var!r}")
        self.var = var
        self.value = value


class ExprTypeError(TypeError):
    """An expression does not type-check against the declarations."""


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: Value


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Not:
    arg: Expr


@dataclass(frozen=True)
class And:
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class Or:
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class Eq:
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Ne:
    left: Expr
    right: Expr


Expr = Union[Const, Var, Not, And, Or, Eq, Ne]

TRUE = Const(True)
FALSE = Const(False)

Assignment = tuple[str, Expr]


def conj(*args: Expr) -> Expr:
    parts: list[Expr] = []
    for a in args:
        if a == TRUE:
            continue
        parts.extend(a.args if isinstance(a, And) else (a,))
    if not parts:
        return TRUE
    return parts[0] if len(parts) == 1 else And(tuple(parts))


def variables(e: Expr) -> frozenset[str]:
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Const):
        return frozenset()
    if isinstance(e, Not):
        return variables(e.arg)
    if isinstance(e, (And, Or)):
        return frozenset().union(*(variables(a) for a in e.args))
    return variables(e.left) | variables(e.right)


def evaluate(e: Expr, env: Mapping[str, Value]) -> Value:
    """Evaluate ``e`` against a name-to-value mapping."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return env[e.name]
    if isinstance(e, Not):
        return not evaluate(e.arg, env)
    if isinstance(e, And):
        return all(evaluate(a, env) for a in e.args)
    if isinstance(e, Or):
        return any(evaluate(a, env) for a in e.args)
    if isinstance(e, Eq):
        return _same(evaluate(e.left, env), evaluate(e.right, env))
    return not _same(evaluate(e.left, env), evaluate(e.right, env))


def _same(a: Value, b: Value) -> bool:
    return type(a) is type(b) and a == b


# precedence: || 1, && 2, ==/!= 3, ! 4, atoms 5
def _prec(e: Expr) -> int:
    if isinstance(e, Or):
        return 1
    if isinstance(e, And):
        return 2
    if isinstance(e, (Eq, Ne)):
        return 3
    if isinstance(e, Not):
        return 4
    return 5


def render(e: Expr) -> str:
    """Canonical surface syntax, parenthesized only where needed."""
    if isinstance(e, Const):
        if isinstance(e.value, bool):
            return "true" if e.value else "false"
        return str(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Not):
        return "!" + _wrap(e.arg, 4)
    if isinstance(e, And):
        return " && ".join(_wrap(a, 3) for a in e.args)
    if isinstance(e, Or):
        return " || ".join(_wrap(a, 2) for a in e.args)
    op = " == " if isinstance(e, Eq) else " != "
    return _wrap(e.left, 4) + op + _wrap(e.right, 4)


def _wrap(e: Expr, need: int) -> str:
    s = render(e)
    return s if _prec(e) >= need else f"({s})"


# ---------------------------------------------------------------------------
# Declarations and state spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VarDecl:
    """A variable: ``hi is None`` means boolean, else an int in ``[0, hi]``."""

    name: str
    hi: int | None = None
    init: Value | None = None
    ghost: bool = False

    def __post_init__(self) -> None:
        if self.init is None:
            object.__setattr__(self, "init", False if self.hi is None else 0)
        if self.hi is not None and not 0 <= self.hi <= MAX_INT:
            raise ValueError(f"int range of {self.name!r} must be [0, k] with k <= {MAX_INT}")
        if not self.admits(self.init):
            raise DomainError(self.name, self.init)

    @property
    def is_bool(self) -> bool:
        return self.hi is None

    @property
    def domain(self) -> tuple[Value, ...]:
        if self.hi is None:
            return (False, True)
        return tuple(range(self.hi + 1))

    def admits(self, v: object) -> bool:
        if self.hi is None:
            return isinstance(v, bool)
        return isinstance(v, int) and not isinstance(v, bool) and 0 <= v <= self.hi


State = tuple


class VarSpace:
    """An ordered set of variable declarations; states are tuples over it."""

    def __init__(self, decls: Iterable[VarDecl]) -> None:
        self.decls: tuple[VarDecl, ...] = tuple(decls)
        self.index: dict[str, int] = {}
        for i, d in enumerate(self.decls):
            if d.name in self.index:
                raise ValueError(f"duplicate variable {d.name!r}")
            self.index[d.name] = i
        self.names = tuple(d.name for d in self.decls)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, VarSpace) and self.decls == other.decls

    def __hash__(self) -> int:
        return hash(self.decls)

    def __len__(self) -> int:
        return len(self.decls)

    def __contains__(self, name: object) -> bool:
        return name in self.index

    def __repr__(self) -> str:
        return f"VarSpace({', '.join(self.names)})"

    def decl(self, name: str) -> VarDecl:
        return self.decls[self.index[name]]

    @property
    def initial(self) -> State:
        return tuple(d.init for d in self.decls)

    def state(self, values: Mapping[str, Value] | None = None, **kw: Value) -> State:
        """Build a state from a full mapping; missing names take the initial value."""
        vals = dict(values or {}, **kw)
        unknown = set(vals) - set(self.index)
        if unknown:
            raise KeyError(f"undeclared variables: {sorted(unknown)}")
        out = []
        for d in self.decls:
            v = vals.get(d.name, d.init)
            if not d.admits(v):
                raise DomainError(d.name, v)
            out.append(v)
        return tuple(out)

    def asdict(self, s: State) -> dict[str, Value]:
        return dict(zip(self.names, s))

    def states(self) -> Iterator[State]:
        """Every state of the declared space, in lexicographic domain order."""
        return itertools.product(*(d.domain for d in self.decls))

    def size(self) -> int:
        n = 1
        for d in self.decls:
            n *= len(d.domain)
        return n

    def fmt(self, s: State) -> str:
        return ", ".join(f"{k}={_fmt_value(v)}" for k, v in sorted(zip(self.names, s)))

    def sub(self, names: Iterable[str]) -> VarSpace:
        keep = set(names)
        return VarSpace(d for d in self.decls if d.name in keep)

    def projector(self, target: VarSpace) -> Callable[[State], State]:
        idx = [self.index[n] for n in target.names]
        return lambda s: tuple(s[i] for i in idx)

    # -- typing ------------------------------------------------------------

    def kind(self, e: Expr) -> str:
        """Type-check ``e``; returns ``"bool"`` or ``"int"``."""
        if isinstance(e, Const):
            return "bool" if isinstance(e.value, bool) else "int"
        if isinstance(e, Var):
            if e.name not in self.index:
                raise ExprTypeError(f"undeclared variable {e.name!r}")
            return "bool" if self.decl(e.name).is_bool else "int"
        if isinstance(e, Not):
            self._want(e.arg, "bool")
            return "bool"
        if isinstance(e, (And, Or)):
            for a in e.args:
                self._want(a, "bool")
            return "bool"
        lk, rk = self.kind(e.left), self.kind(e.right)
        if lk != rk:
            raise ExprTypeError(f"cannot compare {lk} with {rk} in {render(e)!r}")
        return "bool"

    def _want(self, e: Expr, k: str) -> None:
        got = self.kind(e)
        if got != k:
            raise ExprTypeError(f"expected {k}, got {got} in {render(e)!r}")

    def check_guard(self, g: Expr) -> None:
        self._want(g, "bool")

    def check_update(self, u: Iterable[Assignment]) -> None:
        seen = set()
        for name, rhs in u:
            if name not in self.index:
                raise ExprTypeError(f"assignment to undeclared variable {name!r}")
            if name in seen:
                raise ExprTypeError(f"variable {name!r} assigned twice")
            seen.add(name)
            d = self.decl(name)
            k = self.kind(rhs)
            if (k == "bool") != d.is_bool:
                raise ExprTypeError(f"type mismatch assigning {render(rhs)!r} to {name!r}")
            if isinstance(rhs, Const) and not d.admits(rhs.value):
                raise DomainError(name, rhs.value)

    # -- compilation to tuple closures ---------------------------------------

    def compile(self, e: Expr) -> Callable[[State], Value]:
        if isinstance(e, Const):
            v = e.value
            return lambda s: v
        if isinstance(e, Var):
            i = self.index[e.name]
            return lambda s: s[i]
        if isinstance(e, Not):
            f = self.compile(e.arg)
            return lambda s: not f(s)
        if isinstance(e, And):
            fs = [self.compile(a) for a in e.args]
            return lambda s: all(f(s) for f in fs)
        if isinstance(e, Or):
            fs = [self.compile(a) for a in e.args]
            return lambda s: any(f(s) for f in fs)
        lf, rf = self.compile(e.left), self.compile(e.right)
        if isinstance(e, Eq):
            return lambda s: lf(s) == rf(s)
        return lambda s: lf(s) != rf(s)

    def compile_update(self, u: Iterable[Assignment]) -> Callable[[State], State]:
        targets = []
        for name, rhs in u:
            targets.append((self.index[name], self.decl(name), self.compile(rhs)))
        if not targets:
            return lambda s: s

        def apply(s: State) -> State:
            new = [(i, d, f(s)) for i, d, f in targets]
            out = list(s)
            for i, d, v in new:
                if not d.admits(v):
                    raise DomainError(d.name, v)
                out[i] = v
            return tuple(out)

        return apply


def _fmt_value(v: Value) -> str:
    if isinstance(v, bool):
        return "T" if v else "F"
    return str(v)
