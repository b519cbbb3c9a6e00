"""Check reports shared by the annotation, ghost and TSO checkers."""

from __future__ import annotations

from dataclasses import dataclass, field

from ccm.expr import State, VarSpace


@dataclass(frozen=True)
class Witness:
    """One failed obligation: which condition, which operations, which states."""

    condition: str
    ops: tuple[str, ...]
    states: tuple[State, ...] = ()
    detail: str = ""

    def describe(self, space: VarSpace | None = None) -> str:
        parts = [f"{self.condition} {' '.join(self.ops)}"]
        if space is not None and self.states:
            parts.append(" -> ".join(f"[{space.fmt(s)}]" for s in self.states))
        if self.detail:
            parts.append(self.detail)
        return ": ".join(parts)

    def to_json(self, space: VarSpace | None = None) -> dict:
        out: dict = {"condition": self.condition, "ops": list(self.ops)}
        if self.states:
            if space is not None:
                out["states"] = [space.asdict(s) for s in self.states]
            else:
                out["states"] = [list(s) for s in self.states]
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class CheckReport:
    witnesses: list[Witness] = field(default_factory=list)
    stats: dict[str, int] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.witnesses

    def __bool__(self) -> bool:
        return self.passed

    def merge(self, other: CheckReport) -> CheckReport:
        stats = dict(self.stats)
        for k, v in other.stats.items():
            stats[k] = stats.get(k, 0) + v
        return CheckReport(self.witnesses + other.witnesses, stats)

    def by_condition(self, condition: str) -> list[Witness]:
        return [w for w in self.witnesses if w.condition == condition]
