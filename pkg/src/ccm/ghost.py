"""Ghost augmentations and the condition that keeps them sound.

A program whose declarations include ghost variables is read as an
augmentation of its base program: the base drops every assignment to a
ghost.  Ghost code is sound here when it never writes concrete state and
never turns a pair of commuting concrete updates into a non-commuting pair,
i.e. introduces no new write-write race.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from ccm.core import Program, Valid, validate_execution
from ccm.enumeration import DEFAULT_MAX_DOWNSETS, desugar_reads, enumerate_cc
from ccm.expr import State, VarSpace, variables
from ccm.report import CheckReport, Witness


class GhostError(ValueError):
    pass


def project(s_aug: State, space: VarSpace) -> State:
    """Drop the ghost components of a state over ``space``."""
    return tuple(v for v, d in zip(s_aug, space.decls) if not d.ghost)


@dataclass(frozen=True)
class Augmentation:
    base: Program
    aug: Program

    def __post_init__(self) -> None:
        if self.base.ids != self.aug.ids:
            raise GhostError("augmented program must have the same operations as its base")
        if self.base.pairs != self.aug.pairs:
            raise GhostError("augmented program must keep the base program order")
        for b, a in zip(self.base.ops, self.aug.ops):
            if b.guard != a.guard:
                raise GhostError(f"operation {a.id}: augmented guard differs from the base guard")
        base_names = set(self.base.space.names)
        concrete = {d.name for d in self.aug.space.decls if not d.ghost}
        if base_names != concrete:
            raise GhostError("base variables must be exactly the non-ghost variables")

    @classmethod
    def from_program(cls, program: Program) -> Augmentation:
        """Split a program with ghost declarations into base and augmented parts."""
        space = program.space
        ghosts = {d.name for d in space.decls if d.ghost}
        for op in program.ops:
            if variables(op.guard) & ghosts:
                raise GhostError(f"operation {op.id}: guards may not read ghost variables")
        base_space = VarSpace(d for d in space.decls if not d.ghost)
        base_ops = [
            replace(
                op,
                update=tuple((n, e) for n, e in op.update if n not in ghosts),
                ghost_targets=frozenset(),
            )
            for op in program.ops
        ]
        return cls(program.replace(base_ops, base_space), program)

    @property
    def ghost_names(self) -> tuple[str, ...]:
        return tuple(d.name for d in self.aug.space.decls if d.ghost)

    def project(self, s_aug: State) -> State:
        return project(s_aug, self.aug.space)


def check_projection(aug: Augmentation) -> CheckReport:
    """Augmented updates must act on concrete state exactly as the base updates."""
    report = CheckReport(stats={"obligations": 0})
    for i, op in enumerate(aug.aug.ops):
        f, g = aug.aug.updates[i], aug.base.updates[i]
        for sigma in aug.aug.space.states():
            report.stats["obligations"] += 1
            after = f(sigma)
            if aug.project(after) != g(aug.project(sigma)):
                report.witnesses.append(Witness("projection", (op.id,), (sigma, after)))
    return report


def check_commutation_preservation(aug: Augmentation) -> CheckReport:
    """Base updates that commute at ``s`` must still commute at every lift of ``s``.

    Pairs ordered by the program, or sharing a declared conflict variable, are
    always ordered in executions and carry no obligation.
    """
    if not check_projection(aug).passed:
        raise GhostError("augmentation writes concrete state")
    base, full = aug.base, aug.aug
    order = base.order.pred
    n = len(base.ops)
    report = CheckReport(stats={"obligations": 0})
    lifts = list(full.space.states())
    for i in range(n):
        for j in range(i + 1, n):
            if order[i] >> j & 1 or order[j] >> i & 1 or full.conflicts_declared(i, j):
                continue
            bf, bg = base.updates[i], base.updates[j]
            af, ag = full.updates[i], full.updates[j]
            commutes: dict[State, bool] = {}
            for sigma in lifts:
                s = aug.project(sigma)
                if s not in commutes:
                    commutes[s] = bf(bg(s)) == bg(bf(s))
                if not commutes[s]:
                    continue
                report.stats["obligations"] += 1
                if af(ag(sigma)) != ag(af(sigma)):
                    report.witnesses.append(
                        Witness(
                            "commutation",
                            (base.ids[i], base.ids[j]),
                            (sigma,),
                            f"base updates commute at [{base.space.fmt(s)}]",
                        )
                    )
    return report


def check_ghost_soundness_semantics(
    aug: Augmentation, init_ghost: State, *, max_downsets: int = DEFAULT_MAX_DOWNSETS
) -> CheckReport:
    """Every base CC execution must also be an execution of the augmented program."""
    base_init = aug.project(init_ghost)
    concrete_aug = {p.read_choices: p for p in desugar_reads(aug.aug)}
    result = enumerate_cc(aug.base, base_init, max_downsets=max_downsets)
    report = CheckReport(stats={"executions": len(result)})
    for ex in result:
        target = concrete_aug[ex.program.read_choices]
        verdict = validate_execution(target, ex.order, ex.carrier, init_ghost)
        if not isinstance(verdict, Valid):
            edges = ", ".join(f"{a}<{b}" for a, b in sorted(ex.order)) or "none"
            report.witnesses.append(
                Witness(
                    "simulation",
                    tuple(sorted(ex.carrier)),
                    (),
                    f"order [{edges}]: {verdict.describe(aug.aug.space)}",
                )
            )
    return report


def check_ghost(aug: Augmentation, init_ghost: State) -> CheckReport:
    """Projection, commutation preservation and the simulation check together."""
    report = check_projection(aug)
    if not report.passed:
        return report
    return report.merge(check_commutation_preservation(aug)).merge(
        check_ghost_soundness_semantics(aug, init_ghost)
    )
