"""Three-step vocabulary: step symbols, vulnerability patterns, concrete cases."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

VICTIM = "V"
ATTACKER = "A"

ACCESS_TARGETS = ("u", "a", "alias", "nib")
INV_TARGETS = ("inv_u", "inv_a", "inv_alias", "inv_nib", "inv_all")
STAR = "star"

TYPES = ("AO", "SO", "SA")
INTERFERENCE = ("I", "E")

READ = "read"
WRITE = "write"
FLUSH = "flush"
REMOTE_WRITE = "remote_write"
OP_KINDS = (READ, WRITE, FLUSH, REMOTE_WRITE)

TIME_SLICED = "time_sliced"
MULTI_THREADED = "multi_threaded"
SCHEDULES = (TIME_SLICED, MULTI_THREADED)

CANDIDATES = ("a", "alias", "nib")


class PatternError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class StepOp:
    """One step of the three-step model.  ``actor`` is None only for the star step."""

    actor: Optional[str]
    target: str

    def __post_init__(self):
        if self.target == STAR:
            if self.actor is not None:
                raise PatternError("the star step has no actor")
            return
        if self.actor not in (VICTIM, ATTACKER):
            raise PatternError(f"bad actor {self.actor!r}")
        if self.target not in ACCESS_TARGETS + INV_TARGETS:
            raise PatternError(f"bad target {self.target!r}")
        if self.target in ("u", "inv_u") and self.actor != VICTIM:
            raise PatternError("only the victim can touch u")

    @property
    def is_star(self) -> bool:
        return self.target == STAR

    @property
    def is_access(self) -> bool:
        return self.target in ACCESS_TARGETS

    @property
    def is_invalidation(self) -> bool:
        return self.target in INV_TARGETS

    @property
    def involves_u(self) -> bool:
        return self.target in ("u", "inv_u")

    @property
    def uses_alias(self) -> bool:
        return self.target in ("alias", "inv_alias")

    def __str__(self) -> str:
        if self.is_star:
            return "*"
        return f"{self.actor}_{self.target}"

    @classmethod
    def parse(cls, text: str) -> "StepOp":
        text = text.strip()
        if text in ("*", STAR):
            return STAR_OP
        actor, sep, target = text.partition("_")
        if not sep:
            raise PatternError(f"cannot parse step {text!r}")
        return cls(actor, target)


STAR_OP = StepOp(None, STAR)


def vocabulary() -> list:
    """All 17 step symbols in a fixed order."""
    ops = [StepOp(VICTIM, t) for t in ACCESS_TARGETS]
    ops += [StepOp(ATTACKER, t) for t in ACCESS_TARGETS if t != "u"]
    ops += [StepOp(VICTIM, t) for t in INV_TARGETS if t != "inv_all"]
    ops += [StepOp(ATTACKER, t) for t in INV_TARGETS if t not in ("inv_u", "inv_all")]
    ops += [StepOp(VICTIM, "inv_all"), StepOp(ATTACKER, "inv_all"), STAR_OP]
    return ops


def interference_of(steps) -> str:
    """E when the attacker does anything in step 2 or 3, else I."""
    return "E" if any(s.actor == ATTACKER for s in steps[1:]) else "I"


def steps_key(steps) -> str:
    return " ; ".join(str(s) for s in steps)


@dataclass(frozen=True)
class VulnPattern:
    steps: tuple
    id: int = 0
    type: Optional[str] = None
    name: Optional[str] = None

    def __post_init__(self):
        if len(self.steps) != 3:
            raise PatternError("a pattern has exactly three steps")
        if not any(s.involves_u for s in self.steps):
            raise PatternError(f"pattern {self.key} never touches u")
        if self.steps[2].is_star:
            raise PatternError(f"pattern {self.key}: step 3 cannot be star")
        if self.type is not None and self.type not in TYPES:
            raise PatternError(f"bad type {self.type!r}")

    @property
    def interference(self) -> str:
        return interference_of(self.steps)

    @property
    def key(self) -> str:
        return steps_key(self.steps)

    @property
    def label(self) -> str:
        return f"{self.interference}-{self.type}" if self.type else self.interference

    def uses_alias(self) -> bool:
        return any(s.uses_alias for s in self.steps)

    def __str__(self) -> str:
        tail = f" [{self.name}]" if self.name else ""
        return f"#{self.id} {self.label} ({self.key}){tail}"


def op_variants(step: StepOp) -> tuple:
    if step.is_star:
        return (None,)
    if step.is_access:
        return (READ, WRITE)
    return (FLUSH, REMOTE_WRITE)


_KIND_LETTER = {READ: "r", WRITE: "w", FLUSH: "f", REMOTE_WRITE: "x", None: "-"}


@dataclass(frozen=True)
class ConcreteCase:
    """A pattern with every free choice fixed: op kinds, scheduling, core binding."""

    pattern_id: int
    steps: tuple
    op_kinds: tuple
    scheduling: str = TIME_SLICED
    local_cluster: str = "little"
    remote_cluster: str = "little"
    lock_prelude: bool = False
    label: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if self.scheduling not in SCHEDULES:
            raise PatternError(f"bad scheduling {self.scheduling!r}")
        for step, kind in zip(self.steps, self.op_kinds):
            if kind not in op_variants(step):
                raise PatternError(f"op kind {kind!r} does not fit step {step}")

    @property
    def kinds_code(self) -> str:
        return "".join(_KIND_LETTER[k] for k in self.op_kinds)

    @property
    def case_id(self) -> str:
        kinds = self.kinds_code
        sched = "ts" if self.scheduling == TIME_SLICED else "mt"
        cl = self.local_cluster[0].upper() + self.remote_cluster[0].upper()
        return f"p{self.pattern_id:02d}-{kinds}-{sched}-{cl}"

    @property
    def all_reads(self) -> bool:
        return all(k in (None, READ) for k in self.op_kinds)

    @property
    def has_write(self) -> bool:
        return WRITE in self.op_kinds

    def is_remote(self, i: int) -> bool:
        return self.op_kinds[i] == REMOTE_WRITE
