"""AND-OR goal models, variants, happy sets and designation.

Goal-model files are line oriented::

    goal g mandatory
    goal g' req R1
    goal g'' req R3
    decompose g OR g' g''
    soft s
    contrib g' + s
    prefer {g''}

A root hard goal is an obligation unless it is marked ``optional``; the
``mandatory`` keyword only makes that explicit.
"""
from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .classification import Classification, classify
from .language import ParseError, RequirementSet

__all__ = [
    "DesignatedSet",
    "DesignationError",
    "Goal",
    "GoalModel",
    "GoalModelError",
    "HappySet",
    "HappySetResult",
    "ObservabilityReport",
    "check_designated",
    "designate",
    "happy_sets",
    "parse_goal_model",
    "propagate",
    "set_key",
    "variants",
]

MAX_LEAVES = 20
NEEDS_ELICITATION = "conflicting softgoal contributions: requires further elicitation"


class GoalModelError(ParseError):
    pass


class DesignationError(ValueError):
    pass


@dataclass(frozen=True)
class Goal:
    id: str
    kind: str = "hard"  # hard | soft
    mandatory: bool = False
    optional: bool = False
    requirement_ref: Optional[str] = None


@dataclass(frozen=True)
class GoalModel:
    goals: tuple[Goal, ...] = ()
    decompositions: tuple[tuple[str, str, tuple[str, ...]], ...] = ()
    contributions: tuple[tuple[str, str, str], ...] = ()
    preferences: tuple[frozenset, ...] = ()
    _by_id: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        by_id = {}
        for g in self.goals:
            if g.id in by_id:
                raise GoalModelError(f"goal {g.id!r} declared twice")
            if g.kind not in ("hard", "soft"):
                raise GoalModelError(f"goal {g.id!r} has unknown kind {g.kind!r}")
            if g.mandatory and g.optional:
                raise GoalModelError(f"goal {g.id!r} cannot be both mandatory and optional")
            by_id[g.id] = g
        object.__setattr__(self, "_by_id", by_id)
        parents = set()
        for parent, op, children in self.decompositions:
            if op not in ("AND", "OR"):
                raise GoalModelError(f"unknown decomposition {op!r}")
            for gid in (parent, *children):
                self._hard(gid, "decomposition")
            if parent in parents:
                raise GoalModelError(f"goal {parent!r} has more than one decomposition")
            if not children:
                raise GoalModelError(f"decomposition of {parent!r} has no children")
            parents.add(parent)
        for src, sign, target in self.contributions:
            if src not in by_id:
                raise GoalModelError(f"unknown goal {src!r} in contribution")
            if target not in by_id:
                raise GoalModelError(f"unknown goal {target!r} in contribution")
            if by_id[target].kind != "soft":
                raise GoalModelError(f"contribution to hard goal {target!r}")
            if sign not in "+-" or len(sign) != 1:
                raise GoalModelError(f"contribution sign must be + or -, got {sign!r}")
        self._check_acyclic()
        leaves = set(self.leaves)
        for pref in self.preferences:
            bad = sorted(set(pref) - leaves)
            if bad:
                raise GoalModelError(f"preference mentions non-leaf goals {bad}")

    def _hard(self, gid, where):
        g = self._by_id.get(gid)
        if g is None:
            raise GoalModelError(f"unknown goal {gid!r} in {where}")
        if g.kind != "hard":
            raise GoalModelError(f"soft goal {gid!r} cannot appear in a {where}")

    def _check_acyclic(self):
        children = self.children
        state: dict[str, int] = {}

        def visit(gid, path):
            if state.get(gid) == 1:
                cycle = path[path.index(gid):] + [gid]
                raise GoalModelError(f"cyclic decomposition: {' -> '.join(cycle)}")
            if state.get(gid) == 2:
                return
            state[gid] = 1
            for c in children.get(gid, ()):
                visit(c, path + [gid])
            state[gid] = 2

        for gid in children:
            visit(gid, [])

    def goal(self, gid: str) -> Goal:
        return self._by_id[gid]

    @property
    def children(self) -> dict[str, tuple[str, ...]]:
        return {p: c for p, _, c in self.decompositions}

    @property
    def operator(self) -> dict[str, str]:
        return {p: op for p, op, _ in self.decompositions}

    @property
    def hard_goals(self) -> tuple[str, ...]:
        return tuple(g.id for g in self.goals if g.kind == "hard")

    @property
    def leaves(self) -> tuple[str, ...]:
        parents = {p for p, _, _ in self.decompositions}
        return tuple(g for g in self.hard_goals if g not in parents)

    @property
    def roots(self) -> tuple[str, ...]:
        has_parent = {c for _, _, cs in self.decompositions for c in cs}
        return tuple(g for g in self.hard_goals if g not in has_parent)

    @property
    def mandatory_roots(self) -> tuple[str, ...]:
        return tuple(g for g in self.roots if not self._by_id[g].optional)

    def happy_set(self, leaves: Iterable[str]) -> "HappySet":
        """Validate ``leaves`` against this model's happy sets."""
        h = HappySet(frozenset(leaves))
        result = happy_sets(self)
        if h not in result.sets:
            raise DesignationError(f"{format_set(h.leaves)} is not a happy set")
        return h


@dataclass(frozen=True)
class HappySet:
    leaves: frozenset


@dataclass(frozen=True)
class HappySetResult:
    sets: tuple[HappySet, ...]
    diagnostic: Optional[str] = None


@dataclass(frozen=True)
class DesignatedSet:
    """The requirements an engineer builds for, all of equal standing."""

    requirements: RequirementSet


def set_key(s) -> tuple:
    s = sorted(s)
    return (len(s), s)


def format_set(s) -> str:
    return "{" + ",".join(sorted(s)) + "}"


# -- parsing -----------------------------------------------------------------

_ID = r"[^\s{},#]+"


def _parse_braced(text: str, lineno: int) -> frozenset:
    m = re.fullmatch(r"\s*\{([^{}]*)\}\s*", text)
    if m is None:
        raise GoalModelError("expected a braced set like {a,b}", lineno, 1)
    items = [x.strip() for x in m.group(1).split(",") if x.strip()]
    for x in items:
        if not re.fullmatch(_ID, x):
            raise GoalModelError(f"bad goal id {x!r}", lineno, 1)
    return frozenset(items)


def parse_goal_model(text: str) -> GoalModel:
    goals: list[Goal] = []
    decomps = []
    contribs = []
    prefs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kw, _, rest = line.partition(" ")
        parts = rest.split()
        try:
            if kw == "goal" and parts:
                gid, flags = parts[0], parts[1:]
                mandatory = optional = False
                ref = None
                while flags:
                    flag = flags.pop(0)
                    if flag == "mandatory":
                        mandatory = True
                    elif flag == "optional":
                        optional = True
                    elif flag == "req" and flags:
                        ref = flags.pop(0)
                    else:
                        raise GoalModelError(f"unexpected {flag!r} in goal declaration")
                goals.append(Goal(gid, "hard", mandatory, optional, ref))
            elif kw == "soft" and len(parts) == 1:
                goals.append(Goal(parts[0], "soft"))
            elif kw == "decompose" and len(parts) >= 3:
                decomps.append((parts[0], parts[1].upper(), tuple(parts[2:])))
            elif kw == "contrib" and len(parts) == 3:
                contribs.append((parts[0], parts[1], parts[2]))
            elif kw == "prefer":
                prefs.append(_parse_braced(rest, lineno))
            else:
                raise GoalModelError(f"malformed line {line!r}")
        except GoalModelError as exc:
            raise GoalModelError(exc.message, lineno, 1) from None
        for gid in parts[:1]:
            if kw in ("goal", "soft") and not re.fullmatch(_ID, gid):
                raise GoalModelError(f"bad goal id {gid!r}", lineno, 1)
    return GoalModel(tuple(goals), tuple(decomps), tuple(contribs), tuple(prefs))


# -- analysis ----------------------------------------------------------------


def propagate(m: GoalModel, adoption: Iterable[str]) -> dict[str, bool]:
    adoption = set(adoption)
    leaves = set(m.leaves)
    bad = sorted(adoption - leaves)
    if bad:
        raise ValueError(f"only leaf goals can be adopted, got {bad}")
    children, op = m.children, m.operator
    value: dict[str, bool] = {}

    def ev(gid):
        if gid not in value:
            if gid in children:
                vals = [ev(c) for c in children[gid]]
                value[gid] = all(vals) if op[gid] == "AND" else any(vals)
            else:
                value[gid] = gid in adoption
        return value[gid]

    for gid in m.hard_goals:
        ev(gid)
    return value


def _subsets(items):
    for n in range(len(items) + 1):
        yield from itertools.combinations(items, n)


def variants(m: GoalModel) -> list[frozenset]:
    """All leaf adoption sets satisfying every mandatory root, smallest first."""
    leaves = sorted(m.leaves)
    if len(leaves) > MAX_LEAVES:
        raise ValueError(f"{len(leaves)} leaves exceed the enumeration limit of {MAX_LEAVES}")
    roots = m.mandatory_roots
    out = []
    for combo in _subsets(leaves):
        vals = propagate(m, combo)
        if all(vals[r] for r in roots):
            out.append(frozenset(combo))
    return sorted(out, key=set_key)


def _active_signs(m: GoalModel, adoption) -> set[str]:
    vals = propagate(m, adoption)
    return {sign for src, sign, _ in m.contributions if vals.get(src)}


def happy_sets(m: GoalModel) -> HappySetResult:
    vs = variants(m)
    if m.preferences:
        valid = set(vs)
        for pref in m.preferences:
            if pref not in valid:
                raise DesignationError(f"preferred selection {format_set(pref)} is not a variant")
        chosen = sorted(set(m.preferences), key=set_key)
        return HappySetResult(tuple(HappySet(p) for p in chosen))
    if any(_active_signs(m, v) == {"+", "-"} for v in vs):
        return HappySetResult((), NEEDS_ELICITATION)
    return HappySetResult(tuple(HappySet(v) for v in vs))


def designate(m: GoalModel, h: HappySet, rs: RequirementSet) -> DesignatedSet:
    result = happy_sets(m)
    if h not in result.sets:
        raise DesignationError(f"{format_set(h.leaves)} is not a happy set")
    refs = set()
    for gid in sorted(h.leaves):
        ref = m.goal(gid).requirement_ref
        if ref is None:
            raise DesignationError(f"goal {gid!r} has no requirement reference")
        if ref not in rs:
            raise DesignationError(f"goal {gid!r} refers to unknown requirement {ref!r}")
        refs.add(ref)
    return DesignatedSet(RequirementSet(tuple(r for r in rs if r.id in refs)))


@dataclass(frozen=True)
class ObservabilityReport:
    entries: tuple[tuple[str, Classification], ...]

    @property
    def failures(self) -> dict[str, list[str]]:
        out = {}
        for rid, c in self.entries:
            reasons = []
            if not c.satisfiable:
                reasons.append("nonsatisfiable")
            if not c.falsifiable:
                reasons.append("nonfalsifiable")
            if reasons:
                out[rid] = reasons
        return out

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "requirements": [
                {"id": rid, "satisfiable": c.satisfiable, "falsifiable": c.falsifiable}
                for rid, c in self.entries
            ],
            "failures": self.failures,
        }


def check_designated(d: DesignatedSet) -> ObservabilityReport:
    """Every designated requirement must be both satisfiable and falsifiable."""
    return ObservabilityReport(tuple((r.id, classify(r)) for r in d.requirements))
