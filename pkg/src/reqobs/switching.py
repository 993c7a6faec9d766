"""Machine-switching and mode-switching adaptive systems.

A machine-switching system pairs domain-assumption conditions with machines;
its controller puts into operation the machine whose condition the current
environment satisfies and otherwise keeps running the current one.  A
mode-switching system adds an outer level of mode conditions, each selecting
a whole machine-switching system.  ``flatten`` turns the latter into the
former by conjoining each mode condition with the inner conditions.

Conditions are conjunctions of boolean literals over a declared universe of
environment variables.  Requirements never appear in these types.
"""
from __future__ import annotations

import itertools
import logging
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

from .language import ParseError

log = logging.getLogger(__name__)

__all__ = [
    "CRITICAL",
    "HOLD",
    "NONCRITICAL",
    "Condition",
    "Controller",
    "Equivalence",
    "MachineSwitchingSystem",
    "ModeRequirementTable",
    "ModeSwitchingSystem",
    "SwitchingError",
    "SystemFile",
    "build_machine_switching",
    "build_mode_switching",
    "controller_run",
    "criticality",
    "equivalent",
    "flatten",
    "format_system",
    "parse_system",
    "parse_valuations",
    "select",
    "valuations",
]

CRITICAL = "CRITICAL"
NONCRITICAL = "NONCRITICAL"


class _Hold:
    def __repr__(self):
        return "HOLD"


HOLD = _Hold()


class SwitchingError(ParseError):
    pass


@dataclass(frozen=True)
class Condition:
    literals: frozenset  # of (variable, polarity)

    @classmethod
    def of(cls, *lits: str) -> "Condition":
        """``Condition.of("e", "!k")``"""
        out = set()
        for lit in lits:
            lit = lit.strip()
            neg = lit.startswith("!")
            out.add((lit.lstrip("!"), not neg))
        return cls(frozenset(out))

    @property
    def consistent(self) -> bool:
        return not any((v, not p) in self.literals for v, p in self.literals)

    @property
    def variables(self) -> frozenset:
        return frozenset(v for v, _ in self.literals)

    def satisfied_by(self, v: Mapping[str, bool]) -> bool:
        return all(v[var] == pol for var, pol in self.literals)

    def overlaps(self, other: "Condition") -> bool:
        """Some valuation satisfies both (both must be consistent)."""
        return self.consistent and other.consistent and (self | other).consistent

    def __or__(self, other: "Condition") -> "Condition":
        return Condition(self.literals | other.literals)

    def __str__(self) -> str:
        lits = sorted(self.literals, key=lambda lp: (lp[0], not lp[1]))
        return "{" + ",".join(("" if p else "!") + v for v, p in lits) + "}"


def _witness(vars_, a: Condition, b: Condition) -> dict[str, bool]:
    both = dict((a | b).literals)
    return {v: both.get(v, False) for v in vars_}


def _check_pairs(vars_, conds: Sequence[Condition], what: str):
    for c in conds:
        unknown = sorted(c.variables - set(vars_))
        if unknown:
            raise SwitchingError(f"{what} {c} uses undeclared variables {unknown}")
    for (i, a), (j, b) in itertools.combinations(enumerate(conds), 2):
        if a == b and a.consistent:
            raise SwitchingError(f"{what} {a} appears twice")
        if a.overlaps(b):
            w = _witness(vars_, a, b)
            raise SwitchingError(
                f"{what}s {a} and {b} overlap, e.g. at {format_valuation(w)}"
            )


@dataclass(frozen=True)
class MachineSwitchingSystem:
    vars: tuple[str, ...]
    pairs: tuple[tuple[Condition, str], ...]

    @property
    def machines(self) -> tuple[str, ...]:
        return tuple(s for _, s in self.pairs)

    @property
    def unreachable(self) -> tuple[tuple[Condition, str], ...]:
        return tuple(p for p in self.pairs if not p[0].consistent)


def build_machine_switching(vars_: Iterable[str], pairs, *, warn: bool = True) -> MachineSwitchingSystem:
    vars_ = tuple(vars_)
    if not vars_:
        raise SwitchingError("the variable universe is empty")
    if len(set(vars_)) != len(vars_):
        raise SwitchingError("duplicate variable in universe")
    pairs = tuple((c, s) for c, s in pairs)
    seen = set()
    for _, s in pairs:
        if s in seen:
            raise SwitchingError(f"machine {s!r} is assigned to more than one condition")
        seen.add(s)
    _check_pairs(vars_, [c for c, _ in pairs], "domain assumption")
    if warn:
        for c, s in pairs:
            if not c.consistent:
                log.warning("condition %s for machine %s is inconsistent; the pair is unreachable", c, s)
    return MachineSwitchingSystem(vars_, pairs)


@dataclass(frozen=True)
class ModeSwitchingSystem:
    vars: tuple[str, ...]
    pairs: tuple[tuple[Condition, MachineSwitchingSystem], ...]

    def label(self, mode_index: int, machine: str) -> str:
        """Machine id, qualified by mode index when several modes share it."""
        uses = sum(machine in inner.machines for _, inner in self.pairs)
        return machine if uses == 1 else f"{machine}@{mode_index}"


def build_mode_switching(vars_: Iterable[str], pairs, *, warn: bool = True) -> ModeSwitchingSystem:
    vars_ = tuple(vars_)
    if not vars_:
        raise SwitchingError("the variable universe is empty")
    pairs = tuple(pairs)
    for _, inner in pairs:
        if inner.vars != vars_:
            raise SwitchingError("inner systems must share the variable universe")
    _check_pairs(vars_, [e for e, _ in pairs], "mode")
    for (_, a), (_, b) in itertools.combinations(pairs, 2):
        if a == b:
            raise SwitchingError("two modes map to the same machine-switching system")
    if warn:
        for e, _ in pairs:
            if not e.consistent:
                log.warning("mode %s is inconsistent and can never hold", e)
    return ModeSwitchingSystem(vars_, pairs)


System = Union[MachineSwitchingSystem, ModeSwitchingSystem]


def _total(sys: System, v: Mapping[str, bool]):
    missing = [x for x in sys.vars if x not in v]
    if missing:
        raise ValueError(f"valuation misses variables {missing}")


def select(sys: System, v: Mapping[str, bool]):
    """Machine to put into operation under ``v``, or HOLD."""
    _total(sys, v)
    if isinstance(sys, ModeSwitchingSystem):
        for i, (e, inner) in enumerate(sys.pairs):
            if e.satisfied_by(v):
                s = select(inner, v)
                return s if s is HOLD else sys.label(i, s)
        return HOLD
    for c, s in sys.pairs:
        if c.satisfied_by(v):
            return s
    return HOLD


class Controller:
    """Stateful switcher; starts with the null machine (None)."""

    def __init__(self, system: System):
        self.system = system
        self.current: Optional[str] = None

    def step(self, v: Mapping[str, bool]) -> Optional[str]:
        s = select(self.system, v)
        if s is not HOLD:
            self.current = s
        return self.current


def controller_run(sys: System, vs: Iterable[Mapping[str, bool]]) -> list[Optional[str]]:
    c = Controller(sys)
    return [c.step(v) for v in vs]


def flatten(ms: ModeSwitchingSystem) -> MachineSwitchingSystem:
    pairs = []
    for i, (e, inner) in enumerate(ms.pairs):
        for k, s in inner.pairs:
            pairs.append((k | e, ms.label(i, s)))
    return build_machine_switching(ms.vars, pairs, warn=False)


def valuations(vars_: Sequence[str]):
    """All valuations over ``vars_``, true before false."""
    for bits in itertools.product((True, False), repeat=len(vars_)):
        yield dict(zip(vars_, bits))


@dataclass(frozen=True)
class Equivalence:
    equal: bool
    counterexample: Optional[dict] = None
    left: Optional[str] = None
    right: Optional[str] = None


def equivalent(a: System, b: System, vars_: Optional[Sequence[str]] = None) -> Equivalence:
    """Compare the machine each system starts from the null state, per valuation."""
    vars_ = tuple(vars_) if vars_ is not None else a.vars
    if set(a.vars) != set(vars_) or set(b.vars) != set(vars_):
        raise SwitchingError(
            f"variable universes differ: {sorted(a.vars)} vs {sorted(b.vars)} (over {sorted(vars_)})"
        )
    if len(vars_) > 20:
        raise ValueError("equivalence checking is limited to 20 variables")
    for v in valuations(vars_):
        sa, sb = select(a, v), select(b, v)
        sa = None if sa is HOLD else sa
        sb = None if sb is HOLD else sb
        if sa != sb:
            return Equivalence(False, v, sa, sb)
    return Equivalence(True)


@dataclass(frozen=True)
class ModeRequirementTable:
    rows: tuple[tuple[Condition, frozenset], ...]

    def __post_init__(self):
        conds = [e for e, _ in self.rows]
        for a, b in itertools.combinations(conds, 2):
            if a == b or a.overlaps(b):
                raise SwitchingError(f"modes {a} and {b} overlap")

    def check_against(self, known: Iterable[str]):
        known = set(known)
        for e, ids in self.rows:
            bad = sorted(ids - known)
            if bad:
                raise SwitchingError(f"mode {e} refers to unknown requirements {bad}")


def criticality(t: ModeRequirementTable) -> dict[str, str]:
    """A requirement is critical iff it applies in every mode."""
    order = list(dict.fromkeys(rid for _, ids in t.rows for rid in sorted(ids)))
    return {
        rid: CRITICAL if all(rid in ids for _, ids in t.rows) else NONCRITICAL
        for rid in order
    }


# -- text format -------------------------------------------------------------

_TOKEN_RE = re.compile(r"\s+|#[^\n]*|(?P<tok>modes-reqs|[{};,!]|[^\s{};,!#]+)")


@dataclass(frozen=True)
class SystemFile:
    vars: tuple[str, ...]
    system: Optional[System]
    table: Optional[ModeRequirementTable]
    declared_machines: tuple[str, ...] = ()


def _tokens(text: str):
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        pos = 0
        while pos < len(line):
            m = _TOKEN_RE.match(line, pos)
            if m.group("tok"):
                out.append((m.group("tok"), lineno, pos + 1))
            pos = m.end()
    return out


class _SysParser:
    def __init__(self, text):
        self.toks = _tokens(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def where(self):
        if self.i < len(self.toks):
            return self.toks[self.i][1:]
        return (self.toks[-1][1], self.toks[-1][2]) if self.toks else (1, 1)

    def error(self, msg):
        return SwitchingError(msg, *self.where())

    def next(self):
        if self.i >= len(self.toks):
            raise self.error("unexpected end of input")
        tok = self.toks[self.i][0]
        self.i += 1
        return tok

    def expect(self, text):
        if self.peek() != text:
            raise self.error(f"expected {text!r}, found {self.peek()!r}")
        self.i += 1

    def name(self):
        tok = self.peek()
        if tok is None or tok in "{};,!":
            raise self.error(f"expected a name, found {tok!r}")
        self.i += 1
        return tok

    def braced_names(self, negation: bool):
        self.expect("{")
        items = []
        while self.peek() != "}":
            neg = False
            if negation and self.peek() == "!":
                self.i += 1
                neg = True
            items.append(("!" if neg else "") + self.name())
            if self.peek() == ",":
                self.i += 1
            elif self.peek() != "}":
                raise self.error(f"expected ',' or '}}', found {self.peek()!r}")
        self.expect("}")
        return items

    def condition(self):
        return Condition.of(*self.braced_names(True))

    def statement_end(self, line):
        # statements end at a newline or an explicit ';'
        if self.peek() == ";":
            self.i += 1
        elif self.i < len(self.toks) and self.toks[self.i][1] == line:
            raise self.error(f"unexpected {self.peek()!r}")

    def parse(self) -> SystemFile:
        vars_: list[str] = []
        machines: list[str] = []
        top_pairs = []
        modes = []
        rows = []
        while self.peek() is not None:
            line = self.toks[self.i][1]
            kw = self.next()
            if kw == "vars":
                while self.peek() is not None and self.toks[self.i][1] == line and self.peek() != ";":
                    vars_.append(self.name())
            elif kw == "machine":
                while self.peek() is not None and self.toks[self.i][1] == line and self.peek() != ";":
                    machines.append(self.name())
            elif kw == "pair":
                at = self.where()
                top_pairs.append((self.condition(), self.name(), at))
            elif kw == "mode":
                at = self.where()
                e = self.condition()
                self.expect("{")
                inner = []
                while self.peek() != "}":
                    if self.peek() == ";":
                        self.i += 1
                        continue
                    self.expect("pair")
                    inner_at = self.where()
                    inner.append((self.condition(), self.name(), inner_at))
                self.expect("}")
                modes.append((e, inner, at))
            elif kw == "modes-reqs":
                at = self.where()
                e = self.condition()
                rows.append((e, frozenset(self.braced_names(False)), at))
            else:
                self.i -= 1
                raise self.error(f"unknown statement {kw!r}")
            self.statement_end(line)
        return self.build(vars_, machines, top_pairs, modes, rows)

    def build(self, vars_, machines, top_pairs, modes, rows) -> SystemFile:
        if top_pairs and modes:
            raise SwitchingError("a file holds either top-level pairs or modes, not both", *top_pairs[0][2])
        all_pairs = [p for p in top_pairs] + [p for _, inner, _ in modes for p in inner]
        if machines:
            for _, s, at in all_pairs:
                if s not in machines:
                    raise SwitchingError(f"undeclared machine {s!r}", *at)
        system = None
        try:
            if top_pairs:
                system = build_machine_switching(vars_, [(c, s) for c, s, _ in top_pairs])
            elif modes:
                inner_systems = []
                for _, inner, at in modes:
                    try:
                        inner_systems.append(build_machine_switching(vars_, [(c, s) for c, s, _ in inner]))
                    except SwitchingError as exc:
                        raise SwitchingError(exc.message, *at) from None
                system = build_mode_switching(vars_, [(e, m) for (e, _, _), m in zip(modes, inner_systems)])
        except SwitchingError as exc:
            if exc.line:
                raise
            raise SwitchingError(exc.message, 1, 1) from None
        table = None
        if rows:
            for e, _, at in rows:
                unknown = sorted(e.variables - set(vars_))
                if unknown:
                    raise SwitchingError(f"mode {e} uses undeclared variables {unknown}", *at)
            try:
                table = ModeRequirementTable(tuple((e, ids) for e, ids, _ in rows))
            except SwitchingError as exc:
                raise SwitchingError(exc.message, *rows[0][2]) from None
        return SystemFile(tuple(vars_), system, table, tuple(machines))


def parse_system(text: str) -> SystemFile:
    return _SysParser(text).parse()


def format_system(sys: System) -> str:
    lines = ["vars " + " ".join(sys.vars)]
    if isinstance(sys, MachineSwitchingSystem):
        for c, s in sys.pairs:
            note = "  # unreachable" if not c.consistent else ""
            lines.append(f"pair {c} {s}{note}")
    else:
        for e, inner in sys.pairs:
            body = " ; ".join(f"pair {c} {s}" for c, s in inner.pairs)
            lines.append(f"mode {e} {{ {body} }}")
    return "\n".join(lines) + "\n"


def format_valuation(v: Mapping[str, bool]) -> str:
    return " ".join(("" if b else "!") + k for k, b in v.items())


def parse_valuations(text: str, vars_: Sequence[str]) -> list[dict[str, bool]]:
    """One valuation per line, as literals: ``e !k`` or ``e, !k``."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].replace(",", " ").strip()
        if not line:
            continue
        v = {}
        for lit in line.split():
            name = lit.lstrip("!")
            if name not in vars_:
                raise SwitchingError(f"unknown variable {name!r}", lineno, 1)
            if name in v:
                raise SwitchingError(f"variable {name!r} given twice", lineno, 1)
            v[name] = not lit.startswith("!")
        missing = [x for x in vars_ if x not in v]
        if missing:
            raise SwitchingError(f"valuation misses variables {missing}", lineno, 1)
        out.append({x: v[x] for x in vars_})
    return out
