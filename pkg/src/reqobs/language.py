"""Requirements DSL: AST, parser and canonical printer.

A document is a sequence of statements of the form ``req <id>: <form>``.
Whitespace (including newlines) is insignificant and ``#`` starts a comment
that runs to the end of the line.  Examples::

    req R1: when requested(x) then ordered(x) within 2 days
    req R3: when requested(x) then ordered(x) within 2 days
            in at least 60% of instances per 30 days
    req R4: when requested(x) then eventually ordered(x)
    req R5: when requested(x) then as_soon_as_possible ordered(x)
    req T:  always temp >= 18 and temp < 24
    req E:  at every observation on_escalator implies running
    req R8: rate serviced() >= 200 per 1 day
    req R9: fifo requested(x) -> served(x)

All durations are kept with their written unit; ``Duration.minutes`` gives
the canonical value used by the monitor.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Union

__all__ = [
    "COMPARATORS",
    "QUALIFIERS",
    "UNITS",
    "Atom",
    "BoundedResponse",
    "Duration",
    "EventPattern",
    "Fifo",
    "Form",
    "Instantaneous",
    "ParseError",
    "RateFloor",
    "Requirement",
    "RequirementSet",
    "SourcePos",
    "StateCondition",
    "StateInvariant",
    "UnboundedResponse",
    "VagueQualified",
    "WindowedRatio",
    "format_requirement",
    "format_requirements",
    "parse_requirements",
]

UNITS = {"minutes": 1, "hours": 60, "days": 1440}
_UNIT_ALIASES = {"minute": "minutes", "hour": "hours", "day": "days"}
_UNIT_ALIASES.update({u: u for u in UNITS})

QUALIFIERS = (
    "as_soon_as_possible",
    "high",
    "fairly",
    "unduly_long",
    "as_many_as_possible",
)

# numeric comparators plus the two boolean tests
COMPARATORS = ("<", "<=", "=", ">=", ">", "true", "false")

# words that can never be identifiers; qualifiers are resolved by lookahead
RESERVED = frozenset(
    {
        "req", "when", "then", "eventually", "within", "in", "at", "least",
        "of", "instances", "per", "always", "every", "observation",
        "implies", "rate", "fifo", "and", "not",
    }
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.message = message
        self.line = line
        self.column = column
        where = f"{line}:{column}: " if line else ""
        super().__init__(f"{where}{message}")


@dataclass(frozen=True)
class SourcePos:
    line: int
    column: int


@dataclass(frozen=True)
class EventPattern:
    name: str
    key: Optional[str] = None

    def __post_init__(self):
        if not _is_identifier(self.name):
            raise ValueError(f"bad event name {self.name!r}")
        if self.key is not None and not _is_identifier(self.key):
            raise ValueError(f"bad correlation key {self.key!r}")

    def __str__(self) -> str:
        return f"{self.name}({self.key or ''})"


@dataclass(frozen=True)
class Duration:
    magnitude: int
    unit: str = "minutes"

    def __post_init__(self):
        if self.magnitude < 0:
            raise ValueError("duration must be nonnegative")
        if self.unit not in UNITS:
            raise ValueError(f"unknown unit {self.unit!r}")

    @property
    def minutes(self) -> int:
        return self.magnitude * UNITS[self.unit]

    def __str__(self) -> str:
        unit = self.unit[:-1] if self.magnitude == 1 else self.unit
        return f"{self.magnitude} {unit}"


@dataclass(frozen=True)
class Atom:
    """One comparison ``variable <cmp> threshold`` or a boolean test."""

    variable: str
    comparator: str
    threshold: Optional[Fraction] = None

    def __post_init__(self):
        if self.comparator not in COMPARATORS:
            raise ValueError(f"unknown comparator {self.comparator!r}")
        boolean = self.comparator in ("true", "false")
        if boolean != (self.threshold is None):
            raise ValueError("numeric comparators need a threshold, boolean tests must not have one")

    def holds(self, value: Fraction) -> bool:
        c = self.comparator
        if c == "true":
            return value != 0
        if c == "false":
            return value == 0
        t = self.threshold
        return {
            "<": value < t,
            "<=": value <= t,
            "=": value == t,
            ">=": value >= t,
            ">": value > t,
        }[c]

    def __str__(self) -> str:
        if self.comparator == "true":
            return self.variable
        if self.comparator == "false":
            return f"not {self.variable}"
        return f"{self.variable} {self.comparator} {_format_number(self.threshold)}"


@dataclass(frozen=True)
class StateCondition:
    conjuncts: tuple[Atom, ...]

    def __post_init__(self):
        if not self.conjuncts:
            raise ValueError("a state condition needs at least one conjunct")

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(a.variable for a in self.conjuncts))

    def evaluate(self, state) -> Optional[bool]:
        """Truth value under ``state`` (variable -> value); None if a variable is unknown."""
        for atom in self.conjuncts:
            if atom.variable not in state:
                return None
        return all(atom.holds(state[atom.variable]) for atom in self.conjuncts)

    def __str__(self) -> str:
        return " and ".join(str(a) for a in self.conjuncts)


@dataclass(frozen=True)
class BoundedResponse:
    trigger: EventPattern
    response: EventPattern
    deadline: Duration


@dataclass(frozen=True)
class UnboundedResponse:
    trigger: EventPattern
    response: EventPattern


@dataclass(frozen=True)
class WindowedRatio:
    trigger: EventPattern
    response: EventPattern
    deadline: Duration
    min_ratio: Fraction
    window: Optional[Duration] = None

    def __post_init__(self):
        if not 0 < self.min_ratio <= 1:
            raise ValueError("min_ratio must lie in (0, 1]")
        if self.window is not None and self.window.minutes == 0:
            raise ValueError("window must be positive")


@dataclass(frozen=True)
class Instantaneous:
    condition: StateCondition
    consequent: StateCondition


@dataclass(frozen=True)
class StateInvariant:
    condition: StateCondition


@dataclass(frozen=True)
class RateFloor:
    event: EventPattern
    min_count: int
    window: Duration

    def __post_init__(self):
        if self.min_count < 1:
            raise ValueError("min_count must be positive")
        if self.window.minutes == 0:
            raise ValueError("window must be positive")


@dataclass(frozen=True)
class Fifo:
    entry: EventPattern
    exit: EventPattern

    def __post_init__(self):
        if self.entry.key is None or self.exit.key is None:
            raise ValueError("fifo needs a correlation key on both events")


@dataclass(frozen=True)
class VagueQualified:
    trigger: EventPattern
    response: EventPattern
    qualifier: str

    def __post_init__(self):
        if self.qualifier not in QUALIFIERS:
            raise ValueError(f"unknown qualifier {self.qualifier!r}")


Form = Union[
    BoundedResponse,
    UnboundedResponse,
    WindowedRatio,
    Instantaneous,
    StateInvariant,
    RateFloor,
    Fifo,
    VagueQualified,
]


@dataclass(frozen=True)
class Requirement:
    id: str
    form: Form
    pos: Optional[SourcePos] = field(default=None, compare=False)

    def __post_init__(self):
        if not _is_identifier(self.id):
            raise ValueError(f"bad requirement id {self.id!r}")
        trigger = getattr(self.form, "trigger", None)
        response = getattr(self.form, "response", None)
        if trigger and response and trigger.key and response.key and trigger.key != response.key:
            raise ValueError(
                f"correlation keys differ: {trigger.key!r} vs {response.key!r}"
            )

    @property
    def form_name(self) -> str:
        return type(self.form).__name__


@dataclass(frozen=True)
class RequirementSet:
    requirements: tuple[Requirement, ...] = ()

    def __post_init__(self):
        seen = set()
        for r in self.requirements:
            if r.id in seen:
                raise ValueError(f"duplicate requirement id {r.id!r}")
            seen.add(r.id)

    def __iter__(self) -> Iterator[Requirement]:
        return iter(self.requirements)

    def __len__(self) -> int:
        return len(self.requirements)

    def __contains__(self, rid) -> bool:
        return any(r.id == rid for r in self.requirements)

    def __getitem__(self, rid: str) -> Requirement:
        for r in self.requirements:
            if r.id == rid:
                return r
        raise KeyError(rid)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(r.id for r in self.requirements)


# -- lexer -------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<num>-?\d+(?:\.\d+)?(?:/\d+)?)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|->|[<>=:()%])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "num", "id", "op", "eof"
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, m.group(), line, pos - line_start + 1))
        for i, ch in enumerate(m.group()):
            if ch == "\n":
                line += 1
                line_start = pos + i + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


def _is_identifier(s) -> bool:
    return (
        isinstance(s, str)
        and re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", s) is not None
        and s not in RESERVED
    )


# -- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> _Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def error(self, message: str, tok: Optional[_Token] = None):
        tok = tok or self.tok
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        return ParseError(f"{message}, found {found}", tok.line, tok.column)

    def at(self, text: str) -> bool:
        return self.tok.kind in ("id", "op") and self.tok.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> _Token:
        if not self.at(text):
            raise self.error(f"expected {text!r}")
        tok = self.tok
        self.i += 1
        return tok

    def identifier(self, what: str = "identifier") -> str:
        tok = self.tok
        if tok.kind != "id" or tok.text in RESERVED:
            raise self.error(f"expected {what}")
        self.i += 1
        return tok.text

    def number(self) -> Fraction:
        tok = self.tok
        if tok.kind != "num":
            raise self.error("expected a number")
        self.i += 1
        try:
            return Fraction(tok.text)
        except ZeroDivisionError:
            raise ParseError("zero denominator", tok.line, tok.column) from None

    def natural(self, what: str = "a nonnegative integer") -> int:
        tok = self.tok
        value = self.number()
        if value.denominator != 1 or value < 0:
            raise ParseError(f"expected {what}, found {tok.text!r}", tok.line, tok.column)
        return int(value)

    def duration(self) -> Duration:
        magnitude = self.natural()
        tok = self.tok
        if tok.kind != "id" or tok.text not in _UNIT_ALIASES:
            raise self.error("expected a unit (minutes, hours, days)")
        self.i += 1
        return Duration(magnitude, _UNIT_ALIASES[tok.text])

    def event(self) -> EventPattern:
        name = self.identifier("event name")
        self.expect("(")
        key = None
        if not self.at(")"):
            key = self.identifier("correlation variable")
        self.expect(")")
        return EventPattern(name, key)

    def condition(self) -> StateCondition:
        atoms = [self.atom()]
        while self.accept("and"):
            atoms.append(self.atom())
        return StateCondition(tuple(atoms))

    def atom(self) -> Atom:
        if self.accept("not"):
            return Atom(self.identifier("variable"), "false")
        var = self.identifier("variable")
        if self.tok.kind == "op" and self.tok.text in ("<", "<=", "=", ">=", ">"):
            cmp = self.tok.text
            self.i += 1
            return Atom(var, cmp, self.number())
        return Atom(var, "true")

    def document(self) -> RequirementSet:
        reqs: list[Requirement] = []
        seen: dict[str, SourcePos] = {}
        while self.tok.kind != "eof":
            start = self.expect("req")
            id_tok = self.tok
            rid = self.identifier("requirement id")
            if rid in seen:
                p = seen[rid]
                raise ParseError(
                    f"duplicate requirement id {rid!r} (first defined at {p.line}:{p.column})",
                    id_tok.line,
                    id_tok.column,
                )
            self.expect(":")
            form = self.form()
            pos = SourcePos(start.line, start.column)
            seen[rid] = pos
            reqs.append(Requirement(rid, form, pos))
        return RequirementSet(tuple(reqs))

    def form(self) -> Form:
        tok = self.tok
        if self.accept("when"):
            return self.response_form(tok)
        if self.accept("always"):
            return StateInvariant(self.condition())
        if self.accept("at"):
            self.expect("every")
            self.expect("observation")
            cond = self.condition()
            self.expect("implies")
            return Instantaneous(cond, self.condition())
        if self.accept("rate"):
            ev = self.event()
            self.expect(">=")
            count_tok = self.tok
            count = self.natural("a positive count")
            if count < 1:
                raise ParseError("rate floor must be positive", count_tok.line, count_tok.column)
            self.expect("per")
            window = self._positive(self.duration, "rate window")
            return RateFloor(ev, count, window)
        if self.accept("fifo"):
            entry_tok = self.tok
            entry = self.event()
            self.expect("->")
            exit_ = self.event()
            if entry.key is None or exit_.key is None:
                raise ParseError("fifo needs a correlation key on both events", entry_tok.line, entry_tok.column)
            if entry.key != exit_.key:
                raise ParseError(
                    f"mismatched correlation keys {entry.key!r} and {exit_.key!r}",
                    entry_tok.line,
                    entry_tok.column,
                )
            return Fifo(entry, exit_)
        raise self.error("expected a requirement form (when, always, at, rate, fifo)")

    def _positive(self, parse, what):
        tok = self.tok
        d = parse()
        if d.minutes == 0:
            raise ParseError(f"{what} must be positive", tok.line, tok.column)
        return d

    def response_form(self, start: _Token) -> Form:
        trigger = self.event()
        self.expect("then")
        mode = None
        mode_tok = self.tok
        if self.accept("eventually"):
            mode = "eventually"
        elif self.tok.kind == "id" and self.tok.text in QUALIFIERS and not self.peek().text == "(":
            mode = self.tok.text
            self.i += 1
        resp_tok = self.tok
        response = self.event()
        if trigger.key and response.key and trigger.key != response.key:
            raise ParseError(
                f"mismatched correlation keys {trigger.key!r} and {response.key!r}",
                resp_tok.line,
                resp_tok.column,
            )
        deadline = None
        if self.at("within"):
            if mode is not None:
                raise self.error(f"a deadline cannot follow {mode!r}")
            self.i += 1
            deadline = self.duration()
        ratio = window = None
        if self.at("in"):
            if deadline is None:
                raise self.error("a ratio needs a deadline")
            self.i += 1
            self.expect("at")
            self.expect("least")
            pct_tok = self.tok
            pct = self.number()
            if not 0 < pct <= 100:
                raise ParseError("percentage must lie in (0, 100]", pct_tok.line, pct_tok.column)
            ratio = pct / 100
            self.expect("%")
            self.expect("of")
            self.expect("instances")
            if self.accept("per"):
                window = self._positive(self.duration, "ratio window")
        if mode == "eventually" or (mode is None and deadline is None):
            return UnboundedResponse(trigger, response)
        if mode is not None:
            return VagueQualified(trigger, response, mode)
        if ratio is not None:
            return WindowedRatio(trigger, response, deadline, ratio, window)
        return BoundedResponse(trigger, response, deadline)


def parse_requirements(text: str) -> RequirementSet:
    """Parse a requirements document; raises ParseError with a location."""
    return _Parser(text).document()


# -- printer -----------------------------------------------------------------


def _format_number(x: Fraction) -> str:
    x = Fraction(x)
    if x.denominator == 1:
        return str(x.numerator)
    # exact decimal when the denominator has only 2s and 5s
    d = x.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    if d == 1:
        digits = 0
        scaled = x
        while scaled.denominator != 1:
            scaled *= 10
            digits += 1
        sign = "-" if scaled < 0 else ""
        n = abs(int(scaled))
        whole, frac = divmod(n, 10**digits)
        return f"{sign}{whole}.{frac:0{digits}d}"
    return f"{x.numerator}/{x.denominator}"


def _format_form(f: Form) -> str:
    if isinstance(f, BoundedResponse):
        return f"when {f.trigger} then {f.response} within {f.deadline}"
    if isinstance(f, UnboundedResponse):
        return f"when {f.trigger} then eventually {f.response}"
    if isinstance(f, WindowedRatio):
        s = (
            f"when {f.trigger} then {f.response} within {f.deadline} "
            f"in at least {_format_number(f.min_ratio * 100)}% of instances"
        )
        if f.window is not None:
            s += f" per {f.window}"
        return s
    if isinstance(f, Instantaneous):
        return f"at every observation {f.condition} implies {f.consequent}"
    if isinstance(f, StateInvariant):
        return f"always {f.condition}"
    if isinstance(f, RateFloor):
        return f"rate {f.event} >= {f.min_count} per {f.window}"
    if isinstance(f, Fifo):
        return f"fifo {f.entry} -> {f.exit}"
    if isinstance(f, VagueQualified):
        return f"when {f.trigger} then {f.qualifier} {f.response}"
    raise TypeError(f"not a requirement form: {f!r}")


def format_requirement(r: Requirement) -> str:
    return f"req {r.id}: {_format_form(r.form)}"


def format_requirements(rs: RequirementSet) -> str:
    return "".join(format_requirement(r) + "\n" for r in rs)
