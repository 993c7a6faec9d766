"""Timed environment traces.

Trace files are line oriented; timestamps are integer minutes::

    # purchase orders
    event requested o1 0
    event ordered o1 1440
    sample temp 19.5 10
    end 10000

``end`` is optional and defaults to the last timestamp in the file.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .language import ParseError

__all__ = ["Event", "Sample", "Trace", "TraceError", "load_trace", "format_trace"]


class TraceError(ParseError):
    pass


@dataclass(frozen=True)
class Event:
    name: str
    key: Optional[str]
    t: int


@dataclass(frozen=True)
class Sample:
    variable: str
    value: Fraction
    t: int


@dataclass(frozen=True)
class Trace:
    events: tuple[Event, ...] = ()
    samples: tuple[Sample, ...] = ()
    end_time: int = 0
    _points: tuple[int, ...] = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        for seq in (self.events, self.samples):
            times = [x.t for x in seq]
            if any(b < a for a, b in zip(times, times[1:])):
                raise ValueError("trace timestamps must be nondecreasing")
            if times and (times[0] < 0 or times[-1] > self.end_time):
                raise ValueError("trace timestamps must lie in [0, end_time]")
        points = {e.t for e in self.events} | {s.t for s in self.samples} | {self.end_time}
        object.__setattr__(self, "_points", tuple(sorted(points)))

    @property
    def observation_points(self) -> tuple[int, ...]:
        return self._points


def _timestamp(text: str, lineno: int, col: int) -> int:
    try:
        t = int(text)
    except ValueError:
        raise TraceError(f"bad timestamp {text!r}", lineno, col) from None
    if t < 0:
        raise TraceError(f"negative timestamp {t}", lineno, col)
    return t


def load_trace(text: str) -> Trace:
    events: list[Event] = []
    samples: list[Sample] = []
    end: Optional[int] = None
    last = {"event": 0, "sample": 0}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        parts = line.split()
        if not parts:
            continue
        col = len(line) - len(line.lstrip()) + 1
        kind, args = parts[0], parts[1:]
        t_col = col + line.lstrip().rfind(parts[-1])
        if kind == "event" and len(args) in (2, 3):
            t = _timestamp(args[-1], lineno, t_col)
            key = args[1] if len(args) == 3 else None
            ev = Event(args[0], key, t)
            if t < last["event"]:
                raise TraceError(f"event at {t} precedes earlier event at {last['event']}", lineno, t_col)
            last["event"] = t
            events.append(ev)
        elif kind == "sample" and len(args) == 3:
            try:
                value = Fraction(args[1])
            except (ValueError, ZeroDivisionError):
                raise TraceError(f"bad sample value {args[1]!r}", lineno, col) from None
            t = _timestamp(args[2], lineno, t_col)
            if t < last["sample"]:
                raise TraceError(f"sample at {t} precedes earlier sample at {last['sample']}", lineno, t_col)
            last["sample"] = t
            samples.append(Sample(args[0], value, t))
        elif kind == "end" and len(args) == 1:
            if end is not None:
                raise TraceError("duplicate end line", lineno, col)
            end = _timestamp(args[0], lineno, t_col)
        else:
            raise TraceError(f"malformed trace line {line.strip()!r}", lineno, col)
    latest = max([e.t for e in events] + [s.t for s in samples], default=0)
    if end is None:
        end = latest
    elif latest > end:
        raise TraceError(f"observation at {latest} after end time {end}")
    return Trace(tuple(events), tuple(samples), end)


def format_trace(tr: Trace) -> str:
    lines = []
    for e in tr.events:
        key = f" {e.key}" if e.key is not None else ""
        lines.append(f"event {e.name}{key} {e.t}")
    for s in tr.samples:
        lines.append(f"sample {s.variable} {s.value} {s.t}")
    lines.append(f"end {tr.end_time}")
    return "\n".join(lines) + "\n"
