"""Offline monitoring of requirements over finite timed traces.

The monitor plays the observer: it reports satisfaction of individual
instances (or windows) and violations with a concrete witness.  It never
claims that a requirement is satisfied in general, since a finite trace can
only ever show the absence of an observed violation.

Conventions:

* observation points are event times, sample times and the end time;
* a response resolves a trigger only if it happens at or after the trigger,
  and it must happen strictly before ``trigger + deadline``;
* windows are anchored at time 0 and instances belong to the window that
  contains their trigger;
* state conditions read the latest sample of each variable at or before the
  observation point.
"""
from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from .classification import classify
from .language import (
    BoundedResponse,
    EventPattern,
    Fifo,
    Instantaneous,
    RateFloor,
    Requirement,
    RequirementSet,
    StateInvariant,
    UnboundedResponse,
    VagueQualified,
    WindowedRatio,
)
from .trace import Event, Trace

__all__ = [
    "VIOLATED",
    "NO_VIOLATION_OBSERVED",
    "InstanceSatisfied",
    "Judgment",
    "MonitorReport",
    "NotMonitorable",
    "Pending",
    "Violated",
    "WindowSatisfied",
    "WindowViolated",
    "judgment_from_dict",
    "monitor",
    "monitor_set",
]

VIOLATED = "VIOLATED"
NO_VIOLATION_OBSERVED = "NO_VIOLATION_OBSERVED"


@dataclass(frozen=True)
class InstanceSatisfied:
    key: Optional[str]
    t_trigger: int
    t_response: int


@dataclass(frozen=True)
class Violated:
    t: int
    witness: str


@dataclass(frozen=True)
class WindowSatisfied:
    window: int
    ratio: Fraction
    detail: str = ""


@dataclass(frozen=True)
class WindowViolated:
    window: int
    ratio: Fraction
    detail: str = ""


@dataclass(frozen=True)
class Pending:
    key: Optional[str]
    t_trigger: int
    window: Optional[int] = None


Judgment = Union[InstanceSatisfied, Violated, WindowSatisfied, WindowViolated, Pending]
_JUDGMENT_TYPES = {cls.__name__: cls for cls in (InstanceSatisfied, Violated, WindowSatisfied, WindowViolated, Pending)}


def judgment_to_dict(j: Judgment) -> dict:
    d = {"kind": type(j).__name__}
    for name, value in vars(j).items():
        d[name] = str(value) if isinstance(value, Fraction) else value
    return d


def judgment_from_dict(d: dict) -> Judgment:
    d = dict(d)
    cls = _JUDGMENT_TYPES[d.pop("kind")]
    if "ratio" in d:
        d["ratio"] = Fraction(d["ratio"])
    return cls(**d)


@dataclass(frozen=True)
class MonitorReport:
    requirement_id: str
    judgments: tuple[Judgment, ...]

    @property
    def overall(self) -> str:
        if any(isinstance(j, (Violated, WindowViolated)) for j in self.judgments):
            return VIOLATED
        return NO_VIOLATION_OBSERVED

    def to_dict(self) -> dict:
        return {
            "id": self.requirement_id,
            "judgments": [judgment_to_dict(j) for j in self.judgments],
            "overall": self.overall,
        }


class NotMonitorable(ValueError):
    """Raised for vague requirements, which offer nothing to observe."""

    def __init__(self, requirement_id: str, reason: str):
        self.requirement_id = requirement_id
        self.reason = reason
        super().__init__(f"{requirement_id}: not monitorable: {reason}")

    def to_dict(self) -> dict:
        return {"id": self.requirement_id, "not_monitorable": self.reason}


def _matches(pattern: EventPattern, ev: Event) -> bool:
    return ev.name == pattern.name


def _correlated(trigger: EventPattern, response: EventPattern) -> bool:
    return trigger.key is not None and response.key is not None


def _first_response(trigger_ev: Event, response: EventPattern, keyed: bool, events) -> Optional[Event]:
    for ev in events:
        if ev is trigger_ev or ev.t < trigger_ev.t or not _matches(response, ev):
            continue
        if keyed and ev.key != trigger_ev.key:
            continue
        return ev
    return None


def _first_point_at_or_after(points, t):
    i = bisect_left(points, t)
    return points[i] if i < len(points) else None


def _instances(trigger, response, deadline, tr: Trace):
    """Yield (trigger event, response event or None, resolved_in_time)."""
    keyed = _correlated(trigger, response)
    for ev in tr.events:
        if not _matches(trigger, ev):
            continue
        resp = _first_response(ev, response, keyed, tr.events)
        in_time = resp is not None and (deadline is None or resp.t - ev.t < deadline)
        yield ev, resp, in_time


def _describe(pattern: EventPattern, key) -> str:
    return f"{pattern.name}({key if key is not None else ''})"


def _bounded(f: BoundedResponse, tr: Trace) -> list[Judgment]:
    out = []
    d = f.deadline.minutes
    for ev, resp, in_time in _instances(f.trigger, f.response, d, tr):
        if in_time:
            out.append(InstanceSatisfied(ev.key, ev.t, resp.t))
            continue
        t_obs = _first_point_at_or_after(tr.observation_points, ev.t + d)
        if t_obs is None:
            out.append(Pending(ev.key, ev.t))
        else:
            out.append(
                Violated(
                    t_obs,
                    f"{_describe(f.trigger, ev.key)} at {ev.t} without "
                    f"{_describe(f.response, ev.key)} within {d} minutes",
                )
            )
    return out


def _unbounded(f: UnboundedResponse, tr: Trace) -> list[Judgment]:
    out = []
    for ev, resp, _ in _instances(f.trigger, f.response, None, tr):
        out.append(InstanceSatisfied(ev.key, ev.t, resp.t) if resp else Pending(ev.key, ev.t))
    return out


def _windowed_ratio(f: WindowedRatio, tr: Trace) -> list[Judgment]:
    d, w = f.deadline.minutes, f.window.minutes
    windows: dict[int, list[bool]] = {}
    first_trigger: dict[int, int] = {}
    for ev, _, in_time in _instances(f.trigger, f.response, d, tr):
        k = ev.t // w
        windows.setdefault(k, []).append(in_time)
        first_trigger.setdefault(k, ev.t)
    out = []
    for k in sorted(windows):
        if (k + 1) * w + d > tr.end_time:
            out.append(Pending(None, first_trigger[k], k))
            continue
        results = windows[k]
        ratio = Fraction(sum(results), len(results))
        detail = f"{sum(results)} of {len(results)} resolved within {d} minutes"
        cls = WindowSatisfied if ratio >= f.min_ratio else WindowViolated
        out.append(cls(k, ratio, detail))
    return out


def _states(tr: Trace, points):
    """Yield (t, state) at each point, holding the latest sample per variable."""
    state: dict[str, Fraction] = {}
    samples = tr.samples
    i = 0
    for t in points:
        while i < len(samples) and samples[i].t <= t:
            state[samples[i].variable] = samples[i].value
            i += 1
        yield t, state


def _instantaneous(f: Instantaneous, tr: Trace) -> list[Judgment]:
    out = []
    for t, state in _states(tr, tr.observation_points):
        if f.condition.evaluate(state) is not True:
            continue
        holds = f.consequent.evaluate(state)
        if holds is True:
            out.append(InstanceSatisfied(None, t, t))
        elif holds is False:
            out.append(Violated(t, f"{f.condition} holds but {f.consequent} does not"))
    return out


def _invariant(f: StateInvariant, tr: Trace) -> list[Judgment]:
    out = []
    points = sorted({s.t for s in tr.samples})
    for t, state in _states(tr, points):
        holds = f.condition.evaluate(state)
        if holds is True:
            out.append(InstanceSatisfied(None, t, t))
        elif holds is False:
            values = ", ".join(f"{v}={state[v]}" for v in f.condition.variables)
            out.append(Violated(t, f"{f.condition} fails with {values}"))
    return out


def _rate_floor(f: RateFloor, tr: Trace) -> list[Judgment]:
    w = f.window.minutes
    n_windows = tr.end_time // w
    counts = [0] * n_windows
    for ev in tr.events:
        if _matches(f.event, ev) and ev.t // w < n_windows:
            counts[ev.t // w] += 1
    out = []
    for k, n in enumerate(counts):
        ratio = Fraction(n, f.min_count)
        detail = f"{n} {f.event.name} events, floor {f.min_count}"
        out.append(WindowSatisfied(k, ratio, detail) if n >= f.min_count else WindowViolated(k, ratio, detail))
    return out


def _fifo(f: Fifo, tr: Trace) -> list[Judgment]:
    entered: dict[str, int] = {}
    served: dict[str, int] = {}
    for ev in tr.events:
        if _matches(f.entry, ev) and ev.key not in entered:
            entered[ev.key] = ev.t
        if _matches(f.exit, ev) and ev.key in entered and ev.key not in served:
            served[ev.key] = ev.t
    out = []
    for y, t_out in sorted(served.items(), key=lambda kv: (kv[1], entered[kv[0]])):
        overtaken = [
            x
            for x, t_in in sorted(entered.items(), key=lambda kv: kv[1])
            if t_in < entered[y] and served.get(x, t_out + 1) > t_out
        ]
        if overtaken:
            out.append(Violated(t_out, f"{y} served before {', '.join(overtaken)}"))
        else:
            out.append(InstanceSatisfied(y, entered[y], t_out))
    for x, t_in in entered.items():
        if x not in served:
            out.append(Pending(x, t_in))
    return out


def monitor(r: Requirement, tr: Trace) -> MonitorReport:
    f = r.form
    if classify(r).vague:
        if isinstance(f, VagueQualified):
            raise NotMonitorable(r.id, f"vague qualifier '{f.qualifier}'")
        raise NotMonitorable(r.id, "ratio without a window")
    if isinstance(f, BoundedResponse):
        js = _bounded(f, tr)
    elif isinstance(f, UnboundedResponse):
        js = _unbounded(f, tr)
    elif isinstance(f, WindowedRatio):
        js = _windowed_ratio(f, tr)
    elif isinstance(f, Instantaneous):
        js = _instantaneous(f, tr)
    elif isinstance(f, StateInvariant):
        js = _invariant(f, tr)
    elif isinstance(f, RateFloor):
        js = _rate_floor(f, tr)
    elif isinstance(f, Fifo):
        js = _fifo(f, tr)
    else:
        raise TypeError(f"unknown requirement form {type(f).__name__}")
    return MonitorReport(r.id, tuple(js))


def monitor_set(rs: RequirementSet, tr: Trace) -> dict[str, Union[MonitorReport, NotMonitorable]]:
    out: dict[str, Union[MonitorReport, NotMonitorable]] = {}
    for r in rs:
        try:
            out[r.id] = monitor(r, tr)
        except NotMonitorable as exc:
            out[r.id] = exc
    return out
