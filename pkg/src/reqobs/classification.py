"""Satisfiability / falsifiability classification of requirements.

A requirement splits environment states into legal and illegal ones.  It is
falsifiable when some observable state is illegal and satisfiable when an
instance of satisfaction can be observed.  Requirements that are neither are
vague.  The classification is decided per requirement form.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .language import (
    BoundedResponse,
    Fifo,
    Instantaneous,
    RateFloor,
    Requirement,
    RequirementSet,
    StateCondition,
    StateInvariant,
    UnboundedResponse,
    VagueQualified,
    WindowedRatio,
)

__all__ = [
    "Classification",
    "check_invariant_consistency",
    "classify",
    "classification_report",
    "diagnostics",
]


@dataclass(frozen=True)
class Classification:
    satisfiable: bool
    falsifiable: bool

    @property
    def vague(self) -> bool:
        return not self.satisfiable and not self.falsifiable


def classify(r: Requirement) -> Classification:
    f = r.form
    if isinstance(f, (BoundedResponse, Instantaneous, RateFloor, Fifo)):
        return Classification(True, True)
    if isinstance(f, UnboundedResponse):
        return Classification(True, False)
    if isinstance(f, WindowedRatio):
        has_window = f.window is not None
        return Classification(has_window, has_window)
    if isinstance(f, StateInvariant):
        return Classification(check_invariant_consistency(f.condition), True)
    if isinstance(f, VagueQualified):
        return Classification(False, False)
    raise TypeError(f"unknown requirement form {type(f).__name__}")


class _Interval:
    """Rational interval with open/closed ends; None means unbounded."""

    def __init__(self):
        self.lo: Optional[Fraction] = None
        self.lo_closed = False
        self.hi: Optional[Fraction] = None
        self.hi_closed = False
        self.nonzero = False

    def raise_lo(self, v, closed):
        if self.lo is None or v > self.lo or (v == self.lo and not closed):
            self.lo, self.lo_closed = v, closed

    def lower_hi(self, v, closed):
        if self.hi is None or v < self.hi or (v == self.hi and not closed):
            self.hi, self.hi_closed = v, closed

    def nonempty(self) -> bool:
        if self.lo is not None and self.hi is not None:
            if self.lo > self.hi:
                return False
            if self.lo == self.hi:
                if not (self.lo_closed and self.hi_closed):
                    return False
                # the single point must also respect a "true" test
                return not (self.nonzero and self.lo == 0)
        # any interval with nonempty interior over the rationals has a nonzero point
        return True


def check_invariant_consistency(c: StateCondition) -> bool:
    """True iff every variable's constraints intersect to a nonempty set."""
    intervals: dict[str, _Interval] = {}
    for atom in c.conjuncts:
        iv = intervals.setdefault(atom.variable, _Interval())
        cmp, t = atom.comparator, atom.threshold
        if cmp == "true":
            iv.nonzero = True
        elif cmp == "false":
            iv.raise_lo(Fraction(0), True)
            iv.lower_hi(Fraction(0), True)
        elif cmp in (">", ">="):
            iv.raise_lo(t, cmp == ">=")
        elif cmp in ("<", "<="):
            iv.lower_hi(t, cmp == "<=")
        else:
            iv.raise_lo(t, True)
            iv.lower_hi(t, True)
    return all(iv.nonempty() for iv in intervals.values())


def diagnostics(r: Requirement) -> list[str]:
    f = r.form
    out = []
    if isinstance(f, VagueQualified):
        out.append(f"vague qualifier '{f.qualifier}' gives no criterion for satisfaction or violation")
    elif isinstance(f, WindowedRatio) and f.window is None:
        out.append("ratio has no window: the space of instances is unspecified")
    elif isinstance(f, UnboundedResponse):
        out.append("no time bound: violation can never be observed")
    elif isinstance(f, StateInvariant) and not check_invariant_consistency(f.condition):
        out.append("inconsistent condition: every environment state is illegal")
    return out


def classification_report(rs: RequirementSet) -> list[dict]:
    rows = []
    for r in rs:
        c = classify(r)
        rows.append(
            {
                "id": r.id,
                "form": r.form_name,
                "satisfiable": c.satisfiable,
                "falsifiable": c.falsifiable,
                "vague": c.vague,
                "diagnostics": diagnostics(r),
            }
        )
    return rows
