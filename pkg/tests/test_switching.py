import logging
import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_select_mode, random_mode_system, random_valuations
from reqobs.switching import (
    CRITICAL,
    HOLD,
    NONCRITICAL,
    Condition,
    Controller,
    ModeRequirementTable,
    SwitchingError,
    build_machine_switching,
    build_mode_switching,
    controller_run,
    criticality,
    equivalent,
    flatten,
    format_system,
    parse_system,
    parse_valuations,
    select,
    valuations,
)

C = Condition.of


def complementary(vars_=("k",)):
    return build_machine_switching(vars_, [(C("k"), "S0"), (C("!k"), "S1")])


def two_modes():
    m0 = build_machine_switching(("e", "k"), [(C("k"), "S0"), (C("!k"), "S1")])
    m1 = build_machine_switching(("e", "k"), [(C("k"), "S2"), (C("!k"), "S3")])
    return build_mode_switching(("e", "k"), [(C("e"), m0), (C("!e"), m1)])


def test_condition_basics():
    c = C("e", "!k")
    assert c.consistent and str(c) == "{e,!k}"
    assert not C("k", "!k").consistent
    assert c.satisfied_by({"e": True, "k": False})
    assert C().satisfied_by({"e": False})
    assert C("e").overlaps(C()) and not C("e").overlaps(C("!e"))


def test_build_valid():
    sys = complementary()
    assert sys.machines == ("S0", "S1")


def test_overlap_reports_witness():
    with pytest.raises(SwitchingError, match=r"overlap, e.g. at k") as exc:
        build_machine_switching(("k",), [(C("k"), "S0"), (C(), "S1")])
    # exhaustive check over both valuations agrees that k=true is shared
    shared = [v for v in valuations(("k",)) if C("k").satisfied_by(v) and C().satisfied_by(v)]
    assert shared == [{"k": True}]
    assert "{k}" in str(exc.value)


def test_duplicate_machine_and_universe():
    with pytest.raises(SwitchingError, match="more than one"):
        build_machine_switching(("k",), [(C("k"), "S0"), (C("!k"), "S0")])
    with pytest.raises(SwitchingError, match="empty"):
        build_machine_switching((), [])
    with pytest.raises(SwitchingError, match="undeclared"):
        build_machine_switching(("k",), [(C("j"), "S0")])


def test_inconsistent_condition_warns(caplog):
    with caplog.at_level(logging.WARNING):
        sys = build_machine_switching(("k",), [(C("k", "!k"), "S0")])
    assert "inconsistent" in caplog.text
    assert sys.unreachable == ((C("k", "!k"), "S0"),)
    assert select(sys, {"k": True}) is HOLD


def test_select():
    assert select(complementary(), {"k": True}) == "S0"
    sys = complementary(("k", "j"))
    assert select(sys, {"k": True, "j": True}) == select(sys, {"k": True, "j": False}) == "S0"
    one = build_machine_switching(("k",), [(C("k"), "S0")])
    assert select(one, {"k": False}) is HOLD
    with pytest.raises(ValueError, match="misses"):
        select(sys, {"k": True})


def test_controller_run():
    assert controller_run(complementary(), [{"k": True}, {"k": False}]) == ["S0", "S1"]
    one = build_machine_switching(("k",), [(C("k"), "S0")])
    assert controller_run(one, [{"k": False}, {"k": True}, {"k": False}]) == [None, "S0", "S0"]
    assert controller_run(two_modes(), [{"e": True, "k": True}]) == ["S0"]


def test_mode_hold_when_inner_unmatched():
    inner = build_machine_switching(("e", "k"), [(C("k"), "S0")])
    ms = build_mode_switching(("e", "k"), [(C("e"), inner)])
    assert controller_run(ms, [{"e": True, "k": True}, {"e": True, "k": False}, {"e": False, "k": True}]) == ["S0", "S0", "S0"]


def test_flatten_two_modes():
    flat = flatten(two_modes())
    assert set(flat.pairs) == {
        (C("e", "k"), "S0"), (C("e", "!k"), "S1"), (C("!e", "k"), "S2"), (C("!e", "!k"), "S3"),
    }
    # exhaustive 4-valuation comparison
    for v in valuations(("e", "k")):
        assert select(flat, v) == select(two_modes(), v)


def test_flatten_identity_and_contradiction():
    inner = build_machine_switching(("k",), [(C("k"), "S0")])
    ms = build_mode_switching(("k",), [(C(), inner)])
    assert flatten(ms).pairs == ((C("k"), "S0"),)
    inner = build_machine_switching(("e",), [(C("!e"), "S")])
    ms = build_mode_switching(("e",), [(C("e"), inner)])
    flat = flatten(ms)
    assert flat.unreachable == ((C("e", "!e"), "S"),)


def test_flatten_disambiguates_shared_ids():
    m0 = build_machine_switching(("e",), [(C(), "S0")])
    m1 = build_machine_switching(("e",), [(C(), "S0"), ])
    with pytest.raises(SwitchingError, match="same machine-switching system"):
        build_mode_switching(("e",), [(C("e"), m0), (C("!e"), m1)])
    m1 = build_machine_switching(("e",), [(C("e"), "S0"), (C("!e"), "S1")])
    ms = build_mode_switching(("e",), [(C("e"), m0), (C("!e"), m1)])
    flat = flatten(ms)
    assert flat.machines == ("S0@0", "S0@1", "S1")
    assert equivalent(flat, ms).equal


def test_equivalent():
    ms = two_modes()
    assert equivalent(flatten(ms), ms, ("e", "k")).equal
    assert equivalent(complementary(), complementary(), ("k",)).equal
    a = build_machine_switching(("k",), [(C("k"), "S0")])
    b = build_machine_switching(("k",), [(C("k"), "S1")])
    eq = equivalent(a, b, ("k",))
    assert not eq.equal and eq.counterexample == {"k": True}
    with pytest.raises(SwitchingError, match="universes differ"):
        equivalent(a, two_modes(), ("k",))


def test_swapped_counterexample_is_e_and_k():
    swapped = build_machine_switching(
        ("e", "k"),
        [(C("e", "k"), "S1"), (C("e", "!k"), "S0"), (C("!e", "k"), "S2"), (C("!e", "!k"), "S3")],
    )
    eq = equivalent(swapped, two_modes())
    assert eq.counterexample == {"e": True, "k": True}
    assert (eq.left, eq.right) == ("S1", "S0")


def test_criticality():
    t = ModeRequirementTable(((C("normal"), frozenset({"R_alarm", "R_fridge"})), (C("!normal"), frozenset({"R_alarm"}))))
    assert criticality(t) == {"R_alarm": CRITICAL, "R_fridge": NONCRITICAL}
    assert criticality(ModeRequirementTable(((C(), frozenset({"R1"})),))) == {"R1": CRITICAL}
    t = ModeRequirementTable(((C("e"), frozenset({"A"})), (C("!e"), frozenset({"B"}))))
    assert set(criticality(t).values()) == {NONCRITICAL}
    with pytest.raises(SwitchingError, match="overlap"):
        ModeRequirementTable(((C("e"), frozenset()), (C(), frozenset())))
    with pytest.raises(SwitchingError, match="unknown requirements"):
        t.check_against(["A"])


# -- file format -----------------------------------------------------------------


def test_parse_two_modes_file(fixtures):
    sf = parse_system((fixtures / "switching" / "two_modes.sys").read_text())
    assert sf.system == two_modes()
    assert sf.declared_machines == ("S0", "S1", "S2", "S3")
    assert parse_system(format_system(sf.system)).system == sf.system


def test_parse_smart_home(fixtures):
    sf = parse_system((fixtures / "switching" / "smart_home.sys").read_text())
    assert sf.system is None
    assert criticality(sf.table) == {"R_alarm": CRITICAL, "R_fridge": NONCRITICAL}


@pytest.mark.parametrize(
    "text, match",
    [
        ("vars k\npair {k} S0\npair {} S1", "overlap"),
        ("vars k\nmachine S0\npair {k} S9", "undeclared machine"),
        ("vars k\npair {k} S0\nmode {k} { pair {k} S1 }", "either"),
        ("vars k\nfrob", "unknown statement"),
        ("vars k\npair {k S0", "expected"),
        ("vars k\npair {j} S0", "undeclared variables"),
        ("vars k\nmodes-reqs {k} {A}\nmodes-reqs {} {B}", "overlap"),
        ("vars k\npair {k} S0 S1", "unexpected"),
    ],
)
def test_parse_errors(text, match):
    with pytest.raises(SwitchingError, match=match):
        parse_system(text)


def test_parse_valuations():
    vs = parse_valuations("e k\n!e, !k  # comment\n", ("e", "k"))
    assert vs == [{"e": True, "k": True}, {"e": False, "k": False}]
    with pytest.raises(SwitchingError, match="misses"):
        parse_valuations("e", ("e", "k"))
    with pytest.raises(SwitchingError, match="unknown"):
        parse_valuations("e k z", ("e", "k"))


# -- properties --------------------------------------------------------------------


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_flatten_equivalent_random(seed):
    rng = random.Random(seed)
    ms = random_mode_system(rng)
    flat = flatten(ms)
    assert equivalent(flat, ms).equal
    for v in valuations(ms.vars):
        s = select(ms, v)
        assert (None if s is HOLD else s) == brute_select_mode(ms, v)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_selection_unique(seed):
    ms = random_mode_system(random.Random(seed))
    flat = flatten(ms)
    for v in valuations(flat.vars):
        assert sum(c.satisfied_by(v) for c, _ in flat.pairs) <= 1


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_hold_idempotent(seed):
    rng = random.Random(seed)
    ms = random_mode_system(rng)
    ctl = Controller(flatten(ms))
    for v in random_valuations(rng, ms.vars, 10):
        before = ctl.current
        after = ctl.step(v)
        if select(ctl.system, v) is HOLD:
            assert after == before


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32))
def test_step_equivalence_implies_trace_equivalence(seed):
    rng = random.Random(seed)
    a, b = random_mode_system(rng, 4), random_mode_system(rng, 4)
    for x, y in ((a, flatten(a)), (a, b)):
        if x.vars != y.vars or not equivalent(x, y).equal:
            continue
        for _ in range(10):
            vs = random_valuations(rng, x.vars)
            assert controller_run(x, vs) == controller_run(y, vs)


def test_flatten_tolerates_coinciding_contradictions():
    inner = build_machine_switching(("e", "k"), [(C("!e", "k"), "S0"), (C("!e", "!k"), "S1")], warn=False)
    other = build_machine_switching(("e", "k"), [(C("!e", "k"), "S2")], warn=False)
    ms = build_mode_switching(("e", "k"), [(C("e", "k"), inner), (C("!e"), other)], warn=False)
    flat = flatten(ms)
    assert len(flat.unreachable) == 2
    assert equivalent(flat, ms).equal
