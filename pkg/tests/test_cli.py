import json
import subprocess
import sys

import pytest

from reqobs.cli import main, render_text


@pytest.fixture
def run(capsys):
    def _run(*argv):
        code = main([str(a) for a in argv])
        out, err = capsys.readouterr()
        return code, out, err

    return _run


def test_classify_matches_golden(run, fixtures):
    code, out, _ = run("classify", fixtures / "reference_requirements.req", "--format", "json")
    assert code == 0
    golden = json.loads((fixtures / "golden_classification.json").read_text())
    got = {r["id"]: r for r in json.loads(out)["requirements"]}
    assert set(got) == set(golden)
    for rid, want in golden.items():
        for k, v in want.items():
            assert got[rid][k] == v, (rid, k)


def test_classify_text_columns(run, fixtures):
    code, out, _ = run("classify", fixtures / "reference_requirements.req")
    assert code == 0
    header, *rows = out.splitlines()
    assert header.split()[:5] == ["id", "form", "satisfiable", "falsifiable", "vague"]
    r4 = next(r for r in rows if r.startswith("R4 "))
    assert r4.split()[1:4] == ["UnboundedResponse", "yes", "no"]


def test_classify_empty_file(run, tmp_path):
    p = tmp_path / "empty.req"
    p.write_text("# nothing\n")
    code, out, _ = run("classify", p, "--format", "json")
    assert code == 0 and json.loads(out)["requirements"] == []


def test_malformed_input_exits_2(run, tmp_path):
    p = tmp_path / "bad.req"
    p.write_text("req R1: when requested(x) then ordered(x) within 2 fortnights\n")
    code, out, err = run("classify", p)
    assert code == 2 and out == ""
    assert err.startswith(f"error: {p}:1:")


def test_missing_file_exits_2(run, tmp_path, fixtures):
    code, _, err = run("monitor", fixtures / "r1.req", tmp_path / "nope.trace")
    assert code == 2 and "nope.trace" in err


def test_monitor_clean_and_violated(run, fixtures):
    code, out, _ = run("monitor", fixtures / "r1.req", fixtures / "traces" / "r1_satisfied.trace")
    assert code == 0
    assert out.splitlines()[0] == "R1: NO_VIOLATION_OBSERVED"
    code, out, _ = run("monitor", fixtures / "r1.req", fixtures / "traces" / "r1_late.trace")
    assert code == 1
    assert "R1: VIOLATED" in out and "VIOLATED   @" in out


def test_monitor_not_monitorable(run, fixtures):
    code, out, _ = run("monitor", fixtures / "r5.req", fixtures / "traces" / "r1_satisfied.trace")
    assert code == 0
    assert out.strip() == "R5: NOT MONITORABLE (vague qualifier 'as_soon_as_possible')"


def test_goals_happy_sets(run, fixtures):
    code, out, _ = run("goals", fixtures / "goals" / "model_a.goals", "happy-sets", "--format", "json")
    assert code == 0
    rep = json.loads(out)
    assert rep["sets"] == [["g'"], ["g''"], ["g'", "g''"]]
    code, out, _ = run("goals", fixtures / "goals" / "model_c.goals", "happy-sets")
    assert out.splitlines()[0] == "happy-sets: 0"
    assert "requires further elicitation" in out


def test_goals_designate(run, fixtures):
    reqs = fixtures / "reference_requirements.req"
    code, out, _ = run("goals", fixtures / "goals" / "model_b.goals", "designate", "{g,o}", "--reqs", reqs)
    assert code == 1
    assert "R4 is nonfalsifiable" in out
    code, out, _ = run("goals", fixtures / "goals" / "model_b_r1.goals", "designate", "{g,o}", "--reqs", reqs)
    assert code == 0 and "complete observability: PASS" in out
    code, _, err = run("goals", fixtures / "goals" / "model_b.goals", "designate", "{o}", "--reqs", reqs)
    assert code == 2 and "not a happy set" in err


def test_goals_check_all(run, fixtures):
    reqs = fixtures / "reference_requirements.req"
    code, out, _ = run("goals", fixtures / "goals" / "model_b.goals", "check", "--reqs", reqs, "--format", "json")
    assert code == 1
    checks = json.loads(out)["checks"]
    assert [c["set"] for c in checks] == [["g"], ["g", "o"]]
    assert [c["observability"]["passed"] for c in checks] == [True, False]


def test_switch_flatten_then_equivalent(run, fixtures, tmp_path):
    sysfile = fixtures / "switching" / "two_modes.sys"
    flat = tmp_path / "flat.sys"
    code, _, _ = run("switch", sysfile, "flatten", "--out", flat)
    assert code == 0 and flat.read_text().startswith("vars e k\n")
    code, out, _ = run("switch", flat, "equivalent", sysfile)
    assert (code, out) == (0, "equivalent\n")
    code, out, _ = run("switch", fixtures / "switching" / "two_modes_flat_swapped.sys", "equivalent", sysfile)
    assert code == 1
    assert "counterexample: e k" in out


def test_switch_simulate(run, fixtures):
    code, out, _ = run("switch", fixtures / "switching" / "two_modes.sys", "simulate", fixtures / "switching" / "two_modes.env")
    assert code == 0
    assert out.splitlines() == ["0: e k -> S0", "1: e !k -> S1", "2: !e !k -> S3"]


def test_switch_criticality_and_validate(run, fixtures):
    code, out, _ = run("switch", fixtures / "switching" / "smart_home.sys", "criticality", "--format", "json")
    assert code == 0
    assert json.loads(out)["criticality"] == [["R_alarm", "CRITICAL"], ["R_fridge", "NONCRITICAL"]]
    code, out, _ = run("switch", fixtures / "switching" / "two_modes.sys", "validate")
    assert code == 0 and out.startswith("valid mode-switching system over e k")
    code, _, err = run("switch", fixtures / "switching" / "smart_home.sys", "flatten")
    assert code == 2 and "no switching system" in err


CASES = [
    ("classify", "reference_requirements.req"),
    ("monitor", "witnesses.req", "traces/witness_FIFO.trace"),
    ("monitor", "reference_requirements.req", "traces/r3_window.trace"),
    ("goals", "goals/model_a.goals", "variants"),
    ("goals", "goals/model_c.goals", "happy-sets"),
    ("goals", "goals/model_b.goals", "check", "--reqs", "reference_requirements.req"),
    ("switch", "switching/two_modes.sys", "validate"),
    ("switch", "switching/two_modes.sys", "flatten"),
    ("switch", "switching/two_modes_flat_swapped.sys", "equivalent", "switching/two_modes.sys"),
    ("switch", "switching/smart_home.sys", "criticality"),
]


def _resolve(case, fixtures):
    return [a if a.startswith("-") or a in {"classify", "monitor", "goals", "switch", "variants", "happy-sets", "check", "validate", "flatten", "equivalent", "criticality"} else fixtures / a for a in case]


@pytest.mark.parametrize("case", CASES, ids=lambda c: "-".join(c[:1] + c[-1:]))
def test_json_round_trips_to_text(run, fixtures, case):
    argv = _resolve(case, fixtures)
    code_t, text, _ = run(*argv)
    code_j, js, _ = run(*argv, "--format", "json")
    assert code_t == code_j
    assert render_text(json.loads(js)) == text


@pytest.mark.parametrize("case", CASES[:3], ids=lambda c: c[0] + "-" + c[1].split("/")[-1])
def test_output_is_deterministic(fixtures, case):
    argv = [sys.executable, "-m", "reqobs", *map(str, _resolve(case, fixtures))]
    runs = [subprocess.run(argv, capture_output=True) for _ in range(2)]
    assert runs[0].stdout == runs[1].stdout and runs[0].stdout


def test_format_flag_position(run, fixtures):
    a = run("--format", "json", "classify", fixtures / "r1.req")
    b = run("classify", fixtures / "r1.req", "--format", "json")
    assert a == b
