"""Command-line interface.

Exit codes: 0 clean, 1 semantic failure (violation, failed gate, unequal
systems), 2 input error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .classification import classification_report
from .goals import (
    DesignationError,
    HappySet,
    check_designated,
    designate,
    happy_sets,
    parse_goal_model,
    set_key,
    variants,
)
from .language import ParseError, RequirementSet, parse_requirements
from .monitor import VIOLATED, judgment_from_dict, monitor_set
from .switching import (
    MachineSwitchingSystem,
    ModeSwitchingSystem,
    SwitchingError,
    controller_run,
    criticality,
    equivalent,
    flatten,
    format_system,
    format_valuation,
    parse_system,
    parse_valuations,
)
from .trace import load_trace

log = logging.getLogger("reqobs")


class InputError(Exception):
    pass


def _read(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None


def _parse(path, parser):
    text = _read(path)
    try:
        return parser(text)
    except ParseError as exc:
        loc = f"{exc.line}:{exc.column}:" if exc.line else ""
        raise InputError(f"{path}:{loc} {exc.message}") from None
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from None


# -- report builders ---------------------------------------------------------


def build_classify(args) -> dict:
    rs = _parse(args.reqfile, parse_requirements)
    return {"command": "classify", "requirements": classification_report(rs)}


def build_monitor(args) -> dict:
    rs = _parse(args.reqfile, parse_requirements)
    tr = _parse(args.tracefile, load_trace)
    reports = monitor_set(rs, tr)
    return {"command": "monitor", "reports": [reports[rid].to_dict() for rid in rs.ids]}


def _parse_leaf_set(text: str) -> frozenset:
    text = text.strip()
    if text.startswith("{") and text.endswith("}"):
        text = text[1:-1]
    return frozenset(x.strip() for x in text.split(",") if x.strip())


def _sorted_sets(sets) -> list[list[str]]:
    return [sorted(s) for s in sorted(sets, key=set_key)]


def build_goals(args) -> dict:
    model = _parse(args.modelfile, parse_goal_model)
    report = {"command": "goals", "action": args.action}
    try:
        if args.action == "variants":
            report["sets"] = _sorted_sets(variants(model))
            return report
        result = happy_sets(model)
    except (DesignationError, ValueError) as exc:
        raise InputError(f"{args.modelfile}: {exc}") from None
    if args.action == "happy-sets":
        report["sets"] = _sorted_sets(h.leaves for h in result.sets)
        report["diagnostic"] = result.diagnostic
        return report
    if args.reqs is None:
        raise InputError(f"goals {args.action} needs --reqs")
    rs = _parse(args.reqs, parse_requirements)
    if args.action == "designate":
        if not args.set:
            raise InputError("goals designate needs a set, e.g. '{g,o}'")
        h = HappySet(_parse_leaf_set(args.set))
        report.update(_designation(model, h, rs))
        return report
    # check: every happy set against the observability gate
    report["diagnostic"] = result.diagnostic
    report["checks"] = [_designation(model, h, rs) for h in result.sets]
    return report


def _designation(model, h: HappySet, rs: RequirementSet) -> dict:
    try:
        d = designate(model, h, rs)
    except DesignationError as exc:
        raise InputError(str(exc)) from None
    return {
        "set": sorted(h.leaves),
        "designated": list(d.requirements.ids),
        "observability": check_designated(d).to_dict(),
    }


def build_switch(args) -> dict:
    sf = _parse(args.sysfile, parse_system)
    report = {"command": "switch", "action": args.action}
    system = sf.system
    needs_system = args.action in ("flatten", "simulate", "equivalent")
    if needs_system and system is None:
        raise InputError(f"{args.sysfile}: no switching system defined")
    if args.action == "validate":
        if isinstance(system, ModeSwitchingSystem):
            kind = "mode-switching"
            unreachable = [[str(c), s] for c, s in flatten(system).unreachable]
        elif isinstance(system, MachineSwitchingSystem):
            kind = "machine-switching"
            unreachable = [[str(c), s] for c, s in system.unreachable]
        else:
            kind = "none"
            unreachable = []
        report.update(
            {
                "kind": kind,
                "vars": list(sf.vars),
                "machines": _machines(system),
                "unreachable": unreachable,
                "modes_reqs": sf.table is not None,
            }
        )
    elif args.action == "flatten":
        if not isinstance(system, ModeSwitchingSystem):
            raise InputError(f"{args.sysfile}: flatten needs a mode-switching system")
        report["system"] = format_system(flatten(system))
    elif args.action == "simulate":
        if not args.arg:
            raise InputError("switch simulate needs an environment trace file")
        vs = _parse(args.arg, lambda text: parse_valuations(text, system.vars))
        machines = controller_run(system, vs)
        report["steps"] = [
            {"valuation": format_valuation(v), "machine": m} for v, m in zip(vs, machines)
        ]
    elif args.action == "equivalent":
        if not args.arg:
            raise InputError("switch equivalent needs a second system file")
        other = _parse(args.arg, parse_system).system
        if other is None:
            raise InputError(f"{args.arg}: no switching system defined")
        try:
            eq = equivalent(system, other, system.vars)
        except (SwitchingError, ValueError) as exc:
            raise InputError(str(exc)) from None
        report.update(
            {
                "equal": eq.equal,
                "counterexample": format_valuation(eq.counterexample) if eq.counterexample else None,
                "left": eq.left,
                "right": eq.right,
            }
        )
    elif args.action == "criticality":
        if sf.table is None:
            raise InputError(f"{args.sysfile}: no modes-reqs table")
        report["criticality"] = [[rid, c] for rid, c in criticality(sf.table).items()]
    return report


def _machines(system) -> list[str]:
    if isinstance(system, MachineSwitchingSystem):
        return list(system.machines)
    if isinstance(system, ModeSwitchingSystem):
        return list(flatten(system).machines)
    return []


# -- exit codes and text rendering -------------------------------------------


def exit_code(report: dict) -> int:
    cmd = report["command"]
    if cmd == "monitor":
        return int(any(r.get("overall") == VIOLATED for r in report["reports"]))
    if cmd == "goals":
        if report["action"] == "designate":
            return int(not report["observability"]["passed"])
        if report["action"] == "check":
            return int(not all(c["observability"]["passed"] for c in report["checks"]))
    if cmd == "switch" and report["action"] == "equivalent":
        return int(not report["equal"])
    return 0


def _flag(b: bool) -> str:
    return "yes" if b else "no"


def _table(header, rows) -> list[str]:
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
    fmt = "  ".join("{:<%d}" % w for w in widths)
    return [fmt.format(*header).rstrip()] + [fmt.format(*map(str, r)).rstrip() for r in rows]


def _fmt_set(s) -> str:
    return "{" + ",".join(s) + "}"


def _render_judgment(d: dict) -> str:
    j = judgment_from_dict(d)
    kind = d["kind"]
    if kind == "InstanceSatisfied":
        return f"satisfied  key={j.key} trigger@{j.t_trigger} response@{j.t_response}"
    if kind == "Violated":
        return f"VIOLATED   @{j.t}: {j.witness}"
    if kind in ("WindowSatisfied", "WindowViolated"):
        label = "window ok " if kind == "WindowSatisfied" else "WINDOW VIOLATED"
        return f"{label} #{j.window} ratio={j.ratio} ({float(j.ratio):.3g}) {j.detail}".rstrip()
    where = f" window #{j.window}" if j.window is not None else ""
    return f"pending    key={j.key} trigger@{j.t_trigger}{where}"


def _render_observability(obs: dict) -> list[str]:
    lines = []
    for r in obs["requirements"]:
        lines.append(f"  {r['id']}: satisfiable={_flag(r['satisfiable'])} falsifiable={_flag(r['falsifiable'])}")
    if obs["passed"]:
        lines.append("  complete observability: PASS")
    else:
        lines.append("  complete observability: FAIL")
        for rid, reasons in obs["failures"].items():
            lines.append(f"    {rid} is {', '.join(reasons)}")
    return lines


def render_text(report: dict) -> str:
    cmd = report["command"]
    lines: list[str] = []
    if cmd == "classify":
        rows = [
            (r["id"], r["form"], _flag(r["satisfiable"]), _flag(r["falsifiable"]), _flag(r["vague"]), "; ".join(r["diagnostics"]))
            for r in report["requirements"]
        ]
        lines = _table(("id", "form", "satisfiable", "falsifiable", "vague", "diagnostics"), rows)
    elif cmd == "monitor":
        for r in report["reports"]:
            if "not_monitorable" in r:
                lines.append(f"{r['id']}: NOT MONITORABLE ({r['not_monitorable']})")
                continue
            lines.append(f"{r['id']}: {r['overall']}")
            lines.extend("  " + _render_judgment(j) for j in r["judgments"])
    elif cmd == "goals":
        action = report["action"]
        if action in ("variants", "happy-sets"):
            lines.append(f"{action}: {len(report['sets'])}")
            lines.extend("  " + _fmt_set(s) for s in report["sets"])
            if report.get("diagnostic"):
                lines.append(f"note: {report['diagnostic']}")
        elif action == "designate":
            lines.append(f"designated {_fmt_set(report['set'])} -> {_fmt_set(report['designated'])}")
            lines.extend(_render_observability(report["observability"]))
        else:
            if report.get("diagnostic"):
                lines.append(f"note: {report['diagnostic']}")
            for c in report["checks"]:
                lines.append(f"happy set {_fmt_set(c['set'])} -> {_fmt_set(c['designated'])}")
                lines.extend(_render_observability(c["observability"]))
    elif cmd == "switch":
        action = report["action"]
        if action == "validate":
            lines.append(f"valid {report['kind']} system over {' '.join(report['vars'])}")
            lines.append(f"machines: {' '.join(report['machines'])}")
            for c, s in report["unreachable"]:
                lines.append(f"unreachable: {c} {s}")
            if report["modes_reqs"]:
                lines.append("modes-reqs table present")
        elif action == "flatten":
            return report["system"]
        elif action == "simulate":
            for i, step in enumerate(report["steps"]):
                lines.append(f"{i}: {step['valuation']} -> {step['machine'] or 'null'}")
        elif action == "equivalent":
            if report["equal"]:
                lines.append("equivalent")
            else:
                lines.append("NOT equivalent")
                lines.append(f"counterexample: {report['counterexample']}")
                lines.append(f"  left runs {report['left'] or 'null'}, right runs {report['right'] or 'null'}")
        elif action == "criticality":
            lines = _table(("requirement", "status"), report["criticality"])
    return "\n".join(lines) + "\n"


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    return render_text(report)


# -- argument parsing --------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default=argparse.SUPPRESS)
    common.add_argument("--out", metavar="PATH", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="reqobs", description="Requirements observability toolkit.", parents=[common])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", parents=[common], help="satisfiability/falsifiability table")
    c.add_argument("reqfile")
    c.set_defaults(build=build_classify)

    m = sub.add_parser("monitor", parents=[common], help="check requirements against a trace")
    m.add_argument("reqfile")
    m.add_argument("tracefile")
    m.set_defaults(build=build_monitor)

    g = sub.add_parser("goals", parents=[common], help="goal-model analysis")
    g.add_argument("modelfile")
    g.add_argument("action", choices=("variants", "happy-sets", "designate", "check"))
    g.add_argument("set", nargs="?", help="leaf set for designate, e.g. '{g,o}'")
    g.add_argument("--reqs", metavar="REQFILE")
    g.set_defaults(build=build_goals)

    s = sub.add_parser("switch", parents=[common], help="machine/mode switching systems")
    s.add_argument("sysfile")
    s.add_argument("action", choices=("validate", "flatten", "simulate", "equivalent", "criticality"))
    s.add_argument("arg", nargs="?", help="environment trace (simulate) or second system (equivalent)")
    s.set_defaults(build=build_switch)
    return p


def main(argv=None) -> int:
    logging.basicConfig(format="%(levelname)s: %(message)s", level=logging.WARNING)
    args = make_parser().parse_args(argv)
    fmt = getattr(args, "format", "text")
    out = getattr(args, "out", None)
    try:
        report = args.build(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = render(report, fmt)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
