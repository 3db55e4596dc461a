"""Command-line front end.

Exit codes: 0 success, 1 property violation, 2 usage or configuration error,
3 internal kernel fault, 4 run budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analysis, diagram
from .kernel import (
    ConfigurationError, Context, Crash, InvalidFailureSpec, KernelFault, SystemParams,
    dumps_run, execute, resolve, run_from_json,
)
from .knowledge import CrashedStateError, KnowledgeQuery, knows_detail, parse_fact
from .universe import DEFAULT_BUDGET, BudgetExceeded, enumerate_runs, find_run, spill
from .verify import SUITES, consensus_suite, run_suites

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_FAULT, EXIT_BUDGET = 0, 1, 2, 3, 4


class UsageError(ValueError):
    pass


def parse_fail(text: str, n: int, context: Context) -> Crash:
    """``p:round:mask``; mask is a length-n receiver bitstring (gamma_f) or
    a prefix length with optional ``+d`` (gamma_tilde_f)."""
    try:
        p, rnd, mask = text.split(":")
        p, rnd = int(p), int(rnd)
    except ValueError:
        raise UsageError(f"bad --fail {text!r}; expected p:round:mask") from None
    if context is Context.GAMMA_F:
        if len(mask) != n or set(mask) - {"0", "1"}:
            raise UsageError(f"bad --fail mask {mask!r}; expected a bitstring of length {n}")
        return Crash(p, rnd, tuple(k for k, b in enumerate(mask) if b == "1" and k != p))
    decide = mask.endswith("+d")
    digits = mask[:-2] if decide else mask
    if not digits.isdigit():
        raise UsageError(f"bad --fail prefix {mask!r}; expected <k> or <k>+d")
    return Crash(p, rnd, (), int(digits), decide)


def parse_values(text: str, n: int) -> tuple[int, ...]:
    if len(text) != n or set(text) - {"0", "1"}:
        raise UsageError(f"--values must be a bitstring of length {n}")
    return tuple(int(c) for c in text)


def _ints(text: str, count: int, flag: str) -> list[int]:
    try:
        vals = [int(x) for x in text.split(",")]
    except ValueError:
        raise UsageError(f"{flag} expects {count} comma-separated integers") from None
    if len(vals) != count:
        raise UsageError(f"{flag} expects {count} comma-separated integers")
    return vals


def _params(args) -> SystemParams:
    return SystemParams(args.n, args.f, Context(args.context), args.horizon)


def _emit(args, payload, text: str):
    print(json.dumps(payload, indent=1, sort_keys=True, default=_jsonable) if args.json else text)


def _jsonable(o):
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    return str(o)


def _load_trace(path: str):
    try:
        return run_from_json(Path(path).read_text())
    except OSError as e:
        raise UsageError(f"cannot read trace {path}: {e}") from e
    except (ValueError, KeyError) as e:
        raise UsageError(f"malformed trace {path}: {e}") from e


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args) -> int:
    params = _params(args)
    values = parse_values(args.values, args.n)
    fails = tuple(parse_fail(x, args.n, params.context) for x in args.fail)
    run = execute(args.protocol, values, fails, params)
    if args.out:
        Path(args.out).write_text(dumps_run(run))
    line = analysis.metrics_line(run)
    _emit(args, analysis.metrics(run), line)
    return EXIT_OK


def cmd_enumerate(args) -> int:
    universe = enumerate_runs(args.protocol, _params(args), budget=args.budget)
    count = spill(universe, args.spill) if args.spill else universe.cardinality
    _emit(args, {"protocol": args.protocol, "runs": count}, f"runs={count}")
    return EXIT_OK


def cmd_verify(args) -> int:
    suites = set()
    for s in args.suite or ["all"]:
        suites.update(x.strip() for x in s.split(","))
    unknown = suites - set(SUITES) - {"all", "consensus"}
    if unknown:
        raise UsageError(f"unknown suite(s) {sorted(unknown)}")
    if "consensus" in suites:
        if not args.protocol.startswith("b1consensus-"):
            raise UsageError("the consensus suite needs --protocol b1consensus-<t>")
        report = consensus_suite(int(args.protocol.split("-", 1)[1]), args.n)
    else:
        universe = enumerate_runs(args.protocol, _params(args), budget=args.budget)
        report = run_suites(universe, tuple(suites))
    _emit(args, report, _verify_text(report))
    return EXIT_OK if report["ok"] else EXIT_VIOLATION


def _verify_text(report: dict) -> str:
    lines = [f"protocol={report.get('protocol', 'b1consensus')} runs={report['runs']}"]
    for name in (*SUITES,):
        if name not in report:
            continue
        r = report[name]
        lines.append(f"[{'PASS' if r['ok'] else 'FAIL'}] {name}: {_summary(name, r)}")
    if "violations" in report and "ac" not in report:
        lines.append(f"[{'PASS' if report['ok'] else 'FAIL'}] consensus: {report['violations']}")
        for k, w in report["witnesses"].items():
            lines.append(f"    {k}: {w}")
    return "\n".join(lines)


def _summary(name: str, r: dict) -> str:
    if name == "ac":
        text = ", ".join(f"{k}={v}" for k, v in r["violations"].items())
        return text + "".join(f"\n    {k}: {w}" for k, w in r["witnesses"].items())
    if name == "knowledge":
        c = r["commit_knowledge"]
        text = f"commits={c['commits']} uninformed_commits={c['violations']}"
        if c["witness"]:
            text += f"\n    witness: {c['witness']}"
        for label, inst in r["silent_inference"].items():
            text += f"\n    {label}: hits={inst['premise_hits']} violations={inst['violations']}"
            if inst["witness"]:
                text += f" witness: {inst['witness']}"
        return text
    if name == "choir":
        text = f"silent_cases={r['silent_cases']} violations={r['violations']}"
    else:
        text = f"checks={r['checks']} violations={r['violations']}"
    return text + (f"\n    witness: {r['witness']}" if r["witness"] else "")


def cmd_analyze(args) -> int:
    run = _load_trace(args.trace)
    if args.choir:
        i, j, m = _ints(args.choir, 3, "--choir")
        out = analysis.silent_choir_check(run, i, j, m).to_json()
    elif args.chain:
        i, mi, j, mj = _ints(args.chain, 4, "--chain")
        out = {"chain_exists": analysis.message_chain_exists(run, (i, mi), (j, mj))}
    elif args.rank is not None:
        out = analysis.rank_bound_check(run, args.rank)
    elif args.ac:
        out = analysis.ac_verdict(run).to_json()
    else:
        out = analysis.metrics(run)
    print(json.dumps(out, sort_keys=True, default=_jsonable))
    return EXIT_OK


def cmd_knowledge(args) -> int:
    params = _params(args)
    values = parse_values(args.values, args.n)
    fails = tuple(parse_fail(x, args.n, params.context) for x in args.fail)
    fact = parse_fact(args.fact)
    universe = enumerate_runs(args.protocol, params, budget=args.budget)
    run = find_run(universe, values, fails)
    if run is None:
        raise UsageError("the requested run is not in the universe")
    try:
        answer, scanned = knows_detail(KnowledgeQuery(universe, run, args.i, args.m, fact))
    except CrashedStateError:
        print(f"error: state is ⊥ (process {args.i} has crashed by time {args.m})", file=sys.stderr)
        return EXIT_USAGE
    _emit(args, {"knows": answer, "indistinguishable_runs": scanned, "fact": str(fact)},
          f"{str(answer).lower()} (scanned {scanned} indistinguishable runs)")
    return EXIT_OK


def cmd_diagram(args) -> int:
    print(diagram.render(_load_trace(args.trace)))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def read_config(path: str) -> dict:
    """Flat ``key=value`` lines; keys are flag names without dashes."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        k, v = (x.strip() for x in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _system_args(p: argparse.ArgumentParser, with_budget=True):
    p.add_argument("--protocol", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--f", type=int, required=True)
    p.add_argument("--context", choices=[c.value for c in Context], default=None)
    p.add_argument("--horizon", type=int, default=None)
    if with_budget:
        p.add_argument("--budget", type=int, default=DEFAULT_BUDGET)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="silentsync", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="key=value file supplying defaults for flags")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="execute one run and write its trace")
    _system_args(p, with_budget=False)
    p.add_argument("--values", required=True)
    p.add_argument("--fail", action="append", default=[], metavar="P:ROUND:MASK")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("enumerate", help="count (or spill) the bounded run universe")
    _system_args(p)
    p.add_argument("--spill", metavar="DIR")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("verify", help="run property suites over the run universe")
    _system_args(p)
    p.add_argument("--suite", action="append", help="ac|knowledge|choir|lemma4|consensus|all")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("analyze", help="analyze a trace file")
    p.add_argument("--trace", required=True)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--choir", metavar="I,J,M")
    g.add_argument("--chain", metavar="I,MI,J,MJ")
    g.add_argument("--rank", type=int, metavar="K")
    g.add_argument("--metrics", action="store_true")
    g.add_argument("--ac", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("knowledge", help="does process i know a fact at time m?")
    _system_args(p)
    p.add_argument("--values", required=True)
    p.add_argument("--fail", action="append", default=[], metavar="P:ROUND:MASK")
    p.add_argument("--i", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--fact", required=True)
    p.set_defaults(func=cmd_knowledge)

    p = sub.add_parser("diagram", help="draw a trace as an ASCII round diagram")
    p.add_argument("--trace", required=True)
    p.set_defaults(func=cmd_diagram)
    return parser


def _apply_config(argv: list[str]) -> list[str]:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return argv
    extra = []
    present = {a.split("=", 1)[0] for a in argv if a.startswith("--")}
    for k, v in read_config(known.config).items():
        flag = "--" + k
        if flag in present:
            continue
        if v.lower() in ("true", "yes") and k == "json":
            extra.insert(0, flag)
        elif k == "json":
            continue
        else:
            extra += [flag, v]
    # global flags must precede the subcommand
    globals_ = [a for a in extra[:1] if a == "--json"]
    return globals_ + argv + [a for a in extra if a not in globals_]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _apply_config(argv)
    except (OSError, UsageError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    if getattr(args, "context", "unset") is None:
        args.context = "gamma_tilde_f" if args.protocol == "d15" else "gamma_f"
    try:
        return args.func(args)
    except BudgetExceeded as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except KernelFault as e:
        print(f"internal fault: {e}", file=sys.stderr)
        return EXIT_FAULT
    except (ConfigurationError, InvalidFailureSpec, UsageError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
