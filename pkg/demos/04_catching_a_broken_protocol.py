"""Exhaustive checking against two deliberately broken protocols.

``mutant-commit0`` commits before hearing from anyone. ``mutant-d2-small-choir``
sends each ONE to f processes instead of f+1, so a single crash can hide a 0.
Both are caught, and each report names a concrete run as the witness.
"""

from silentsync import SystemParams, enumerate_runs
from silentsync.verify import run_suites

for name, n, f in [("stealth", 3, 1), ("mutant-commit0", 3, 1), ("mutant-d2-small-choir", 4, 2)]:
    report = run_suites(enumerate_runs(name, SystemParams(n, f)), ("ac", "knowledge"))
    print(f"{name} ({report['runs']} runs): {'ok' if report['ok'] else 'VIOLATIONS'}")
    ac = report["ac"]
    for cond, count in ac["violations"].items():
        if count:
            print(f"  {cond}: {count} runs, e.g. {ac['witnesses'][cond]}")
    ck = report["knowledge"]["commit_knowledge"]
    if ck["violations"]:
        print(f"  uninformed commits: {ck['violations']}, e.g. {ck['witness']}")
