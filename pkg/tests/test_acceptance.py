"""Acceptance criteria 1 to 11, each reported as one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v`` or ``python tests/test_acceptance.py``;
the lines are collected and printed in the terminal summary.
"""

import functools
import sys
import time

import pytest

from silentsync import COMMIT, SystemParams, check_commit_knowledge, enumerate_runs, execute
from silentsync.analysis import ac_verdict_all
from silentsync.kernel import Context
from silentsync.verify import choir_suite, consensus_suite, lemma4_suite, run_suites, silence_witness

from conftest import ACCEPTANCE_LINES

UNIVERSES = [
    ("stealth", 3, 1, Context.GAMMA_F),
    ("stealth", 4, 2, Context.GAMMA_F),
    ("d2", 4, 2, Context.GAMMA_F),
    ("d1f1", 3, 1, Context.GAMMA_F),
    ("d15", 3, 2, Context.GAMMA_TILDE_F),
]
BUDGET = 10 ** 7


def report(number: int, ok: bool, detail: str):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {detail}"
    ACCEPTANCE_LINES.append(line)
    assert ok, line


@functools.lru_cache(maxsize=None)
def universe(name, n, f, context):
    u = enumerate_runs(name, SystemParams(n, f, context), budget=BUDGET)
    u.runs
    return u


def nice(name, n, f, context=Context.GAMMA_F):
    start = time.perf_counter()
    run = execute(name, [1] * n, (), SystemParams(n, f, context))
    return run, time.perf_counter() - start


def label(u):
    return f"{u.protocol.name}({u.params.n},{u.params.f})"


def test_criterion_01_stealth_nice_counts():
    rows, ok = [], True
    for n, f in [(3, 1), (5, 2), (7, 3)]:
        run, secs = nice("stealth", n, f)
        good = (len(run.messages) == n + f - 1
                and all(run.decisions.get(i) == (COMMIT, 3, False) for i in range(n))
                and max(run.halt_times.values()) <= 4 and len(run.halt_times) == n and secs < 1)
        ok &= good
        rows.append(f"n={n},f={f}: M={len(run.messages)} (want {n + f - 1})")
    report(1, ok, "STEALTH nice runs; " + "; ".join(rows))


def test_criterion_02_d2_nice_counts():
    rows, ok = [], True
    for n, f in [(4, 2), (5, 2), (6, 3)]:
        run, secs = nice("d2", n, f)
        good = (len(run.messages) == f * n
                and all(run.decisions.get(i) == (COMMIT, 2, False) for i in range(n))
                and set(run.halt_times.values()) == {3} and len(run.halt_times) == n and secs < 1)
        ok &= good
        rows.append(f"n={n},f={f}: M={len(run.messages)} (want {f * n})")
    report(2, ok, "D2 nice runs; " + "; ".join(rows))


def test_criterion_03_d1f1_nice_counts():
    rows, ok = [], True
    for n in (3, 4, 5):
        run, secs = nice("d1f1", n, 1)
        good = (len(run.messages) == n * n - n
                and all(run.decisions.get(i) == (COMMIT, 1, False) for i in range(n)) and secs < 1)
        ok &= good
        rows.append(f"n={n}: M={len(run.messages)} (want {n * n - n})")
    report(3, ok, "D1f1 nice runs; " + "; ".join(rows))


def test_criterion_04_d15_nice_counts():
    rows, ok = [], True
    for n, f in [(3, 2), (4, 2)]:
        run, secs = nice("d15", n, f, Context.GAMMA_TILDE_F)
        want = n * n + n * f - n
        good = (len(run.messages) == want
                and all(run.decisions.get(i) == (COMMIT, 1, True) for i in range(n)) and secs < 1)
        ok &= good
        rows.append(f"n={n},f={f}: M={len(run.messages)} (want {want})")
    report(4, ok, "1.5D nice runs, mid-round commit at time 1; " + "; ".join(rows))


def test_criterion_05_exhaustive_ac():
    rows, ok = [], True
    for spec in UNIVERSES:
        start = time.perf_counter()
        u = universe(*spec)
        rep = ac_verdict_all(u)
        secs = time.perf_counter() - start
        ok &= rep["ok"] and u.cardinality <= BUDGET and secs < 600
        bad = sum(rep["violations"].values())
        rows.append(f"{label(u)}: {u.cardinality} runs, {bad} violations, {secs:.1f}s")
    report(5, ok, "AC over full universes; " + "; ".join(rows))


def test_criterion_06_commit_knowledge():
    rows, ok = [], True
    for spec in UNIVERSES:
        u = universe(*spec)
        rep = check_commit_knowledge(u)
        ok &= rep["ok"] and rep["commits"] > 0
        rows.append(f"{label(u)}: {rep['commits']} commits, {rep['violations']} uninformed")
    report(6, ok, "every commit knows all1; " + "; ".join(rows))


def test_criterion_07_silent_choir():
    rows, ok = [], True
    for spec in UNIVERSES:
        u = universe(*spec)
        rep = choir_suite(u)
        ok &= rep["ok"]
        rows.append(f"{label(u)}: {rep['silent_cases']} chainless cases, {rep['violations']} violations")
    report(7, ok, "silent choir condition; " + "; ".join(rows))


def test_criterion_08_rank_bound():
    rows, ok = [], True
    for spec in UNIVERSES:
        u = universe(*spec)
        rep = lemma4_suite(u)
        ok &= rep["ok"]
        rows.append(f"{label(u)}: {rep['checks']} checks, {rep['violations']} violations")
    report(8, ok, "M >= n+k-1 whenever rank k applies; " + "; ".join(rows))


def test_criterion_09_silence_witness():
    u = universe("stealth", 3, 1, Context.GAMMA_F)
    w = silence_witness(u)
    ok = (w is not None and w["verdict"]["chain_exists"] is False
          and w["messages"] < w["no_silence_lower_bound"])
    detail = "no witness found" if w is None else (
        f"process {w['i']} knows v_{w['j']}=1 at time {w['m']} with no chain, "
        f"choir {w['verdict']['choir']}; {w['messages']} messages < 2n-2 = {w['no_silence_lower_bound']}")
    report(9, ok, detail)


def test_criterion_10_consensus():
    rows, ok = [], True
    start = time.perf_counter()
    for t in (0, 1):
        for n in (3, 4):
            rep = consensus_suite(t, n)
            ok &= rep["ok"]
            rows.append(f"t={t},n={n}: {rep['runs']} runs, {sum(rep['violations'].values())} violations")
    secs = time.perf_counter() - start
    ok &= secs < 60
    report(10, ok, f"B.1 consensus in {secs:.1f}s; " + "; ".join(rows))


def test_criterion_11_mutants_detected():
    commit0 = run_suites(universe("mutant-commit0", 3, 1, Context.GAMMA_F), ("all",))
    small = run_suites(universe("mutant-d2-small-choir", 4, 2, Context.GAMMA_F), ("ac", "knowledge"))

    def failing(rep):
        return [s for s in ("ac", "knowledge", "choir", "lemma4") if s in rep and not rep[s]["ok"]]

    ok = bool(failing(commit0)) and bool(failing(small))
    report(11, ok, f"commit-at-0 fails {failing(commit0)}; small-choir D2 fails {failing(small)}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
