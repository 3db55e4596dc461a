"""Property suites run over whole run universes."""

from __future__ import annotations

import itertools
from typing import Optional

from .analysis import ac_verdict_all, chain_arrival, describe, max_applicable_rank, silent_choir_check
from .kernel import COMMIT, SystemParams, execute
from .knowledge import ValueIs, check_commit_knowledge, check_lemma_suite, default_lemma_instances, index_for
from .universe import RunUniverse, enumerate_runs

SUITES = ("ac", "knowledge", "choir", "lemma4")


def choir_suite(universe) -> dict:
    """Whenever ``i`` knows ``v_j = 1`` at ``m`` without a chain from ``(j, 0)``,
    the faulty processes plus those reached from ``j`` by ``m-1`` outnumber f."""
    idx = index_for(universe)
    f = universe.params.f
    rep = {"silent_cases": 0, "violations": 0, "witness": None}
    inf = float("inf")
    for k, run in enumerate(idx.runs):
        arrivals = [chain_arrival(run, j, 0) for j in range(run.n)]
        faulty = run.faulty
        for i in range(run.n):
            for m in range(idx.horizon + 1):
                if idx.ids[k][i][m] < 0:
                    break
                known = idx.known_ones(k, i, m)
                for j in range(run.n):
                    if not known >> j & 1 or j == i or arrivals[j][i] <= m:
                        continue
                    rep["silent_cases"] += 1
                    choir = {h for h, a in enumerate(arrivals[j]) if a <= m - 1} | faulty
                    if not (m > 0 and len(choir) > f):
                        rep["violations"] += 1
                        if rep["witness"] is None:
                            rep["witness"] = (f"{describe(run)}: process {i} knows v_{j}=1 at time {m} "
                                              f"with choir {sorted(choir)}")
    rep["ok"] = rep["violations"] == 0
    return rep


def lemma4_suite(universe) -> dict:
    """In every run, chains from each process to k others force n+k-1 messages."""
    rep = {"runs": 0, "checks": 0, "violations": 0, "witness": None}
    for run in universe:
        rep["runs"] += 1
        n = run.n
        for k in range(1, min(max_applicable_rank(run), n - 1) + 1):
            rep["checks"] += 1
            if len(run.messages) < n + k - 1:
                rep["violations"] += 1
                if rep["witness"] is None:
                    rep["witness"] = f"{describe(run)}: k={k} but only {len(run.messages)} messages"
    rep["ok"] = rep["violations"] == 0
    return rep


def knowledge_suite(universe) -> dict:
    commit = check_commit_knowledge(universe)
    lemmas = check_lemma_suite(universe, default_lemma_instances(universe.protocol.name, universe.params))
    return {"commit_knowledge": commit, "silent_inference": lemmas,
            "ok": commit["ok"] and all(v["ok"] for v in lemmas.values())}


def run_suites(universe: RunUniverse, suites=SUITES) -> dict:
    """Run the selected suites; ``ok`` is true iff none found a violation."""
    if "all" in suites:
        suites = SUITES
    report = {"protocol": universe.protocol.name, "params": universe.params.to_json(),
              "runs": universe.cardinality}
    if "ac" in suites:
        report["ac"] = ac_verdict_all(universe)
    if "knowledge" in suites:
        report["knowledge"] = knowledge_suite(universe)
    if "choir" in suites:
        report["choir"] = choir_suite(universe)
    if "lemma4" in suites:
        report["lemma4"] = lemma4_suite(universe)
    report["ok"] = all(report[s]["ok"] for s in SUITES if s in report)
    return report


def silence_witness(universe) -> Optional[dict]:
    """In the nice run, a commit that relies on knowledge carried by no message chain.

    Without silence every process would need chains to all n-1 others, which
    costs at least 2n-2 messages.
    """
    n = universe.params.n
    nice = execute(universe.protocol, [1] * n, (), universe.params)
    idx = index_for(universe)
    k = idx.index_of(nice)
    for i, d in sorted(nice.decisions.items()):
        if d.action != COMMIT:
            continue
        for j in range(n):
            if j != i and idx.knows(k, i, d.time, ValueIs(j, 1)):
                verdict = silent_choir_check(nice, i, j, d.time)
                if not verdict.chain_exists:
                    return {
                        "i": i, "j": j, "m": d.time,
                        "verdict": verdict.to_json(),
                        "messages": len(nice.messages),
                        "no_silence_lower_bound": 2 * n - 2,
                    }
    return None


def consensus_suite(tolerance: int, n: int) -> dict:
    """Validity, uniform agreement, decision by sub-round t+1 and bias to 1."""
    params = SystemParams(n, max(tolerance, 1))
    universe = enumerate_runs(f"b1consensus-{tolerance}", params, max_crashes=tolerance)
    rep = {"tolerance": tolerance, "n": n, "runs": 0, "violations": {}, "witnesses": {}}
    counts = dict.fromkeys(("validity", "agreement", "decision", "biased_to_1"), 0)

    def bad(name, run, why):
        counts[name] += 1
        rep["witnesses"].setdefault(name, f"{describe(run)}: {why}")

    for run in universe:
        rep["runs"] += 1
        decided = {i: int(d.action == COMMIT) for i, d in run.decisions.items()}
        for i, v in decided.items():
            if v not in run.initial_values:
                bad("validity", run, f"process {i} decides {v}, proposed by nobody")
        if len(set(decided.values())) > 1:
            bad("agreement", run, f"decisions {decided}")
        for i in range(n):
            if i in run.faulty:
                continue
            d = run.decisions.get(i)
            if d is None or d.time > tolerance + 1:
                bad("decision", run, f"process {i} undecided at time {tolerance + 1}")
        if any(run.initial_values[i] == 1 and i not in run.faulty for i in range(n)):
            if any(v == 0 for v in decided.values()):
                bad("biased_to_1", run, "a correct process proposed 1 but 0 was decided")
    rep["violations"] = counts
    rep["ok"] = not any(counts.values())
    return rep


def delivery_oracle_runs(n: int = 3, tolerance: int = 1):
    """Brute-force every delivery subset for the lone '1' proposer crashing in sub-round 1."""
    from .kernel import Crash

    params = SystemParams(n, max(tolerance, 1))
    others = [r for r in range(n) if r != 0]
    out = []
    for size in range(len(others) + 1):
        for receivers in itertools.combinations(others, size):
            values = [1] + [0] * (n - 1)
            out.append(execute(f"b1consensus-{tolerance}", values, (Crash(0, 1, receivers),), params))
    return out
