"""Message chains, silent-choir verdicts, message-count bounds and AC verdicts on runs."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Iterable, Optional

from .kernel import ABORT, COMMIT, Run


def chain_arrival(run: Run, i: int, m: int) -> list[float]:
    """Earliest time each process is reached by a message chain from ``(i, m)``.

    Unreached processes get ``inf``. Messages of round ``k`` are sent at time
    ``k-1`` and can extend a chain only from a process already reached by then.
    """
    inf = float("inf")
    reached = [inf] * run.n
    reached[i] = m
    for msg in sorted(run.messages):
        sent_at = msg.round - 1
        if reached[msg.sender] <= sent_at and sent_at + 1 < reached[msg.receiver]:
            reached[msg.receiver] = sent_at + 1
    return reached


def message_chain_exists(run: Run, src: tuple[int, int], dst: tuple[int, int]) -> bool:
    """Whether ``(i, m)`` reaches ``(i', m')`` by a message chain in ``run``."""
    (i, m), (j, mj) = src, dst
    if i == j:
        return m <= mj
    return chain_arrival(run, i, m)[j] <= mj


def reach_set(run: Run, j: int, t: int) -> set[int]:
    """Processes reached by a chain from ``(j, 0)`` by time ``t``."""
    if t < 0:
        return set()
    return {h for h, a in enumerate(chain_arrival(run, j, 0)) if a <= t}


@dataclass
class ChoirVerdict:
    chain_exists: bool
    reach_set: set
    faulty_set: set
    choir_size: int
    satisfies_theorem: bool

    def to_json(self) -> dict:
        d = asdict(self)
        d["reach_set"] = sorted(self.reach_set)
        d["faulty_set"] = sorted(self.faulty_set)
        d["choir"] = sorted(self.reach_set | self.faulty_set)
        return d


def silent_choir_check(run: Run, i: int, j: int, m: int) -> ChoirVerdict:
    """Either a chain carries ``v_j`` to ``(i, m)`` or a choir of more than f
    faulty-or-informed processes existed at time ``m-1``."""
    chain = message_chain_exists(run, (j, 0), (i, m))
    reach = reach_set(run, j, m - 1) if m > 0 else set()
    faulty = set(run.faulty)
    size = len(reach | faulty)
    return ChoirVerdict(chain, reach, faulty, size, chain or (m > 0 and size > run.params.f))


def rank_bound_check(run: Run, k: int) -> dict:
    """If every process has chains to at least ``k`` others, at least ``n+k-1`` messages were sent."""
    if k <= 0:
        raise ValueError("k must be positive")
    n = run.n
    applicable = all(
        sum(1 for h, a in enumerate(chain_arrival(run, j, 0)) if h != j and a < float("inf")) >= k
        for j in range(n)
    )
    count = len(run.messages)
    return {
        "applicable": applicable,
        "message_count": count,
        "bound": n + k - 1,
        "bound_holds": (count >= n + k - 1) if applicable else None,
    }


def max_applicable_rank(run: Run) -> int:
    """Largest k for which :func:`rank_bound_check` applies (0 if none)."""
    n = run.n
    return min(
        sum(1 for h, a in enumerate(chain_arrival(run, j, 0)) if h != j and a < float("inf"))
        for j in range(n)
    )


def metrics(run: Run) -> dict:
    return {
        "messages": len(run.messages),
        "decision_times": {i: d.time for i, d in run.decisions.items()},
        "mid_round": {i: d.mid_round for i, d in run.decisions.items()},
        "halt_times": dict(run.halt_times),
    }


def metrics_line(run: Run) -> str:
    m = metrics(run)
    dec = ",".join(str(m["decision_times"].get(i, "-")) for i in range(run.n))
    halt = ",".join(str(m["halt_times"].get(i, "-")) for i in range(run.n))
    return f"messages={m['messages']} decide={dec} halt={halt}"


# ---------------------------------------------------------------------------
# atomic commitment conditions


@dataclass
class Check:
    ok: bool = True
    witness: Optional[str] = None


@dataclass
class AcVerdict:
    agreement: Check = field(default_factory=Check)
    commit_validity: Check = field(default_factory=Check)
    abort_validity: Check = field(default_factory=Check)
    decision: Check = field(default_factory=Check)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks().values())

    def checks(self) -> dict[str, Check]:
        return {
            "agreement": self.agreement,
            "commit_validity": self.commit_validity,
            "abort_validity": self.abort_validity,
            "decision": self.decision,
        }

    def to_json(self) -> dict:
        return {k: asdict(v) for k, v in self.checks().items()}


def ac_verdict(run: Run) -> AcVerdict:
    v = AcVerdict()
    commits = [(i, d.time) for i, d in run.decisions.items() if d.action == COMMIT]
    aborts = [(i, d.time) for i, d in run.decisions.items() if d.action == ABORT]
    if commits and aborts:
        (c, tc), (a, ta) = commits[0], aborts[0]
        v.agreement = Check(False, f"process {c} commits at time {tc}, process {a} aborts at time {ta}")
    zeros = [j for j, x in enumerate(run.initial_values) if x == 0]
    if commits and zeros:
        c, tc = commits[0]
        v.commit_validity = Check(False, f"process {c} commits at time {tc} although v_{zeros[0]}=0")
    if aborts and not zeros and not run.failures:
        a, ta = aborts[0]
        v.abort_validity = Check(False, f"process {a} aborts at time {ta} in a nice run")
    undecided = [i for i in range(run.n) if i not in run.faulty and i not in run.decisions]
    if undecided:
        v.decision = Check(False, f"correct process {undecided[0]} undecided by time {run.end_time}")
    return v


def describe(run: Run) -> str:
    fails = "; ".join(
        f"{c.process} crashes in round {c.round} "
        + (f"delivering to {list(c.receivers)}" if c.prefix is None
           else f"after {c.prefix} sends{' and deciding' if c.decide_before_crash else ''}")
        for c in run.failures
    ) or "no failures"
    return f"{run.protocol} values={''.join(map(str, run.initial_values))} {fails}"


def ac_verdict_all(runs: Iterable[Run]) -> dict:
    """Violation counts per AC condition with the first witness of each."""
    report = {"runs": 0, "violations": {}, "witnesses": {}}
    counts = {k: 0 for k in AcVerdict().checks()}
    for run in runs:
        report["runs"] += 1
        for name, check in ac_verdict(run).checks().items():
            if not check.ok:
                counts[name] += 1
                report["witnesses"].setdefault(name, f"{describe(run)}: {check.witness}")
    report["violations"] = counts
    report["ok"] = not any(counts.values())
    return report
