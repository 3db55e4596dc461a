"""Facts about runs and knowledge evaluated by literal indistinguishability.

Process ``i`` knows a fact at time ``m`` of run ``r`` (relative to a universe of
runs) iff the fact holds in every run of the universe in which ``i`` has the
same local state at time ``m`` as in ``r``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Union

from .analysis import chain_arrival, describe
from .kernel import COMMIT, LocalState, Run, local_state


class CrashedStateError(ValueError):
    """Knowledge is undefined at the ⊥ state."""


# ---------------------------------------------------------------------------
# facts


class Fact:
    def holds(self, run: Run) -> bool:
        raise NotImplementedError


@dataclass(frozen=True)
class All1(Fact):
    def holds(self, run):
        return all(v == 1 for v in run.initial_values)

    def __str__(self):
        return "all1"


@dataclass(frozen=True)
class ValueIs(Fact):
    j: int
    b: int = 1

    def holds(self, run):
        return run.initial_values[self.j] == self.b

    def __str__(self):
        return f"val {self.j} {self.b}"


@dataclass(frozen=True)
class IsFaulty(Fact):
    j: int

    def holds(self, run):
        return self.j in run.faulty

    def __str__(self):
        return f"faulty {self.j}"


@dataclass(frozen=True)
class ChainToCorrect(Fact):
    """Some process that never crashes is reached by a chain from ``(j, 0)``."""

    j: int

    def holds(self, run):
        reached = chain_arrival(run, self.j, 0)
        return any(a < float("inf") and h not in run.faulty for h, a in enumerate(reached))

    def __str__(self):
        return f"chaincorrect {self.j}"


@dataclass(frozen=True)
class Not(Fact):
    a: Fact

    def holds(self, run):
        return not self.a.holds(run)

    def __str__(self):
        return f"not({self.a})"


@dataclass(frozen=True)
class And(Fact):
    a: Fact
    b: Fact

    def holds(self, run):
        return self.a.holds(run) and self.b.holds(run)

    def __str__(self):
        return f"and({self.a}, {self.b})"


@dataclass(frozen=True)
class Or(Fact):
    a: Fact
    b: Fact

    def holds(self, run):
        return self.a.holds(run) or self.b.holds(run)

    def __str__(self):
        return f"or({self.a}, {self.b})"


def fact_eval(run: Run, fact: Fact) -> bool:
    return fact.holds(run)


_TOKEN = re.compile(r"\s*(\(|\)|,|[A-Za-z0-9_]+)")


def parse_fact(text: str) -> Fact:
    """Parse ``all1``, ``val j b``, ``faulty j``, ``chaincorrect j``,
    ``not(F)``, ``and(F, G)``, ``or(F, G)``."""
    tokens, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ValueError(f"bad fact syntax at {text[pos:]!r}")
        tokens.append(m.group(1))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    fact, rest = _parse(tokens)
    if rest:
        raise ValueError(f"trailing tokens in fact: {' '.join(rest)}")
    return fact


def _parse(tok: list[str]) -> tuple[Fact, list[str]]:
    if not tok:
        raise ValueError("empty fact")
    head, rest = tok[0].lower(), tok[1:]

    def num(ts):
        if not ts or not ts[0].isdigit():
            raise ValueError(f"expected a number after {head!r}")
        return int(ts[0]), ts[1:]

    def expect(ts, sym):
        if not ts or ts[0] != sym:
            raise ValueError(f"expected {sym!r} in fact")
        return ts[1:]

    if head == "all1":
        return All1(), rest
    if head == "val":
        j, rest = num(rest)
        b, rest = num(rest)
        return ValueIs(j, b), rest
    if head == "faulty":
        j, rest = num(rest)
        return IsFaulty(j), rest
    if head == "chaincorrect":
        j, rest = num(rest)
        return ChainToCorrect(j), rest
    if head == "not":
        a, rest = _parse(expect(rest, "("))
        return Not(a), expect(rest, ")")
    if head in ("and", "or"):
        a, rest = _parse(expect(rest, "("))
        b, rest = _parse(expect(rest, ","))
        return (And if head == "and" else Or)(a, b), expect(rest, ")")
    raise ValueError(f"unknown fact {head!r}")


# ---------------------------------------------------------------------------
# indistinguishability


def indistinguishable(run_a: Run, run_b: Run, i: int, m: int) -> bool:
    return local_state(run_a, i, m) == local_state(run_b, i, m)


BOTTOM = -1


class KnowledgeIndex:
    """Groups the runs of a universe by each process's local state at each time.

    States are interned incrementally, so equal ids mean equal local states.
    """

    def __init__(self, runs: list[Run]):
        self.runs = runs
        self.position = {r.key: k for k, r in enumerate(runs)}
        self.horizon = max((max(r.end_time, r.params.horizon) for r in runs), default=0)
        intern: dict = {}
        self.ids: list[list[list[int]]] = []
        self.groups: dict[tuple[int, int, int], list[int]] = {}
        for k, run in enumerate(runs):
            per_proc = []
            crash = run.crash_rounds
            for i in range(run.n):
                hist = run.histories[i]
                seq = [intern.setdefault(("init", run.initial_values[i]), len(intern))]
                for m in range(1, self.horizon + 1):
                    if i in crash and crash[i] <= m:
                        seq.append(BOTTOM)
                    elif m <= len(hist):
                        seq.append(intern.setdefault((seq[-1], hist[m - 1]), len(intern)))
                    else:
                        seq.append(seq[-1])
                per_proc.append(seq)
                for m, sid in enumerate(seq):
                    if sid != BOTTOM:
                        self.groups.setdefault((i, m, sid), []).append(k)
            self.ids.append(per_proc)
        self._value_masks: dict = {}

    def index_of(self, run: Run) -> int:
        try:
            return self.position[run.key]
        except KeyError:
            raise ValueError("run is not a member of this universe") from None

    def peers(self, k: int, i: int, m: int) -> list[int]:
        """Indices of runs indistinguishable from run ``k`` to ``i`` at ``m``."""
        sid = self.ids[k][i][m]
        if sid == BOTTOM:
            raise CrashedStateError(f"process {i} is crashed (state is ⊥) at time {m}")
        return self.groups[(i, m, sid)]

    def knows(self, k: int, i: int, m: int, fact: Fact) -> bool:
        return all(fact.holds(self.runs[p]) for p in self.peers(k, i, m))

    def known_ones(self, k: int, i: int, m: int) -> int:
        """Bitmask of the ``j`` for which ``i`` knows ``v_j = 1`` at ``m`` in run ``k``."""
        sid = self.ids[k][i][m]
        if sid == BOTTOM:
            raise CrashedStateError(f"process {i} is crashed (state is ⊥) at time {m}")
        key = (i, m, sid)
        mask = self._value_masks.get(key)
        if mask is None:
            mask = -1
            for p in self.groups[key]:
                mask &= sum(1 << j for j, v in enumerate(self.runs[p].initial_values) if v == 1)
            self._value_masks[key] = mask
        return mask


def index_for(universe) -> KnowledgeIndex:
    idx = getattr(universe, "_knowledge_index", None)
    if idx is None:
        idx = KnowledgeIndex(universe.runs if hasattr(universe, "runs") else list(universe))
        try:
            universe._knowledge_index = idx
        except AttributeError:
            pass
    return idx


@dataclass
class KnowledgeQuery:
    universe: object
    run: Run
    i: int
    m: int
    fact: Fact


def knows_detail(query: KnowledgeQuery) -> tuple[bool, int]:
    """``(K_i fact at m, number of indistinguishable runs scanned)``."""
    idx = index_for(query.universe)
    k = idx.index_of(query.run)
    peers = idx.peers(k, query.i, query.m)
    return all(query.fact.holds(idx.runs[p]) for p in peers), len(peers)


def knows(query: KnowledgeQuery) -> bool:
    return knows_detail(query)[0]


def knows_by_scan(runs: Iterable[Run], run: Run, i: int, m: int, fact: Fact) -> bool:
    """Reference evaluation straight from the definition, without any index."""
    mine = local_state(run, i, m)
    if mine.crashed:
        raise CrashedStateError(f"process {i} is crashed (state is ⊥) at time {m}")
    return all(fact.holds(r) for r in runs if local_state(r, i, m) == mine)


# ---------------------------------------------------------------------------
# epistemic suites


def check_commit_knowledge(universe) -> dict:
    """Every commit must be taken by a process that knows all values are 1."""
    idx = index_for(universe)
    report = {"commits": 0, "violations": 0, "witness": None}
    fact = All1()
    for k, run in enumerate(idx.runs):
        for i, d in run.decisions.items():
            if d.action != COMMIT:
                continue
            report["commits"] += 1
            if not idx.knows(k, i, d.time, fact):
                report["violations"] += 1
                if report["witness"] is None:
                    report["witness"] = (f"{describe(run)}: process {i} commits at time {d.time} "
                                         f"without knowing all1")
    report["ok"] = report["violations"] == 0
    return report


@dataclass
class LemmaInstance:
    """Silent-inference claim: if ``i`` gets no round-``round`` message from
    ``senders(i)`` then it knows ``fact`` (``|S| > f``) or knows
    ``fact or faulty j`` (``S = {j}``)."""

    label: str
    fact: Fact
    senders: Union[frozenset, Callable[[int], frozenset]]
    round: int

    def sender_set(self, i: int) -> frozenset:
        s = self.senders(i) if callable(self.senders) else self.senders
        return frozenset(s)


def check_lemma_suite(universe, instances: Iterable[LemmaInstance]) -> dict:
    idx = index_for(universe)
    f = universe.params.f
    out = {}
    for inst in instances:
        if inst.round < 1:
            raise ValueError(f"instance {inst.label}: round must be >= 1")
        rep = {"premise_hits": 0, "violations": 0, "witness": None, "plain_knowledge_fails": 0}
        for k, run in enumerate(idx.runs):
            for i in range(run.n):
                S = inst.sender_set(i)
                if not S:
                    raise ValueError(f"instance {inst.label}: empty sender set")
                if len(S) <= f and len(S) != 1:
                    raise ValueError(f"instance {inst.label}: need |S| > f or a single sender")
                st = local_state(run, i, inst.round)
                if st.crashed or len(st.history) < inst.round or st.history[inst.round - 1].halt:
                    continue
                if any(s in S for s, _ in st.received(inst.round)):
                    continue
                rep["premise_hits"] += 1
                if len(S) > f:
                    good = idx.knows(k, i, inst.round, inst.fact)
                else:
                    (j,) = S
                    good = idx.knows(k, i, inst.round, Or(inst.fact, IsFaulty(j)))
                    if not idx.knows(k, i, inst.round, inst.fact):
                        rep["plain_knowledge_fails"] += 1
                if not good:
                    rep["violations"] += 1
                    if rep["witness"] is None:
                        rep["witness"] = f"{describe(run)}: process {i} at time {inst.round}"
        rep["ok"] = rep["violations"] == 0
        out[inst.label] = rep
    return out


def default_lemma_instances(protocol_name: str, params) -> list[LemmaInstance]:
    """The silent broadcasts each protocol relies on."""
    n, f = params.n, params.f
    choir = frozenset(range(f + 1))
    if protocol_name == "stealth":
        return [
            LemmaInstance("stealth choir {0..f} silent in round 3", All1(), choir, 3),
            LemmaInstance("stealth single sender 1 silent in round 3", All1(), frozenset({1}), 3),
        ]
    if protocol_name in ("d2", "mutant-d2-small-choir"):
        size = f + 1 if protocol_name == "d2" else f
        out = [LemmaInstance("d2 everyone silent in round 2", All1(), frozenset(range(n)), 2)]
        for j in range(n):
            ring = frozenset((j + k) % n for k in range(size))
            if len(ring) > f:
                out.append(LemmaInstance(f"d2 receivers of v_{j} silent in round 2", ValueIs(j, 1), ring, 2))
        return out
    return []
