"""Exhaustive enumeration of all runs of a protocol under a bounded adversary.

Runs are produced depth-first, branching lazily during execution: at each
round every live process that is not yet faulty may crash (while fewer than
``max_crashes`` processes have), delivering any subset of the messages it was
about to send (``GAMMA_F``) or any prefix of them (``GAMMA_TILDE_F``). Only
sends the protocol actually prescribes at that point are branched on, so every
run is produced exactly once.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional

from .kernel import (
    Context, Crash, FailureSpec, Frame, Run, StepOutput, SystemParams,
    advance, boundary, execute, finish, network_sends, resolve, run_key, validate_failure_spec,
)

DEFAULT_BUDGET = 10**7


class BudgetExceeded(RuntimeError):
    """More runs than the configured budget; ``branch`` names the first run not counted."""

    def __init__(self, budget: int, branch: str):
        super().__init__(f"run budget {budget} exceeded at branch {branch}")
        self.budget = budget
        self.branch = branch


@dataclass(frozen=True)
class BranchPoint:
    round: int
    process: int
    choices: tuple[Optional[Crash], ...]


def crash_options(i: int, rnd: int, plan: StepOutput, context: Context) -> list[Crash]:
    """All distinct ways for ``i`` to crash in round ``rnd`` given its plan."""
    sends = network_sends(i, plan)
    receivers = [r for r, _ in sends]
    if context is Context.GAMMA_F:
        out = []
        for mask in range(1 << len(receivers)):
            out.append(Crash(i, rnd, tuple(r for b, r in enumerate(receivers) if mask >> b & 1)))
        return out
    out = [Crash(i, rnd, (), k) for k in range(len(sends) + 1)]
    if plan.mid_round_decision is not None:
        out.append(Crash(i, rnd, (), len(sends), True))
    return out


def branch_points(frame: Frame, plans: dict[int, StepOutput], context: Context) -> list[BranchPoint]:
    rnd = frame.t + 1
    return [BranchPoint(rnd, i, (None, *crash_options(i, rnd, plans[i], context))) for i in sorted(plans)]


def _round_choices(points: list[BranchPoint], budget: int) -> Iterator[dict[int, Crash]]:
    """Product over processes (ascending) of {no crash} + crash options, capped at ``budget`` crashes."""

    def rec(k: int, left: int, acc: dict):
        if k == len(points):
            yield dict(acc)
            return
        for c in points[k].choices:
            if c is None:
                yield from rec(k + 1, left, acc)
            elif left > 0:
                acc[c.process] = c
                yield from rec(k + 1, left - 1, acc)
                del acc[c.process]

    yield from rec(0, budget, {})


def value_vectors(n: int) -> Iterator[tuple[int, ...]]:
    """All bit vectors of length n in binary order (process 0 is the most significant bit)."""
    return itertools.product((0, 1), repeat=n)


def iter_runs(protocol, params: SystemParams, values_filter: Optional[Callable] = None,
              max_crashes: Optional[int] = None) -> Iterator[Run]:
    protocol, params = resolve(protocol, params)
    limit = params.f if max_crashes is None else min(max_crashes, params.f)
    for values in value_vectors(params.n):
        if values_filter is not None and not values_filter(values):
            continue
        yield from _explore(protocol, params, Frame(values), limit)


def _explore(protocol, params, frame: Frame, left: int) -> Iterator[Run]:
    plans = boundary(protocol, params, frame)
    if frame.t >= params.horizon or not plans:
        yield finish(protocol.name, params, frame)
        return
    if left == 0:
        yield from _explore(protocol, params, advance(frame, plans, {}, params.context), 0)
        return
    points = branch_points(frame, plans, params.context)
    for crashes in _round_choices(points, left):
        child = advance(frame, plans, crashes, params.context)
        yield from _explore(protocol, params, child, left - len(crashes))


@dataclass
class RunUniverse:
    """The bounded set of all runs of one protocol in one context.

    Runs are generated lazily; ``runs`` materializes and caches them.
    """

    protocol: object
    params: SystemParams
    values_filter: Optional[Callable] = None
    max_crashes: Optional[int] = None
    budget: int = DEFAULT_BUDGET
    _runs: Optional[list[Run]] = field(default=None, repr=False)
    _by_key: Optional[dict] = field(default=None, repr=False)

    def __post_init__(self):
        self.protocol, self.params = resolve(self.protocol, self.params)

    def __iter__(self) -> Iterator[Run]:
        if self._runs is not None:
            yield from self._runs
            return
        count = 0
        for run in iter_runs(self.protocol, self.params, self.values_filter, self.max_crashes):
            if count >= self.budget:
                raise BudgetExceeded(self.budget, describe_branch(run))
            count += 1
            yield run

    @property
    def runs(self) -> list[Run]:
        if self._runs is None:
            self._runs = list(iter(self))
        return self._runs

    @property
    def cardinality(self) -> int:
        if self._runs is not None:
            return len(self._runs)
        return sum(1 for _ in self)

    def __len__(self):
        return self.cardinality

    def lookup(self) -> dict:
        if self._by_key is None:
            self._by_key = {r.key: r for r in self.runs}
        return self._by_key


def enumerate_runs(protocol, params: SystemParams, values_filter: Optional[Callable] = None,
                   max_crashes: Optional[int] = None, budget: int = DEFAULT_BUDGET) -> RunUniverse:
    """Build the run universe of ``protocol``; runs are generated on demand."""
    return RunUniverse(protocol, params, values_filter, max_crashes, budget)


def find_run(universe: RunUniverse, initial_values, failure_spec: FailureSpec) -> Optional[Run]:
    """The member of ``universe`` with these initial values and failures, if any.

    The failure pattern is canonicalized by replaying it first, so redundant
    delivery bits or crashes after halting do not prevent a match.
    """
    failure_spec = tuple(failure_spec)
    limit = universe.params.f if universe.max_crashes is None else universe.max_crashes
    if len(failure_spec) > limit or validate_failure_spec(failure_spec, universe.params):
        return None
    values = tuple(initial_values)
    if len(values) != universe.params.n:
        return None
    if universe.values_filter is not None and not universe.values_filter(values):
        return None
    replay = execute(universe.protocol, values, failure_spec, universe.params)
    return universe.lookup().get(replay.key)


def describe_branch(run: Run) -> str:
    fails = ",".join(f"{c.process}@{c.round}" for c in run.failures) or "none"
    return f"values={''.join(map(str, run.initial_values))} crashes={fails}"


def spill(universe: RunUniverse, directory) -> int:
    """Write every run as a canonical trace file named by a stable hash of its key."""
    import hashlib
    from pathlib import Path

    from .kernel import dumps_run

    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    count = 0
    for run in universe:
        text = dumps_run(run)
        ident = repr((run.initial_values, [c.to_json() for c in run.failures])).encode()
        (out / f"{hashlib.sha256(ident).hexdigest()[:16]}.json").write_text(text)
        count += 1
    return count


__all__ = [
    "BranchPoint", "BudgetExceeded", "RunUniverse", "crash_options", "enumerate_runs",
    "find_run", "iter_runs", "run_key", "spill", "value_vectors",
]
