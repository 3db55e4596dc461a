"""Deterministic round-based execution of protocols under synchronous crash failures.

Two adversary contexts are supported. In ``GAMMA_F`` a process that crashes in
round ``m`` delivers its round-``m`` messages to an arbitrary subset of the
receivers the protocol prescribed. In ``GAMMA_TILDE_F`` sends are atomic: the
crashing process completes a prefix of its (receiver-ordered) send list, and a
mid-round decision survives only if it was reached before the crash point.

Round ``m`` runs between time ``m-1`` and time ``m``.  A protocol step maps a
process's local state at time ``t`` to the decision it takes at time ``t``, a
halt flag, and the sends of round ``t+1`` (plus an optional mid-round decision
that executes after those sends).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, NamedTuple, Optional, Union

COMMIT = "commit"
ABORT = "abort"

# Message payload tags.
ONE = "ONE"
ALL1 = "ALL1"
ERR = "ERR"
HUH = "HUH"
CONS1 = "C1"
IDS_PREFIX = "IDS:"


class Context(str, enum.Enum):
    GAMMA_F = "gamma_f"
    GAMMA_TILDE_F = "gamma_tilde_f"


class ConfigurationError(ValueError):
    """Parameters or protocol preconditions are inconsistent."""


class InvalidFailureSpec(ValueError):
    """A failure pattern is not admissible for the given parameters."""


class KernelFault(RuntimeError):
    """A protocol asked the kernel to do something the model forbids."""


@dataclass(frozen=True)
class SystemParams:
    n: int
    f: int
    context: Context = Context.GAMMA_F
    horizon: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "context", Context(self.context))
        if self.n <= 2:
            raise ConfigurationError(f"need n > 2 processes, got n={self.n}")
        if not 1 <= self.f < self.n:
            raise ConfigurationError(f"need 1 <= f < n, got f={self.f}, n={self.n}")
        if self.horizon is not None and self.horizon < 1:
            raise ConfigurationError(f"horizon must be >= 1, got {self.horizon}")

    def with_horizon(self, horizon: int) -> "SystemParams":
        return SystemParams(self.n, self.f, self.context, horizon)

    def to_json(self) -> dict:
        return {"n": self.n, "f": self.f, "context": self.context.value, "horizon": self.horizon}


class Message(NamedTuple):
    round: int
    sender: int
    receiver: int
    payload: str


@dataclass(frozen=True, order=True)
class Crash:
    """One faulty process: it crashes in ``round``.

    Under ``GAMMA_F`` ``receivers`` lists who still gets its crash-round
    messages. Under ``GAMMA_TILDE_F`` ``prefix`` is how many of its ordered
    sends complete, and ``decide_before_crash`` lets a prescribed mid-round
    decision run once the whole send list went out.
    """

    process: int
    round: int
    receivers: tuple[int, ...] = ()
    prefix: Optional[int] = None
    decide_before_crash: bool = False

    def to_json(self) -> dict:
        out: dict[str, Any] = {"process": self.process, "round": self.round}
        if self.prefix is None:
            out["receivers"] = list(self.receivers)
        else:
            out["prefix"] = self.prefix
            out["decide_before_crash"] = self.decide_before_crash
        return out

    @classmethod
    def from_json(cls, d: dict) -> "Crash":
        if "prefix" in d:
            return cls(d["process"], d["round"], (), d["prefix"], bool(d.get("decide_before_crash", False)))
        return cls(d["process"], d["round"], tuple(sorted(d.get("receivers", ()))))


FailureSpec = tuple[Crash, ...]


class RoundEntry(NamedTuple):
    """What a process did between time ``round-1`` and time ``round``.

    ``decision`` is the decision taken at time ``round-1`` (or mid-round).
    ``received`` includes virtual self-deliveries.
    """

    decision: Optional[str]
    sent: tuple[tuple[int, str], ...]
    received: tuple[tuple[int, str], ...]
    halt: bool = False


@dataclass(frozen=True)
class LocalState:
    process: int
    value: Optional[int]
    time: int
    history: tuple[RoundEntry, ...] = ()
    halted: bool = False
    crashed: bool = False

    @classmethod
    def bottom(cls, process: int, time: int) -> "LocalState":
        return cls(process, None, time, (), False, True)

    def received(self, rnd: int) -> tuple[tuple[int, str], ...]:
        if 1 <= rnd <= len(self.history):
            return self.history[rnd - 1].received
        return ()

    def got(self, rnd: int, payload: str) -> list[int]:
        """Senders of ``payload`` in round ``rnd``."""
        return [s for s, p in self.received(rnd) if p == payload]

    @property
    def decision(self) -> Optional[str]:
        for e in self.history:
            if e.decision is not None:
                return e.decision
        return None

    def __str__(self):
        if self.crashed:
            return "⊥"
        return f"({self.value}, {self.time}, {len(self.history)} rounds)"


@dataclass(frozen=True)
class StepOutput:
    sends: tuple[tuple[int, str], ...] = ()
    mid_round_decision: Optional[str] = None
    boundary_decision: Optional[str] = None
    halt: bool = False


class Decision(NamedTuple):
    action: str
    time: int
    mid_round: bool = False


@dataclass(frozen=True, eq=True)
class Run:
    protocol: str
    params: SystemParams
    initial_values: tuple[int, ...]
    failures: FailureSpec
    messages: tuple[Message, ...]
    decisions: dict
    halt_times: dict
    end_time: int
    histories: Optional[tuple[tuple[RoundEntry, ...], ...]] = field(default=None, compare=False, repr=False)

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def crash_rounds(self) -> dict[int, int]:
        return {c.process: c.round for c in self.failures}

    @property
    def faulty(self) -> frozenset[int]:
        return frozenset(c.process for c in self.failures)

    @property
    def key(self) -> tuple:
        return run_key(self.initial_values, self.failures)

    def is_nice(self) -> bool:
        return not self.failures and all(v == 1 for v in self.initial_values)


def run_key(values: Iterable[int], failures: FailureSpec) -> tuple:
    return tuple(values), tuple(sorted(failures))


# ---------------------------------------------------------------------------
# validation


def validate_failure_spec(spec: FailureSpec, params: SystemParams) -> Optional[str]:
    """Return ``None`` if ``spec`` is admissible, else a violation description."""
    if len(spec) > params.f:
        return f"{len(spec)} faulty processes exceeds f={params.f}"
    seen = set()
    for c in spec:
        if not 0 <= c.process < params.n:
            return f"process {c.process} out of range"
        if c.process in seen:
            return f"duplicate entry for process {c.process}"
        seen.add(c.process)
        if c.round < 1:
            return f"crash round {c.round} of process {c.process} must be >= 1"
        if params.horizon is not None and c.round > params.horizon:
            return f"crash round {c.round} of process {c.process} exceeds horizon {params.horizon}"
        if params.context is Context.GAMMA_F:
            if c.prefix is not None or c.decide_before_crash:
                return f"process {c.process}: prefix delivery is only meaningful in gamma_tilde_f"
            for r in c.receivers:
                if not 0 <= r < params.n or r == c.process:
                    return f"process {c.process}: bad receiver {r}"
        else:
            if c.receivers:
                return f"process {c.process}: subset delivery is only meaningful in gamma_f"
            if c.prefix is None or c.prefix < 0:
                return f"process {c.process}: gamma_tilde_f needs a prefix length >= 0"
    return None


# ---------------------------------------------------------------------------
# execution engine, shared with the enumerator


class Frame:
    """Mutable snapshot of a partially executed run at time ``t``."""

    __slots__ = ("t", "values", "histories", "crashed", "halted", "decisions", "messages", "failures")

    def __init__(self, values):
        n = len(values)
        self.t = 0
        self.values = tuple(values)
        self.histories: list[tuple[RoundEntry, ...]] = [()] * n
        self.crashed: dict[int, int] = {}
        self.halted: dict[int, int] = {}
        self.decisions: dict[int, Decision] = {}
        self.messages: tuple[tuple[Message, ...], ...] = ()
        self.failures: tuple[Crash, ...] = ()

    def state(self, i: int) -> LocalState:
        return LocalState(i, self.values[i], self.t, self.histories[i])

    def active(self) -> list[int]:
        return [i for i in range(len(self.values)) if i not in self.crashed and i not in self.halted]


def boundary(protocol, params: SystemParams, frame: Frame) -> dict[int, StepOutput]:
    """Execute time-``t`` decisions and halts; return the round-``t+1`` plans."""
    plans = {}
    for i in frame.active():
        out = protocol.step(frame.state(i), params)
        if out.boundary_decision is not None and out.mid_round_decision is not None:
            raise KernelFault(f"process {i} prescribed two decisions at time {frame.t}")
        if out.boundary_decision is not None:
            if i in frame.decisions:
                raise KernelFault(f"process {i} decides twice (time {frame.t})")
            frame.decisions[i] = Decision(out.boundary_decision, frame.t)
        if out.halt:
            if out.sends or out.mid_round_decision:
                raise KernelFault(f"process {i} acts in round {frame.t + 1} after halting")
            frame.halted[i] = frame.t
            frame.histories[i] = frame.histories[i] + (RoundEntry(out.boundary_decision, (), (), True),)
        else:
            if out.mid_round_decision is not None and i in frame.decisions:
                raise KernelFault(f"process {i} decides twice (round {frame.t + 1})")
            plans[i] = out
    return plans


def network_sends(i: int, out: StepOutput) -> list[tuple[int, str]]:
    """The non-self sends of a plan, in ascending receiver order."""
    return sorted((r, p) for r, p in out.sends if r != i)


def advance(frame: Frame, plans: dict[int, StepOutput], crashes: dict[int, Crash],
            context: Context) -> Frame:
    """Execute round ``t+1`` given the plans and the crashes of this round."""
    t = frame.t
    rnd = t + 1
    nxt = Frame.__new__(Frame)
    nxt.t = rnd
    nxt.values = frame.values
    nxt.histories = list(frame.histories)
    nxt.crashed = dict(frame.crashed)
    nxt.halted = dict(frame.halted)
    nxt.decisions = dict(frame.decisions)
    nxt.failures = frame.failures

    inbox: dict[int, list[tuple[int, str]]] = {i: [] for i in plans}
    sent_by: dict[int, tuple[tuple[int, str], ...]] = {}
    mid: dict[int, Optional[str]] = {}
    msgs: list[Message] = []
    new_failures = []
    for i in sorted(plans):
        out = plans[i]
        sends = network_sends(i, out)
        c = crashes.get(i)
        decide = out.mid_round_decision
        if c is None:
            actual = sends
            for r, p in out.sends:
                if r == i:
                    inbox[i].append((i, p))
        elif context is Context.GAMMA_F:
            allowed = set(c.receivers)
            actual = [(r, p) for r, p in sends if r in allowed]
            decide = None
            new_failures.append(Crash(i, rnd, tuple(r for r, _ in actual)))
        else:
            k = min(c.prefix or 0, len(sends))
            actual = sends[:k]
            complete = k == len(sends)
            decide = decide if (decide is not None and complete and c.decide_before_crash) else None
            new_failures.append(Crash(i, rnd, (), k, decide is not None))
        sent_by[i] = tuple(actual)
        mid[i] = decide
        if decide is not None:
            nxt.decisions[i] = Decision(decide, t, True)
        for r, p in actual:
            msgs.append(Message(rnd, i, r, p))
            if r in inbox:
                inbox[r].append((i, p))

    for i in sorted(plans):
        if i in crashes:
            nxt.crashed[i] = rnd
            continue
        decision = plans[i].boundary_decision or mid[i]
        entry = RoundEntry(decision, sent_by[i], tuple(sorted(inbox[i])))
        nxt.histories[i] = frame.histories[i] + (entry,)
    # crashing processes' deliveries to peers that crash this round are moot
    nxt.messages = frame.messages + (tuple(msgs),)
    if new_failures:
        nxt.failures = frame.failures + tuple(new_failures)
    return nxt


def finish(protocol_name: str, params: SystemParams, frame: Frame) -> Run:
    messages = tuple(m for rnd in frame.messages for m in rnd)
    return Run(
        protocol=protocol_name,
        params=params,
        initial_values=frame.values,
        failures=tuple(sorted(frame.failures)),
        messages=messages,
        decisions=dict(sorted(frame.decisions.items())),
        halt_times=dict(sorted(frame.halted.items())),
        end_time=frame.t,
        histories=tuple(frame.histories),
    )


def resolve(protocol, params: SystemParams):
    """Look up ``protocol`` by name if needed, check it, fill the default horizon."""
    if isinstance(protocol, str):
        from .protocols import get_protocol

        protocol = get_protocol(protocol)
    protocol.check(params)
    if params.horizon is None:
        params = params.with_horizon(protocol.default_horizon(params))
    return protocol, params


def execute(protocol, initial_values: Iterable[int], failure_spec: FailureSpec,
            params: SystemParams) -> Run:
    """Execute the unique run fixed by the inputs.

    Crash entries that can no longer matter (the process halted before its
    crash round, or execution stopped earlier) are dropped from the recorded
    failure pattern, and delivery choices are narrowed to what was actually
    sent.
    """
    protocol, params = resolve(protocol, params)
    values = tuple(int(v) for v in initial_values)
    if len(values) != params.n or any(v not in (0, 1) for v in values):
        raise ConfigurationError(f"need {params.n} binary initial values, got {values}")
    failure_spec = tuple(failure_spec)
    problem = validate_failure_spec(failure_spec, params)
    if problem:
        raise InvalidFailureSpec(problem)
    by_round: dict[int, dict[int, Crash]] = {}
    for c in failure_spec:
        by_round.setdefault(c.round, {})[c.process] = c

    frame = Frame(values)
    while True:
        plans = boundary(protocol, params, frame)
        if frame.t >= params.horizon or not plans:
            break
        crashes = {i: c for i, c in by_round.get(frame.t + 1, {}).items() if i in plans}
        frame = advance(frame, plans, crashes, params.context)
    return finish(protocol.name, params, frame)


def local_state(run: Run, i: int, m: int) -> LocalState:
    """``r_i(m)``: the local state of process ``i`` at time ``m``."""
    if run.histories is None:
        raise ValueError("run has no recorded local states (loaded from a trace without replay)")
    # past end_time every process has halted or crashed, so states stay defined
    last = max(run.end_time, run.params.horizon or 0)
    if not 0 <= m <= last:
        raise ValueError(f"time {m} outside the recorded extent 0..{last}")
    cr = run.crash_rounds.get(i)
    if cr is not None and cr <= m:
        return LocalState.bottom(i, m)
    hist = run.histories[i]
    halted = i in run.halt_times and m > run.halt_times[i]
    return LocalState(i, run.initial_values[i], m, hist[:m], halted)


# ---------------------------------------------------------------------------
# canonical trace format


def run_to_json(run: Run) -> dict:
    return {
        "protocol": run.protocol,
        "params": run.params.to_json(),
        "initial_values": "".join(map(str, run.initial_values)),
        "failures": [c.to_json() for c in run.failures],
        "messages": [list(m) for m in sorted(run.messages, key=lambda m: (m.round, m.sender, m.receiver))],
        "decisions": {str(i): {"action": d.action, "time": d.time, "mid_round": d.mid_round}
                      for i, d in run.decisions.items()},
        "halts": {str(i): t for i, t in run.halt_times.items()},
        "end_time": run.end_time,
    }


def dumps_run(run: Run) -> str:
    return json.dumps(run_to_json(run), sort_keys=True, indent=1)


def run_from_json(doc: Union[dict, str], replay: bool = False) -> Run:
    """Rebuild a run from its trace.

    With ``replay`` the protocol is re-executed so that local states are
    available, and the trace must agree with the replay.
    """
    if isinstance(doc, str):
        doc = json.loads(doc)
    try:
        p = doc["params"]
        params = SystemParams(int(p["n"]), int(p["f"]), Context(p.get("context", "gamma_f")), p.get("horizon"))
        values = tuple(int(c) for c in doc["initial_values"])
        failures = tuple(sorted(Crash.from_json(c) for c in doc.get("failures", [])))
        messages = tuple(Message(int(a), int(b), int(c), str(d)) for a, b, c, d in doc.get("messages", []))
        decisions = {int(k): Decision(v["action"], int(v["time"]), bool(v.get("mid_round", False)))
                     for k, v in doc.get("decisions", {}).items()}
        halts = {int(k): int(v) for k, v in doc.get("halts", {}).items()}
        end_time = int(doc.get("end_time", max([m.round for m in messages] + list(halts.values()) + [0])))
        protocol = doc.get("protocol", "unknown")
    except (KeyError, TypeError, ValueError) as e:
        raise ValueError(f"malformed trace: {e}") from e
    if len(values) != params.n:
        raise ValueError("malformed trace: initial_values length differs from n")
    if replay:
        run = execute(protocol, values, failures, params)
        if run.messages != tuple(sorted(messages)) or run.decisions != decisions:
            raise ValueError("trace does not match a replay of its protocol")
        return run
    return Run(protocol, params, values, failures, tuple(sorted(messages)),
               dict(sorted(decisions.items())), dict(sorted(halts.items())), end_time)
