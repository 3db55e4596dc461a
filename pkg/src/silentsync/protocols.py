"""Atomic-commitment protocols that exploit silence, plus a biased-to-1 consensus.

Every protocol is a deterministic step function ``(LocalState, SystemParams) ->
StepOutput`` evaluated on the state at time ``t``: it returns the decision taken
at time ``t``, whether the process halts at ``t``, and the sends of round
``t+1``. Sends addressed to the sender itself are virtual: the kernel hands them
back through the local state and never puts them on the network.
"""

from __future__ import annotations

from .kernel import (
    ABORT, ALL1, COMMIT, CONS1, ERR, HUH, IDS_PREFIX, ONE,
    ConfigurationError, Context, KernelFault, LocalState, StepOutput, SystemParams,
)


def _to(targets, payload) -> tuple[tuple[int, str], ...]:
    return tuple((r, payload) for r in targets)


def ring(i: int, lo: int, hi: int, n: int) -> list[int]:
    """``{i+lo, ..., i+hi} mod n`` in that order."""
    return [(i + k) % n for k in range(lo, hi + 1)]


def _committed(state: LocalState) -> bool:
    return state.decision == COMMIT


def _live(state: LocalState):
    if state.crashed:
        raise KernelFault(f"step invoked on the crashed state of process {state.process}")


def ids_payload(ids, n: int) -> str:
    ids = set(ids)
    return IDS_PREFIX + "".join("1" if k in ids else "0" for k in range(n))


def ids_of(payload: str) -> set[int]:
    return {k for k, b in enumerate(payload[len(IDS_PREFIX):]) if b == "1"}


# ---------------------------------------------------------------------------
# biased-to-1 uniform consensus by flooding


def consensus_phase(state: LocalState, n: int, start: int, proposal: int, tolerance: int) -> StepOutput:
    """One step of a consensus instance that began at time ``start``.

    Sub-round ``k`` is round ``start+k``. A process broadcasts '1' in the first
    sub-round after it first holds a '1' (its own proposal counts for sub-round
    1) and, at the end of sub-round ``tolerance+1``, decides 1 iff it ever held
    a '1'. A process that already committed takes part but keeps its decision.
    """
    k = state.time - start
    if not 0 <= k <= tolerance + 1:
        raise KernelFault(f"consensus step of process {state.process} at sub-round offset {k}")
    heard = [bool(state.got(start + s, CONS1)) for s in range(1, k + 1)]
    held_now = bool(proposal) or any(heard)
    held_before = k > 0 and (bool(proposal) or any(heard[:-1]))
    if k == tolerance + 1:
        if state.decision is not None:
            return StepOutput(halt=True)
        return StepOutput(boundary_decision=COMMIT if held_now else ABORT, halt=True)
    if held_now and not held_before:
        return StepOutput(sends=_to((r for r in range(n) if r != state.process), CONS1))
    return StepOutput()


def b1_consensus_step(state: LocalState, tolerance: int, n: int) -> StepOutput:
    """Stand-alone consensus in which the initial value is the proposal.

    A decision of 1 is reported as ``commit`` and 0 as ``abort``.
    """
    _live(state)
    return consensus_phase(state, n, 0, state.value, tolerance)


# ---------------------------------------------------------------------------
# the commitment protocols


def stealth_step(state: LocalState, params: SystemParams) -> StepOutput:
    """n+f-1 messages and commit at time 3 in nice runs.

    Round 1 funnels the '1' votes to process 0, round 2 makes ``{0..f}`` a
    choir that knows all values are 1, and silence in rounds 3 and 4 carries
    the rest. Anything unusual falls back to consensus from round 5.
    """
    _live(state)
    n, f, t, i = params.n, params.f, state.time, state.process
    if t == 0:
        return StepOutput(sends=((0, ONE),) if state.value == 1 else ())
    if t == 1:
        if i == 0 and len(state.got(1, ONE)) == n:
            return StepOutput(sends=_to(range(f + 1), ALL1))
        return StepOutput()
    if t == 2:
        if i <= f and not state.got(2, ALL1):
            return StepOutput(sends=_to(range(n), ERR))
        return StepOutput()
    if t == 3:
        if not state.got(3, ERR):
            return StepOutput(boundary_decision=COMMIT)
        return StepOutput(sends=_to(range(n), HUH))
    if t == 4 and not state.got(4, HUH):
        return StepOutput(halt=True)
    proposal = int(bool(state.got(2, ALL1)) or _committed(state))
    return consensus_phase(state, n, 4, proposal, f - 1)


def d2_step(state: LocalState, params: SystemParams, choir: int | None = None) -> StepOutput:
    """fn messages and commit at time 2 in nice runs.

    Each '1' reaches the ``f+1`` processes ``{i..i+f}``; those processes stay
    silent in round 2 when they heard from all their predecessors.
    ``choir`` overrides the choir size (only to build a broken variant).
    """
    _live(state)
    n, f, t, i = params.n, params.f, state.time, state.process
    size = f + 1 if choir is None else choir
    if t == 0:
        return StepOutput(sends=_to(ring(i, 0, size - 1, n), ONE) if state.value == 1 else ())
    if t == 1:
        if len(state.got(1, ONE)) < size:
            return StepOutput(sends=_to(range(n), ERR))
        return StepOutput()
    if t == 2:
        if not state.got(2, ERR):
            return StepOutput(boundary_decision=COMMIT)
        return StepOutput(sends=_to(range(n), ids_payload(state.got(1, ONE), n)))
    if t == 3 and not state.received(3):
        return StepOutput(halt=True)
    known = set()
    for s, p in state.received(3):
        known |= ids_of(p)
    proposal = int(len(known) == n or _committed(state))
    return consensus_phase(state, n, 3, proposal, f - 1)


def d1f1_step(state: LocalState, params: SystemParams) -> StepOutput:
    """n^2-n messages and commit at time 1 in nice runs, for f = 1 only."""
    _live(state)
    if params.f != 1:
        raise ConfigurationError("d1f1 requires f=1")
    n, t, i = params.n, state.time, state.process
    others = [r for r in range(n) if r != i]
    if t == 0:
        return StepOutput(sends=_to(others, ONE) if state.value == 1 else ())
    if t == 1:
        if state.value == 1 and len(state.got(1, ONE)) == n - 1:
            return StepOutput(boundary_decision=COMMIT)
        return StepOutput(sends=_to(others, HUH))
    if t == 2:
        if _committed(state):
            askers = state.got(2, HUH)
            if not askers:
                return StepOutput(halt=True)
            return StepOutput(sends=_to(askers, ALL1))
        return StepOutput()
    if t == 3:
        if _committed(state):
            return StepOutput(halt=True)
        return StepOutput(boundary_decision=COMMIT if state.got(3, ALL1) else ABORT, halt=True)
    raise KernelFault(f"d1f1 process {i} still running at time {t}")


def d15_step(state: LocalState, params: SystemParams) -> StepOutput:
    """Commit in the middle of round 2 of nice runs; needs atomic crash-round sends."""
    _live(state)
    if params.context is not Context.GAMMA_TILDE_F:
        raise ConfigurationError("d15 requires context gamma_tilde_f")
    n, f, t, i = params.n, params.f, state.time, state.process
    if t == 0:
        return StepOutput(sends=_to((r for r in range(n) if r != i), ONE) if state.value == 1 else ())
    if t == 1:
        if state.value == 1 and len(state.got(1, ONE)) == n - 1:
            return StepOutput(sends=_to(ring(i, 1, f, n), ALL1), mid_round_decision=COMMIT)
        return StepOutput(sends=_to(range(n), HUH))
    if t == 2 and not state.got(2, HUH):
        return StepOutput(halt=True)
    proposal = int(bool(state.got(2, ALL1)) or _committed(state))
    return consensus_phase(state, n, 2, proposal, f - 1)


# ---------------------------------------------------------------------------
# protocol objects consumed by the kernel


class Protocol:
    name = "?"

    def check(self, params: SystemParams) -> None:
        if params.context is not Context.GAMMA_F:
            raise ConfigurationError(f"{self.name} is defined for context gamma_f")

    def default_horizon(self, params: SystemParams) -> int:
        raise NotImplementedError

    def step(self, state: LocalState, params: SystemParams) -> StepOutput:
        raise NotImplementedError

    def __repr__(self):
        return f"<protocol {self.name}>"


class Stealth(Protocol):
    name = "stealth"

    def check(self, params):
        # correct in both contexts; the tilde context only weakens the adversary
        pass

    def default_horizon(self, params):
        return params.f + 5

    def step(self, state, params):
        return stealth_step(state, params)


class D2(Protocol):
    name = "d2"

    def check(self, params):
        pass

    def default_horizon(self, params):
        return params.f + 4

    def step(self, state, params):
        return d2_step(state, params)


class D1f1(Protocol):
    name = "d1f1"

    def check(self, params):
        if params.f != 1:
            raise ConfigurationError("d1f1 requires f=1")

    def default_horizon(self, params):
        return 3

    def step(self, state, params):
        return d1f1_step(state, params)


class D15(Protocol):
    name = "d15"

    def check(self, params):
        if params.context is not Context.GAMMA_TILDE_F:
            raise ConfigurationError("d15 requires context gamma_tilde_f")

    def default_horizon(self, params):
        return params.f + 4

    def step(self, state, params):
        return d15_step(state, params)


class B1Consensus(Protocol):
    """Consensus alone; every process proposes its initial value."""

    def __init__(self, tolerance: int):
        if tolerance < 0:
            raise ConfigurationError("consensus tolerance must be >= 0")
        self.tolerance = tolerance
        self.name = f"b1consensus-{tolerance}"

    def check(self, params):
        pass

    def default_horizon(self, params):
        return self.tolerance + 1

    def step(self, state, params):
        return b1_consensus_step(state, self.tolerance, params.n)


class CommitAtZero(Protocol):
    """Broken on purpose: everybody commits at time 0."""

    name = "mutant-commit0"

    def check(self, params):
        pass

    def default_horizon(self, params):
        return 1

    def step(self, state, params):
        return StepOutput(boundary_decision=COMMIT, halt=True)


class D2SmallChoir(D2):
    """Broken on purpose: D2 with a choir of f processes instead of f+1."""

    name = "mutant-d2-small-choir"

    def step(self, state, params):
        return d2_step(state, params, choir=params.f)


PROTOCOLS = {
    p.name: p for p in (Stealth(), D2(), D1f1(), D15(), CommitAtZero(), D2SmallChoir())
}


def get_protocol(name: str) -> Protocol:
    """Look up a protocol by name; ``b1consensus-<t>`` builds a consensus instance."""
    if name in PROTOCOLS:
        return PROTOCOLS[name]
    if name.startswith("b1consensus-"):
        try:
            return B1Consensus(int(name.split("-", 1)[1]))
        except ValueError:
            pass
    raise ConfigurationError(f"unknown protocol {name!r}; choose from {sorted(PROTOCOLS)} or b1consensus-<t>")
