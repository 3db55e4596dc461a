"""Randomized invariants over arbitrary admissible runs."""

from hypothesis import given, settings

from silentsync import ac_verdict, dumps_run, execute, local_state, run_from_json
from silentsync.kernel import Context

from strategies import runs


@settings(max_examples=200, deadline=None)
@given(runs())
def test_determinism(run):
    again = execute(run.protocol, run.initial_values, run.failures, run.params)
    assert dumps_run(again) == dumps_run(run)


@settings(max_examples=200, deadline=None)
@given(runs())
def test_crash_silence_and_no_late_decisions(run):
    for c in run.failures:
        assert not [m for m in run.messages if m.sender == c.process and m.round > c.round]
        d = run.decisions.get(c.process)
        if d is None:
            continue
        if d.mid_round:
            # a mid-round decision in the crash round needs the full prefix and the flag
            assert d.time + 1 < c.round or (d.time + 1 == c.round and c.decide_before_crash)
        else:
            assert d.time < c.round


@settings(max_examples=200, deadline=None)
@given(runs())
def test_no_self_messages_and_one_decision_each(run):
    assert all(m.sender != m.receiver for m in run.messages)
    for i, hist in enumerate(run.histories):
        assert sum(e.decision is not None for e in hist) <= 1


@settings(max_examples=200, deadline=None)
@given(runs())
def test_gamma_f_delivery_totality(run):
    if run.params.context is not Context.GAMMA_F:
        return
    for i in range(run.n):
        if i in run.faulty:
            continue
        for rnd, entry in enumerate(run.histories[i], 1):
            logged = sorted((m.receiver, m.payload) for m in run.messages if m.sender == i and m.round == rnd)
            assert logged == sorted(entry.sent)


@settings(max_examples=200, deadline=None)
@given(runs())
def test_trace_replay_round_trip(run):
    back = run_from_json(dumps_run(run), replay=True)
    assert back == run
    for i in range(run.n):
        assert local_state(back, i, run.end_time) == local_state(run, i, run.end_time)


@settings(max_examples=300, deadline=None)
@given(runs())
def test_ac_holds_on_random_runs(run):
    v = ac_verdict(run)
    assert v.ok, v.to_json()
