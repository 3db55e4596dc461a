import json

import pytest

from silentsync import (
    COMMIT, Crash, InvalidFailureSpec, LocalState, SystemParams, dumps_run, execute, local_state,
    run_from_json,
)
from silentsync.kernel import ConfigurationError, Context, validate_failure_spec

P31 = SystemParams(3, 1)
TILDE = Context.GAMMA_TILDE_F


def test_params_validation():
    with pytest.raises(ConfigurationError):
        SystemParams(2, 1)
    with pytest.raises(ConfigurationError):
        SystemParams(3, 3)
    with pytest.raises(ConfigurationError):
        SystemParams(3, 0)
    with pytest.raises(ConfigurationError):
        SystemParams(3, 1, horizon=0)


def test_nice_stealth_run():
    run = execute("stealth", [1, 1, 1], (), P31)
    assert len(run.messages) == 3
    assert {i: (d.action, d.time) for i, d in run.decisions.items()} == {i: (COMMIT, 3) for i in range(3)}


def test_stealth_with_a_zero_never_commits():
    run = execute("stealth", [1, 1, 0], (), P31)
    assert all(d.action != COMMIT for d in run.decisions.values())
    assert len(run.decisions) == 3


def test_nice_d2_run():
    run = execute("d2", [1, 1, 1, 1], (), SystemParams(4, 2))
    assert len(run.messages) == 8
    assert all(d == (COMMIT, 2, False) for d in run.decisions.values())


def test_local_state_time_zero_form():
    run = execute("stealth", [1, 1, 1], (), P31)
    assert local_state(run, 2, 0) == LocalState(2, 1, 0, ())


def test_local_state_after_crash_is_bottom():
    run = execute("stealth", [1, 1, 1], (Crash(0, 1, ()),), P31)
    st = local_state(run, 0, 1)
    assert st.crashed and st == LocalState.bottom(0, 1)
    assert str(st) == "⊥"


def test_local_state_round_one_receipts():
    run = execute("stealth", [1, 1, 1], (), P31)
    st = local_state(run, 0, 1)
    # the self-delivery is virtual: it is in the history but not in the log
    assert st.got(1, "ONE") == [0, 1, 2]
    assert not any(m.sender == m.receiver for m in run.messages)


def test_local_state_rejects_time_beyond_extent():
    run = execute("stealth", [1, 1, 1], (), P31)
    with pytest.raises(ValueError):
        local_state(run, 0, run.params.horizon + 1)


def test_halted_state_is_frozen_not_bottom():
    run = execute("stealth", [1, 1, 1], (), P31)
    late = local_state(run, 1, run.params.horizon)
    assert late.halted and not late.crashed
    # the halt itself is the last history entry; nothing changes afterwards
    assert late.history == local_state(run, 1, 5).history
    assert late.history[-1].halt


def test_validate_failure_spec_examples():
    p = SystemParams(4, 2)
    assert validate_failure_spec((), p) is None
    assert "exceeds f" in validate_failure_spec((Crash(0, 1), Crash(1, 1), Crash(2, 1)), p)
    assert "duplicate" in validate_failure_spec((Crash(0, 1), Crash(0, 2)), p)
    assert "horizon" in validate_failure_spec((Crash(0, 9),), p.with_horizon(3))
    assert validate_failure_spec((Crash(0, 1, (), 1),), p) is not None
    assert validate_failure_spec((Crash(0, 1, (1,)),), SystemParams(4, 2, TILDE)) is not None


def test_execute_rejects_invalid_spec():
    with pytest.raises(InvalidFailureSpec):
        execute("stealth", [1, 1, 1], (Crash(0, 1), Crash(1, 1)), P31)
    with pytest.raises(ConfigurationError):
        execute("stealth", [1, 1], (), P31)


def test_determinism_byte_identical():
    spec = (Crash(0, 2, (1,)),)
    a = execute("stealth", [1, 1, 1], spec, P31)
    b = execute("stealth", [1, 1, 1], spec, P31)
    assert dumps_run(a) == dumps_run(b)
    assert a == b


def test_crash_silence_and_no_decision_at_crash():
    run = execute("stealth", [1, 1, 1], (Crash(0, 2, ()),), P31)
    assert not [m for m in run.messages if m.sender == 0 and m.round >= 2]
    assert 0 not in run.decisions


def test_gamma_f_partial_delivery():
    run = execute("d1f1", [1, 1, 1], (Crash(0, 1, (2,)),), P31)
    assert [m for m in run.messages if m.sender == 0] == [(1, 0, 2, "ONE")]


def test_delivery_totality_for_correct_senders():
    run = execute("d1f1", [1, 1, 1], (Crash(0, 1, ()),), P31)
    from_two = {(m.round, m.receiver) for m in run.messages if m.sender == 2}
    assert (1, 0) in from_two and (1, 1) in from_two


def test_gamma_tilde_prefix_and_mid_round_decision():
    p = SystemParams(3, 2, TILDE)
    full = execute("d15", [1, 1, 1], (Crash(0, 2, (), 2, True),), p)
    assert full.decisions[0] == (COMMIT, 1, True)
    partial = execute("d15", [1, 1, 1], (Crash(0, 2, (), 1, True),), p)
    assert 0 not in partial.decisions
    # the decide flag is dropped when the prefix stops short of the decision point
    assert partial.failures == (Crash(0, 2, (), 1, False),)
    no_flag = execute("d15", [1, 1, 1], (Crash(0, 2, (), 2, False),), p)
    assert 0 not in no_flag.decisions
    # sends are ordered by receiver id
    assert [m.receiver for m in partial.messages if m.sender == 0 and m.round == 2] == [1]


def test_crash_after_halting_is_canonicalized_away():
    run = execute("stealth", [1, 1, 1], (Crash(0, 6, ()),), P31)
    assert run.failures == ()
    assert run == execute("stealth", [1, 1, 1], (), P31)


def test_local_state_time_coupling():
    run = execute("stealth", [1, 1, 1], (), P31)
    states = [local_state(run, 0, m) for m in range(run.params.horizon + 1)]
    assert len(set(states)) == len(states)


def test_trace_round_trip(tmp_path):
    run = execute("stealth", [1, 1, 1], (Crash(1, 1, ()),), P31)
    text = dumps_run(run)
    doc = json.loads(text)
    assert doc["messages"] == sorted(doc["messages"], key=lambda m: (m[0], m[1], m[2]))
    assert set(doc) >= {"params", "initial_values", "failures", "messages", "decisions", "halts"}
    back = run_from_json(text)
    assert back == run
    replayed = run_from_json(text, replay=True)
    assert local_state(replayed, 2, 3) == local_state(run, 2, 3)


def test_malformed_trace_rejected():
    with pytest.raises(ValueError, match="malformed"):
        run_from_json({"params": {"n": 3}})
    doc = json.loads(dumps_run(execute("stealth", [1, 1, 1], (), P31)))
    doc["messages"] = []
    with pytest.raises(ValueError, match="replay"):
        run_from_json(doc, replay=True)
