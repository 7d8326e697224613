import pytest

from conftest import MISP, RETIRED
from pmuspill.attack.env import AttackEnv
from pmuspill.attack.sweep import BOTH, sweep
from pmuspill.errors import UnknownEvent
from pmuspill.mitigations import (
    BASELINE, LaunchStatus, MitigationPolicy, apply_policy, tee_launch_check,
)
from pmuspill.pmu import CounterPolicy


@pytest.mark.parametrize("policy, gate, root, status", [
    (CounterPolicy.VULNERABLE, False, True, LaunchStatus.LAUNCH_OK),
    (CounterPolicy.VULNERABLE, True, True, LaunchStatus.REFUSED),
    (CounterPolicy.RETIRE_ONLY, True, True, LaunchStatus.REFUSED),
    (CounterPolicy.RENAMED, True, True, LaunchStatus.REFUSED),
    (CounterPolicy.DISABLED, True, True, LaunchStatus.LAUNCH_OK),
    (CounterPolicy.VULNERABLE, True, False, LaunchStatus.LAUNCH_OK),
])
def test_launch_gate(policy, gate, root, status):
    env = AttackEnv(pmu_policy=policy, tee_gate=gate, root=root)
    assert tee_launch_check(env) is status
    assert env.launched is (status is LaunchStatus.LAUNCH_OK)


def test_refused_enclave_has_no_secret_mapped():
    env = AttackEnv(tee_gate=True)
    env.plant_secret(b"\x42")
    st = env.new_state()
    assert not st.secret_mapped


def test_apply_policy_sets_every_knob():
    env = AttackEnv.with_events([MISP, RETIRED])
    pol = MitigationPolicy(CounterPolicy.RENAMED, True, frozenset({MISP.name}))
    assert apply_policy(env, pol) is env
    assert (env.pmu_policy, env.tee_gate, env.disabled_events) == (
        CounterPolicy.RENAMED, True, frozenset({MISP.name}))
    apply_policy(env, BASELINE)
    assert (env.pmu_policy, env.tee_gate, env.disabled_events) == (
        CounterPolicy.VULNERABLE, False, frozenset())


def test_apply_policy_rejects_unknown_events_and_running_attacks():
    env = AttackEnv.with_events([MISP])
    with pytest.raises(UnknownEvent):
        apply_policy(env, MitigationPolicy(per_event_disable=frozenset({"NOPE"})))
    assert env.disabled_events == frozenset()
    env.running = True
    with pytest.raises(RuntimeError):
        apply_policy(env, BASELINE)


def test_labels():
    assert BASELINE.label == "VULNERABLE"
    assert MitigationPolicy(CounterPolicy.RETIRE_ONLY).label == "RETIRE_ONLY"
    assert MitigationPolicy(tee_gate=True).label == "VULNERABLE+TEE_GATE"
    pol = MitigationPolicy(CounterPolicy.DISABLED, per_event_disable=frozenset({"A", "B"}))
    assert pol.label == "DISABLED+DISABLE[2]"


def test_sweep_under_mitigations_finds_nothing(sample_events, sample_iset):
    spec_events = [e for e in sample_events if e.speculative][:6]
    classes = [c.id for c in sample_iset.ingested][:8]
    for pol in (
        MitigationPolicy(CounterPolicy.RETIRE_ONLY),
        MitigationPolicy(CounterPolicy.RENAMED),
        MitigationPolicy(per_event_disable=frozenset(e.name for e in spec_events)),
    ):
        env = apply_policy(AttackEnv(iset=sample_iset, catalog={e.name: e for e in sample_events}), pol)
        rep = sweep(spec_events, sample_iset, BOTH, 2, env=env, classes=classes)
        assert rep.vulnerable_events() == [], pol.label
