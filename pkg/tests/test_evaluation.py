import random

from conftest import MISP
from pmuspill.attack.env import AttackEnv
from pmuspill.attack.gadget import GadgetSpec
from pmuspill.evaluation import (
    PolicyRow, benchmark_program, benchmark_suite, compare_profiles, default_policies,
    mitigation_eval, profile_counts,
)
from pmuspill.mitigations import LaunchStatus, MitigationPolicy
from pmuspill.pmu import CounterFile, CounterPolicy
from pmuspill.sim import MachineState, Simulator


def test_benchmarks_never_squash(sample_events, sample_iset):
    for prog in benchmark_suite(sample_iset, 10, seed=4, events=sample_events):
        sim = Simulator(prog, MachineState(), CounterFile({}), sample_iset)
        squashes, entries = [], []
        sim.squash_observers.append(lambda st, snap: squashes.append(1))
        sim.transient_entry_observers.append(lambda st: entries.append(1))
        sim.run()
        assert squashes == [] and entries == []


def test_suite_is_seeded(sample_iset):
    a = benchmark_suite(sample_iset, 3, seed=1)
    b = benchmark_suite(sample_iset, 3, seed=1)
    c = benchmark_suite(sample_iset, 3, seed=2)
    assert a == b and a != c


def test_favoured_classes_appear(sample_events, sample_iset):
    tagged = next(e for e in sample_events if e.instructions)
    fav = sorted(tagged.instructions)
    prog = benchmark_program(sample_iset, random.Random(0), 200, favour=fav)
    assert prog.class_ids() & set(fav)


def test_compare_profiles():
    ref = {"A": 1, "B": 2}
    assert compare_profiles(ref, None) == "unreadable"
    assert compare_profiles(ref, {"A": 1, "B": 2}) == "identical"
    assert compare_profiles(ref, {"A": 1}) == "reduced"
    assert compare_profiles(ref, {"A": 1, "B": 3}) == "differs"


def test_profile_counts_respect_the_policy(sample_events, sample_iset):
    catalog = {e.name: e for e in sample_events}
    progs = benchmark_suite(sample_iset, 3, events=sample_events)
    names = list(catalog)[:20]
    env = AttackEnv(iset=sample_iset, catalog=catalog)
    base = profile_counts(env, progs, names)
    assert set(base) == set(names) and any(base.values())
    env.pmu_policy = CounterPolicy.DISABLED
    assert profile_counts(env, progs, names) is None
    env.pmu_policy = CounterPolicy.RETIRE_ONLY
    env.disabled_events = frozenset(names[:3])
    assert profile_counts(env, progs, names) == {k: base[k] for k in names[3:]}


def test_policy_row():
    row = PolicyRow("X", LaunchStatus.LAUNCH_OK, 4, 1, 3, {"b": 2, "a": 2, "c": 1})
    assert row.accuracy == 0.25 and row.failure_mode == "a"
    assert row.as_dict()["launch"] == "LAUNCH_OK"
    assert PolicyRow("X", LaunchStatus.REFUSED, 0, 0, 0).accuracy == 0.0


def test_default_policies(sample_events):
    labels = [p.label for p in default_policies({e.name: e for e in sample_events})]
    assert labels == ["VULNERABLE", "RETIRE_ONLY", "RENAMED", "DISABLED",
                      "VULNERABLE+TEE_GATE", "VULNERABLE+DISABLE[20]"]
    assert len(default_policies()) == 5


def test_mitigation_eval_small(sample_events, sample_iset):
    catalog = {e.name: e for e in sample_events}
    env = AttackEnv(iset=sample_iset, catalog=catalog, seed=2)
    env.plant_secret(bytes([3, 141, 255, 0]))
    seen = []
    progs = benchmark_suite(sample_iset, 2, events=sample_events)
    rows = mitigation_eval(env, GadgetSpec(), MISP.name, range(4), rounds=3, programs=progs,
                           progress=seen.append)
    got = {r.label: r for r in rows}
    assert seen == list(got)
    assert got["VULNERABLE"].accuracy == 1.0 and got["VULNERABLE"].profiling == "identical"
    for label in ("RETIRE_ONLY", "RENAMED", "DISABLED", "VULNERABLE+TEE_GATE",
                  "VULNERABLE+DISABLE[20]"):
        assert got[label].recovered == 0 and got[label].failures == 4, label
    assert got["VULNERABLE+TEE_GATE"].launch is LaunchStatus.REFUSED
    assert got["DISABLED"].failure_mode == "PmuDisabled"
    assert got["VULNERABLE+DISABLE[20]"].failure_mode == "EventDisabled"
    assert got["RETIRE_ONLY"].profiling == got["RENAMED"].profiling == "identical"
    assert got["DISABLED"].profiling == "unreadable"
    assert got["VULNERABLE+DISABLE[20]"].profiling == "reduced"
    # the caller's environment is left alone
    assert env.pmu_policy is CounterPolicy.VULNERABLE and not env.disabled_events


def test_mitigation_eval_without_programs_skips_profiling(sample_events, sample_iset):
    env = AttackEnv(iset=sample_iset, catalog={e.name: e for e in sample_events})
    env.plant_secret(b"\x10")
    rows = mitigation_eval(env, GadgetSpec(), MISP.name, [0], rounds=1,
                           policies=[MitigationPolicy()])
    assert rows[0].profiling == "-" and rows[0].recovered == 1
