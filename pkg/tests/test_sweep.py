import io
import json
import time

import pytest

from pmuspill.attack.env import AttackEnv
from pmuspill.attack.sweep import (
    BOTH, CSV_FIELDS, Scenario, SummaryRow, read_summary_csv, scenario_spec, sweep,
    write_summary_csv,
)
from pmuspill.attack.gadget import GadgetSpec
from pmuspill.pmu import NoiseModel

SPECULATIVE = [
    "BR_MISP_EXEC.ALL_BRANCHES", "BR_INST_EXEC.NONTAKEN_CONDITIONAL", "RESOURCE_STALLS.ANY",
    "PARTIAL_RAT_STALLS.SCOREBOARD", "IDQ.MS_CYCLES",
]


def _pick(sample_events, sample_iset, n_classes):
    """Five vulnerable and five retirement-counted events, plus classes that
    include a few members of each tagged event's trigger set."""
    by_name = {e.name: e for e in sample_events}
    events = [by_name[n] for n in SPECULATIVE]
    events += [e for e in sample_events if not e.speculative][:5]
    tagged = [c for e in events if e.instructions for c in sorted(e.instructions)[:2]]
    classes = tagged + [c.id for c in sample_iset.ingested if c.id not in tagged]
    return events, classes[:n_classes]


def test_smoke_sweep_is_fast_and_correct(sample_events, sample_iset):
    events, classes = _pick(sample_events, sample_iset, 50)
    t = time.perf_counter()
    rep = sweep(events, sample_iset, BOTH, 10, classes=classes)
    assert time.perf_counter() - t < 30
    assert sorted(rep.vulnerable_events()) == sorted(SPECULATIVE)
    assert rep.gadget_executions == 50 * 10 * 10 * 2
    for name in ("BR_MISP_EXEC.ALL_BRANCHES", "BR_INST_EXEC.NONTAKEN_CONDITIONAL"):
        assert rep.trigger_count(name, Scenario.S1) == rep.trigger_count(name, Scenario.S2) == 50
    # a tagged event only shows up when its class sits on the equal path
    assert rep.trigger_count("PARTIAL_RAT_STALLS.SCOREBOARD", Scenario.S1) == 0
    assert rep.trigger_count("PARTIAL_RAT_STALLS.SCOREBOARD", Scenario.S2) == 2


@pytest.mark.parametrize("noise", [NoiseModel(), NoiseModel(p=0.4)])
def test_profile_engine_matches_brute_force(sample_events, sample_iset, noise):
    events, classes = _pick(sample_events, sample_iset, 6)
    events = events[:3] + events[5:6]
    env = AttackEnv(iset=sample_iset, noise=noise, seed=5)
    fast = sweep(events, sample_iset, BOTH, 3, env=env, classes=classes)
    slow = sweep(events, sample_iset, BOTH, 3, env=env, classes=classes, engine="interpreter")
    assert fast.triggers == slow.triggers
    assert fast.summary() == slow.summary()


def test_noise_can_break_cells(sample_events, sample_iset):
    events, classes = _pick(sample_events, sample_iset, 20)
    env = AttackEnv(iset=sample_iset, noise=NoiseModel(p=0.9, burst_p=0.9), seed=1)
    rep = sweep(events[:1], sample_iset, BOTH, 1, env=env, classes=classes)
    assert rep.trigger_count(events[0].name, Scenario.S1) < 20


def test_single_scenario_has_no_other_rows(sample_events, sample_iset):
    events, classes = _pick(sample_events, sample_iset, 5)
    rep = sweep(events, sample_iset, Scenario.S1, 2, classes=classes)
    assert {r.scenario for r in rep.summary()} == {"S1"}
    assert {sc for _, sc, _, _ in rep.rows()} == {Scenario.S1}
    assert len(list(rep.rows())) == len(events) * 5


def test_parallel_jobs_give_identical_reports(sample_events, sample_iset):
    events, classes = _pick(sample_events, sample_iset, 12)
    a = sweep(events, sample_iset, BOTH, 3, classes=classes)
    b = sweep(events, sample_iset, BOTH, 3, classes=classes, jobs=2)
    assert json.dumps(a.to_json(), sort_keys=True) == json.dumps(b.to_json(), sort_keys=True)


def test_csv_round_trip(sample_events, sample_iset):
    events, classes = _pick(sample_events, sample_iset, 5)
    rep = sweep(events, sample_iset, BOTH, 2, classes=classes)
    buf = io.StringIO()
    rep.write_csv(buf)
    assert buf.getvalue().splitlines()[0] == ",".join(CSV_FIELDS)
    assert read_summary_csv(buf.getvalue()) == rep.summary()
    again = io.StringIO()
    write_summary_csv(read_summary_csv(buf.getvalue()), again)
    assert again.getvalue() == buf.getvalue()
    with pytest.raises(ValueError):
        read_summary_csv("a,b\n1,2\n")


def test_json_report_shape(sample_events, sample_iset):
    events, classes = _pick(sample_events, sample_iset, 3)
    doc = sweep(events, sample_iset, BOTH, 1, classes=classes).to_json()
    assert doc["instruction_count"] == 3 and doc["event_count"] == 10
    assert doc["gadget_executions"] == 3 * 10 * 1 * 2
    first = doc["events"][0]
    assert set(first["scenarios"]) == {"S1", "S2"}
    assert first["scenarios"]["S1"]["trigger_count"] == len(first["scenarios"]["S1"]["triggers"])


def test_degenerate_inputs(sample_iset):
    rep = sweep([], sample_iset, BOTH, 10, classes=["X00000"])
    assert rep.gadget_executions == 0 and rep.summary() == []
    with pytest.raises(ValueError):
        sweep([], sample_iset, BOTH, 0)
    with pytest.raises(ValueError):
        sweep([], sample_iset, BOTH, 1, engine="magic")


def test_scenarios_fill_the_right_slot():
    base = GadgetSpec()
    assert scenario_spec(base, Scenario.S1, "X1") == GadgetSpec(ins1="X1", ins2="nop")
    assert scenario_spec(base, Scenario.S2, "X1") == GadgetSpec(ins1="nop", ins2="X1")
    assert Scenario.parse(" s2 ") is Scenario.S2


def test_summary_row_is_plain_data():
    row = SummaryRow("E", "C", "S1", 3, True)
    buf = io.StringIO()
    write_summary_csv([row], buf)
    assert buf.getvalue().splitlines()[1] == "E,C,S1,3,1"
