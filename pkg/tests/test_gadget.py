import pytest

from conftest import MISP
from pmuspill.attack.env import AttackEnv
from pmuspill.attack.gadget import (
    ADDR_EQ, VALUE_LIST, GadgetSpec, build_gadget, lay_out, read_deltas, render_gadget_source,
    training_value,
)
from pmuspill.attack.leak import run_rounds
from pmuspill.errors import InvalidSpec
from pmuspill.isa import InstrClass, InstrKind, InstructionSet

ISET = InstructionSet([
    InstrClass("X1", "addps", InstrKind.TRIGGER, event_signature=(("E", 1),)),
    InstrClass("X2", "nopw", InstrKind.NOP),
])


def test_training_value_never_equals_j():
    for d in (2, 4, 256):
        assert all(training_value(j, d) != j for j in range(d))


@pytest.mark.parametrize("kw", [
    dict(training_rounds=-1),
    dict(comparison_domain=3),
    dict(comparison_domain=512),
    dict(addr_neq=ADDR_EQ + 8),
    dict(ins1="X9"),
    dict(ins2="load"),
])
def test_invalid_specs(kw):
    with pytest.raises(InvalidSpec):
        build_gadget(GadgetSpec(**kw), ISET)


def test_slots_take_nop_or_trigger_classes():
    prog = build_gadget(GadgetSpec(ins1="X1", ins2="X2"), ISET)
    assert {"X1", "X2"} <= prog.class_ids()
    assert "nop" in build_gadget(GadgetSpec(), ISET).class_ids()


def test_measurement_brackets_only_the_probe_block():
    src = render_gadget_source(GadgetSpec())
    assert src.count("rdpmc") == 2
    lines = [ln.split("#")[0].strip() for ln in src.splitlines()]
    # the opening read is skipped by every training block
    i = lines.index("rdpmc r14, 0")
    assert lines[i - 1] == "jne round_body"


def _one_round(spec, secret=b"\x5a"):
    env = AttackEnv.with_events([MISP], iset=ISET)
    env.plant_secret(secret)
    st = env.new_state()
    pmu = env.counter_file(seed=0)
    pmu.program_counter(0, MISP)
    res = run_rounds(env, spec, st, pmu, 1, spec.secret_addr)
    return res[0], st


@pytest.mark.parametrize("training", [0, 1, 5])
def test_core_block_runs_training_plus_probe_per_value(training):
    spec = GadgetSpec(training_rounds=training, comparison_domain=16)
    res, _ = _one_round(spec, b"\x05")
    assert res.core_executions == 16 * (training + 1)


def test_probe_delta_marks_the_secret():
    spec = GadgetSpec(comparison_domain=16)
    res, st = _one_round(spec, b"\x0b")
    d = res.trace.deltas
    assert len(d) == 16 and len(set(d)) == 2
    assert [j for j in range(16) if d.count(d[j]) == 1] == [0x0B]
    assert tuple(read_deltas(st, spec)) == d


def test_lay_out_writes_a_linked_value_list():
    env = AttackEnv()
    st = env.new_state()
    spec = GadgetSpec(comparison_domain=4)
    lay_out(st, spec)
    node, seen = VALUE_LIST, []
    while node:
        seen.append((st.read_u64(node), st.read_u64(node + 8)))
        node = st.read_u64(node + 24)
    assert seen == [(0, 1), (1, 2), (2, 3), (3, 0)]
