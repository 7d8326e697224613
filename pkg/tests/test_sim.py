import io
import json
import random

import pytest

import oracle
from pmuspill.errors import BudgetExhausted, IllegalSquash
from pmuspill.isa import assemble
from pmuspill.pmu import CounterFile, CounterPolicy
from pmuspill.sim import (
    HIT, MISS, CacheState, MachineState, Mode, PredictorState, SimConfig, Simulator,
    SuppressionMode, cache_access, cache_flush, enter_transient, predict, run, squash, update,
)


def test_predictor_saturates_and_starts_weakly_not_taken():
    p = PredictorState()
    assert not predict(p, 7)
    update(p, 7, True)
    assert predict(p, 7)
    for _ in range(5):
        update(p, 7, True)
    assert p.counter(7) == 3
    update(p, 7, False)
    assert predict(p, 7)
    update(p, 7, False)
    assert not predict(p, 7)
    with pytest.raises(ValueError):
        PredictorState(4)


def test_cache_lru_eviction():
    c = CacheState()
    stride = CacheState.LINE * CacheState.SETS  # same set, new tag
    addrs = [i * stride for i in range(CacheState.WAYS + 1)]
    for a in addrs[:-1]:
        assert cache_access(c, a) == MISS
    assert cache_access(c, addrs[0]) == HIT  # addrs[1] is now least recent
    cache_access(c, addrs[-1])
    assert not c.contains(addrs[1])
    assert c.contains(addrs[0])
    cache_flush(c, addrs[0])
    assert cache_access(c, addrs[0]) == MISS


def test_squash_outside_transient_is_illegal():
    with pytest.raises(IllegalSquash):
        squash(MachineState())


def test_enter_and_squash_restore_registers():
    st = MachineState()
    st.regs[1] = 5
    enter_transient(st, 3, window=8)
    assert st.mode is Mode.TRANSIENT
    st.regs[1] = 99
    st.overlays[-1][0x10] = 1
    squash(st)
    assert st.regs[1] == 5 and st.pc == 3 and st.mode is Mode.ARCHITECTURAL
    assert 0x10 not in st.mem


def _pmu(policy=CounterPolicy.VULNERABLE):
    return oracle.counters(policy)


def test_determinism():
    src, _ = oracle.random_program(random.Random(4))
    prog = oracle.assemble_test(src)
    outs = []
    for _ in range(2):
        st = oracle.random_machine(random.Random(9))
        pmu = _pmu()
        _, log = run(prog, st, pmu, iset=oracle.TEST_CLASSES)
        buf = io.StringIO()
        log.write_jsonl(buf)
        outs.append((buf.getvalue(), log.cycles, pmu.snapshot_counts(), st.architectural()))
    assert outs[0] == outs[1]


def test_untrained_predictor_runs_the_equal_path_transiently():
    # unequal operands and a taken-biased predictor: the equal-path
    # instruction runs transiently on first encounter
    prog = oracle.assemble_test("""
        mov r1, 1
        mov r2, 2
        cmp r1, r2
        je eq
        jmp done
    eq: trigger T_A
    done:
    """)
    st = MachineState(predictor=PredictorState(2))
    pmu = _pmu()
    _, log = run(prog, st, pmu, iset=oracle.TEST_CLASSES)
    trans = log.transient_records()
    assert [r.cls for r in trans] == ["T_A"]
    assert trans[0].status == "squashed"
    assert log.mispredicts == 1
    tag_slot = [e.name for e in oracle.PROP_EVENTS].index("TAG_A")
    assert pmu.counts[tag_slot] == 1


def test_fault_forwards_secret_then_rolls_back():
    prog = assemble(f"""
        mov r1, {oracle.SECRET:#x}
        loadb r2, [r1]
        mov r3, 7
        store [r3], r2
    abort:
        nop
    """)
    st = MachineState(secret_region=(oracle.SECRET, oracle.SECRET + 1))
    st.write_bytes(oracle.SECRET, b"\x2a")
    pmu = _pmu()
    _, log = run(prog, st, pmu)
    assert log.faults == 1 and log.squashes == 1
    assert st.regs[2] == 0 and st.regs[3] == 0
    assert 7 not in st.mem
    stored = [r for r in log.transient_records() if r.kind == "STORE"]
    assert len(stored) == 1 and stored[0].status == "squashed"


def test_software_handler_adds_fixed_work():
    src = f"mov r1, {oracle.SECRET:#x}\nloadb r2, [r1]\nnop\n"
    cyc = {}
    for mode in SuppressionMode:
        st = MachineState(secret_region=(oracle.SECRET, oracle.SECRET + 1))
        pmu = _pmu()
        Simulator(assemble(src), st, pmu, suppression=mode).run()
        cyc[mode] = dict(pmu.counts)
    uops = [e.name for e in oracle.PROP_EVENTS].index("UOPS")
    assert cyc[SuppressionMode.SOFTWARE_HANDLER][uops] > cyc[SuppressionMode.TSX_LIKE][uops]


def test_cycle_cap():
    prog = assemble("top: nop\njmp top")
    with pytest.raises(BudgetExhausted):
        Simulator(prog, MachineState(), CounterFile(), config=SimConfig(cycle_cap=100)).run()


def test_log_records_are_json_lines():
    prog = oracle.assemble_test("mov r1, 1\ntrigger T_B\n")
    _, log = run(prog, MachineState(), _pmu(), iset=oracle.TEST_CLASSES)
    buf = io.StringIO()
    log.write_jsonl(buf)
    rows = [json.loads(x) for x in buf.getvalue().splitlines()]
    assert [r["class"] for r in rows] == ["mov", "T_B"]
    assert ["TAG_A", 2] in rows[1]["events"]
    assert rows[0]["mode"] == "ARCHITECTURAL" and rows[0]["status"] == "retired"


@pytest.mark.parametrize("block", range(4))
def test_random_programs_roll_back_exactly(block):
    problems = []
    for seed in range(block * 100, block * 100 + 100):
        problems += oracle.check_program(seed)
    assert problems == []


def test_property_oracle_catches_a_broken_rollback(monkeypatch):
    import pmuspill.sim as sim_mod

    real = sim_mod.squash

    def leaky(state, pmu=None, window=None):
        regs = list(state.regs)
        real(state, pmu, window)
        state.regs[:] = regs
        return state

    monkeypatch.setattr(sim_mod, "squash", leaky)
    assert any(oracle.check_program(s) for s in range(200))


def _final_counts(src, st_seed, policy):
    prog = oracle.assemble_test(src)
    st = oracle.random_machine(random.Random(st_seed))
    pmu = _pmu(policy)
    Simulator(prog, st, pmu, oracle.TEST_CLASSES).run()
    return pmu.snapshot_counts()


def test_renamed_matches_retire_only_on_every_program():
    # every transient region is squashed, so nothing in the shadow ever commits
    for seed in range(200):
        src, _ = oracle.random_program(random.Random(seed))
        assert _final_counts(src, seed, CounterPolicy.RENAMED) == \
            _final_counts(src, seed, CounterPolicy.RETIRE_ONLY)


def test_policies_agree_without_faults_or_mispredicts():
    checked = 0
    for seed in range(300):
        src, _ = oracle.random_program(random.Random(seed))
        prog = oracle.assemble_test(src)
        st = oracle.random_machine(random.Random(seed))
        _, log = run(prog, st, _pmu(), iset=oracle.TEST_CLASSES)
        if log.faults or log.mispredicts:
            continue
        checked += 1
        counts = {p: _final_counts(src, seed, p) for p in list(CounterPolicy)[:3]}
        assert len({tuple(sorted(c.items())) for c in counts.values()}) == 1
    assert checked > 30
