import pytest
from hypothesis import given, settings, strategies as st

from pmuspill.errors import AssemblyError, MappingConflict
from pmuspill.isa import (
    BUILTINS, Instr, InstrClass, InstrKind, InstructionSet, Program, assemble, classify,
    load_mapping, normalize_mapping, render, synthetic_signature,
)


def test_assemble_all_forms():
    prog = assemble("""
        # comment
        start: mov r1, 0x41
        load r2, [r1+8]
        loadb r3, [r1]
        store [r1-16], r2
        storeb [r1+0x10], r3
        cmp r1, r2
        je start
        jne end
        jmp end
        clflush [r4]
        fence
        rdpmc r5, 3
        nop
    end:
    """)
    assert [i.cls for i in prog.instructions] == [
        "mov", "load", "loadb", "store", "storeb", "cmp", "je", "jne", "jmp",
        "clflush", "fence", "rdpmc", "nop",
    ]
    assert prog.instructions[1].ops == (2, 1, 8)
    assert prog.instructions[3].ops == (1, -16, 2)
    assert prog.labels == {"start": 0, "end": 13}
    assert prog.instructions[6].ops == (0,)


def test_trigger_needs_known_class():
    iset = InstructionSet([InstrClass("X00001", "addps", InstrKind.TRIGGER, event_signature=(("E", 1),))])
    assert assemble("trigger X00001", iset).instructions == (Instr("X00001"),)
    with pytest.raises(AssemblyError):
        assemble("trigger X00002", iset)


@pytest.mark.parametrize("src, line", [
    ("bogus r1", 1),
    ("nop\nmov r1", 2),
    ("jmp nowhere", 1),
    ("mov r99, 1", 1),
    ("a:\na:\nnop", 2),
    ("load r1, r2", 1),
])
def test_assembly_errors_carry_line(src, line):
    with pytest.raises(AssemblyError) as exc:
        assemble(src)
    assert exc.value.line == line


def test_empty_source_is_empty_program():
    assert len(assemble("# nothing\n\n")) == 0


_reg = st.integers(0, 15)
_disp = st.integers(-4096, 4096)


def _instr(n):
    target = st.integers(0, n)
    return st.one_of(
        st.builds(lambda: Instr("nop")),
        st.builds(lambda: Instr("fence")),
        st.builds(lambda r, v: Instr("mov", (r, v)), _reg, st.integers(0, 2**64 - 1)),
        st.builds(lambda c, a, b, d: Instr(c, (a, b, d)), st.sampled_from(["load", "loadb"]), _reg, _reg, _disp),
        st.builds(lambda c, a, d, b: Instr(c, (a, d, b)), st.sampled_from(["store", "storeb"]), _reg, _disp, _reg),
        st.builds(lambda a, b: Instr("cmp", (a, b)), _reg, _reg),
        st.builds(lambda c, t: Instr(c, (t,)), st.sampled_from(["je", "jne", "jmp"]), target),
        st.builds(lambda a, d: Instr("clflush", (a, d)), _reg, _disp),
        st.builds(lambda r, s: Instr("rdpmc", (r, s)), _reg, st.integers(0, 7)),
    )


@st.composite
def programs(draw):
    n = draw(st.integers(0, 25))
    return Program(tuple(draw(st.lists(_instr(n), min_size=n, max_size=n))))


@settings(max_examples=300, deadline=None)
@given(programs())
def test_render_then_assemble_is_identity(prog):
    assert assemble(render(prog)).instructions == prog.instructions


def test_classify_is_pure_and_deterministic():
    uni = [f"E{i}" for i in range(40)]
    a = [classify(f"vaddps ymm{i}, ymm1", seed=3, universe=uni, q=0.5) for i in range(200)]
    b = [classify(f"vaddps ymm{i}, ymm1", seed=3, universe=uni, q=0.5) for i in range(200)]
    assert a == b
    kinds = {c.kind for c in a}
    assert kinds == {InstrKind.NOP, InstrKind.TRIGGER}
    assert all((c.kind is InstrKind.NOP) == (c.event_signature == ()) for c in a)


def test_synthetic_signature_rate_tracks_q():
    uni = ["A", "B", "C"]
    hits = sum(bool(synthetic_signature(f"op{i}", uni, 0, 0.15)) for i in range(4000))
    assert 0.12 < hits / 4000 < 0.18
    assert synthetic_signature("op", [], 0, 1.0) == ()


def test_mapping_overrides_synthetic_and_marks_provenance(tmp_path):
    path = tmp_path / "map.json"
    path.write_text('{"ADDPS": [["E1", 2]], "mulps xmm1, xmm2": [["E2", 1]]}')
    m = load_mapping(path)
    c = classify("addps xmm0, xmm1", m, universe=["Z"], q=1.0)
    assert c.event_signature == (("E1", 2),)
    assert c.provenance.endswith("#mapping")
    assert classify("MULPS  xmm1, xmm2", m).event_signature == (("E2", 1),)


def test_mapping_conflicts_are_rejected(tmp_path):
    path = tmp_path / "map.json"
    path.write_text('{"addps": [["E1", 1]], "addps": [["E1", 2]]}')
    with pytest.raises(MappingConflict):
        load_mapping(path)
    with pytest.raises(MappingConflict):
        normalize_mapping({"ADDPS": [["E", 1]], "addps": [["E", 2]]})


def test_class_invariants():
    with pytest.raises(ValueError):
        InstrClass("t", "t", InstrKind.TRIGGER)
    with pytest.raises(ValueError):
        InstrClass("n", "n", InstrKind.NOP, event_signature=(("E", 1),))
    with pytest.raises(ValueError):
        InstrClass("t", "t", InstrKind.TRIGGER, event_signature=(("E", 1), ("E", 2)))
    with pytest.raises(ValueError):
        InstrClass("t", "t", InstrKind.TRIGGER, latency=0, event_signature=(("E", 1),))


def test_instruction_set_keeps_builtins_and_rejects_duplicates():
    c = InstrClass("X1", "a", InstrKind.NOP)
    iset = InstructionSet([c])
    assert set(BUILTINS) < set(iset)
    assert iset.ingested == [c]
    with pytest.raises(ValueError):
        InstructionSet([c, c])
    with pytest.raises(ValueError):
        InstructionSet([InstrClass("nop", "nop", InstrKind.NOP)])


def test_program_class_check():
    prog = Program((Instr("X9"),))
    with pytest.raises(KeyError):
        prog.check_classes(BUILTINS)
