"""The branch-divergence gadget and the memory it runs against.

One gadget run sweeps every comparison value ``j``. For each ``j`` it

1. plants a training value ``(j + 1) mod domain`` at a public address,
   flushes the equal-path probe line and touches the unequal-path line;
2. runs the core block ``training_rounds`` times on the public address (no
   fault, always the unequal outcome), then once more on the secret address,
   which faults;
3. brackets that last core execution with two PMU reads and stores both raw
   values into a result table.

The core block compares the loaded byte with ``j``. The unequal path runs
``ins1`` plus a load of ``addr_neq``; the equal path runs ``ins2`` plus a
load of ``addr_eq``. Training and probe share the same code, so they share
the same predictor entry.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import InvalidSpec
from ..isa import InstrClass, InstructionSet, InstrKind, Program, assemble
from ..sim import CacheState, MachineState, SuppressionMode

LINE = CacheState.LINE


def _at_set(base: int, cache_set: int) -> int:
    return base + cache_set * LINE


# Addresses are spread over distinct cache sets so nothing the gadget touches
# evicts anything else it relies on.
SECRET_BASE = _at_set(0x100000, 5)
SECRET_SIZE = 0x10000
ADDR_EQ = _at_set(0x200000, 10)
ADDR_NEQ = _at_set(0x200000, 20)
TRAIN_ADDR = _at_set(0x300000, 30)
ROUND_LIST = _at_set(0x400000, 40)
VALUE_LIST = 0x500000
RESULTS = 0x600000 + 0x40 * 48

ROUND_NODE = 16  # [address, next]
VALUE_NODE = 32  # [j, training value, result pointer, next]
RESULT_ENTRY = 16  # [start, end]


@dataclass(frozen=True)
class GadgetSpec:
    ins1: str = "nop"
    ins2: str = "nop"
    training_rounds: int = 5
    comparison_domain: int = 256
    addr_eq: int = ADDR_EQ
    addr_neq: int = ADDR_NEQ
    secret_addr: int = SECRET_BASE
    suppression: SuppressionMode = SuppressionMode.TSX_LIKE

    def validate(self, iset: InstructionSet | None = None) -> None:
        if self.training_rounds < 0:
            raise InvalidSpec("training_rounds must be >= 0")
        d = self.comparison_domain
        if d < 2 or d > 256 or d & (d - 1):
            raise InvalidSpec("comparison_domain must be a power of two in 2..256")
        if self.addr_eq // LINE == self.addr_neq // LINE:
            raise InvalidSpec("addr_eq and addr_neq must sit on distinct cache lines")
        if iset is not None:
            for slot in (self.ins1, self.ins2):
                if slot not in iset:
                    raise InvalidSpec(f"unknown instruction class {slot!r}")
                if iset[slot].kind not in (InstrKind.NOP, InstrKind.TRIGGER):
                    raise InvalidSpec(f"{slot!r} cannot fill a gadget slot")

    @property
    def executions_per_value(self) -> int:
        return self.training_rounds + 1


def _slot_line(cls_id: str) -> str:
    return "nop" if cls_id == "nop" else f"trigger {cls_id}"


def render_gadget_source(spec: GadgetSpec, pmu_slot: int = 0) -> str:
    """Micro-assembly for one gadget run (all comparison values)."""
    return f"""\
# one run of the gadget: every comparison value, {spec.training_rounds} training + 1 probe each
    mov r13, {VALUE_LIST:#x}
next_value:
    load r2, [r13+0]            # comparison value j
    load r3, [r13+8]            # training value, never equal to j
    mov r4, {TRAIN_ADDR:#x}
    storeb [r4], r3
    mov r5, {spec.addr_eq:#x}
    mov r6, {spec.addr_neq:#x}
    clflush [r5]                # equal path will miss
    load r7, [r6]               # unequal path will hit
    mov r8, {ROUND_LIST:#x}
core:
    load r1, [r8+0]             # training address, then the secret address
    load r8, [r8+8]
    cmp r8, r0
    jne round_body
    rdpmc r14, {pmu_slot}       # probe round only: open the measurement
round_body:
    loadb r9, [r1]              # faults on the probe round
    cmp r9, r2
    je equal
    {_slot_line(spec.ins1)}
    load r7, [r6]
    jmp join
equal:
    {_slot_line(spec.ins2)}
    load r7, [r5]
join:
    fence
    cmp r8, r0
    jne core
abort:
    rdpmc r15, {pmu_slot}       # close the measurement
    load r11, [r13+16]
    store [r11+0], r14
    store [r11+8], r15
    load r13, [r13+24]
    cmp r13, r0
    jne next_value
"""


def build_gadget(spec: GadgetSpec, iset: InstructionSet | None = None, pmu_slot: int = 0) -> Program:
    spec.validate(iset)
    return assemble(render_gadget_source(spec, pmu_slot), iset)


def lay_out(state: MachineState, spec: GadgetSpec, secret_addr: int | None = None) -> None:
    """Write the value list, round list and result table the gadget walks.

    The attacker writes these tables itself, so their lines end up cached.
    """
    target = spec.secret_addr if secret_addr is None else secret_addr
    d = spec.comparison_domain
    rounds = spec.training_rounds + 1
    for m in range(rounds):
        node = ROUND_LIST + m * ROUND_NODE
        state.write_u64(node, TRAIN_ADDR if m < rounds - 1 else target)
        state.write_u64(node + 8, node + ROUND_NODE if m < rounds - 1 else 0)
    for j in range(d):
        node = VALUE_LIST + j * VALUE_NODE
        state.write_u64(node, j)
        state.write_u64(node + 8, training_value(j, d))
        state.write_u64(node + 16, RESULTS + j * RESULT_ENTRY)
        state.write_u64(node + 24, node + VALUE_NODE if j < d - 1 else 0)
    written = [(ROUND_LIST, rounds * ROUND_NODE), (VALUE_LIST, d * VALUE_NODE),
               (RESULTS, d * RESULT_ENTRY)]
    line = state.cache.LINE
    for base, size in written:
        for addr in range(base - base % line, base + size, line):
            state.cache.access(addr)


def training_value(j: int, domain: int = 256) -> int:
    return (j + 1) % domain


def read_deltas(state: MachineState, spec: GadgetSpec) -> list[int]:
    out = []
    for j in range(spec.comparison_domain):
        e = RESULTS + j * RESULT_ENTRY
        out.append(state.read_u64(e + 8) - state.read_u64(e))
    return out


def slot_classes(spec: GadgetSpec, iset: InstructionSet) -> tuple[InstrClass, InstrClass]:
    return iset[spec.ins1], iset[spec.ins2]
