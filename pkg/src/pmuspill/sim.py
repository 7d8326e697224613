"""Cycle-counting execution engine with branch prediction and transient execution.

The engine is in-order. Speculation is modeled at two points:

* a conditional branch whose prediction disagrees with its outcome runs
  ``resolve_delay`` micro-ops down the predicted (wrong) path in TRANSIENT
  mode before it resolves and the wrong path is squashed;
* a load from the privileged secret region faults. The loaded value is still
  forwarded to dependents, which run in TRANSIENT mode until the window ``W``
  runs out, a FENCE is reached or the program ends. Then architectural state
  is restored and control moves past the faulting region.

Cache and predictor state survive a squash. PMU counters follow their own
policy (see :mod:`pmuspill.pmu`).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import IO, Callable, Mapping

from .errors import BudgetExhausted, IllegalSquash
from .isa import BUILTINS, LOAD_WIDTH, NUM_REGS, InstrClass, InstrKind, Program, assemble
from .pmu import CounterFile, Structural as S

MASK64 = (1 << 64) - 1


class Mode(enum.Enum):
    ARCHITECTURAL = "ARCHITECTURAL"
    TRANSIENT = "TRANSIENT"


class SuppressionMode(enum.Enum):
    TSX_LIKE = "TSX_LIKE"
    SOFTWARE_HANDLER = "SOFTWARE_HANDLER"


class ForwardMode(enum.Enum):
    SECRET = "SECRET"  # Meltdown-style: the faulting load forwards real data
    ZERO = "ZERO"  # patched hardware: dependents see 0


@dataclass(frozen=True)
class SimConfig:
    window: int = 64
    resolve_delay: int = 2
    cycle_cap: int = 200_000_000
    forward: ForwardMode = ForwardMode.SECRET
    predictor_init: int = 1
    tee_protection: bool = True
    miss_penalty: int = 200
    resource_stall: int = 6
    misp_recovery: int = 8
    resteer_cycles: int = 5
    fault_recovery: int = 24
    icache_stall: int = 3
    handler_label: str = "abort"


# ---------------------------------------------------------------------------
# Predictor and cache
# ---------------------------------------------------------------------------


class PredictorState:
    """Per-pc 2-bit saturating counters. >= 2 predicts taken."""

    def __init__(self, init: int = 1):
        if init not in (0, 1, 2, 3):
            raise ValueError("predictor init must be in 0..3")
        self.init = init
        self.table: dict[object, int] = {}

    def counter(self, pc) -> int:
        return self.table.get(pc, self.init)

    def predict(self, pc) -> bool:
        return self.table.get(pc, self.init) >= 2

    def update(self, pc, taken: bool) -> None:
        c = self.table.get(pc, self.init)
        self.table[pc] = min(3, c + 1) if taken else max(0, c - 1)

    def copy(self) -> "PredictorState":
        p = PredictorState(self.init)
        p.table = dict(self.table)
        return p


def predict(predictor: PredictorState, branch_pc) -> bool:
    return predictor.predict(branch_pc)


def update(predictor: PredictorState, branch_pc, outcome: bool) -> None:
    predictor.update(branch_pc, outcome)


class CacheState:
    """64 sets x 8 ways, 64-byte lines, true LRU (rank 0 = most recent)."""

    LINE = 64
    SETS = 64
    WAYS = 8

    def __init__(self):
        self.tags = [[0] * self.WAYS for _ in range(self.SETS)]
        self.valid = [[False] * self.WAYS for _ in range(self.SETS)]
        self.rank = [list(range(self.WAYS)) for _ in range(self.SETS)]

    def _locate(self, addr: int) -> tuple[int, int]:
        line = addr // self.LINE
        return line % self.SETS, line // self.SETS

    def _touch(self, s: int, way: int) -> None:
        ranks = self.rank[s]
        r = ranks[way]
        for w in range(self.WAYS):
            if ranks[w] < r:
                ranks[w] += 1
        ranks[way] = 0

    def contains(self, addr: int) -> bool:
        s, tag = self._locate(addr)
        tags, valid = self.tags[s], self.valid[s]
        return any(valid[w] and tags[w] == tag for w in range(self.WAYS))

    def access(self, addr: int) -> bool:
        """Return True on hit. A miss installs the line, evicting the LRU way."""
        s, tag = self._locate(addr)
        tags, valid = self.tags[s], self.valid[s]
        for w in range(self.WAYS):
            if valid[w] and tags[w] == tag:
                self._touch(s, w)
                return True
        ranks = self.rank[s]
        victim = max(range(self.WAYS), key=lambda w: (not valid[w], ranks[w]))
        tags[victim] = tag
        valid[victim] = True
        self._touch(s, victim)
        return False

    def flush(self, addr: int) -> None:
        s, tag = self._locate(addr)
        for w in range(self.WAYS):
            if self.valid[s][w] and self.tags[s][w] == tag:
                self.valid[s][w] = False

    def copy(self) -> "CacheState":
        c = CacheState()
        c.tags = [list(t) for t in self.tags]
        c.valid = [list(v) for v in self.valid]
        c.rank = [list(r) for r in self.rank]
        return c


HIT, MISS = "HIT", "MISS"


def cache_access(cache: CacheState, addr: int) -> str:
    return HIT if cache.access(addr) else MISS


def cache_flush(cache: CacheState, addr: int) -> None:
    cache.flush(addr)


# ---------------------------------------------------------------------------
# Machine state
# ---------------------------------------------------------------------------


@dataclass
class Snapshot:
    regs: list[int]
    pc: int
    flag_eq: bool


@dataclass
class MachineState:
    regs: list[int] = field(default_factory=lambda: [0] * NUM_REGS)
    pc: int = 0
    mem: dict[int, int] = field(default_factory=dict)
    secret_region: tuple[int, int] = (0, 0)
    secret_mapped: bool = True
    cache: CacheState = field(default_factory=CacheState)
    predictor: PredictorState = field(default_factory=PredictorState)
    mode: Mode = Mode.ARCHITECTURAL
    transient_budget: int = 64
    snapshot: list[Snapshot] = field(default_factory=list)
    overlays: list[dict[int, int]] = field(default_factory=list)
    flag_eq: bool = False
    cycle: int = 0

    def in_secret(self, addr: int) -> bool:
        lo, hi = self.secret_region
        return lo <= addr < hi

    def write_bytes(self, addr: int, data: bytes) -> None:
        for i, b in enumerate(data):
            self.mem[addr + i] = b

    def write_u64(self, addr: int, value: int) -> None:
        self.write_bytes(addr, (value & MASK64).to_bytes(8, "little"))

    def read_u64(self, addr: int) -> int:
        return int.from_bytes(bytes(self.mem.get(addr + i, 0) for i in range(8)), "little")

    def architectural(self) -> tuple:
        return (tuple(self.regs), self.pc, self.flag_eq, tuple(sorted(self.mem.items())))


def enter_transient(state: MachineState, resume_pc: int, window: int | None = None) -> None:
    state.snapshot.append(Snapshot(list(state.regs), resume_pc, state.flag_eq))
    state.overlays.append({})
    state.mode = Mode.TRANSIENT
    if window is not None and len(state.snapshot) == 1:
        state.transient_budget = window


def squash(state: MachineState, pmu: CounterFile | None = None, window: int | None = None) -> MachineState:
    """Restore the innermost snapshot. Cache and predictor are left alone."""
    if state.mode is not Mode.TRANSIENT or not state.snapshot:
        raise IllegalSquash("squash outside a transient region")
    snap = state.snapshot.pop()
    state.overlays.pop()
    state.regs[:] = snap.regs
    state.pc = snap.pc
    state.flag_eq = snap.flag_eq
    if not state.snapshot:
        state.mode = Mode.ARCHITECTURAL
        if window is not None:
            state.transient_budget = window
    if pmu is not None:
        pmu.on_squash()
    return state


# ---------------------------------------------------------------------------
# Execution log
# ---------------------------------------------------------------------------


@dataclass
class LogRecord:
    pc: int
    cls: str
    kind: str
    mode: str
    cycle: int
    events: list[tuple[str, int]] = field(default_factory=list)
    status: str = "retired"

    def to_json(self) -> str:
        return json.dumps(
            {
                "pc": self.pc,
                "class": self.cls,
                "kind": self.kind,
                "mode": self.mode,
                "events": [[k, n] for k, n in self.events],
                "cycle": self.cycle,
                "status": self.status,
            },
            sort_keys=True,
        )


@dataclass
class ExecutionLog:
    records: list[LogRecord] = field(default_factory=list)
    pc_hits: list[int] = field(default_factory=list)
    cycles: int = 0
    faults: int = 0
    mispredicts: int = 0
    squashes: int = 0

    def write_jsonl(self, fh: IO[str]) -> None:
        for r in self.records:
            fh.write(r.to_json() + "\n")

    def transient_records(self) -> list[LogRecord]:
        return [r for r in self.records if r.mode == Mode.TRANSIENT.value]


# Fixed 12-instruction software exception handler. No memory traffic and only
# branches whose prediction is right from a cold predictor, so every
# invocation fires the same events.
HANDLER_STUB = assemble(
    """
    nop
    cmp r0, r0
    jne h_end
    nop
    fence
    jmp h_next
h_next:
    nop
    nop
    cmp r0, r0
    jne h_end
    fence
    nop
h_end:
    """
)

_K = {
    InstrKind.LOAD_INDIRECT: 0,
    InstrKind.STORE: 1,
    InstrKind.MOV_IMM: 2,
    InstrKind.CMP_REG: 3,
    InstrKind.JCC: 4,
    InstrKind.JMP: 5,
    InstrKind.NOP: 6,
    InstrKind.CLFLUSH: 7,
    InstrKind.FENCE: 8,
    InstrKind.READ_PMU: 9,
    InstrKind.TRIGGER: 10,
}
LOAD, STORE, MOV, CMP, JCC, JMP, NOP, CLFLUSH, FENCE, RDPMC, TRIG = range(11)


class Simulator:
    """Single-threaded interpreter for one program on one machine state."""

    def __init__(
        self,
        program: Program,
        state: MachineState,
        pmu: CounterFile,
        iset: Mapping[str, InstrClass] | None = None,
        suppression: SuppressionMode = SuppressionMode.TSX_LIKE,
        config: SimConfig = SimConfig(),
        record: bool = False,
    ):
        iset = iset if iset is not None else BUILTINS
        program.check_classes(iset)
        self.program = program
        self.state = state
        self.pmu = pmu
        self.config = config
        self.suppression = suppression
        self.record = record
        self.n = len(program.instructions)
        # the handler stub lives after the program body
        code = list(program.instructions)
        for ins in HANDLER_STUB.instructions:
            if ins.cls in ("je", "jne", "jmp"):
                ins = type(ins)(ins.cls, (ins.ops[0] + self.n,))
            code.append(ins)
        self.stub_start = self.n
        self.stub_end = len(code)
        self._decoded = []
        for ins in code:
            cls = iset[ins.cls]
            width = LOAD_WIDTH.get(ins.cls, 8)
            self._decoded.append(
                (_K[cls.kind], ins.ops, cls, cls.latency, ins.cls not in BUILTINS, width)
            )
        self.log = ExecutionLog(pc_hits=[0] * len(code))
        self._redirected = False
        self._cur: LogRecord | None = None
        self._listen: set[str] | None = None
        self.squash_observers: list[Callable[[MachineState, Snapshot], None]] = []
        self.transient_entry_observers: list[Callable[[MachineState], None]] = []
        # called after every architectural counter read
        self.read_observers: list[Callable[[CounterFile, int], None]] = []

    # -- events -----------------------------------------------------------

    def _emit(self, kind: S, transient: bool, amount: int = 1) -> None:
        # Structural is a str enum, so members match the string keys directly
        if amount <= 0:
            return
        listen = self._listen
        if listen is None or kind in listen:
            self.pmu.on_event(kind, transient, amount)
        if self._cur is not None:
            self._cur.events.append((kind.value, amount))

    # -- memory -----------------------------------------------------------

    def _read(self, addr: int, width: int) -> int:
        st = self.state
        mem = st.mem
        ovs = st.overlays
        val = 0
        for i in range(width):
            a = addr + i
            b = None
            for ov in reversed(ovs):
                if a in ov:
                    b = ov[a]
                    break
            if b is None:
                b = mem.get(a, 0)
            val |= b << (8 * i)
        return val

    def _write(self, addr: int, value: int, width: int) -> None:
        st = self.state
        target = st.overlays[-1] if st.overlays else st.mem
        for i in range(width):
            target[addr + i] = (value >> (8 * i)) & 0xFF

    def _forwarded(self, addr: int, width: int) -> int | None:
        st = self.state
        if not st.secret_mapped:
            return None
        if self.config.forward is ForwardMode.ZERO:
            return 0
        return self._read(addr, width)

    # -- execution --------------------------------------------------------

    def run(self) -> tuple[MachineState, ExecutionLog]:
        st = self.state
        st.transient_budget = self.config.window
        self._listen = None if self.record else set(self.pmu._by_kind)
        pc = st.pc
        cap = self.config.cycle_cap
        while 0 <= pc < self.n:
            if st.cycle > cap:
                raise BudgetExhausted(f"cycle cap {cap} exceeded at pc {pc}")
            pc = self._arch_step(pc)
            st.pc = pc
        self.log.cycles = st.cycle
        return st, self.log

    def _begin(self, pc: int, cls: InstrClass, transient: bool) -> None:
        self.log.pc_hits[pc] += 1
        if self.record:
            self._cur = LogRecord(
                pc, cls.id, cls.kind.value,
                (Mode.TRANSIENT if transient else Mode.ARCHITECTURAL).value, self.state.cycle,
            )
            self.log.records.append(self._cur)
        else:
            self._cur = None

    def _fetch(self, transient: bool, lat: int) -> None:
        self._emit(S.IFETCH_TAG_HIT, transient)
        if self._redirected:
            self._redirected = False
            self._emit(S.IFETCH_TAG_STALL, transient, self.config.icache_stall)
        self._emit(S.UOP_EXECUTED, transient)
        self._emit(S.CORE_CYCLES, transient, lat)
        if not transient:
            self._emit(S.INSTRUCTION_RETIRED, False)
        self.state.cycle += lat

    def _cache_load(self, addr: int, transient: bool) -> None:
        hit = self.state.cache.access(addr)
        self._emit(S.LOAD_EXECUTED, transient)
        if hit:
            self._emit(S.L1D_HIT, transient)
        else:
            cfg = self.config
            self._emit(S.L1D_MISS, transient)
            self._emit(S.L1D_MISS_PENDING_CYCLES, transient, cfg.miss_penalty)
            self._emit(S.RESOURCE_STALL_CYCLES, transient, cfg.resource_stall)
            self.state.cycle += cfg.miss_penalty

    def _arch_step(self, pc: int) -> int:
        k, ops, cls, lat, ingested, width = self._decoded[pc]
        st = self.state
        if k == LOAD:
            addr = (st.regs[ops[1]] + ops[2]) & MASK64
            if self.config.tee_protection and st.in_secret(addr):
                return self._fault(pc, ops[0], addr, width, cls, lat)
        elif k == JCC:
            self._begin(pc, cls, False)
            self._fetch(False, lat)
            nxt, _ = self._branch(pc, ops, False, self.config.window)
            return nxt
        return self._exec(pc, False)

    def _exec(self, pc: int, transient: bool, resolve: bool = True) -> int:
        """Execute one non-faulting micro-op; JCC here follows its prediction."""
        k, ops, cls, lat, ingested, width = self._decoded[pc]
        st = self.state
        regs = st.regs
        self._begin(pc, cls, transient)
        self._fetch(transient, lat)
        if ingested:
            self.pmu.on_instruction(cls, transient)
            if self._cur is not None:
                self._cur.events.extend(cls.event_signature)
            return pc + 1
        if k == LOAD:
            rd, rb, disp = ops
            addr = (regs[rb] + disp) & MASK64
            if self.config.tee_protection and st.in_secret(addr):
                v = self._forwarded(addr, width)
                val = 0 if v is None else v
            else:
                val = self._read(addr, width)
            self._cache_load(addr, transient)
            regs[rd] = val
        elif k == STORE:
            rb, disp, rs = ops
            addr = (regs[rb] + disp) & MASK64
            self._write(addr, regs[rs], width)
            st.cache.access(addr)
            self._emit(S.STORE_EXECUTED, transient)
        elif k == MOV:
            regs[ops[0]] = ops[1] & MASK64
        elif k == CMP:
            st.flag_eq = regs[ops[0]] == regs[ops[1]]
        elif k == JCC:
            # unresolved branch on a wrong path: follow the prediction
            self._emit(S.BRANCH_EXECUTED, transient)
            self._emit(S.COND_BRANCH_EXECUTED, transient)
            return ops[0] if st.predictor.predict(pc) else pc + 1
        elif k == JMP:
            self._emit(S.BRANCH_EXECUTED, transient)
            return ops[0]
        elif k == CLFLUSH:
            st.cache.flush((regs[ops[0]] + ops[1]) & MASK64)
            self._emit(S.CLFLUSH_EXECUTED, transient)
        elif k == FENCE:
            self._emit(S.FENCE_EXECUTED, transient)
        elif k == RDPMC:
            if transient:
                regs[ops[0]] = 0
            else:
                regs[ops[0]] = self.pmu.read_counter(ops[1])
                for obs in self.read_observers:
                    obs(self.pmu, ops[1])
        return pc + 1

    def _branch(self, pc: int, ops: tuple, transient: bool, budget_left: int) -> tuple[int, int]:
        """Resolve a conditional branch (already fetched). Returns (next pc, wrong-path ops)."""
        st = self.state
        cls = self._decoded[pc][2]
        taken = st.flag_eq if cls.id == "je" else not st.flag_eq
        predicted = st.predictor.predict(pc)
        self._emit(S.BRANCH_EXECUTED, transient)
        self._emit(S.COND_BRANCH_EXECUTED, transient)
        self._emit(S.COND_TAKEN_EXECUTED if taken else S.COND_NOT_TAKEN_EXECUTED, transient)
        target = ops[0]
        used = 0
        if predicted != taken:
            cfg = self.config
            self.log.mispredicts += 1
            wrong = target if predicted else pc + 1
            mark = len(self.log.records)
            enter_transient(st, pc, cfg.window)
            for obs in self.transient_entry_observers:
                obs(st)
            used = self._speculate(wrong, min(cfg.resolve_delay, budget_left), wrong_path=True)
            self._squash(mark)
            self._emit(S.BRANCH_MISPREDICTED, transient)
            self._emit(S.COND_BRANCH_MISPREDICTED, transient)
            self._emit(S.RESTEER_CYCLES, transient, cfg.resteer_cycles)
            self._emit(S.RECOVERY_CYCLES, transient, cfg.misp_recovery)
            st.cycle += cfg.misp_recovery + cfg.resteer_cycles
            self._redirected = True
        st.predictor.update(pc, taken)
        return (target if taken else pc + 1), used

    def _speculate(self, pc: int, budget: int, wrong_path: bool) -> int:
        st = self.state
        used = 0
        while used < budget and 0 <= pc < self.n:
            k, ops = self._decoded[pc][0], self._decoded[pc][1]
            if k == FENCE:
                break
            used += 1
            st.transient_budget -= 1
            if k == JCC and not wrong_path:
                self._begin(pc, self._decoded[pc][2], True)
                self._fetch(True, self._decoded[pc][3])
                pc, extra = self._branch(pc, ops, True, budget - used)
                used += extra
            else:
                pc = self._exec(pc, True)
        return used

    def _squash(self, mark: int) -> None:
        st = self.state
        snap = st.snapshot[-1]
        squash(st, self.pmu, self.config.window)
        self.log.squashes += 1
        if self.record:
            for r in self.log.records[mark:]:
                if r.mode == Mode.TRANSIENT.value:
                    r.status = "squashed"
        for obs in self.squash_observers:
            obs(st, snap)

    def _fault(self, pc: int, rd: int, addr: int, width: int, cls: InstrClass, lat: int) -> int:
        st = self.state
        cfg = self.config
        self.log.faults += 1
        # the faulting load never retires
        self._begin(pc, cls, True)
        self._fetch(True, lat)
        self._cache_load(addr, True)
        mark = len(self.log.records)
        enter_transient(st, pc, cfg.window)
        for obs in self.transient_entry_observers:
            obs(st)
        value = self._forwarded(addr, width)
        if value is not None:
            st.regs[rd] = value
            self._speculate(pc + 1, cfg.window, wrong_path=False)
        self._squash(mark)
        self._emit(S.MACHINE_CLEAR, False)
        self._emit(S.RECOVERY_CYCLES, False, cfg.fault_recovery)
        st.cycle += cfg.fault_recovery
        self._redirected = True
        if self.suppression is SuppressionMode.SOFTWARE_HANDLER:
            self._run_handler()
        return self.program.labels.get(cfg.handler_label, pc + 1)

    def _run_handler(self) -> None:
        st = self.state
        saved_flag = st.flag_eq
        pc = self.stub_start
        while self.stub_start <= pc < self.stub_end:
            k, ops = self._decoded[pc][0], self._decoded[pc][1]
            if k == JCC:
                self._begin(pc, self._decoded[pc][2], False)
                self._fetch(False, self._decoded[pc][3])
                pc, _ = self._branch(pc, ops, False, self.config.window)
            else:
                pc = self._exec(pc, False)
        st.flag_eq = saved_flag


def run(
    program: Program,
    state: MachineState,
    pmu: CounterFile,
    suppress: SuppressionMode = SuppressionMode.TSX_LIKE,
    iset: Mapping[str, InstrClass] | None = None,
    config: SimConfig = SimConfig(),
    record: bool = True,
) -> tuple[MachineState, ExecutionLog]:
    """Run ``program`` to completion on ``state``."""
    return Simulator(program, state, pmu, iset, suppress, config, record).run()
