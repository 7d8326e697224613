"""Leaking secret bytes through one counter.

Two engines produce rounds. The interpreter runs the gadget on the simulator.
Calibrated replay runs the simulator a few times up front with two different
secret bytes and silent noise; if every round comes out identical and the
trace is a pure function of the secret (a constant trace, or one outlier at
the secret's index) later rounds are synthesised from that model plus the
counter file's own noise schedule. Seeds and noise draws are shared, so both
engines give the same traces, cycle counts and execution counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

from ..errors import DecodeFailure, EventDisabled, NoPrivilege, PmuDisabled, UnknownEvent
from ..isa import Program
from ..pmu import CounterFile, EventDef, NoiseModel
from ..sim import CacheState, MachineState, Simulator
from .decode import FAILURE, RecoveryTrace, Verdict, decode_trace, majority_vote
from .env import AttackEnv, stream_seed
from .gadget import GadgetSpec, build_gadget, lay_out, read_deltas

# PMU conditions that end an attack rather than signal a programming mistake
ATTACK_BLOCKERS = (EventDisabled, PmuDisabled, NoPrivilege)

_CAL_SECRETS = (0x5A, 0xA5)


@dataclass
class RoundResult:
    trace: RecoveryTrace
    cycles: int
    core_executions: int


@dataclass
class LeakRun:
    """Outcome of leaking one byte. Unpacks as ``(byte, traces)``."""

    byte: int | Verdict
    traces: list[RecoveryTrace] = field(default_factory=list)
    decodes: list[int | Verdict] = field(default_factory=list)
    core_executions: int = 0
    cycles: int = 0
    engine: str = "interpreter"
    reason: str | None = None

    def __iter__(self):
        yield self.byte
        yield self.traces

    @property
    def ok(self) -> bool:
        return not isinstance(self.byte, Verdict)

    def value(self) -> int:
        if not self.ok:
            raise DecodeFailure(self.reason or "no conclusive majority")
        return self.byte


@dataclass(frozen=True)
class Calibration:
    model: str  # "shifted", "constant", "blocked" or "none"
    domain: int
    base: tuple[int, ...] = ()
    d_eq: int = 0
    first_cycles: int = 0
    steady_cycles: int = 0
    core_per_round: int = 0
    reason: str | None = None

    @property
    def replayable(self) -> bool:
        return self.model in ("shifted", "constant", "blocked")

    def trace_for(self, secret_byte: int) -> list[int]:
        deltas = list(self.base)
        if self.model == "shifted" and secret_byte < self.domain:
            deltas[secret_byte] = self.d_eq
        return deltas


def resolve_event(env: AttackEnv, event: EventDef | str) -> EventDef:
    name = event if isinstance(event, str) else event.name
    if name not in env.catalog:
        if isinstance(event, EventDef):
            env.catalog[name] = event
        else:
            raise UnknownEvent(name)
    return env.catalog[name]


def gadget_program(env: AttackEnv, spec: GadgetSpec, slot: int = 0) -> Program:
    cache = env.calibration_cache()
    key = ("program", spec, slot)
    if key not in cache:
        cache[key] = build_gadget(spec, env.iset, slot)
    return cache[key]


def _microarch(state: MachineState) -> tuple:
    """Cache contents in LRU order per set plus the predictor table."""
    c = state.cache
    sets = tuple(
        tuple(sorted((c.rank[s][w], c.tags[s][w]) for w in range(c.WAYS) if c.valid[s][w]))
        for s in range(c.SETS)
    )
    return sets, tuple(sorted(state.predictor.table.items()))


def run_rounds(
    env: AttackEnv,
    spec: GadgetSpec,
    state: MachineState,
    pmu: CounterFile,
    rounds: int,
    secret_addr: int,
    read_observer: Callable | None = None,
    after_round: Callable[[MachineState], None] | None = None,
) -> list[RoundResult]:
    """Run the gadget ``rounds`` times on one machine, one trace per round."""
    program = gadget_program(env, spec)
    core_pc = program.labels["core"]
    reads = 2 * spec.comparison_domain
    lay_out(state, spec, secret_addr)
    out = []
    for r in range(rounds):
        if state.secret_mapped:
            state.cache.access(secret_addr)  # the victim uses its secret
        pmu.begin_run(reads)
        state.pc = 0
        start = state.cycle
        sim = Simulator(program, state, pmu, env.iset, spec.suppression, env.config)
        if read_observer is not None:
            sim.read_observers.append(read_observer)
        sim.run()
        pmu.end_run()
        out.append(RoundResult(
            RecoveryTrace(tuple(read_deltas(state, spec)), r), state.cycle - start,
            sim.log.pc_hits[core_pc],
        ))
        if after_round is not None:
            after_round(state)
    return out


def _secret_set(addr: int) -> int:
    return (addr // CacheState.LINE) % CacheState.SETS


def calibrate(env: AttackEnv, spec: GadgetSpec, event: EventDef, offset: int = 0) -> Calibration:
    """Fit the replay model for this configuration, or report that it does not apply."""
    spec.validate(env.iset)
    secret_addr = spec.secret_addr + offset
    key = ("calibration", spec, event, env.fingerprint(), _secret_set(secret_addr))
    cache = env.calibration_cache()
    if key in cache:
        return cache[key]
    d = spec.comparison_domain
    quiet = replace(env, noise=NoiseModel())
    fits = []
    try:
        for s in _CAL_SECRETS:
            s %= d
            pmu = quiet.counter_file(seed=0)
            pmu.program_counter(0, event)
            state = quiet.new_state(bytes(offset) + bytes([s]))
            marks: list[tuple] = []
            res = run_rounds(quiet, spec, state, pmu, 3, secret_addr,
                             after_round=lambda st: marks.append(_microarch(st)))
            fits.append((s, res, marks))
    except ATTACK_BLOCKERS as exc:
        cal = Calibration("blocked", d, reason=f"{type(exc).__name__}: {exc}")
        cache[key] = cal
        return cal

    def steady(res, marks):
        return (
            res[0].trace.deltas == res[1].trace.deltas == res[2].trace.deltas
            and res[0].core_executions == res[1].core_executions == res[2].core_executions
            and res[1].cycles == res[2].cycles
            and marks[1] == marks[2]
        )

    (sa, ra, ma), (sb, rb, mb) = fits
    cal = Calibration("none", d, reason="rounds are not a pure function of the secret")
    same_cost = (ra[0].cycles, ra[1].cycles, ra[0].core_executions) == (
        rb[0].cycles, rb[1].cycles, rb[0].core_executions)
    if steady(ra, ma) and steady(rb, mb) and same_cost:
        ta, tb = ra[0].trace.deltas, rb[0].trace.deltas
        common = dict(first_cycles=ra[0].cycles, steady_cycles=ra[1].cycles,
                      core_per_round=ra[0].core_executions)
        if ta == tb:
            cal = Calibration("constant", d, base=ta, **common)
        else:
            neq = ta[sb]
            expect_a = [neq] * d
            expect_a[sa] = ta[sa]
            expect_b = [neq] * d
            expect_b[sb] = ta[sa]
            if list(ta) == expect_a and list(tb) == expect_b:
                cal = Calibration("shifted", d, base=(neq,) * d, d_eq=ta[sa], **common)
    cache[key] = cal
    return cal


def _replay(cal: Calibration, secret_byte: int, pmu: CounterFile, rounds: int) -> list[RoundResult]:
    reads = 2 * cal.domain
    out = []
    for r in range(rounds):
        sched = pmu.begin_run(reads)
        pmu._pending = []
        deltas = cal.trace_for(secret_byte)
        for k, slot, amount in sched:
            # an increment moves the delta only when it lands on an end read
            if slot == 0 and k % 2 == 1:
                deltas[k // 2] += amount
        cycles = cal.first_cycles if r == 0 else cal.steady_cycles
        out.append(RoundResult(RecoveryTrace(tuple(deltas), r), cycles, cal.core_per_round))
    return out


def _finish(results: Sequence[RoundResult], engine: str, reason: str | None = None) -> LeakRun:
    traces = [r.trace for r in results]
    decodes = [decode_trace(t) for t in traces]
    byte = majority_vote(decodes)
    if reason is None and byte is FAILURE:
        reason = "no conclusive majority"
    return LeakRun(
        byte, traces, decodes,
        sum(r.core_executions for r in results), sum(r.cycles for r in results), engine, reason,
    )


def leak_byte(
    spec: GadgetSpec,
    event: EventDef | str,
    rounds: int,
    env: AttackEnv,
    offset: int = 0,
    engine: str | None = None,
    seed=None,
) -> LeakRun:
    """Recover the victim byte at ``offset`` by majority vote over ``rounds`` gadget runs."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    spec.validate(env.iset)
    ev = resolve_event(env, event)
    engine = engine or env.engine
    if seed is None:
        seed = stream_seed(env.seed, ev.name, offset)
    pmu = env.counter_file(seed=seed)
    try:
        pmu.program_counter(0, ev)
    except ATTACK_BLOCKERS as exc:
        return LeakRun(FAILURE, engine=engine, reason=f"{type(exc).__name__}: {exc}")

    env.running = True
    try:
        if engine == "auto":
            cal = calibrate(env, spec, ev, offset)
            if cal.model == "blocked":
                return LeakRun(FAILURE, engine="replay", reason=cal.reason)
            if cal.replayable:
                secret_byte = env.secret[offset] if env.launched and offset < len(env.secret) else 0
                return _finish(_replay(cal, secret_byte, pmu, rounds), "replay")
        state = env.new_state()
        try:
            res = run_rounds(env, spec, state, pmu, rounds, spec.secret_addr + offset)
        except ATTACK_BLOCKERS as exc:
            return LeakRun(FAILURE, engine="interpreter", reason=f"{type(exc).__name__}: {exc}")
        return _finish(res, "interpreter")
    finally:
        env.running = False


def leak_bytes(
    spec: GadgetSpec,
    event: EventDef | str,
    rounds: int,
    env: AttackEnv,
    offsets: Iterable[int],
    progress: Callable[[int], None] | None = None,
) -> list[LeakRun]:
    out = []
    for i, off in enumerate(offsets):
        out.append(leak_byte(spec, event, rounds, env, off))
        if progress is not None:
            progress(i + 1)
    return out
