"""Event x instruction sweep for counters that leak transient execution.

Scenario S1 fixes ``ins2`` to a no-op and iterates ``ins1`` over the
instruction set; S2 does the opposite. A cell (event, scenario, class) is a
trigger pair when leaking a known planted byte through that event, with that
class in the slot, recovers the byte.

Cells are not simulated one by one. The simulator only looks at a class's
kind, latency and which counters it feeds, so classes that agree on those
(a "behavior") produce identical machine runs. Each behavior is simulated once
per scenario with every event programmed at the same time, giving the
noiseless trace for every event. Each cell then decodes ``reps`` rounds from
that trace plus the cell's own seeded noise schedule, exactly as a replayed
leak would. ``engine="interpreter"`` skips all of this and runs every cell
through the simulator, which is the oracle the fast path is tested against.
"""

from __future__ import annotations

import csv
import enum
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Iterator, Mapping, Sequence, TextIO

from ..errors import EventDisabled
from ..isa import InstrClass, InstructionSet
from ..pmu import CounterFile, EventDef
from .decode import decode_trace, majority_vote
from .env import AttackEnv, stream_seed
from .gadget import GadgetSpec
from .leak import ATTACK_BLOCKERS, _microarch, leak_byte, run_rounds


class Scenario(enum.Enum):
    S1 = "S1"  # ins2 = nop, iterate ins1 (unequal path)
    S2 = "S2"  # ins1 = nop, iterate ins2 (equal path)

    @classmethod
    def parse(cls, text: str) -> "Scenario":
        return cls(text.strip().upper())


BOTH = (Scenario.S1, Scenario.S2)


def scenario_spec(base: GadgetSpec, scenario: Scenario, class_id: str) -> GadgetSpec:
    if scenario is Scenario.S1:
        return replace(base, ins1=class_id, ins2="nop")
    return replace(base, ins1="nop", ins2=class_id)


def behavior_key(cls: InstrClass, events: Sequence[EventDef]) -> tuple:
    """Everything about ``cls`` the simulator and these counters can observe."""
    sig = dict(cls.event_signature)
    hits = []
    for ev in events:
        if ev.name in sig:
            hits.append((ev.name, sig[ev.name]))
        elif ev.instructions is not None and cls.id in ev.instructions:
            hits.append((ev.name, 1))
    return (cls.kind, cls.latency, tuple(hits))


# ---------------------------------------------------------------------------
# Report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SummaryRow:
    event_name: str
    category: str
    scenario: str
    trigger_count: int
    vulnerable: bool


CSV_FIELDS = ("event_name", "category", "scenario", "trigger_count", "vulnerable")


@dataclass
class SweepReport:
    events: list[EventDef]
    scenarios: list[Scenario]
    classes: list[str]
    triggers: dict[tuple[str, Scenario], list[str]]
    reps: int
    secret_byte: int
    failures: dict[tuple[str, Scenario], str] = field(default_factory=dict)
    simulated_rounds: int = 0
    engine: str = "profile"

    @property
    def gadget_executions(self) -> int:
        return len(self.classes) * len(self.events) * self.reps * len(self.scenarios)

    def trigger_count(self, event: str, scenario: Scenario) -> int:
        return len(self.triggers.get((event, scenario), ()))

    def is_vulnerable(self, event: str) -> bool:
        return any(self.trigger_count(event, sc) for sc in self.scenarios)

    def vulnerable_events(self) -> list[str]:
        return [e.name for e in self.events if self.is_vulnerable(e.name)]

    def rows(self) -> Iterator[tuple[str, Scenario, str, bool]]:
        """One verdict per tested (event, scenario, class)."""
        for ev in self.events:
            for sc in self.scenarios:
                hit = set(self.triggers.get((ev.name, sc), ()))
                for cid in self.classes:
                    yield ev.name, sc, cid, cid in hit

    def summary(self) -> list[SummaryRow]:
        out = []
        for ev in self.events:
            vuln = self.is_vulnerable(ev.name)
            for sc in self.scenarios:
                out.append(SummaryRow(ev.name, ev.category, sc.value,
                                      self.trigger_count(ev.name, sc), vuln))
        return out

    def write_csv(self, fh: TextIO) -> None:
        write_summary_csv(self.summary(), fh)

    def to_json(self) -> dict:
        return {
            "reps": self.reps,
            "secret_byte": self.secret_byte,
            "engine": self.engine,
            "scenarios": [s.value for s in self.scenarios],
            "instruction_count": len(self.classes),
            "event_count": len(self.events),
            "gadget_executions": self.gadget_executions,
            "simulated_rounds": self.simulated_rounds,
            "vulnerable_events": self.vulnerable_events(),
            "events": [
                {
                    "event_name": ev.name,
                    "category": ev.category,
                    "vulnerable": self.is_vulnerable(ev.name),
                    "scenarios": {
                        sc.value: {
                            "trigger_count": self.trigger_count(ev.name, sc),
                            "triggers": list(self.triggers.get((ev.name, sc), ())),
                            **({"failure": self.failures[(ev.name, sc)]}
                               if (ev.name, sc) in self.failures else {}),
                        }
                        for sc in self.scenarios
                    },
                }
                for ev in self.events
            ],
        }

    def write_json(self, fh: TextIO) -> None:
        json.dump(self.to_json(), fh, indent=1, sort_keys=True)
        fh.write("\n")


def write_summary_csv(rows: Iterable[SummaryRow], fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([r.event_name, r.category, r.scenario, r.trigger_count, int(r.vulnerable)])


def read_summary_csv(fh: TextIO | str) -> list[SummaryRow]:
    if isinstance(fh, str):
        fh = io.StringIO(fh)
    reader = csv.DictReader(fh)
    if tuple(reader.fieldnames or ()) != CSV_FIELDS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    return [
        SummaryRow(r["event_name"], r["category"], r["scenario"], int(r["trigger_count"]),
                   r["vulnerable"].strip().lower() in ("1", "true"))
        for r in reader
    ]


# ---------------------------------------------------------------------------
# Profiling
# ---------------------------------------------------------------------------


@dataclass
class _Profile:
    traces: dict[str, list[tuple[int, ...]]]  # event -> per-round deltas
    blocked: dict[str, str]
    rounds: int


def _profile(env: AttackEnv, spec: GadgetSpec, events: Sequence[EventDef], reps: int) -> _Profile:
    """Noiseless traces of every event for one gadget configuration."""
    blocked: dict[str, str] = {}
    pmu = CounterFile(env.catalog, slots=max(1, len(events)), policy=env.pmu_policy,
                      root=env.root, disabled_events=env.disabled_events)
    slots: dict[int, str] = {}
    for ev in events:
        try:
            pmu.program_counter(len(slots), ev)
        except EventDisabled as exc:
            blocked[ev.name] = f"{type(exc).__name__}: {exc}"
            continue
        slots[len(slots)] = ev.name
    if not slots:
        return _Profile({}, blocked, 0)

    reads: dict[int, list[int]] = {s: [] for s in slots}

    def observe(counters: CounterFile, read_slot: int) -> None:
        for s in slots:
            reads[s].append(counters.counts[s] if s == read_slot else counters.read_counter(s))

    state = env.new_state()
    traces: dict[str, list[tuple[int, ...]]] = {name: [] for name in slots.values()}
    marks: list[tuple] = []
    done = 0
    try:
        while done < reps:
            for s in reads:
                reads[s].clear()
            run_rounds(env, spec, state, pmu, 1, spec.secret_addr, read_observer=observe,
                       after_round=lambda st: marks.append(_microarch(st)))
            done += 1
            for s, name in slots.items():
                r = reads[s]
                traces[name].append(tuple(r[i + 1] - r[i] for i in range(0, len(r), 2)))
            # a repeated microarchitectural state with repeated traces is a fixed point
            if done >= 3 and marks[-1] == marks[-2] and all(
                t[-1] == t[-2] for t in traces.values()
            ):
                break
    except ATTACK_BLOCKERS as exc:
        reason = f"{type(exc).__name__}: {exc}"
        return _Profile({}, {**blocked, **{n: reason for n in slots.values()}}, done)
    return _Profile(traces, blocked, done)


def _profile_task(args) -> _Profile:
    return _profile(*args)


def _cell_trigger(
    env: AttackEnv, ev: EventDef, traces: list[tuple[int, ...]], reps: int, secret: int, seed
) -> bool:
    """Decode ``reps`` noisy rounds of a profiled trace; True if the secret comes back."""
    if env.noise.silent:
        decodes = [decode_trace(traces[min(r, len(traces) - 1)]) for r in range(min(reps, len(traces)))]
        decodes += [decodes[-1]] * (reps - len(decodes))
        return majority_vote(decodes) == secret
    pmu = CounterFile({ev.name: ev}, slots=1, noise=env.noise, seed=seed)
    pmu.program_counter(0, ev)
    decodes = []
    for r in range(reps):
        deltas = list(traces[min(r, len(traces) - 1)])
        for k, _, amount in pmu.begin_run(2 * len(deltas)):
            if k % 2 == 1:
                deltas[k // 2] += amount
        pmu._pending = []
        decodes.append(decode_trace(deltas))
    return majority_vote(decodes) == secret


def cell_seed(env: AttackEnv, event: str, scenario: Scenario, class_id: str):
    return stream_seed(env.seed, event, scenario.value, class_id)


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------


def sweep(
    catalog: Mapping[str, EventDef] | Iterable[EventDef],
    instruction_set: InstructionSet,
    scenario: Scenario | Sequence[Scenario] = BOTH,
    reps: int = 10,
    *,
    env: AttackEnv | None = None,
    base_spec: GadgetSpec = GadgetSpec(),
    secret_byte: int = 0x5A,
    classes: Sequence[str] | None = None,
    engine: str = "profile",
    jobs: int = 1,
    progress: Callable[[str], None] | None = None,
) -> SweepReport:
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if engine not in ("profile", "interpreter"):
        raise ValueError(f"unknown sweep engine {engine!r}")
    events = list(catalog.values() if isinstance(catalog, Mapping) else catalog)
    scenarios = [scenario] if isinstance(scenario, Scenario) else list(scenario)
    if classes is None:
        classes = [c.id for c in instruction_set.ingested]
    base = env if env is not None else AttackEnv()
    env = replace(base, iset=instruction_set, catalog={e.name: e for e in events},
                  engine="interpreter", _calibrations={})
    env.plant_secret(bytes([secret_byte]))
    secret = secret_byte % base_spec.comparison_domain

    triggers: dict[tuple[str, Scenario], list[str]] = {}
    failures: dict[tuple[str, Scenario], str] = {}
    rounds = 0
    if engine == "interpreter":
        for sc in scenarios:
            for ev in events:
                hit = []
                for cid in classes:
                    run = leak_byte(scenario_spec(base_spec, sc, cid), ev, reps, env, 0,
                                    engine="interpreter", seed=cell_seed(env, ev.name, sc, cid))
                    rounds += len(run.traces)
                    if run.ok and run.byte == secret:
                        hit.append(cid)
                    elif run.reason and not run.traces:
                        failures[(ev.name, sc)] = run.reason
                triggers[(ev.name, sc)] = hit
            if progress:
                progress(f"{sc.value}: done")
        return SweepReport(events, scenarios, list(classes), triggers, reps, secret_byte,
                           failures, rounds, engine)

    # group classes by observable behavior, keep first-seen order
    groups: dict[tuple, list[str]] = {}
    for cid in classes:
        groups.setdefault(behavior_key(instruction_set[cid], events), []).append(cid)
    tasks = [(sc, key) for sc in scenarios for key in groups]
    args = [
        (env, scenario_spec(base_spec, sc, groups[key][0]), events, reps) for sc, key in tasks
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            profiles = list(pool.map(_profile_task, args, chunksize=4))
    else:
        profiles = []
        for i, a in enumerate(args):
            profiles.append(_profile(*a))
            if progress and (i + 1) % 10 == 0:
                progress(f"profiled {i + 1}/{len(args)} behaviors")

    for (sc, key), prof in zip(tasks, profiles):
        rounds += prof.rounds
        for ev in events:
            cell = triggers.setdefault((ev.name, sc), [])
            if ev.name in prof.blocked:
                failures[(ev.name, sc)] = prof.blocked[ev.name]
                continue
            traces = prof.traces[ev.name]
            if env.noise.silent:
                if _cell_trigger(env, ev, traces, reps, secret, None):
                    cell.extend(groups[key])
                continue
            for cid in groups[key]:
                if _cell_trigger(env, ev, traces, reps, secret, cell_seed(env, ev.name, sc, cid)):
                    cell.append(cid)
    # deterministic order: instruction-set order
    order = {cid: i for i, cid in enumerate(classes)}
    for k in triggers:
        triggers[k].sort(key=order.__getitem__)
    return SweepReport(events, scenarios, list(classes), triggers, reps, secret_byte,
                       failures, rounds, engine)
