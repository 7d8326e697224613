"""Side-by-side evaluation of counter policies.

Two questions per policy: does the byte leak still work, and does ordinary
profiling (programs that never fault or mispredict) still see the counts it
would see on an unprotected machine.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from .attack.env import AttackEnv
from .attack.gadget import GadgetSpec
from .attack.leak import leak_bytes
from .errors import PmuError
from .isa import InstructionSet, Program, assemble
from .mitigations import BASELINE, LaunchStatus, MitigationPolicy, apply_policy, tee_launch_check
from .pmu import CounterFile, CounterPolicy, EventDef
from .sim import MachineState, Simulator

BENCH_DATA = 0x700000


def benchmark_program(
    iset: InstructionSet, rng: random.Random, length: int = 40, favour: Sequence[str] = ()
) -> Program:
    """Straight-line code: triggers, loads, stores and never-taken branches.

    Branches compare a register with itself and jump on ``jne``, so with the
    predictor's default not-taken state nothing is ever mispredicted, and no
    access leaves the mapped data area, so nothing faults. Half the triggers
    come from ``favour`` when it is given.
    """
    ids = [c.id for c in iset.ingested] or list(iset)
    lines = [f"mov r1, {BENCH_DATA:#x}", "mov r2, 7"]
    for n in range(length):
        pick = rng.random()
        if pick < 0.55 and ids:
            pool = favour if favour and rng.random() < 0.5 else ids
            lines.append(f"trigger {rng.choice(pool)}")
        elif pick < 0.7:
            lines.append(f"load r{rng.randrange(3, 8)}, [r1+{8 * rng.randrange(64)}]")
        elif pick < 0.8:
            lines.append(f"store [r1+{8 * rng.randrange(64)}], r2")
        elif pick < 0.9:
            lines += ["cmp r2, r2", f"jne skip{n}", f"skip{n}:"]
        else:
            lines.append("nop")
    return assemble("\n".join(lines), iset)


def benchmark_suite(
    iset: InstructionSet, count: int = 20, seed: int = 0, events: Sequence[EventDef] = ()
) -> list[Program]:
    """Seeded benchmark programs, favouring classes that tagged events count."""
    rng = random.Random(seed)
    favour = sorted({c for e in events if e.instructions for c in e.instructions if c in iset})
    return [benchmark_program(iset, rng, favour=favour) for _ in range(count)]


def profile_counts(
    env: AttackEnv, programs: Sequence[Program], events: Sequence[str]
) -> dict[str, int] | None:
    """Final count per event summed over ``programs``.

    Events the policy will not let us program are left out. Returns None when
    no counter can be read at all.
    """
    usable = [e for e in events if e not in env.disabled_events]
    totals = dict.fromkeys(usable, 0)
    step = env.slots
    for prog in programs:
        for i in range(0, len(usable), step):
            batch = usable[i:i + step]
            pmu = CounterFile(env.catalog, slots=len(batch), policy=env.pmu_policy,
                              root=env.root, disabled_events=env.disabled_events)
            for slot, name in enumerate(batch):
                pmu.program_counter(slot, name)
            Simulator(prog, MachineState(), pmu, env.iset, config=env.config).run()
            try:
                for slot, name in enumerate(batch):
                    totals[name] += pmu.read_counter(slot) - pmu.programmed[slot].baseline
            except PmuError:
                return None
    return totals


def compare_profiles(reference: dict[str, int], got: dict[str, int] | None) -> str:
    if got is None:
        return "unreadable"
    if any(reference[k] != v for k, v in got.items()):
        return "differs"
    return "identical" if len(got) == len(reference) else "reduced"


@dataclass
class PolicyRow:
    label: str
    launch: LaunchStatus
    bytes_total: int
    recovered: int
    failures: int
    failure_modes: dict[str, int] = field(default_factory=dict)
    profiling: str = "-"  # see compare_profiles

    @property
    def accuracy(self) -> float:
        return self.recovered / self.bytes_total if self.bytes_total else 0.0

    @property
    def failure_mode(self) -> str:
        if not self.failure_modes:
            return "-"
        return max(sorted(self.failure_modes), key=self.failure_modes.get)

    def as_dict(self) -> dict:
        return {
            "policy": self.label,
            "launch": self.launch.value,
            "bytes": self.bytes_total,
            "recovered": self.recovered,
            "accuracy": self.accuracy,
            "failures": self.failures,
            "failure_mode": self.failure_mode,
            "profiling": self.profiling,
        }


def default_policies(catalog: dict[str, EventDef] | None = None) -> list[MitigationPolicy]:
    out = [MitigationPolicy(p) for p in CounterPolicy]
    out.append(MitigationPolicy(CounterPolicy.VULNERABLE, tee_gate=True))
    if catalog:
        spec = frozenset(n for n, e in catalog.items() if e.speculative)
        out.append(MitigationPolicy(CounterPolicy.VULNERABLE, per_event_disable=spec))
    return out


def _mode(reason: str | None) -> str:
    if not reason:
        return "wrong byte"
    return reason.split(":", 1)[0]


def mitigation_eval(
    env: AttackEnv,
    spec: GadgetSpec,
    event: str,
    offsets: Sequence[int],
    rounds: int = 10,
    policies: Sequence[MitigationPolicy] | None = None,
    programs: Sequence[Program] = (),
    profile_events: Sequence[str] | None = None,
    progress: Callable[[str], None] | None = None,
) -> list[PolicyRow]:
    """Run the same leak workload and profiling benchmark under each policy."""
    policies = default_policies(env.catalog) if policies is None else policies
    profile_events = list(env.catalog) if profile_events is None else list(profile_events)
    reference = None
    if programs:
        reference = profile_counts(apply_policy(replace(env, _calibrations={}), BASELINE),
                                   programs, profile_events)
    truth = [env.secret[o] for o in offsets]
    rows = []
    for pol in policies:
        if progress is not None:
            progress(pol.label)
        penv = apply_policy(replace(env, _calibrations={}), pol)
        runs = leak_bytes(spec, event, rounds, penv, offsets)
        modes = Counter(_mode(r.reason) for r, b in zip(runs, truth) if not (r.ok and r.byte == b))
        row = PolicyRow(
            pol.label, tee_launch_check(penv), len(runs),
            sum(1 for r, b in zip(runs, truth) if r.ok and r.byte == b),
            sum(1 for r in runs if not r.ok), dict(modes),
        )
        if programs:
            row.profiling = compare_profiles(
                reference, profile_counts(penv, programs, profile_events))
        rows.append(row)
    return rows
