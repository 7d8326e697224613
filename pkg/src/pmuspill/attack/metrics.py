"""Cost and accuracy of a batch of leaked bytes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from ..pmu import EventDef
from .env import AttackEnv
from .gadget import GadgetSpec
from .leak import LeakRun, leak_bytes

DEFAULT_CLOCK_HZ = 3.4e9


@dataclass(frozen=True)
class Metrics:
    bytes_total: int
    rounds: int
    executions_per_byte: float
    cycles_per_byte: float
    throughput_bps: float  # modeled bytes per simulated second
    error_rate: float
    failures: int
    wrong: int

    def as_dict(self) -> dict:
        return {
            "bytes": self.bytes_total,
            "rounds": self.rounds,
            "executions_per_byte": self.executions_per_byte,
            "cycles_per_byte": self.cycles_per_byte,
            "throughput_bps": self.throughput_bps,
            "error_rate": self.error_rate,
            "failures": self.failures,
            "wrong": self.wrong,
        }


def measure_metrics(
    runs: Sequence[LeakRun], truth: Sequence[int], clock_hz: float = DEFAULT_CLOCK_HZ
) -> Metrics:
    """Summarise ``runs`` against the planted bytes ``truth``."""
    if not runs:
        raise ValueError("need at least one leak run")
    if len(truth) != len(runs):
        raise ValueError("one true byte per run is required")
    if clock_hz <= 0:
        raise ValueError("clock_hz must be positive")
    n = len(runs)
    failures = sum(1 for r in runs if not r.ok)
    wrong = sum(1 for r, b in zip(runs, truth) if r.ok and r.byte != b)
    cycles = sum(r.cycles for r in runs) / n
    return Metrics(
        n,
        max(len(r.traces) for r in runs),
        sum(r.core_executions for r in runs) / n,
        cycles,
        clock_hz / cycles if cycles else 0.0,
        (failures + wrong) / n,
        failures,
        wrong,
    )


def throughput_table(
    spec: GadgetSpec,
    event: EventDef | str,
    env: AttackEnv,
    rounds: Sequence[int] = range(1, 11),
    offsets: Sequence[int] | None = None,
    clock_hz: float = DEFAULT_CLOCK_HZ,
    progress: Callable[[int, Metrics], None] | None = None,
) -> list[Metrics]:
    """Leak the same bytes once per round count and measure each batch."""
    offsets = list(range(len(env.secret))) if offsets is None else list(offsets)
    truth = [env.secret[o] for o in offsets]
    out = []
    for r in rounds:
        m = measure_metrics(leak_bytes(spec, event, r, env, offsets), truth, clock_hz)
        out.append(m)
        if progress is not None:
            progress(r, m)
    return out


def scaling_error(table: Sequence[Metrics]) -> float:
    """Worst |T(r) * r / T(1) - 1| over the table, taking its first row as r = 1."""
    t1 = table[0].throughput_bps
    return max(abs(m.throughput_bps * m.rounds / (t1 * table[0].rounds) - 1) for m in table)
