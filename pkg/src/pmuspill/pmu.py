"""Performance Monitor Unit model: event definitions and the counter file.

Whether a transient event reaches a counter depends on two things:

* the event's ``persistence``: RETIREMENT_COUNTED events ignore anything the
  pipeline flags as transient, SPECULATIVE_COUNTED events may see it;
* the counter file ``policy``: VULNERABLE counts speculative events straight
  away, RETIRE_ONLY drops them, RENAMED parks them in a shadow register that
  is folded in on retire and discarded on squash, DISABLED counts nothing and
  refuses reads.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import EventDisabled, InvalidSlot, NoPrivilege, PmuDisabled, UnknownEvent
from .isa import InstrClass


class Persistence(enum.Enum):
    SPECULATIVE_COUNTED = "SPECULATIVE_COUNTED"
    RETIREMENT_COUNTED = "RETIREMENT_COUNTED"


class CounterPolicy(enum.Enum):
    VULNERABLE = "VULNERABLE"
    RETIRE_ONLY = "RETIRE_ONLY"
    RENAMED = "RENAMED"
    DISABLED = "DISABLED"


class Structural(str, enum.Enum):
    """Event kinds fired by the pipeline itself rather than by a particular instruction."""

    IFETCH_TAG_HIT = "IFETCH_TAG_HIT"
    IFETCH_TAG_STALL = "IFETCH_TAG_STALL"
    UOP_EXECUTED = "UOP_EXECUTED"
    INSTRUCTION_RETIRED = "INSTRUCTION_RETIRED"
    CORE_CYCLES = "CORE_CYCLES"
    BRANCH_EXECUTED = "BRANCH_EXECUTED"
    COND_BRANCH_EXECUTED = "COND_BRANCH_EXECUTED"
    COND_TAKEN_EXECUTED = "COND_TAKEN_EXECUTED"
    COND_NOT_TAKEN_EXECUTED = "COND_NOT_TAKEN_EXECUTED"
    BRANCH_MISPREDICTED = "BRANCH_MISPREDICTED"
    COND_BRANCH_MISPREDICTED = "COND_BRANCH_MISPREDICTED"
    RESTEER_CYCLES = "RESTEER_CYCLES"
    RECOVERY_CYCLES = "RECOVERY_CYCLES"
    MACHINE_CLEAR = "MACHINE_CLEAR"
    LOAD_EXECUTED = "LOAD_EXECUTED"
    STORE_EXECUTED = "STORE_EXECUTED"
    L1D_HIT = "L1D_HIT"
    L1D_MISS = "L1D_MISS"
    L1D_MISS_PENDING_CYCLES = "L1D_MISS_PENDING_CYCLES"
    RESOURCE_STALL_CYCLES = "RESOURCE_STALL_CYCLES"
    CLFLUSH_EXECUTED = "CLFLUSH_EXECUTED"
    FENCE_EXECUTED = "FENCE_EXECUTED"
    # Present in catalogs but never produced by this pipeline model.
    DTLB_WALK = "DTLB_WALK"
    ITLB_WALK = "ITLB_WALK"
    L2_MISS = "L2_MISS"
    LLC_MISS = "LLC_MISS"
    OFFCORE_REQUEST = "OFFCORE_REQUEST"
    FP_ASSIST = "FP_ASSIST"
    UNMODELED = "UNMODELED"


@dataclass(frozen=True)
class EventDef:
    name: str
    category: str
    event_code: int
    umask: int
    persistence: Persistence = Persistence.RETIREMENT_COUNTED
    structural: Structural | None = None
    instructions: frozenset[str] | None = None
    baseline: int = 0
    description: str = ""
    provenance: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if not 0 <= self.event_code <= 0xFF or not 0 <= self.umask <= 0xFF:
            raise ValueError(f"{self.name}: event_code/umask must fit in 8 bits")
        if (self.structural is None) == (self.instructions is None):
            raise ValueError(f"{self.name}: exactly one of structural/instructions is required")
        if self.instructions is not None and not self.instructions:
            raise ValueError(f"{self.name}: instruction-tagged set must be non-empty")
        if self.baseline < 0:
            raise ValueError(f"{self.name}: baseline must be >= 0")

    @property
    def id(self) -> str:
        return self.name

    @property
    def key(self) -> tuple[int, int]:
        return (self.event_code, self.umask)

    @property
    def speculative(self) -> bool:
        return self.persistence is Persistence.SPECULATIVE_COUNTED


@dataclass(frozen=True)
class NoiseModel:
    """Spurious counter increments drawn once per gadget run.

    ``p``: each programmed counter gains +1 with this probability.
    ``burst_p``/``burst_mean``: unisolated-core mode, a geometric burst of
    increments with the given mean.
    """

    p: float = 0.0
    burst_p: float = 0.0
    burst_mean: float = 3.0

    @property
    def silent(self) -> bool:
        return self.p <= 0 and self.burst_p <= 0


# action codes for transient events, per slot
_COUNT, _DROP, _SHADOW = 0, 1, 2


class CounterFile:
    """A bank of programmable counters attached to one simulator instance."""

    def __init__(
        self,
        catalog: Iterable[EventDef] | Mapping[str, EventDef] = (),
        slots: int = 8,
        policy: CounterPolicy = CounterPolicy.VULNERABLE,
        noise: NoiseModel = NoiseModel(),
        seed: int | None = None,
        root: bool = True,
        disabled_events: Iterable[str] = (),
        gated: bool = False,
    ):
        if isinstance(catalog, Mapping):
            catalog = catalog.values()
        self.catalog: dict[str, EventDef] = {e.name: e for e in catalog}
        self.nslots = slots
        self.policy = policy
        self.noise = noise
        self.rng = np.random.default_rng(seed)
        self.root = root
        self.gated = gated
        self.disabled_events = frozenset(disabled_events)
        self.programmed: dict[int, EventDef] = {}
        self.counts: dict[int, int] = {}
        self.shadow: dict[int, int] = {}
        self._reads = 0
        self._pending: list[tuple[int, int, int]] = []
        self._reindex()

    # -- programming --------------------------------------------------------

    def program_counter(self, slot: int, event: EventDef | str) -> None:
        if not 0 <= slot < self.nslots:
            raise InvalidSlot(f"slot {slot} outside 0..{self.nslots - 1}")
        name = event if isinstance(event, str) else event.name
        if name in self.disabled_events:
            raise EventDisabled(f"event {name} is disabled by policy")
        if name not in self.catalog:
            raise UnknownEvent(name)
        self.programmed[slot] = self.catalog[name]
        self.counts[slot] = 0
        self.shadow.pop(slot, None)
        self._reindex()

    def _reindex(self) -> None:
        self._by_kind: dict[str, list[int]] = {}
        self._by_name: dict[str, list[int]] = {}
        self._by_class: dict[str, list[int]] = {}
        self._action: dict[int, int] = {}
        for slot, ev in self.programmed.items():
            if ev.structural is not None:
                self._by_kind.setdefault(ev.structural.value, []).append(slot)
            else:
                self._by_name.setdefault(ev.name, []).append(slot)
                for cid in ev.instructions:
                    self._by_class.setdefault(cid, []).append(slot)
            if self.policy is CounterPolicy.DISABLED or not ev.speculative:
                act = _DROP
            elif self.policy is CounterPolicy.VULNERABLE:
                act = _COUNT
            elif self.policy is CounterPolicy.RENAMED:
                act = _SHADOW
            else:
                act = _DROP
            self._action[slot] = act
        self._off = self.policy is CounterPolicy.DISABLED

    # -- simulator hooks ----------------------------------------------------

    def _bump(self, slot: int, amount: int, transient: bool) -> None:
        if not transient:
            self.counts[slot] += amount
            return
        act = self._action[slot]
        if act == _COUNT:
            self.counts[slot] += amount
        elif act == _SHADOW:
            self.shadow[slot] = self.shadow.get(slot, 0) + amount

    def on_event(self, kind, transient: bool, amount: int = 1, source: str | None = None) -> None:
        """Deliver a structural event (or a named signature event) to matching counters."""
        if self._off:
            return
        # Structural members hash and compare like their string values
        slots = self._by_kind.get(kind) or self._by_name.get(kind)
        if slots:
            for s in slots:
                self._bump(s, amount, transient)

    def on_instruction(self, cls: InstrClass, transient: bool) -> None:
        """Deliver an executed instruction: signature events and tagged sets."""
        if self._off:
            return
        hit: dict[int, int] = {}
        for s in self._by_class.get(cls.id, ()):
            hit[s] = 1
        for name, inc in cls.event_signature:
            for s in self._by_name.get(name, ()):
                hit[s] = inc
        for s, inc in hit.items():
            self._bump(s, inc, transient)

    def on_squash(self) -> None:
        self.shadow.clear()

    def on_retire(self, region=None) -> None:
        for s, v in self.shadow.items():
            self.counts[s] += v
        self.shadow.clear()

    # -- reads and noise ----------------------------------------------------

    def begin_run(self, n_reads: int) -> list[tuple[int, int, int]]:
        """Schedule this run's spurious increments as (read index, slot, amount)."""
        self._reads = 0
        self._pending = []
        if self.noise.silent or n_reads <= 0:
            return []
        for slot in sorted(self.programmed):
            if self.noise.p > 0 and self.rng.random() < self.noise.p:
                self._pending.append((int(self.rng.integers(n_reads)), slot, 1))
            if self.noise.burst_p > 0 and self.rng.random() < self.noise.burst_p:
                size = int(self.rng.geometric(1.0 / self.noise.burst_mean))
                self._pending.append((int(self.rng.integers(n_reads)), slot, size))
        return list(self._pending)

    def end_run(self) -> None:
        """Flush spurious increments scheduled past the last read."""
        for _, slot, amount in self._pending:
            self.counts[slot] += amount
        self._pending = []

    def read_counter(self, slot: int) -> int:
        if not self.root:
            raise NoPrivilege("reading PMU counters needs root")
        if self.policy is CounterPolicy.DISABLED or self.gated:
            raise PmuDisabled("PMU is disabled")
        if slot not in self.programmed:
            raise InvalidSlot(f"slot {slot} is not programmed")
        idx = self._reads
        self._reads += 1
        if self._pending:
            keep = []
            for k, s, amount in self._pending:
                if k <= idx:
                    self.counts[s] += amount
                else:
                    keep.append((k, s, amount))
            self._pending = keep
        self.counts[slot] += self.programmed[slot].baseline
        return self.counts[slot]

    def snapshot_counts(self) -> dict[int, int]:
        return dict(self.counts)
