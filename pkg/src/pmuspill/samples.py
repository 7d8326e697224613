"""Access to the sample inputs shipped in ``pmuspill/data``."""

from __future__ import annotations

import json
from functools import lru_cache
from pathlib import Path

from .catalog import (
    InstrFilter, XmlStats, load_event_catalog, load_instruction_set, tagged_universe,
)
from .isa import InstructionSet
from .pmu import EventDef

DATA_DIR = Path(__file__).resolve().parent / "data"


@lru_cache(maxsize=None)
def manifest() -> dict:
    return json.loads((DATA_DIR / "samples.json").read_text(encoding="utf-8"))


def path(key: str) -> Path:
    return DATA_DIR / manifest()[key]


def sample_events(augment: bool = True) -> list[EventDef]:
    return load_event_catalog(path("events"), path("augment") if augment else None)


def sample_instructions(
    events: list[EventDef] | None = None, stats: XmlStats | None = None, seed: int | None = None
) -> InstructionSet:
    """The filtered sample database, classified the way the sample catalog expects."""
    m = manifest()
    events = sample_events() if events is None else events
    classes = load_instruction_set(
        path("instructions"), InstrFilter.load(path("filter")),
        seed=m["seed"] if seed is None else seed, universe=tagged_universe(events), q=m["q"],
        stats=stats,
    )
    return InstructionSet(classes)
