"""Loaders for PMU event catalogs (JSON) and instruction databases (XML).

Event catalogs follow the pmu-tools layout, a JSON array of objects with
``EventName``/``EventCode``/``UMask``/``BriefDescription``. Lower-case keys
(``name``, ``event_code``, ``umask``, ``description``, ``category``) are
accepted too. Optional model keys say how the simulator drives the event:
``Persistence``, ``Structural`` (a pipeline event kind) or ``Instructions``
(class ids that fire it), and ``Baseline``.

Instruction databases follow the uops.info layout: ``instruction`` elements
with an ``asm`` attribute, optionally nested in ``extension`` elements. Only
``asm`` and the extension tag are used; every other attribute is counted and
ignored.
"""

from __future__ import annotations

import json
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .errors import DuplicateEvent, ParseError
from .isa import InstrClass, InstructionSet, Signature, classify, load_mapping
from .pmu import EventDef, Persistence, Structural

# ---------------------------------------------------------------------------
# Events
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RawEventRecord:
    name: str
    event_code: str
    umask: str
    description: str = ""
    category: str | None = None
    extra: Mapping[str, Any] = field(default_factory=dict, compare=False)
    line: int = 0


_KEYS = {
    "name": ("EventName", "name"),
    "event_code": ("EventCode", "event_code"),
    "umask": ("UMask", "umask"),
    "description": ("BriefDescription", "description", "PublicDescription"),
    "category": ("Category", "category"),
    "persistence": ("Persistence", "persistence"),
    "structural": ("Structural", "structural"),
    "instructions": ("Instructions", "instructions"),
    "baseline": ("Baseline", "baseline"),
}


def _get(obj: Mapping, key: str, default=None):
    for k in _KEYS[key]:
        if k in obj:
            return obj[k]
    return default


def _line_of(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    return line, pos - (text.rfind("\n", 0, pos) + 1) + 1


def _records_with_positions(text: str, where: str) -> list[tuple[Any, int]]:
    """Decode the event array, remembering where each record starts."""
    if not text.strip():
        return []
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{where}: {exc.msg}", exc.lineno, exc.colno) from None
    if isinstance(doc, dict):
        if not isinstance(doc.get("events"), list):
            raise ParseError(f"{where}: expected an array or an object with an 'events' array", 1, 1)
        m = re.search(r'"events"\s*:\s*\[', text)
        start = m.end() - 1
        items = doc["events"]
    elif isinstance(doc, list):
        start = text.index("[")
        items = doc
    else:
        raise ParseError(f"{where}: expected an array of event objects", 1, 1)
    dec = json.JSONDecoder()
    pos = start + 1
    out = []
    for _ in items:
        while text[pos] in " \t\r\n,":
            pos += 1
        obj, end = dec.raw_decode(text, pos)
        out.append((obj, pos))
        pos = end
    return out


def _hex8(value, what: str, name: str, line: int, col: int) -> int:
    text = str(value).strip()
    if "," in text:  # pmu-tools lists alternatives as "0xB7,0xBB"
        text = text.split(",", 1)[0].strip()
    try:
        v = int(text, 16) if not isinstance(value, int) else value
    except ValueError:
        raise ParseError(f"{name}: {what} {value!r} is not hex", line, col) from None
    if not 0 <= v <= 0xFF:
        raise ParseError(f"{name}: {what} {value!r} exceeds 8 bits", line, col)
    return v


def parse_event_records(text: str, where: str = "<catalog>") -> list[RawEventRecord]:
    out = []
    for obj, pos in _records_with_positions(text, where):
        line, col = _line_of(text, pos)
        if not isinstance(obj, dict):
            raise ParseError(f"{where}: event record must be an object", line, col)
        name = _get(obj, "name")
        code = _get(obj, "event_code")
        umask = _get(obj, "umask")
        if not name or code is None or umask is None:
            raise ParseError(f"{where}: record needs a name, an event code and a umask", line, col)
        out.append(RawEventRecord(
            str(name), str(code), str(umask), str(_get(obj, "description", "") or ""),
            _get(obj, "category"), obj, line,
        ))
    return out


def normalize_event(raw: RawEventRecord, source: str, col: int = 1) -> EventDef:
    line = raw.line
    code = _hex8(raw.event_code, "event_code", raw.name, line, col)
    umask = _hex8(raw.umask, "umask", raw.name, line, col)
    extra = dict(raw.extra)
    trigger = extra.get("trigger")
    if isinstance(trigger, Mapping):  # {"trigger": {"structural": kind} | {"instructions": [...]}}
        extra.update({k: v for k, v in trigger.items() if k in ("structural", "instructions")})
    try:
        persistence = Persistence(_get(extra, "persistence", Persistence.RETIREMENT_COUNTED.value))
        instructions = _get(extra, "instructions")
        structural = None
        if instructions is None:
            structural = Structural(_get(extra, "structural", Structural.UNMODELED.value))
        else:
            instructions = frozenset(str(i) for i in instructions)
        return EventDef(
            raw.name, raw.category or raw.name.split(".", 1)[0], code, umask, persistence,
            structural, instructions, int(_get(extra, "baseline", 0)), raw.description,
            f"{source}:{line}",
        )
    except ValueError as exc:
        raise ParseError(f"{raw.name}: {exc}", line, col) from None


def _load_events_file(path: str | Path) -> list[EventDef]:
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    return [normalize_event(r, p.name) for r in parse_event_records(text, p.name)]


def load_event_catalog(path: str | Path, augment: str | Path | None = None) -> list[EventDef]:
    """Events from ``path`` followed by those of ``augment``, in file order."""
    events = _load_events_file(path)
    if augment is not None:
        events += _load_events_file(augment)
    seen: dict[tuple[int, int], EventDef] = {}
    names: set[str] = set()
    for ev in events:
        line = int(ev.provenance.rsplit(":", 1)[1]) if ev.provenance else 0
        if ev.key in seen:
            first = seen[ev.key]
            raise DuplicateEvent(
                f"{ev.name} repeats event_code={ev.event_code:#04x} umask={ev.umask:#04x} "
                f"of {first.name}", line, 1,
            )
        if ev.name in names:
            raise DuplicateEvent(f"event name {ev.name} appears twice", line, 1)
        seen[ev.key] = ev
        names.add(ev.name)
    return events


def catalog_dict(events: Iterable[EventDef]) -> dict[str, EventDef]:
    return {e.name: e for e in events}


def dump_event(ev: EventDef) -> dict:
    """Inverse of :func:`normalize_event` (provenance aside)."""
    out = {
        "EventName": ev.name,
        "EventCode": f"0x{ev.event_code:02X}",
        "UMask": f"0x{ev.umask:02X}",
        "BriefDescription": ev.description,
        "Category": ev.category,
        "Persistence": ev.persistence.value,
    }
    if ev.instructions is not None:
        out["Instructions"] = sorted(ev.instructions)
    else:
        out["Structural"] = ev.structural.value
    if ev.baseline:
        out["Baseline"] = ev.baseline
    return out


# ---------------------------------------------------------------------------
# Instructions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RawInstrRecord:
    asm: str
    extension: str = ""
    attributes: Mapping[str, str] = field(default_factory=dict, compare=False)
    index: int = 0
    source: str | None = None

    def __post_init__(self):
        if not self.asm.strip():
            raise ValueError("instruction record with empty asm")


@dataclass
class XmlStats:
    raw_records: int = 0
    ignored_attributes: int = 0
    kept: int = 0


def parse_instruction_xml(path: str | Path, stats: XmlStats | None = None) -> list[RawInstrRecord]:
    p = Path(path)
    stats = stats if stats is not None else XmlStats()
    out: list[RawInstrRecord] = []
    ext_stack: list[str] = []
    try:
        for event, el in ET.iterparse(p, events=("start", "end")):
            if el.tag == "extension":
                if event == "start":
                    ext_stack.append(el.get("name", ""))
                else:
                    ext_stack.pop()
                    el.clear()
                continue
            if el.tag != "instruction" or event != "end":
                continue
            attrs = dict(el.attrib)
            asm = attrs.pop("asm", "").strip()
            ext = attrs.pop("extension", ext_stack[-1] if ext_stack else "")
            stats.ignored_attributes += len(attrs)
            if not asm:
                raise ParseError(f"{p.name}: instruction without asm", 0, 0)
            out.append(RawInstrRecord(asm, ext, attrs, len(out), f"{p.name}#{len(out)}"))
            el.clear()
    except ET.ParseError as exc:
        line, col = exc.position
        raise ParseError(f"{p.name}: {exc}", line, col) from None
    stats.raw_records = len(out)
    return out


@dataclass(frozen=True)
class InstrFilter:
    """Declarative stand-in for "assembles and runs on the target machine".

    A record survives when its extension is allowed (or no allowlist is set),
    is not denied, its asm matches no deny pattern, and it matches some allow
    pattern (when any are given). An empty allowlist rejects everything.
    """

    allow_extensions: frozenset[str] | None = None
    deny_extensions: frozenset[str] = frozenset()
    deny_asm: tuple[str, ...] = ()
    allow_asm: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "_deny", [re.compile(p) for p in self.deny_asm])
        object.__setattr__(self, "_allow", [re.compile(p) for p in self.allow_asm])

    def __call__(self, rec: RawInstrRecord) -> bool:
        if self.allow_extensions is not None and rec.extension not in self.allow_extensions:
            return False
        if rec.extension in self.deny_extensions:
            return False
        if any(r.search(rec.asm) for r in self._deny):
            return False
        if self._allow and not any(r.search(rec.asm) for r in self._allow):
            return False
        return True

    @classmethod
    def from_json(cls, data: Mapping) -> "InstrFilter":
        allow = data.get("allow_extensions")
        return cls(
            None if allow is None else frozenset(allow),
            frozenset(data.get("deny_extensions", ())),
            tuple(data.get("deny_asm", ())),
            tuple(data.get("allow_asm", ())),
        )

    @classmethod
    def load(cls, path: str | Path) -> "InstrFilter":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


ACCEPT_ALL = InstrFilter()


def tagged_universe(events: Iterable[EventDef]) -> list[str]:
    """Names of instruction-tagged events, in catalog order."""
    return [e.name for e in events if e.instructions is not None]


def load_instruction_set(
    path: str | Path,
    filter: InstrFilter | str | Path | None = None,
    mapping: Mapping[str, Signature] | str | Path | None = None,
    *,
    seed: int = 0,
    universe: Sequence[str] = (),
    q: float = 0.15,
    stats: XmlStats | None = None,
) -> list[InstrClass]:
    """Parse, filter and classify. Class ids encode the raw record position."""
    stats = stats if stats is not None else XmlStats()
    if filter is None:
        filter = ACCEPT_ALL
    elif not isinstance(filter, InstrFilter):
        filter = InstrFilter.load(filter)
    if mapping is not None and not isinstance(mapping, Mapping):
        mapping = load_mapping(mapping)
    kept = [r for r in parse_instruction_xml(path, stats) if filter(r)]
    stats.kept = len(kept)
    return [classify(r, mapping, seed=seed, universe=universe, q=q) for r in kept]


def build_instruction_set(classes: Iterable[InstrClass]) -> InstructionSet:
    return InstructionSet(classes)
