"""Micro-ISA executed by the simulator.

Real x86 instructions are not emulated. Each one ingested from an instruction
database becomes an :class:`InstrClass` whose only observable behavior is the
set of PMU events it fires when executed (its *event signature*).

Micro-assembly is line oriented::

    # comment
    label:
    mov   r1, 0x41          # MOV_IMM
    load  r2, [r1+8]        # 64-bit LOAD_INDIRECT (loadb: 1 byte)
    store [r1+0], r2        # STORE (storeb: 1 byte)
    cmp   r1, r2            # CMP_REG
    je    label             # JCC (je / jne)
    jmp   label
    clflush [r1]
    fence
    rdpmc r3, 0             # READ_PMU into r3 from counter slot 0
    trigger X00012          # execute ingested class X00012
    nop

A label may also prefix an instruction on the same line (``L: nop``).
"""

from __future__ import annotations

import enum
import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import AssemblyError, MappingConflict

NUM_REGS = 16


class InstrKind(enum.Enum):
    LOAD_INDIRECT = "LOAD_INDIRECT"
    STORE = "STORE"
    MOV_IMM = "MOV_IMM"
    CMP_REG = "CMP_REG"
    JCC = "JCC"
    JMP = "JMP"
    NOP = "NOP"
    CLFLUSH = "CLFLUSH"
    FENCE = "FENCE"
    READ_PMU = "READ_PMU"
    TRIGGER = "TRIGGER"


class Fault(enum.Enum):
    NONE = "NONE"
    PRIVILEGED_FAULT = "PRIVILEGED_FAULT"


Signature = tuple[tuple[str, int], ...]


@dataclass(frozen=True)
class InstrClass:
    id: str
    mnemonic: str
    kind: InstrKind
    fault: Fault = Fault.NONE
    event_signature: Signature = ()
    latency: int = 1
    provenance: str | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.latency < 1:
            raise ValueError(f"{self.id}: latency must be positive")
        if self.kind is InstrKind.TRIGGER and not self.event_signature:
            raise ValueError(f"{self.id}: TRIGGER class needs a non-empty event signature")
        if self.kind is InstrKind.NOP and self.event_signature:
            raise ValueError(f"{self.id}: NOP class must be event-silent")
        ids = [e for e, _ in self.event_signature]
        if len(set(ids)) != len(ids):
            raise ValueError(f"{self.id}: duplicate event in signature")
        if any(inc < 1 for _, inc in self.event_signature):
            raise ValueError(f"{self.id}: event increments must be >= 1")


# Builtin micro-ops. Their ids double as assembly mnemonics.
BUILTINS: dict[str, InstrClass] = {
    c.id: c
    for c in (
        InstrClass("nop", "nop", InstrKind.NOP),
        InstrClass("mov", "mov", InstrKind.MOV_IMM),
        InstrClass("load", "load", InstrKind.LOAD_INDIRECT, Fault.PRIVILEGED_FAULT, latency=4),
        InstrClass("loadb", "loadb", InstrKind.LOAD_INDIRECT, Fault.PRIVILEGED_FAULT, latency=4),
        InstrClass("store", "store", InstrKind.STORE),
        InstrClass("storeb", "storeb", InstrKind.STORE),
        InstrClass("cmp", "cmp", InstrKind.CMP_REG),
        InstrClass("je", "je", InstrKind.JCC),
        InstrClass("jne", "jne", InstrKind.JCC),
        InstrClass("jmp", "jmp", InstrKind.JMP),
        InstrClass("clflush", "clflush", InstrKind.CLFLUSH, latency=2),
        InstrClass("fence", "fence", InstrKind.FENCE, latency=4),
        InstrClass("rdpmc", "rdpmc", InstrKind.READ_PMU, latency=30),
    )
}

LOAD_WIDTH = {"load": 8, "loadb": 1, "store": 8, "storeb": 1}


class InstructionSet(Mapping[str, InstrClass]):
    """Builtins plus ingested classes, keyed by id. Ids are unique."""

    def __init__(self, classes: Iterable[InstrClass] = ()):
        self._classes: dict[str, InstrClass] = dict(BUILTINS)
        self._ingested: list[InstrClass] = []
        for c in classes:
            if c.id in self._classes:
                raise ValueError(f"duplicate instruction class id {c.id!r}")
            self._classes[c.id] = c
            self._ingested.append(c)

    def __getitem__(self, key: str) -> InstrClass:
        return self._classes[key]

    def __iter__(self):
        return iter(self._classes)

    def __len__(self) -> int:
        return len(self._classes)

    @property
    def ingested(self) -> list[InstrClass]:
        """Classes loaded from a database, in source order (builtins excluded)."""
        return list(self._ingested)


# ---------------------------------------------------------------------------
# Programs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Instr:
    cls: str
    ops: tuple = ()


@dataclass(frozen=True)
class Program:
    instructions: tuple[Instr, ...]
    labels: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.instructions)

    def class_ids(self) -> set[str]:
        return {i.cls for i in self.instructions}

    def check_classes(self, iset: Mapping[str, InstrClass]) -> None:
        missing = sorted(self.class_ids() - set(iset))
        if missing:
            raise KeyError(f"program references unknown instruction classes: {missing[:5]}")


_REG = re.compile(r"^r(\d+)$", re.I)
_MEM = re.compile(r"^\[\s*(r\d+)\s*(?:([+-])\s*(0x[0-9a-f]+|\d+))?\s*\]$", re.I)
_LABEL = re.compile(r"^[A-Za-z_.$][\w.$]*$")
_ID = re.compile(r"^[\w.$:-]+$")

# mnemonic -> operand template
_TEMPLATES = {
    "nop": (),
    "fence": (),
    "mov": ("reg", "imm"),
    "load": ("reg", "mem"),
    "loadb": ("reg", "mem"),
    "store": ("mem", "reg"),
    "storeb": ("mem", "reg"),
    "cmp": ("reg", "reg"),
    "je": ("label",),
    "jne": ("label",),
    "jmp": ("label",),
    "clflush": ("mem",),
    "rdpmc": ("reg", "imm"),
    "trigger": ("id",),
}


def _split_operands(text: str) -> list[str]:
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    tail = "".join(cur).strip()
    if tail or out:
        out.append(tail)
    return out


def _parse_int(tok: str, lineno: int) -> int:
    try:
        return int(tok, 0)
    except ValueError:
        raise AssemblyError(f"bad immediate {tok!r}", lineno) from None


def _parse_reg(tok: str, lineno: int) -> int:
    m = _REG.match(tok)
    if not m or int(m.group(1)) >= NUM_REGS:
        raise AssemblyError(f"bad register {tok!r}", lineno)
    return int(m.group(1))


def _parse_mem(tok: str, lineno: int) -> tuple[int, int]:
    m = _MEM.match(tok)
    if not m:
        raise AssemblyError(f"bad memory operand {tok!r}", lineno)
    base = _parse_reg(m.group(1), lineno)
    disp = int(m.group(3), 0) if m.group(3) else 0
    if m.group(2) == "-":
        disp = -disp
    return base, disp


def assemble(source: str, iset: Mapping[str, InstrClass] | None = None) -> Program:
    """Assemble micro-assembly text into a :class:`Program`.

    When ``iset`` is given, ``trigger`` operands must name a class in it.
    """
    labels: dict[str, int] = {}
    pending: list[tuple[int, str, list[str]]] = []
    for lineno, raw in enumerate(source.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        while line:
            head, sep, rest = line.partition(":")
            # a label prefix, but not the colon inside an operand such as an id
            if sep and _LABEL.match(head.strip()) and " " not in head.strip():
                name = head.strip()
                if name in labels:
                    raise AssemblyError(f"duplicate label {name!r}", lineno)
                labels[name] = len(pending)
                line = rest.strip()
                continue
            break
        if not line:
            continue
        parts = line.split(None, 1)
        mnem = parts[0].lower()
        if mnem not in _TEMPLATES:
            raise AssemblyError(f"unknown mnemonic {parts[0]!r}", lineno)
        operands = _split_operands(parts[1]) if len(parts) > 1 else []
        if len(operands) != len(_TEMPLATES[mnem]):
            raise AssemblyError(
                f"{mnem} takes {len(_TEMPLATES[mnem])} operand(s), got {len(operands)}", lineno
            )
        pending.append((lineno, mnem, operands))

    instrs = []
    for lineno, mnem, operands in pending:
        ops: list = []
        for kind, tok in zip(_TEMPLATES[mnem], operands):
            if kind == "reg":
                ops.append(_parse_reg(tok, lineno))
            elif kind == "imm":
                ops.append(_parse_int(tok, lineno))
            elif kind == "mem":
                ops.extend(_parse_mem(tok, lineno))
            elif kind == "label":
                if tok not in labels:
                    raise AssemblyError(f"unresolved label {tok!r}", lineno)
                ops.append(labels[tok])
            else:
                if not _ID.match(tok):
                    raise AssemblyError(f"bad class id {tok!r}", lineno)
                if iset is not None and tok not in iset:
                    raise AssemblyError(f"unknown instruction class {tok!r}", lineno)
                ops.append(tok)
        if mnem == "trigger":
            instrs.append(Instr(ops[0]))
        else:
            instrs.append(Instr(mnem, tuple(ops)))
    for name, idx in labels.items():
        if idx > len(instrs):
            raise AssemblyError(f"label {name!r} out of range")
    return Program(tuple(instrs), labels)


def _mem(base: int, disp: int) -> str:
    if disp == 0:
        return f"[r{base}]"
    return f"[r{base}{'+' if disp > 0 else '-'}{abs(disp)}]"


def render(program: Program) -> str:
    """Inverse of :func:`assemble` (up to whitespace, comments and label names)."""
    names: dict[int, list[str]] = {}
    for name, idx in program.labels.items():
        names.setdefault(idx, []).append(name)
    for ins in program.instructions:
        if ins.cls in ("je", "jne", "jmp") and ins.ops[0] not in names:
            names[ins.ops[0]] = [f"L{ins.ops[0]}"]
    first = {idx: sorted(v)[0] for idx, v in names.items()}

    lines = []
    for idx, ins in enumerate(program.instructions):
        for name in sorted(names.get(idx, [])):
            lines.append(f"{name}:")
        lines.append("    " + _render_instr(ins, first))
    for name in sorted(names.get(len(program.instructions), [])):
        lines.append(f"{name}:")
    return "\n".join(lines) + "\n"


def _render_instr(ins: Instr, label_of: dict[int, str]) -> str:
    c, o = ins.cls, ins.ops
    if c in ("nop", "fence"):
        return c
    if c == "mov":
        return f"mov r{o[0]}, {o[1]:#x}"
    if c in ("load", "loadb"):
        return f"{c} r{o[0]}, {_mem(o[1], o[2])}"
    if c in ("store", "storeb"):
        return f"{c} {_mem(o[0], o[1])}, r{o[2]}"
    if c == "cmp":
        return f"cmp r{o[0]}, r{o[1]}"
    if c in ("je", "jne", "jmp"):
        return f"{c} {label_of[o[0]]}"
    if c == "clflush":
        return f"clflush {_mem(o[0], o[1])}"
    if c == "rdpmc":
        return f"rdpmc r{o[0]}, {o[1]}"
    return f"trigger {c}"


# ---------------------------------------------------------------------------
# Classification of ingested instructions
# ---------------------------------------------------------------------------


def _norm(mnemonic: str) -> str:
    return " ".join(mnemonic.lower().split())


def load_mapping(path: str | Path) -> dict[str, Signature]:
    """Read an explicit mapping file ``{mnemonic: [[event_id, increment], ...]}``."""

    def pairs(items):
        out: dict[str, object] = {}
        for k, v in items:
            if k in out and out[k] != v:
                raise MappingConflict(f"mnemonic {k!r} mapped twice")
            out[k] = v
        return out

    raw = json.loads(Path(path).read_text(encoding="utf-8"), object_pairs_hook=pairs)
    return normalize_mapping(raw)


def normalize_mapping(raw: Mapping[str, Sequence]) -> dict[str, Signature]:
    out: dict[str, Signature] = {}
    for key, entries in raw.items():
        sig = tuple(sorted((str(e), int(n)) for e, n in entries))
        k = _norm(key)
        if k in out and out[k] != sig:
            raise MappingConflict(f"mnemonic {key!r} has conflicting signatures")
        out[k] = sig
    return out


def _hash_pair(seed: int, key: str) -> tuple[float, int]:
    d = hashlib.blake2b(f"{seed}\x00{key}".encode(), digest_size=16).digest()
    u = int.from_bytes(d[:8], "little") / 2**64
    return u, int.from_bytes(d[8:], "little")


def synthetic_signature(mnemonic: str, universe: Sequence[str], seed: int, q: float) -> Signature:
    """Seeded assignment: with probability ``q`` attach one event from ``universe``."""
    if not universe:
        return ()
    u, k = _hash_pair(seed, mnemonic)
    if u >= q:
        return ()
    return ((universe[k % len(universe)], 1),)


def classify(
    record,
    mapping: Mapping[str, Signature] | None = None,
    *,
    seed: int = 0,
    universe: Sequence[str] = (),
    q: float = 0.15,
    class_id: str | None = None,
) -> InstrClass:
    """Turn an ingested instruction record into an :class:`InstrClass`.

    ``record`` is either a mnemonic string or an object with ``asm`` (and
    optionally ``index``/``source``) attributes. Classes whose signature comes
    out empty are NOP-kind; every other class is TRIGGER-kind.
    """
    if isinstance(record, str):
        mnemonic, index, source = record, None, None
    else:
        mnemonic = record.asm
        index = getattr(record, "index", None)
        source = getattr(record, "source", None)
    if not mnemonic or not mnemonic.strip():
        raise ValueError("instruction record without a mnemonic")
    if class_id is None:
        class_id = f"X{index:05d}" if index is not None else _norm(mnemonic).replace(" ", "_")

    sig: Signature | None = None
    provenance = source
    if mapping:
        key = _norm(mnemonic)
        opcode = key.split(" ", 1)[0]
        if key in mapping:
            sig = mapping[key]
        elif opcode in mapping:
            sig = mapping[opcode]
        if sig is not None:
            provenance = f"{source or ''}#mapping"
    if sig is None:
        sig = synthetic_signature(mnemonic, universe, seed, q)
    kind = InstrKind.TRIGGER if sig else InstrKind.NOP
    return InstrClass(class_id, mnemonic, kind, Fault.NONE, tuple(sig), 1, provenance)
