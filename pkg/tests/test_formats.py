"""The golden examples in docs/formats.md must stay loadable."""

import io
import json
import re
from pathlib import Path

import pytest

from pmuspill.attack.decode import RecoveryTrace, decode_trace
from pmuspill.attack.sweep import read_summary_csv, write_summary_csv
from pmuspill.catalog import InstrFilter, load_event_catalog, parse_instruction_xml
from pmuspill.cli import parse_config_text
from pmuspill.isa import assemble, normalize_mapping
from pmuspill.sim import LogRecord

DOC = Path(__file__).resolve().parents[1] / "docs" / "formats.md"


@pytest.fixture(scope="module")
def blocks():
    """Fenced blocks by section heading."""
    out: dict[str, list[str]] = {}
    for section in re.split(r"^## ", DOC.read_text(), flags=re.M)[1:]:
        title = section.splitlines()[0].strip()
        out[title] = re.findall(r"```\w*\n(.*?)```", section, flags=re.S)
    return out


def test_catalog(blocks, tmp_path):
    p = tmp_path / "c.json"
    p.write_text(blocks["Event catalog (JSON)"][0])
    a, b = load_event_catalog(p)
    assert a.speculative and b.instructions == frozenset({"X00049", "X01217"})


def test_xml_and_filter(blocks, tmp_path):
    p = tmp_path / "i.xml"
    p.write_text(blocks["Instruction database (XML)"][0])
    recs = parse_instruction_xml(p)
    flt = InstrFilter.from_json(json.loads(blocks["Instruction filter (JSON)"][0]))
    assert [r.asm for r in recs if flt(r)] == ["ADC (AL, I8)"]


def test_mapping(blocks):
    m = normalize_mapping(json.loads(blocks["Event mapping (JSON)"][0]))
    assert len(m) == 2


def test_assembly(blocks):
    prog = assemble(blocks["Micro-assembly"][0])
    assert len(prog.instructions) == 10


def test_log_and_trace(blocks):
    rec = json.loads(blocks["Execution log (JSON lines)"][0])
    again = LogRecord(rec["pc"], rec["class"], rec["kind"], rec["mode"], rec["cycle"],
                      [tuple(e) for e in rec["events"]], rec["status"])
    assert again.to_json() == blocks["Execution log (JSON lines)"][0].strip()
    assert decode_trace(RecoveryTrace.loads(blocks["Recovery trace"][0])) == 2


def test_csv(blocks):
    text = blocks["Sweep summary (CSV)"][0]
    buf = io.StringIO()
    write_summary_csv(read_summary_csv(text), buf)
    assert buf.getvalue() == text


def test_configs(blocks):
    kv, js = blocks["Run configuration"]
    assert parse_config_text(kv)["disable"] == ["RESOURCE_STALLS.ANY", "IDQ.MS_CYCLES"]
    assert parse_config_text(js)["tee_gate"] is True
