import io
import json
import subprocess
import sys

import pytest

from pmuspill import cli
from pmuspill.cli import (
    EXIT_CONFIG, EXIT_INTERNAL, EXIT_OK, RunConfig, build_config, main, parse_config_text,
    parse_secret,
)
from pmuspill.errors import ConfigError


def _main(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def test_json_and_key_value_configs_agree():
    a = parse_config_text('{"policy": "renamed", "rounds": 4, "disable": ["A", "B"], "tee_gate": true}')
    b = parse_config_text("policy = renamed  # comment\nrounds=0x4\ndisable = A, B\ntee-gate = yes\n")
    assert a == b == {"policy": "renamed", "rounds": 4, "disable": ["A", "B"], "tee_gate": True}


@pytest.mark.parametrize("text", [
    "{bad json", "rounds", "nosuchkey = 1", "rounds = many", "tee_gate = maybe",
])
def test_bad_config_text(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_flags_override_config_and_env_seeds(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("rounds = 3\nseed = 1\nnoise_p = 0.1\n")
    cfg = build_config(str(p), {"rounds": 7}, environ={})
    assert (cfg.rounds, cfg.seed, cfg.noise_p) == (7, 1, 0.1)
    cfg = build_config(None, {"noise_p": 0.1}, environ={"PMUSPILL_SEED": "9"})
    assert cfg.seed == 9
    cfg = build_config(None, {"seed": 2}, environ={"PMUSPILL_SEED": "9"})
    assert cfg.seed == 2


@pytest.mark.parametrize("overrides", [
    {"policy": "OFF"}, {"suppression": "x"}, {"scenario": "s3"}, {"noise_p": 2.0},
    {"rounds": 0}, {"reps": 0}, {"jobs": 0}, {"clock_hz": 0}, {"bytes": 10 ** 6},
    {"engine": "jit"}, {"noise_p": 0.1}, {"catalog": "/no/such/file.json"},
])
def test_invalid_configs(overrides):
    with pytest.raises(ConfigError):
        build_config(None, overrides, environ={})


def test_missing_config_file():
    with pytest.raises(ConfigError):
        build_config("/no/such.cfg", {}, environ={})


def test_parse_secret():
    assert parse_secret("0xDE ad:BE") == b"\xde\xad\xbe"
    with pytest.raises(ConfigError):
        parse_secret("xyz")


def test_demo_leak_recovers_and_logs_to_stderr(capsys, tmp_path):
    js = tmp_path / "r.json"
    code, out = _main("demo-leak", "--secret", "de ad be ef", "--rounds", "3", "--json", str(js))
    assert code == EXIT_OK
    assert "recovered   deadbeef" in out and "executions  4608 per byte" in out
    err = capsys.readouterr().err
    assert "leaked 4/4 bytes" in err and "leaked" not in out
    doc = json.loads(js.read_text())
    assert doc["recovered"] == "deadbeef" and doc["error_rate"] == 0


def test_demo_leak_throughput_table():
    code, out = _main("demo-leak", "--secret", "01", "--rounds", "3", "--throughput-table")
    assert code == EXIT_OK
    table = out.split("rounds  executions/byte")[1].splitlines()[1:]
    assert [int(ln.split()[0]) for ln in table] == [1, 2, 3]


def test_demo_leak_under_mitigation(monkeypatch):
    monkeypatch.delenv("PMUSPILL_SEED", raising=False)
    code, out = _main("demo-leak", "--secret", "5a5a", "--rounds", "2", "--policy", "retire_only")
    assert code == EXIT_OK and "recovered   ????" in out and "RETIRE_ONLY" in out


def test_reruns_are_byte_identical():
    argv = ["demo-leak", "--random-bytes", "6", "--rounds", "2", "--noise", "0.2", "--seed", "4"]
    assert _main(*argv) == _main(*argv)


def test_exit_codes(monkeypatch, capsys):
    monkeypatch.delenv("PMUSPILL_SEED", raising=False)
    assert _main("demo-leak", "--secret", "01", "--noise", "0.1")[0] == EXIT_CONFIG
    assert "needs a seed" in capsys.readouterr().err
    assert _main("demo-leak", "--secret", "zz")[0] == EXIT_CONFIG
    assert _main("demo-leak", "--secret", "01", "--event", "NOPE")[0] == EXIT_CONFIG
    assert _main("demo-leak", "--secret", "01", "--disable", "NOPE")[0] == EXIT_CONFIG

    def boom(*a, **k):
        raise RuntimeError("simulated fault")

    monkeypatch.setattr(cli, "leak_bytes", boom)
    assert _main("demo-leak", "--secret", "01")[0] == EXIT_INTERNAL
    assert "internal error" in capsys.readouterr().err


def test_bad_catalog_is_a_config_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('[{"EventName": "A", "EventCode": "0x100", "UMask": "0"}]')
    assert _main("demo-leak", "--secret", "01", "--catalog", str(bad))[0] == EXIT_CONFIG


def test_sweep_and_report(tmp_path, capsys):
    csv_path, js = tmp_path / "s.csv", tmp_path / "s.json"
    code, out = _main("sweep", "--max-events", "12", "--max-classes", "4", "--reps", "2",
                      "--csv", str(csv_path), "--json", str(js), "--all")
    assert code == EXIT_OK
    assert "12 events x 4 instructions x 2 scenario(s) x 2 reps = 192 gadget executions" in out
    assert csv_path.read_text().startswith("event_name,")
    assert json.loads(js.read_text())["gadget_executions"] == 192
    code, rep = _main("report", str(csv_path))
    assert code == EXIT_OK
    assert rep.splitlines()[0].split()[:4] == ["event", "category", "S1", "S2"]
    assert len(rep.splitlines()) == 13
    code, vuln = _main("report", str(csv_path), "--vulnerable-only")
    assert all(ln.endswith("yes") for ln in vuln.splitlines()[1:])
    assert _main("report", str(tmp_path / "missing.csv"))[0] == EXIT_CONFIG
    (tmp_path / "junk.csv").write_text("x,y\n1,2\n")
    assert _main("report", str(tmp_path / "junk.csv"))[0] == EXIT_CONFIG


def test_mitigation_eval_command(tmp_path):
    js = tmp_path / "m.json"
    code, out = _main("mitigation-eval", "--bytes", "2", "--rounds", "2", "--programs", "2",
                      "--json", str(js))
    assert code == EXIT_OK
    rows = {r["policy"]: r for r in json.loads(js.read_text())["rows"]}
    assert rows["VULNERABLE"]["accuracy"] == 1.0
    assert rows["RENAMED"]["accuracy"] == 0.0 and rows["RENAMED"]["profiling"] == "identical"
    assert "VULNERABLE+TEE_GATE" in out and "REFUSED" in out


def test_console_script_runs():
    res = subprocess.run([sys.executable, "-m", "pmuspill.cli", "demo-leak", "--secret", "7f",
                          "--rounds", "1"], capture_output=True, text=True, timeout=120)
    assert res.returncode == 0 and "recovered   7f" in res.stdout


def test_defaults_are_valid():
    RunConfig().check()
