"""Command-line entry point: demo-leak, sweep, mitigation-eval and report.

Settings come from an optional config file (JSON, or flat ``key = value``
lines) and are overridden by flags. Progress goes to stderr, results to
stdout and the requested output files.

Exit codes: 0 done, 1 bad config or input files, 2 internal invariant broken.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence, TextIO

from . import samples
from .attack.env import AttackEnv
from .attack.gadget import SECRET_SIZE, GadgetSpec
from .attack.leak import leak_bytes
from .attack.metrics import DEFAULT_CLOCK_HZ, measure_metrics, throughput_table
from .attack.sweep import BOTH, Scenario, SummaryRow, read_summary_csv, sweep
from .catalog import InstrFilter, XmlStats, load_event_catalog, load_instruction_set, tagged_universe
from .errors import ConfigError, ParseError, PmuSpillError, UnknownEvent
from .evaluation import benchmark_suite, mitigation_eval
from .isa import InstructionSet
from .mitigations import MitigationPolicy, apply_policy
from .pmu import CounterPolicy, NoiseModel
from .sim import SuppressionMode

SEED_ENV = "PMUSPILL_SEED"
EXIT_OK, EXIT_CONFIG, EXIT_INTERNAL = 0, 1, 2


@dataclass
class RunConfig:
    policy: str = "VULNERABLE"
    tee_gate: bool = False
    disable: list[str] = field(default_factory=list)
    suppression: str = "TSX_LIKE"
    noise_p: float = 0.0
    burst_p: float = 0.0
    rounds: int = 10
    seed: int | None = None
    catalog: str | None = None  # None: the bundled sample files
    augment: str | None = None
    instructions: str | None = None
    filter: str | None = None
    mapping: str | None = None
    class_seed: int | None = None
    event: str = "BR_MISP_EXEC.ALL_BRANCHES"
    scenario: str = "both"
    reps: int = 10
    secret_byte: int = 0x5A
    max_events: int | None = None
    max_classes: int | None = None
    engine: str = "auto"
    clock_hz: float = DEFAULT_CLOCK_HZ
    training_rounds: int = 5
    bytes: int = 64
    jobs: int = 1
    csv: str | None = None
    json: str | None = None

    # -- validation ---------------------------------------------------------

    def check(self) -> None:
        try:
            CounterPolicy(self.policy.upper())
            SuppressionMode(self.suppression.upper())
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.scenario.lower() not in ("both", "s1", "s2"):
            raise ConfigError(f"scenario must be both, s1 or s2, not {self.scenario!r}")
        if not 0 <= self.noise_p <= 1 or not 0 <= self.burst_p <= 1:
            raise ConfigError("noise probabilities must lie in [0, 1]")
        if self.rounds < 1 or self.reps < 1:
            raise ConfigError("rounds and reps must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.clock_hz <= 0:
            raise ConfigError("clock_hz must be positive")
        if not 0 <= self.bytes <= SECRET_SIZE:
            raise ConfigError(f"bytes must lie in 0..{SECRET_SIZE}")
        if self.engine not in ("auto", "interpreter"):
            raise ConfigError("engine must be auto or interpreter")
        if (self.noise_p > 0 or self.burst_p > 0) and self.seed is None:
            raise ConfigError(f"a noisy run needs a seed (--seed or {SEED_ENV})")
        for key in ("catalog", "augment", "instructions", "filter", "mapping"):
            p = getattr(self, key)
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"{key} file {p} does not exist")

    @property
    def scenarios(self) -> tuple[Scenario, ...]:
        s = self.scenario.lower()
        return BOTH if s == "both" else (Scenario.parse(s),)

    @property
    def mitigation(self) -> MitigationPolicy:
        return MitigationPolicy(CounterPolicy(self.policy.upper()), self.tee_gate,
                                frozenset(self.disable))

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel(p=self.noise_p, burst_p=self.burst_p)

    def gadget(self) -> GadgetSpec:
        return GadgetSpec(training_rounds=self.training_rounds,
                          suppression=SuppressionMode(self.suppression.upper()))


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _coerce(key: str, value: Any) -> Any:
    if key not in _FIELDS:
        raise ConfigError(f"unknown config key {key!r}")
    kind = str(_FIELDS[key].type)
    if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none")):
        return [] if kind.startswith("list") else None
    try:
        if kind == "bool":
            if isinstance(value, bool):
                return value
            text = str(value).strip().lower()
            if text not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError(value)
            return text in ("1", "true", "yes", "on")
        if kind.startswith("list"):
            if isinstance(value, str):
                return [v.strip() for v in value.split(",") if v.strip()]
            return [str(v) for v in value]
        if kind.startswith("int"):
            return int(value, 0) if isinstance(value, str) else int(value)
        if kind.startswith("float"):
            return float(value)
        return str(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value {value!r} for {key}") from None


def parse_config_text(text: str, where: str = "<config>") -> dict[str, Any]:
    """JSON object or ``key = value`` lines (``#`` starts a comment)."""
    if text.lstrip().startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{where}:{exc.lineno}: {exc.msg}") from None
    else:
        raw = {}
        for n, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{where}:{n}: expected key = value")
            raw[key.strip().replace("-", "_")] = value.strip()
    return {k.replace("-", "_"): _coerce(k.replace("-", "_"), v) for k, v in raw.items()}


def build_config(path: str | None, overrides: dict[str, Any], environ=os.environ) -> RunConfig:
    values: dict[str, Any] = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        values.update(parse_config_text(text, path))
    values.update({k: _coerce(k, v) for k, v in overrides.items() if v is not None})
    if values.get("seed") is None and environ.get(SEED_ENV):
        values["seed"] = _coerce("seed", environ[SEED_ENV])
    cfg = RunConfig(**values)
    cfg.check()
    return cfg


# ---------------------------------------------------------------------------
# Loading inputs
# ---------------------------------------------------------------------------


def _log(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def load_inputs(cfg: RunConfig, need_classes: bool = True):
    """Catalog and instruction set named by ``cfg``, bundled samples by default."""
    catalog_path = cfg.catalog or samples.path("events")
    augment = cfg.augment if cfg.catalog else (cfg.augment or samples.path("augment"))
    events = load_event_catalog(catalog_path, augment)
    _log(f"events: {len(events)} loaded from {Path(catalog_path).name}"
         + (f" + {Path(augment).name}" if augment else ""))
    iset = InstructionSet()
    if need_classes:
        stats = XmlStats()
        m = samples.manifest()
        xml = cfg.instructions or samples.path("instructions")
        flt = InstrFilter.load(cfg.filter) if cfg.filter else (
            InstrFilter.load(samples.path("filter")) if cfg.instructions is None else None)
        classes = load_instruction_set(
            xml, flt, cfg.mapping,
            seed=cfg.class_seed if cfg.class_seed is not None else m["seed"],
            universe=tagged_universe(events), q=m["q"], stats=stats,
        )
        iset = InstructionSet(classes)
        _log(f"instructions: {stats.raw_records} records, {stats.kept} kept, "
             f"{stats.ignored_attributes} attributes ignored")
    return events, iset


def make_env(cfg: RunConfig, events, iset) -> AttackEnv:
    env = AttackEnv.with_events(events, iset=iset, noise=cfg.noise, seed=cfg.seed or 0,
                                engine=cfg.engine)
    return apply_policy(env, cfg.mitigation)


def parse_secret(text: str) -> bytes:
    cleaned = text.strip().lower().removeprefix("0x").replace(" ", "").replace(":", "")
    try:
        return bytes.fromhex(cleaned)
    except ValueError:
        raise ConfigError(f"secret {text!r} is not a hex string") from None


def _emit_json(path: str | None, data) -> None:
    if path is None:
        return
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_demo_leak(cfg: RunConfig, secret: bytes, out: TextIO, table: bool = False) -> dict:
    events, iset = load_inputs(cfg, need_classes=False)
    env = make_env(cfg, events, iset)
    if cfg.event not in env.catalog:
        raise ConfigError(f"event {cfg.event} is not in the catalog")
    env.plant_secret(secret)
    offsets = range(len(secret))
    spec = cfg.gadget()
    step = max(1, len(secret) // 10)

    def progress(i):
        if i % step == 0 or i == len(secret):
            _log(f"leaked {i}/{len(secret)} bytes")

    runs = leak_bytes(spec, cfg.event, cfg.rounds, env, offsets, progress)
    recovered = "".join(f"{r.byte:02x}" if r.ok else "??" for r in runs)
    report = {"policy": cfg.mitigation.label, "event": cfg.event, "rounds": cfg.rounds,
              "secret": secret.hex(), "recovered": recovered}
    if runs:
        m = measure_metrics(runs, secret, cfg.clock_hz)
        report.update(m.as_dict())
    out.write(f"policy      {report['policy']}\n")
    out.write(f"event       {cfg.event}\n")
    out.write(f"secret      {secret.hex()}\n")
    out.write(f"recovered   {recovered}\n")
    if runs:
        out.write(f"error rate  {100 * m.error_rate:.2f}% ({m.failures} failed, {m.wrong} wrong)\n")
        out.write(f"executions  {m.executions_per_byte:.0f} per byte\n")
        out.write(f"cycles      {m.cycles_per_byte:.0f} per byte\n")
        out.write(f"throughput  {m.throughput_bps:.1f} B/s at {cfg.clock_hz / 1e9:g} GHz (modeled)\n")
    if table and runs:
        rows = throughput_table(spec, cfg.event, env, range(1, cfg.rounds + 1), offsets,
                                cfg.clock_hz, lambda r, _: _log(f"rounds {r} done"))
        report["throughput_table"] = [m.as_dict() for m in rows]
        out.write("\nrounds  executions/byte  cycles/byte  throughput_Bps  error_rate\n")
        for m in rows:
            out.write(f"{m.rounds:>6}  {m.executions_per_byte:>15.0f}  {m.cycles_per_byte:>11.0f}"
                      f"  {m.throughput_bps:>14.1f}  {m.error_rate:>10.4f}\n")
    _emit_json(cfg.json, report)
    return report


def _limit(events, iset, cfg: RunConfig):
    if cfg.max_events is not None:
        events = events[:cfg.max_events]
    classes = [c.id for c in iset.ingested]
    if cfg.max_classes is not None:
        classes = classes[:cfg.max_classes]
    return events, classes


def format_summary(rows: Sequence[SummaryRow], classes: int | None = None,
                   only_vulnerable: bool = False) -> str:
    """Per-event table: trigger count per scenario and a best-scenario error rate."""
    by_event: dict[str, dict] = {}
    scenarios: list[str] = []
    for r in rows:
        e = by_event.setdefault(r.event_name, {"category": r.category, "vuln": r.vulnerable})
        e[r.scenario] = r.trigger_count
        if r.scenario not in scenarios:
            scenarios.append(r.scenario)
    width = max([len("event")] + [len(n) for n in by_event])
    head = f"{'event':<{width}}  {'category':<22}" + "".join(f"  {s:>6}" for s in scenarios)
    if classes:
        head += "  error_rate"
    lines = [head + "  vulnerable"]
    for name, e in by_event.items():
        if only_vulnerable and not e["vuln"]:
            continue
        line = f"{name:<{width}}  {e['category']:<22}" + "".join(
            f"  {e.get(s, 0):>6}" for s in scenarios)
        if classes:
            best = max(e.get(s, 0) for s in scenarios)
            line += f"  {1 - best / classes:>10.4f}"
        lines.append(line + f"  {'yes' if e['vuln'] else 'no'}")
    return "\n".join(lines) + "\n"


def cmd_sweep(cfg: RunConfig, out: TextIO, all_rows: bool = False):
    events, iset = load_inputs(cfg)
    events, classes = _limit(events, iset, cfg)
    env = make_env(cfg, events, iset)
    rep = sweep(events, iset, cfg.scenarios, cfg.reps, env=env, base_spec=cfg.gadget(),
                secret_byte=cfg.secret_byte, classes=classes, jobs=cfg.jobs, progress=_log)
    if cfg.csv:
        with open(cfg.csv, "w", encoding="utf-8", newline="") as fh:
            rep.write_csv(fh)
    if cfg.json:
        with open(cfg.json, "w", encoding="utf-8") as fh:
            rep.write_json(fh)
    out.write(f"{len(rep.events)} events x {len(rep.classes)} instructions x "
              f"{len(rep.scenarios)} scenario(s) x {rep.reps} reps = "
              f"{rep.gadget_executions} gadget executions\n")
    out.write(f"vulnerable events: {len(rep.vulnerable_events())}\n\n")
    out.write(format_summary(rep.summary(), len(rep.classes), only_vulnerable=not all_rows))
    return rep


def cmd_mitigation_eval(cfg: RunConfig, out: TextIO, programs: int = 20):
    events, iset = load_inputs(cfg)
    env = make_env(cfg, events, iset)
    if cfg.event not in env.catalog:
        raise ConfigError(f"event {cfg.event} is not in the catalog")
    rng = random.Random(cfg.seed or 0)
    env.plant_secret(bytes(rng.randrange(256) for _ in range(cfg.bytes)))
    bench = benchmark_suite(iset, programs, seed=cfg.seed or 0, events=events)
    rows = mitigation_eval(env, cfg.gadget(), cfg.event, range(cfg.bytes), cfg.rounds,
                           programs=bench, progress=lambda p: _log(f"policy {p}"))
    width = max(len("policy"), *(len(r.label) for r in rows))
    out.write(f"{'policy':<{width}}  launch     accuracy  failures  failure_mode"
              f"            profiling\n")
    for r in rows:
        out.write(f"{r.label:<{width}}  {r.launch.value:<9}  {r.accuracy:>8.4f}  "
                  f"{r.failures:>8}  {r.failure_mode:<22}  {r.profiling}\n")
    _emit_json(cfg.json, {"event": cfg.event, "bytes": cfg.bytes, "rounds": cfg.rounds,
                          "rows": [r.as_dict() for r in rows]})
    return rows


def cmd_report(path: str, out: TextIO, all_rows: bool = True) -> list[SummaryRow]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            rows = read_summary_csv(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    out.write(format_summary(rows, only_vulnerable=not all_rows))
    return rows


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON or key=value config file; flags override it")
    p.add_argument("--policy", choices=[c.value for c in CounterPolicy], type=str.upper)
    p.add_argument("--tee-gate", dest="tee_gate", action="store_const", const=True)
    p.add_argument("--disable", help="comma-separated events to disable")
    p.add_argument("--suppression", choices=[m.value for m in SuppressionMode], type=str.upper)
    p.add_argument("--noise", dest="noise_p", type=float, help="spurious +1 probability per run")
    p.add_argument("--burst", dest="burst_p", type=float, help="burst noise probability per run")
    p.add_argument("--rounds", type=int)
    p.add_argument("--seed", type=int, help=f"falls back to ${SEED_ENV}")
    p.add_argument("--catalog")
    p.add_argument("--augment")
    p.add_argument("--instructions")
    p.add_argument("--filter")
    p.add_argument("--mapping")
    p.add_argument("--event")
    p.add_argument("--engine", choices=["auto", "interpreter"])
    p.add_argument("--clock-hz", dest="clock_hz", type=float)
    p.add_argument("--training-rounds", dest="training_rounds", type=int)
    p.add_argument("--json", help="write a JSON report here")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pmuspill", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("demo-leak", help="plant a secret and leak it byte by byte")
    _common(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--secret", help="hex string")
    src.add_argument("--secret-file")
    src.add_argument("--random-bytes", dest="bytes", type=int)
    p.add_argument("--throughput-table", action="store_true",
                   help="also leak with 1..rounds rounds and tabulate throughput")

    p = sub.add_parser("sweep", help="find counters that leak transient execution")
    _common(p)
    p.add_argument("--scenario", choices=["both", "s1", "s2"], type=str.lower)
    p.add_argument("--reps", type=int)
    p.add_argument("--secret-byte", dest="secret_byte", type=lambda s: int(s, 0))
    p.add_argument("--max-events", dest="max_events", type=int)
    p.add_argument("--max-classes", dest="max_classes", type=int)
    p.add_argument("--jobs", type=int)
    p.add_argument("--csv", help="write the summary CSV here")
    p.add_argument("--all", action="store_true", help="list every event, not just vulnerable ones")

    p = sub.add_parser("mitigation-eval", help="compare policies on one leak workload")
    _common(p)
    p.add_argument("--bytes", type=int)
    p.add_argument("--programs", type=int, default=20, help="profiling benchmark programs")

    p = sub.add_parser("report", help="print a saved sweep CSV")
    p.add_argument("csv")
    p.add_argument("--vulnerable-only", action="store_true")
    return ap


_NOT_CONFIG = {"command", "config", "secret", "secret_file", "throughput_table", "all",
               "programs", "vulnerable_only"}


def main(argv: Sequence[str] | None = None, out: TextIO | None = None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            cmd_report(args.csv, out, all_rows=not args.vulnerable_only)
            return EXIT_OK
        overrides = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG}
        cfg = build_config(args.config, overrides)
        if args.command == "demo-leak":
            if args.secret is not None:
                secret = parse_secret(args.secret)
            elif args.secret_file is not None:
                try:
                    secret = Path(args.secret_file).read_bytes()
                except OSError as exc:
                    raise ConfigError(f"cannot read {args.secret_file}: {exc.strerror}") from None
            else:
                rng = random.Random(cfg.seed or 0)
                secret = bytes(rng.randrange(256) for _ in range(cfg.bytes))
            if len(secret) > SECRET_SIZE:
                raise ConfigError(f"secret is larger than {SECRET_SIZE} bytes")
            cmd_demo_leak(cfg, secret, out, args.throughput_table)
        elif args.command == "sweep":
            cmd_sweep(cfg, out, all_rows=args.all)
        else:
            cmd_mitigation_eval(cfg, out, args.programs)
    except (ConfigError, ParseError, UnknownEvent, OSError) as exc:
        _log(f"error: {exc}")
        return EXIT_CONFIG
    except (PmuSpillError, AssertionError, RuntimeError) as exc:
        _log(f"internal error: {type(exc).__name__}: {exc}")
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
