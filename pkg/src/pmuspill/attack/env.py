"""Attack environment: machine configuration, victim secret and counter files."""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..isa import InstructionSet
from ..pmu import CounterFile, CounterPolicy, EventDef, NoiseModel
from ..sim import MachineState, PredictorState, SimConfig
from .gadget import SECRET_BASE, SECRET_SIZE


def stream_seed(*parts) -> list[int]:
    """Stable integer entropy for numpy from mixed str/int parts."""
    out = []
    for p in parts:
        if isinstance(p, str):
            out.append(zlib.crc32(p.encode()))
        else:
            out.append(int(p) & 0xFFFFFFFF)
    return out


@dataclass
class AttackEnv:
    """Everything a leak needs besides the gadget spec and the event.

    ``engine`` picks how rounds are produced: ``"interpreter"`` always runs
    the simulator, ``"auto"`` replays a calibrated trace when the calibration
    shows the round is a pure function of the secret byte, and falls back to
    the simulator otherwise.
    """

    iset: InstructionSet = field(default_factory=InstructionSet)
    catalog: Mapping[str, EventDef] = field(default_factory=dict)
    pmu_policy: CounterPolicy = CounterPolicy.VULNERABLE
    tee_gate: bool = False
    disabled_events: frozenset[str] = frozenset()
    config: SimConfig = SimConfig()
    noise: NoiseModel = NoiseModel()
    seed: int = 0
    slots: int = 8
    root: bool = True
    engine: str = "auto"
    secret: bytes = b""
    running: bool = field(default=False, compare=False)
    _calibrations: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.engine not in ("auto", "interpreter"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if not isinstance(self.catalog, dict):
            self.catalog = dict(self.catalog)

    @classmethod
    def with_events(cls, events: Iterable[EventDef], **kw) -> "AttackEnv":
        return cls(catalog={e.name: e for e in events}, **kw)

    # -- victim ---------------------------------------------------------------

    def plant_secret(self, data: bytes) -> None:
        if len(data) > SECRET_SIZE:
            raise ValueError(f"secret larger than the {SECRET_SIZE}-byte region")
        self.secret = bytes(data)

    @property
    def launched(self) -> bool:
        """Whether the victim enclave runs (and so whether its secret exists)."""
        from ..mitigations import LaunchStatus, tee_launch_check

        return tee_launch_check(self) is LaunchStatus.LAUNCH_OK

    def fingerprint(self) -> tuple:
        """Inputs that can change a noiseless round, minus the secret bytes."""
        return (
            self.pmu_policy, self.tee_gate, self.disabled_events, self.config,
            self.slots, self.root, self.launched,
        )

    # -- machines -------------------------------------------------------------

    def new_state(self, secret: bytes | None = None) -> MachineState:
        launched = self.launched
        st = MachineState(
            secret_region=(SECRET_BASE, SECRET_BASE + SECRET_SIZE),
            secret_mapped=launched,
            predictor=PredictorState(self.config.predictor_init),
        )
        if launched:
            st.write_bytes(SECRET_BASE, self.secret if secret is None else secret)
        return st

    def counter_file(self, seed=None, slots: int | None = None) -> CounterFile:
        return CounterFile(
            self.catalog,
            slots=self.slots if slots is None else slots,
            policy=self.pmu_policy,
            noise=self.noise,
            seed=seed,
            root=self.root,
            disabled_events=self.disabled_events,
            gated=False,
        )

    def calibration_cache(self) -> dict:
        return self._calibrations
