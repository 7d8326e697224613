"""Counter-file policies and the enclave launch gate."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .errors import UnknownEvent
from .pmu import CounterPolicy


class LaunchStatus(enum.Enum):
    LAUNCH_OK = "LAUNCH_OK"
    REFUSED = "REFUSED"


@dataclass(frozen=True)
class MitigationPolicy:
    """``tee_gate``: the enclave refuses to launch while counters are readable.

    ``per_event_disable``: events that can no longer be programmed.
    """

    pmu_policy: CounterPolicy = CounterPolicy.VULNERABLE
    tee_gate: bool = False
    per_event_disable: frozenset[str] = frozenset()

    @property
    def label(self) -> str:
        parts = [self.pmu_policy.value]
        if self.tee_gate:
            parts.append("TEE_GATE")
        if self.per_event_disable:
            parts.append(f"DISABLE[{len(self.per_event_disable)}]")
        return "+".join(parts)


BASELINE = MitigationPolicy()


def tee_launch_check(env) -> LaunchStatus:
    """Refuse the enclave when the gate is on and user code could read counters."""
    readable = env.root and env.pmu_policy is not CounterPolicy.DISABLED
    if env.tee_gate and readable:
        return LaunchStatus.REFUSED
    return LaunchStatus.LAUNCH_OK


def apply_policy(env, policy: MitigationPolicy):
    """Configure ``env`` in place with ``policy`` and return it."""
    if env.running:
        raise RuntimeError("cannot change the mitigation policy while an attack is running")
    unknown = sorted(set(policy.per_event_disable) - set(env.catalog))
    if unknown:
        raise UnknownEvent(", ".join(unknown))
    env.pmu_policy = policy.pmu_policy
    env.tee_gate = policy.tee_gate
    env.disabled_events = frozenset(policy.per_event_disable)
    env.calibration_cache().clear()
    return env
