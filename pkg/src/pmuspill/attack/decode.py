"""Occurrence-count decoding and majority voting."""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence


class Verdict(enum.Enum):
    INCONCLUSIVE = "INCONCLUSIVE"
    FAILURE = "FAILURE"

    def __repr__(self) -> str:
        return self.value


INCONCLUSIVE = Verdict.INCONCLUSIVE
FAILURE = Verdict.FAILURE


@dataclass(frozen=True)
class RecoveryTrace:
    deltas: tuple[int, ...]
    round_index: int = 0

    def __post_init__(self):
        if any(d < 0 for d in self.deltas):
            raise ValueError("counter deltas must be non-negative")

    def __len__(self) -> int:
        return len(self.deltas)

    def dumps(self) -> str:
        return json.dumps(list(self.deltas))

    @classmethod
    def loads(cls, text: str, round_index: int = 0) -> "RecoveryTrace":
        return cls(tuple(int(x) for x in json.loads(text)), round_index)


def decode_trace(trace: RecoveryTrace | Sequence[int]) -> int | Verdict:
    """Index of the only delta value that occurs exactly once, else INCONCLUSIVE."""
    deltas = trace.deltas if isinstance(trace, RecoveryTrace) else tuple(trace)
    counts = Counter(deltas)
    singles = [v for v, n in counts.items() if n == 1]
    if len(singles) != 1:
        return INCONCLUSIVE
    return deltas.index(singles[0])


def majority_vote(decodes: Iterable[int | Verdict]) -> int | Verdict:
    """Strict plurality over conclusive decodes; FAILURE if none or tied."""
    votes = Counter(d for d in decodes if not isinstance(d, Verdict))
    if not votes:
        return FAILURE
    ranked = votes.most_common(2)
    if len(ranked) == 2 and ranked[0][1] == ranked[1][1]:
        return FAILURE
    return ranked[0][0]
