#!/usr/bin/env python3
"""Monte-Carlo bound on majority-vote accuracy under counter noise.

The model is written from scratch with the ``random`` module and shares no
decoding code with the package. One gadget round reads the counter twice per
comparison value, 512 reads for 256 values. With probability ``p`` a round
gains one spurious increment, scheduled before a uniformly chosen read ``k``;
it lands inside the bracket of value ``k // 2`` exactly when ``k`` is odd.
The only input taken from the simulator is the noiseless delta pair
(``d_neq`` for a wrong guess, ``d_eq`` for the secret), read off one
interpreter round.

    python3 tools/mc_oracle.py [--out tests/data/mc_bound.json]
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from collections import Counter
from pathlib import Path

from scipy.stats import beta, binom

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

DOMAIN = 256
READS = 2 * DOMAIN
SEED = 20240607
TRIALS = 200_000
TEST_BYTES = 2000
ROUNDS = 10
PS = (0.02, 0.05)
ALPHA = 0.001  # one-sided miss probability for a correct implementation


def noiseless_pair() -> tuple[int, int]:
    """(d_neq, d_eq) of one noiseless interpreter round for the branch-miss event."""
    from pmuspill.attack.env import AttackEnv
    from pmuspill.attack.gadget import GadgetSpec
    from pmuspill.attack.leak import leak_byte
    from pmuspill.catalog import load_event_catalog
    from pmuspill import samples

    events = load_event_catalog(samples.path("events"), samples.path("augment"))
    env = AttackEnv.with_events(events)
    env.plant_secret(bytes([0x5A]))
    run = leak_byte(GadgetSpec(), "BR_MISP_EXEC.ALL_BRANCHES", 1, env, engine="interpreter")
    deltas = run.traces[0].deltas
    d_eq = deltas[0x5A]
    others = set(deltas[:0x5A] + deltas[0x5B:])
    assert len(others) == 1, "noiseless round should be two-valued"
    return others.pop(), d_eq


def decode(deltas: list[int]) -> int | None:
    counts = Counter(deltas)
    singles = [v for v, n in counts.items() if n == 1]
    return deltas.index(singles[0]) if len(singles) == 1 else None


def vote(decodes: list[int | None]) -> int | None:
    votes = Counter(d for d in decodes if d is not None)
    top = votes.most_common(2)
    if not top or (len(top) == 2 and top[0][1] == top[1][1]):
        return None
    return top[0][0]


def simulate(p: float, d_neq: int, d_eq: int, trials: int, rounds: int, rng: random.Random):
    """Return (bytes recovered, rounds decoded correctly)."""
    ok_bytes = ok_rounds = 0
    for _ in range(trials):
        secret = rng.randrange(DOMAIN)
        decodes = []
        for _ in range(rounds):
            deltas = None
            if rng.random() < p:
                k = rng.randrange(READS)
                if k % 2 == 1:
                    deltas = [d_neq] * DOMAIN
                    deltas[secret] = d_eq
                    deltas[k // 2] += 1
            if deltas is None:
                got = secret if d_eq != d_neq else None
            else:
                got = decode(deltas)
            decodes.append(got)
            ok_rounds += got == secret
        ok_bytes += vote(decodes) == secret
    return ok_bytes, ok_rounds


def lower_cp(k: int, n: int, alpha: float) -> float:
    return 0.0 if k == 0 else float(beta.ppf(alpha, k, n - k + 1))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(ROOT / "tests" / "data" / "mc_bound.json"))
    ap.add_argument("--trials", type=int, default=TRIALS)
    args = ap.parse_args(argv)

    d_neq, d_eq = noiseless_pair()
    rng = random.Random(SEED)
    results = {}
    for p in PS:
        ok_bytes, ok_rounds = simulate(p, d_neq, d_eq, args.trials, ROUNDS, rng)
        n_rounds = args.trials * ROUNDS
        byte_lo = lower_cp(ok_bytes, args.trials, ALPHA)
        round_rate = ok_rounds / n_rounds
        results[f"{p:g}"] = {
            "p": p,
            "byte_accuracy": ok_bytes / args.trials,
            "byte_accuracy_lower": byte_lo,
            # fewest correct bytes out of TEST_BYTES a correct implementation
            # falls below with probability ALPHA
            "min_correct_bytes": int(binom.ppf(ALPHA, TEST_BYTES, byte_lo)),
            "round_accuracy": round_rate,
            "round_correct_range": [
                int(binom.ppf(ALPHA / 2, TEST_BYTES * ROUNDS, round_rate)),
                int(binom.isf(ALPHA / 2, TEST_BYTES * ROUNDS, round_rate)),
            ],
        }
    doc = {
        "seed": SEED, "trials": args.trials, "rounds": ROUNDS, "test_bytes": TEST_BYTES,
        "alpha": ALPHA, "d_neq": d_neq, "d_eq": d_eq, "results": results,
    }
    Path(args.out).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    print(json.dumps(doc, indent=1, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
