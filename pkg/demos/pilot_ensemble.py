"""Pilot runs for the scaled residual ensemble.

Runs the ensemble settings (d = 2, epsilon = 0.1, delta = epsilon^(1/3),
T = 2000) on pilot seeds disjoint from the test seeds and records the
mean Nash gap, residual and weak rate of each game. The acceptance suite
reads the gap thresholds from tests/data/ensemble_pilot.json.

    python demos/pilot_ensemble.py            # rewrite the recorded file
    python demos/pilot_ensemble.py --seeds 4  # quick look, prints only
"""

import argparse
import json
import math
from pathlib import Path

import numpy as np

from calibnash.games import generate_game
from calibnash.reduction import ReductionConfig, run_reduction

GAMES = ("matching_pennies", "coordination")
EPSILON, ROUNDS = 0.1, 2000
FIRST_SEED = 1001
OUT = Path(__file__).resolve().parent.parent / "tests" / "data" / "ensemble_pilot.json"


def summarize(values):
    v = np.asarray(values, dtype=float)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(len(v)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=20, help="pilot seeds per game")
    args = ap.parse_args()

    doc = {"epsilon": EPSILON, "rounds": ROUNDS, "seeds": [FIRST_SEED, FIRST_SEED + args.seeds - 1], "games": {}}
    for game in GAMES:
        certs = []
        for seed in range(FIRST_SEED, FIRST_SEED + args.seeds):
            tr = run_reduction(ReductionConfig(generate_game(game), EPSILON, ROUNDS, seed=seed))
            certs.append(tr.certificate)
        gap, gap_se = summarize([c.gamma for c in certs])
        res, res_se = summarize([c.residual for c in certs])
        rate, _ = summarize([c.weak_rate for c in certs])
        # four pilot standard errors leaves room for the test ensemble's own noise
        doc["games"][game] = {
            "gap_mean": gap,
            "gap_se": gap_se,
            "gap_threshold": gap + 4 * gap_se,
            "residual_mean": res,
            "residual_se": res_se,
            "weak_rate_mean": rate,
        }
        print(f"{game:17s} gap {gap:.4f} +- {gap_se:.4f}  residual {res:.4f} +- {res_se:.4f}  C_T {rate:.4f}")

    if args.seeds >= 20:
        OUT.write_text(json.dumps(doc, indent=2) + "\n")
        print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
