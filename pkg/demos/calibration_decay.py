"""Watch the fixed-point forecaster's weak calibration rate fall.

The forecaster plays against each adversary for T rounds and the
running rate is printed at doubling checkpoints. An empirical-average
forecaster runs alongside as a baseline. On these simple outcome
processes both decay; the fixed-point forecaster's advantage is that its
fixed-point condition holds whatever the next outcome is.

    python demos/calibration_decay.py
    python demos/calibration_decay.py --dim 4 --epsilon 0.5 --rounds 4000
"""

import argparse

from calibnash.calibration import EmpiricalAverageForecaster, FixedPointForecaster, make_adversary, run_calibration
from calibnash.io import checkpoints
from calibnash.triangulation import GridTriangulation


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--epsilon", type=float, default=0.1)
    ap.add_argument("--rounds", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    tri = GridTriangulation.from_precision(args.dim, args.epsilon)
    print(f"D = {args.dim}, grid resolution k = {tri.resolution}, cell diameter {tri.precision:.3f}")
    pts = checkpoints(args.rounds)
    print(f"{'adversary':12s} {'forecaster':11s} " + " ".join(f"{t:>7d}" for t in pts))
    for adv in ("iid", "alternating", "adaptive"):
        for name, f in (
            ("fixedpoint", FixedPointForecaster(tri, seed=args.seed)),
            ("empirical", EmpiricalAverageForecaster(args.dim)),
        ):
            run = run_calibration(f, make_adversary(adv, args.dim, args.seed), tri, args.rounds)
            print(f"{adv:12s} {name:11s} " + " ".join(f"{run.weak_rates[t - 1]:7.4f}" for t in pts))


if __name__ == "__main__":
    main()
