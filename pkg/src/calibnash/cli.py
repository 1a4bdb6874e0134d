"""Command-line driver: ``python -m calibnash {calibrate,reduce,verify} ...``.

Exit codes: 0 success, 1 a verification check failed, 2 bad configuration
(the message names the field), 3 input/output failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import io
from .calibration import ADVERSARIES, FORECASTERS, make_adversary, make_forecaster, run_calibration
from .reduction import ReductionConfig, run_reduction
from .triangulation import GridTriangulation
from .verify import run_suite

log = logging.getLogger("calibnash")

LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}

# flag name -> config key
FLAGS = {
    "game": "game",
    "d": "d",
    "epsilon": "epsilon",
    "delta": "delta",
    "rounds": "rounds",
    "forecaster": "forecaster",
    "adversary": "adversary",
    "mc_samples": "mc_samples",
    "mc_samples_final": "mc_samples_final",
    "seeds": "seeds",
    "out": "out",
    "suite": "suite",
    "trials": "trials",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise io.ConfigError("arguments", message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="calibnash", description="Calibrated forecasting and approximate Nash equilibria.")
    p.add_argument("mode_pos", nargs="?", choices=io.MODES, metavar="MODE", help="calibrate, reduce or verify")
    p.add_argument("--mode", choices=io.MODES)
    p.add_argument("--config", help="JSON file with configuration keys; flags override it")
    p.add_argument("--game", help="game file or generator name (random, matching_pennies, coordination, shifted)")
    p.add_argument("--d", help="dimension, or a comma list (verify, calibrate)")
    p.add_argument("--epsilon", type=float, help="cover precision")
    p.add_argument("--delta", type=float, help="smoothing radius (default epsilon ** (1/3))")
    p.add_argument("--rounds", type=int)
    p.add_argument("--forecaster", choices=FORECASTERS)
    p.add_argument("--adversary", choices=ADVERSARIES, help="outcome process for calibrate")
    p.add_argument("--mc-samples", dest="mc_samples", type=int, help="smoothed-response samples per round")
    p.add_argument("--mc-samples-final", dest="mc_samples_final", type=int, help="samples for the output and certificate")
    p.add_argument("--seeds", help='seed list such as "1..20" or "1,3,5"')
    p.add_argument("--out", help="output directory")
    p.add_argument("--suite", choices=io.SUITES, help="property suite for verify")
    p.add_argument("--trials", type=int, help="instances per check for verify")
    return p


def parse_config(argv) -> io.ExperimentConfig:
    args = build_parser().parse_args(argv)
    if args.mode_pos and args.mode and args.mode_pos != args.mode:
        raise io.ConfigError("mode", f"positional {args.mode_pos!r} conflicts with --mode {args.mode!r}")
    doc = io.load_config(args.config) if args.config else {}
    if not isinstance(doc, dict):
        raise io.ConfigError("config", "must be a JSON object")
    mode = args.mode_pos or args.mode
    if mode:
        doc["mode"] = mode
    for flag, key in FLAGS.items():
        v = getattr(args, flag)
        if v is not None:
            doc[key] = v
    return io.ExperimentConfig.from_dict(doc)


def _setup_logging():
    level = os.environ.get("CALIBNASH_LOG", "error").lower()
    if level not in LOG_LEVELS:
        raise io.ConfigError("CALIBNASH_LOG", f"must be one of {', '.join(LOG_LEVELS)}, got {level!r}")
    logging.basicConfig(level=LOG_LEVELS[level], format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    log.setLevel(LOG_LEVELS[level])


def run_calibrate(cfg: io.ExperimentConfig, out: Path) -> int:
    summary = []
    for D in cfg.dims:
        for seed in cfg.seeds:
            tri = GridTriangulation.from_precision(D, cfg.epsilon)
            forecaster = make_forecaster(cfg.forecaster, tri, seed=seed, **cfg.forecaster_params)
            run = run_calibration(forecaster, make_adversary(cfg.adversary, D, seed), tri, cfg.rounds)
            stem = f"calibration_d{D}_seed{seed}"
            rows = (
                (t + 1, *run.forecasts[t].tolist(), int(run.outcomes[t]), float(run.residuals[t]), float(run.weak_rates[t]))
                for t in range(run.rounds)
            )
            io.write_csv(out / f"{stem}.csv", io.calibration_csv_header(D), rows)
            pts = io.checkpoints(cfg.rounds)
            rates = [float(run.weak_rates[t - 1]) for t in pts]
            steps = list(zip(rates, rates[1:]))
            monotone = sum(b < a for a, b in steps) / len(steps) if steps else 1.0
            conv = float(np.mean(run.residuals <= getattr(forecaster, "tol", np.inf)))
            doc = {
                "dim": D,
                "epsilon": cfg.epsilon,
                "resolution": tri.resolution,
                "rounds": cfg.rounds,
                "forecaster": cfg.forecaster,
                "adversary": cfg.adversary,
                "seed": seed,
                "checkpoints": [{"t": t, "weak_rate": r} for t, r in zip(pts, rates)],
                "rate_final": rates[-1],
                "decayed": rates[-1] < rates[0],
                "monotone_fraction": monotone,
                "converged_fraction": conv,
            }
            io.write_json(out / f"{stem}.json", doc)
            summary.append((D, cfg.adversary, seed, cfg.rounds, rates[0], rates[-1], doc["decayed"], monotone, conv))
            log.info("calibrate d=%d seed=%d rate %.4f -> %.4f", D, seed, rates[0], rates[-1])
    io.write_csv(out / "calibration_summary.csv", io.CALIBRATION_SUMMARY_HEADER, summary)
    return 0


def run_reduce(cfg: io.ExperimentConfig, out: Path) -> int:
    summary = []
    for seed in cfg.seeds:
        try:
            game = io.resolve_game(cfg.game, cfg.dims[0], seed)
        except ValueError as e:
            raise io.ConfigError("game", str(e)) from None
        rcfg = ReductionConfig(
            game=game,
            epsilon=cfg.epsilon,
            rounds=cfg.rounds,
            delta=cfg.delta,
            forecaster=cfg.forecaster,
            forecaster_params=cfg.forecaster_params,
            mc_samples=cfg.mc_samples,
            mc_samples_final=cfg.mc_samples_final,
            seed=seed,
        )
        tr = run_reduction(rcfg)
        doc = io.reduction_result(tr)
        io.write_json(out / f"result_seed{seed}.json", doc)
        io.write_csv(out / f"transcript_seed{seed}.csv", io.REDUCTION_CSV_HEADER, io.reduction_rows(tr))
        c = doc["certificate"]
        summary.append(
            (seed, c["weak_rate"], c["residual"], c["gamma"], c["gap_bound"], c["proof_bound"], c["theorem_bound"],
             c["residual_bound"], c["gap_ok"], c["proof_ok"], c["theorem_ok"], tr.final_round, doc["digest"])
        )
        log.info("reduce seed=%d gamma %.4f (gap bound %.4f)", seed, c["gamma"], c["gap_bound"])
    io.write_csv(out / "summary.csv", io.REDUCTION_SUMMARY_HEADER, summary)
    return 0


def run_verify(cfg: io.ExperimentConfig, out: Path) -> int:
    results = run_suite(cfg.suite, dims=cfg.d, trials=cfg.trials, seed=cfg.seeds[0])
    for r in results:
        log.info(r.line())
    doc = {"suite": cfg.suite, "checks": [r.as_dict() for r in results], "all_passed": all(r.ok for r in results)}
    io.write_json(out / "verify.json", doc)
    return 0 if doc["all_passed"] else 1


RUNNERS = {"calibrate": run_calibrate, "reduce": run_reduce, "verify": run_verify}


def run_cli(argv=None) -> int:
    try:
        _setup_logging()
        cfg = parse_config(sys.argv[1:] if argv is None else list(argv))
    except io.ConfigError as e:
        print(f"calibnash: bad configuration: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"calibnash: {e}", file=sys.stderr)
        return 3
    try:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        return RUNNERS[cfg.mode](cfg, out)
    except io.ConfigError as e:
        print(f"calibnash: bad configuration: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"calibnash: {e}", file=sys.stderr)
        return 3


def main():
    sys.exit(run_cli())
