"""Shared ensembles and the per-criterion acceptance summary."""

import numpy as np
import pytest

from calibnash.games import generate_game
from calibnash.reduction import ReductionConfig, run_reduction, transcript_digest

# criterion id -> (passed, one-line detail), filled by test_acceptance
ACCEPTANCE = {}

ENSEMBLE_GAMES = ("matching_pennies", "coordination")
ENSEMBLE_SEEDS = range(1, 51)
ENSEMBLE_EPSILON = 0.1
ENSEMBLE_ROUNDS = 2000


def ensemble_run(game: str, seed: int) -> dict:
    cfg = ReductionConfig(generate_game(game), ENSEMBLE_EPSILON, ENSEMBLE_ROUNDS, seed=seed)
    tr = run_reduction(cfg)
    return {"game": game, "seed": seed, "delta": cfg.delta, "certificate": tr.certificate, "digest": transcript_digest(tr)}


@pytest.fixture(scope="session")
def reduction_ensemble():
    """Every (game, seed) run of the scaled residual check; about ten minutes."""
    return {g: [ensemble_run(g, s) for s in ENSEMBLE_SEEDS] for g in ENSEMBLE_GAMES}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for cid in sorted(ACCEPTANCE, key=lambda c: (int("".join(filter(str.isdigit, c))), c)):
        ok, detail = ACCEPTANCE[cid]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {cid}: {detail}")
