"""Bimatrix games, exact and smoothed best responses, Nash gaps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .rng import substream
from .simplex import onehot, project_l2, project_rows, simplex_point

GAME_KINDS = ("random", "matching_pennies", "coordination", "shifted")


def _as_matrix(U, name: str) -> np.ndarray:
    M = np.array(U, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {M.shape}")
    if M.shape[0] < 2:
        raise ValueError(f"{name} must be at least 2x2, got shape {M.shape}")
    bad = np.argwhere(~np.isfinite(M) | (M < 0.0) | (M > 1.0))
    if len(bad):
        i, j = bad[0]
        raise ValueError(f"{name}[{i}][{j}] = {M[i, j]!r} is outside [0, 1]")
    M.flags.writeable = False
    return M


@dataclass(frozen=True, eq=False)
class BimatrixGame:
    """Two-player game; ``U1[i, j]`` and ``U2[i, j]`` are the payoffs when the
    row player plays ``i`` and the column player plays ``j``."""

    U1: np.ndarray
    U2: np.ndarray
    name: str = field(default="game", compare=False)

    def __post_init__(self):
        U1 = _as_matrix(self.U1, "U1")
        U2 = _as_matrix(self.U2, "U2")
        if U1.shape != U2.shape:
            raise ValueError(f"U1 and U2 shapes differ: {U1.shape} vs {U2.shape}")
        object.__setattr__(self, "U1", U1)
        object.__setattr__(self, "U2", U2)

    @property
    def d(self) -> int:
        return self.U1.shape[0]

    def __eq__(self, other):
        if not isinstance(other, BimatrixGame):
            return NotImplemented
        return np.array_equal(self.U1, other.U1) and np.array_equal(self.U2, other.U2)

    def __hash__(self):
        return hash((self.U1.tobytes(), self.U2.tobytes()))

    def facing(self, player: int) -> np.ndarray:
        """Matrix ``M`` with ``M @ opponent`` = payoff of each own action."""
        _check_player(player)
        return self.U1 if player == 1 else self.U2.T


class StrategyProfile(NamedTuple):
    x: np.ndarray
    y: np.ndarray

    @classmethod
    def of(cls, x, y) -> StrategyProfile:
        x = simplex_point(x)
        y = simplex_point(y)
        if x.shape != y.shape:
            raise ValueError(f"strategy dimensions differ: {x.shape} vs {y.shape}")
        return cls(x, y)


def _check_player(player: int):
    if player not in (1, 2):
        raise ValueError(f"player must be 1 or 2, got {player!r}")


def payoff(game: BimatrixGame, player: int, x, y) -> float:
    """Expected payoff ``x^T U_player y``."""
    _check_player(player)
    U = game.U1 if player == 1 else game.U2
    return float(np.asarray(x, dtype=float) @ U @ np.asarray(y, dtype=float))


def best_response_index(game: BimatrixGame, player: int, opponent) -> int:
    """Index of a payoff-maximizing pure action; ties go to the lowest index.

    Input may be any finite vector; it is projected onto the simplex first.
    """
    q = project_l2(opponent)
    if q.shape != (game.d,):
        raise ValueError(f"expected an opponent strategy of length {game.d}, got {q.shape}")
    return int(np.argmax(game.facing(player) @ q))


def best_response(game: BimatrixGame, player: int, opponent) -> np.ndarray:
    return onehot(best_response_index(game, player, opponent), game.d)


@dataclass(frozen=True)
class SmoothBRConfig:
    """Smoothing radius, Monte Carlo sample count and substream key."""

    delta: float
    samples: int = 10_000
    seed: tuple = (0,)

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if int(self.samples) != self.samples or self.samples < 1:
            raise ValueError(f"samples must be a positive integer, got {self.samples}")
        seed = self.seed if isinstance(self.seed, tuple) else (self.seed,)
        object.__setattr__(self, "samples", int(self.samples))
        object.__setattr__(self, "seed", seed)

    def with_seed(self, *seed) -> SmoothBRConfig:
        return SmoothBRConfig(self.delta, self.samples, tuple(seed))

    def with_samples(self, samples: int) -> SmoothBRConfig:
        return SmoothBRConfig(self.delta, samples, self.seed)


# samples per substream; fixed so the estimate does not depend on batching
SAMPLE_CHUNK = 1 << 16


def mc_tolerance(d: int, samples: int) -> float:
    """Three-sigma style allowance ``3 sqrt(d / M)`` for a smoothed response."""
    return 3.0 * math.sqrt(d / samples)


def _row_argmax(vals: np.ndarray) -> np.ndarray:
    """Row-wise argmax with ties to the lowest index.

    A column sweep with strict comparisons; much faster than
    ``argmax(axis=1)`` for the narrow arrays used here.
    """
    if vals.shape[1] > 8:
        return np.argmax(vals, axis=1)
    best = vals[:, 0].copy()
    idx = np.zeros(len(vals), dtype=np.intp)
    for j in range(1, vals.shape[1]):
        col = vals[:, j]
        better = col > best
        idx[better] = j
        np.maximum(best, col, out=best)
    return idx


def smooth_best_response(game: BimatrixGame, player: int, opponent, cfg: SmoothBRConfig) -> np.ndarray:
    """Monte Carlo estimate of the best response averaged over an ell-inf cube.

    Points are drawn uniformly from the cube of radius ``delta`` around
    ``opponent`` in the ambient space, so they may leave the simplex; each
    is projected back before its best response is taken. Chunk ``c`` of
    ``SAMPLE_CHUNK`` draws uses substream ``(*cfg.seed, c)``.
    """
    q = simplex_point(opponent)
    d = game.d
    if q.shape != (d,):
        raise ValueError(f"expected an opponent strategy of length {d}, got {q.shape}")
    M = game.facing(player)
    counts = np.zeros(d, dtype=np.int64)
    for c in range(math.ceil(cfg.samples / SAMPLE_CHUNK)):
        n = min(SAMPLE_CHUNK, cfg.samples - c * SAMPLE_CHUNK)
        rng = substream(*cfg.seed, c)
        u = rng.uniform(-cfg.delta, cfg.delta, size=(n, d))
        if d == 2:
            # projected first coordinate, then compare the two payoffs
            a = np.clip(0.5 * (1.0 + q[0] - q[1] + u[:, 0] - u[:, 1]), 0.0, 1.0)
            second = a * (M[1, 0] - M[0, 0] - M[1, 1] + M[0, 1]) + (M[1, 1] - M[0, 1]) > 0.0
            k = int(np.count_nonzero(second))
            counts += (n - k, k)
            continue
        vals = project_rows(q + u) @ M.T
        counts += np.bincount(_row_argmax(vals), minlength=d)
    return counts / cfg.samples


def ne_gap(game: BimatrixGame, profile) -> float:
    """Largest gain either player gets from a pure deviation."""
    x, y = (simplex_point(v) for v in profile)
    u1 = game.U1 @ y
    u2 = x @ game.U2
    g1 = u1.max() - x @ u1
    g2 = u2.max() - u2 @ y
    return float(max(g1, g2, 0.0))


def generate_game(kind: str, d: int = 2, seed: int = 0) -> BimatrixGame:
    """Named or random ``d x d`` games.

    ``matching_pennies``: the row player wants to match (identity), the
    column player to mismatch (one minus identity). ``coordination``: both
    get the identity. ``shifted``: the row player matches, the column
    player wants to be one action ahead cyclically; for ``d = 2`` this is
    matching pennies. ``random``: i.i.d. uniform entries from the seed.
    """
    if d < 2:
        raise ValueError(f"game dimension must be >= 2, got {d}")
    eye = np.eye(d)
    if kind == "matching_pennies":
        return BimatrixGame(eye, 1.0 - eye, name=kind)
    if kind == "coordination":
        return BimatrixGame(eye, eye.copy(), name=kind)
    if kind == "shifted":
        return BimatrixGame(eye, np.roll(eye, 1, axis=1), name=kind)
    if kind == "random":
        rng = substream(seed, d)
        return BimatrixGame(rng.uniform(size=(d, d)), rng.uniform(size=(d, d)), name=kind)
    raise ValueError(f"unknown game kind {kind!r}; expected one of {', '.join(GAME_KINDS)}")
