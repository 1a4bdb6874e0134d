"""Approximate Nash equilibria from a calibrated forecaster.

A forecaster predicts joint distributions over action pairs ``(i, j)``
(flat index ``i * d + j``). Each round both players smoothly best-respond
to the forecast's marginals and the realized pair is fed back. At the end
a round is drawn uniformly, a grid vertex is drawn from that round's test
weights, and the smoothed best responses to that vertex are returned.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .calibration import FORECASTERS, BiasLedger, make_forecaster
from .games import BimatrixGame, SmoothBRConfig, mc_tolerance, ne_gap, smooth_best_response
from .rng import TAG_BR, TAG_FINAL, TAG_OUTCOME, substream
from .simplex import l1_distance, marginals, outer, simplex_point
from .triangulation import GridTriangulation


@dataclass(frozen=True)
class ReductionConfig:
    game: BimatrixGame
    epsilon: float
    rounds: int
    delta: float | None = None
    forecaster: str = "fixedpoint"
    forecaster_params: dict = field(default_factory=dict)
    mc_samples: int = 10_000
    mc_samples_final: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.game, BimatrixGame):
            raise TypeError("game must be a BimatrixGame")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if int(self.rounds) != self.rounds or self.rounds < 1:
            raise ValueError(f"rounds must be a positive integer, got {self.rounds}")
        if self.delta is None:
            object.__setattr__(self, "delta", self.epsilon ** (1.0 / 3.0))
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.forecaster not in FORECASTERS:
            raise ValueError(f"unknown forecaster {self.forecaster!r}; choose from {FORECASTERS}")
        for name in ("mc_samples", "mc_samples_final"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed}")
        object.__setattr__(self, "rounds", int(self.rounds))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def d(self) -> int:
        return self.game.d

    def triangulation(self) -> GridTriangulation:
        return GridTriangulation.from_precision(self.d * self.d, self.epsilon)

    def make_forecaster(self, triangulation: GridTriangulation):
        return make_forecaster(self.forecaster, triangulation, seed=self.seed, **self.forecaster_params)

    def br_config(self, final: bool = False) -> SmoothBRConfig:
        return SmoothBRConfig(self.delta, self.mc_samples_final if final else self.mc_samples)

    def echo(self) -> dict:
        return {
            "game": {"name": self.game.name, "d": self.d, "U1": self.game.U1.tolist(), "U2": self.game.U2.tolist()},
            "epsilon": self.epsilon,
            "delta": self.delta,
            "rounds": self.rounds,
            "forecaster": self.forecaster,
            "forecaster_params": dict(self.forecaster_params),
            "mc_samples": self.mc_samples,
            "mc_samples_final": self.mc_samples_final,
            "seed": self.seed,
        }


def smoothed_pair(game: BimatrixGame, joint, cfg: SmoothBRConfig) -> tuple[np.ndarray, np.ndarray]:
    """Smoothed best responses of both players to the marginals of ``joint``.

    Player ``i`` draws from substream ``(*cfg.seed, i)``.
    """
    m1, m2 = marginals(joint)
    x = smooth_best_response(game, 1, m2, cfg.with_seed(*cfg.seed, 1))
    y = smooth_best_response(game, 2, m1, cfg.with_seed(*cfg.seed, 2))
    return x, y


def draw_outcome(rng: np.random.Generator, x, y) -> tuple[int, int]:
    """One pair from ``outer(x, y)``: two independent categorical draws."""
    d = len(x)
    return int(rng.choice(d, p=x)), int(rng.choice(d, p=y))


def estimate_fixed_point_residual(joint, game: BimatrixGame, delta: float, samples: int, seed=(0,)) -> float:
    """``||p - outer(BR_1(p_2), BR_2(p_1))||_1`` with Monte Carlo responses."""
    p = simplex_point(joint)
    seed = seed if isinstance(seed, tuple) else (seed,)
    x, y = smoothed_pair(game, p, SmoothBRConfig(delta, samples, seed))
    return l1_distance(p, outer(x, y))


def theorem_bounds(weak_rate: float, epsilon: float, d: int) -> tuple[float, float]:
    """Nash-gap bounds ``(4C + 20e + 2de, 4C + 22de)``, ``e = epsilon ** (1/3)``."""
    e = epsilon ** (1.0 / 3.0)
    return 4 * weak_rate + 20 * e + 2 * d * e, 4 * weak_rate + 22 * d * e


def residual_bound(weak_rate: float, epsilon: float, delta: float) -> float:
    """Bound on the expected fixed-point residual of the sampled vertex."""
    return weak_rate + epsilon + 4 * epsilon / delta**2


@dataclass(frozen=True)
class Certificate:
    weak_rate: float
    residual: float
    gamma: float
    tau_mc: float
    gap_bound: float  # 2 * residual + 2 d delta + 4 tau_mc
    proof_bound: float
    theorem_bound: float
    residual_bound: float
    d_gt_2: bool
    epsilon_lt_inv_d3: bool

    @property
    def hypotheses_hold(self) -> bool:
        return bool(self.d_gt_2 and self.epsilon_lt_inv_d3)

    @property
    def gap_ok(self) -> bool:
        return bool(self.gamma <= self.gap_bound)

    @property
    def proof_ok(self) -> bool:
        return bool(self.gamma <= self.proof_bound)

    @property
    def theorem_ok(self) -> bool:
        return bool(self.gamma <= self.theorem_bound)

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out.update(
            hypotheses_hold=self.hypotheses_hold,
            gap_ok=self.gap_ok,
            proof_ok=self.proof_ok,
            theorem_ok=self.theorem_ok,
        )
        return out


@dataclass
class ReductionTranscript:
    config: ReductionConfig
    forecasts: np.ndarray  # (T, d*d)
    responses: np.ndarray  # (T, 2, d): smoothed responses that drew the outcome
    outcomes: np.ndarray  # (T, 2): realized (i, j), 0-based
    residuals: np.ndarray  # forecaster fixed-point residual per round
    converged: np.ndarray
    weak_rates: np.ndarray  # running weak rate after each round
    final_round: int  # 1-based
    final_vertex: np.ndarray
    output: tuple[np.ndarray, np.ndarray]
    ledger: BiasLedger = field(repr=False)
    certificate: Certificate | None = None

    @property
    def rounds(self) -> int:
        return len(self.outcomes)

    @property
    def pair_outcomes(self) -> np.ndarray:
        return self.outcomes[:, 0] * self.config.d + self.outcomes[:, 1]


def run_reduction(cfg: ReductionConfig) -> ReductionTranscript:
    """Run the forecasting loop and return its transcript with certificate.

    Randomness: round ``t`` responses use substream ``(seed, TAG_BR, t,
    player, chunk)``, its outcome draw ``(seed, TAG_OUTCOME, t)``; the final
    round and vertex come from ``(seed, TAG_FINAL, 0)`` and the output
    responses from ``(seed, TAG_FINAL, 1, player, chunk)``.
    """
    game, d, T = cfg.game, cfg.d, cfg.rounds
    tri = cfg.triangulation()
    forecaster = cfg.make_forecaster(tri)
    ledger = BiasLedger(tri)
    br = cfg.br_config()
    forecasts = np.empty((T, d * d))
    responses = np.empty((T, 2, d))
    outcomes = np.empty((T, 2), dtype=np.int64)
    residuals = np.zeros(T)
    converged = np.ones(T, dtype=bool)
    rates = np.empty(T)
    for t in range(1, T + 1):
        p = forecaster.next()
        x, y = smoothed_pair(game, p, br.with_seed(cfg.seed, TAG_BR, t))
        i, j = draw_outcome(substream(cfg.seed, TAG_OUTCOME, t), x, y)
        ledger.update(p, i * d + j)
        forecaster.observe(i * d + j)
        k = t - 1
        forecasts[k] = p
        responses[k, 0], responses[k, 1] = x, y
        outcomes[k] = (i, j)
        residuals[k] = forecaster.last_residual
        res = getattr(forecaster, "last_result", None)
        converged[k] = True if res is None else res.converged
        rates[k] = ledger.weak_rate()

    rng = substream(cfg.seed, TAG_FINAL, 0)
    t_star = int(rng.integers(T)) + 1
    tw = tri.locate(forecasts[t_star - 1])
    vid = int(rng.choice(tw.ids, p=tw.weights / tw.weights.sum()))
    p_star = tri.vertex(vid)
    output = smoothed_pair(game, p_star, cfg.br_config(final=True).with_seed(cfg.seed, TAG_FINAL, 1))
    tr = ReductionTranscript(
        config=cfg,
        forecasts=forecasts,
        responses=responses,
        outcomes=outcomes,
        residuals=residuals,
        converged=converged,
        weak_rates=rates,
        final_round=t_star,
        final_vertex=p_star,
        output=output,
        ledger=ledger,
    )
    tr.certificate = certificate(tr)
    return tr


def certificate(tr: ReductionTranscript) -> Certificate:
    """Measured rates, residual and Nash gap of a finished run, with bounds.

    The residual reuses the output's substreams, so it measures exactly
    the distance between the sampled vertex and the returned profile.
    """
    cfg = tr.config
    d = cfg.d
    C = float(tr.ledger.weak_rate())
    residual = l1_distance(tr.final_vertex, outer(*tr.output))
    gamma = ne_gap(cfg.game, tr.output)
    tau = mc_tolerance(d, cfg.mc_samples_final)
    proof, theorem = theorem_bounds(C, cfg.epsilon, d)
    return Certificate(
        weak_rate=C,
        residual=residual,
        gamma=gamma,
        tau_mc=tau,
        gap_bound=2 * residual + 2 * d * cfg.delta + 4 * tau,
        proof_bound=proof,
        theorem_bound=theorem,
        residual_bound=residual_bound(C, cfg.epsilon, cfg.delta),
        d_gt_2=bool(d > 2),
        epsilon_lt_inv_d3=bool(cfg.epsilon < 1.0 / d**3),
    )


def replay_forecasts(cfg: ReductionConfig, pair_outcomes) -> np.ndarray:
    """Forecasts a fresh forecaster makes when fed the given outcomes."""
    tri = cfg.triangulation()
    forecaster = cfg.make_forecaster(tri)
    out = []
    for o in pair_outcomes:
        out.append(forecaster.next())
        forecaster.observe(int(o))
    return np.array(out).reshape(len(out), cfg.d * cfg.d)


def transcript_digest(tr: ReductionTranscript) -> str:
    """SHA-256 over the transcript arrays, output and certificate."""
    h = hashlib.sha256()
    for arr in (tr.forecasts, tr.responses, tr.outcomes, tr.residuals, tr.weak_rates, tr.final_vertex, *tr.output):
        a = np.ascontiguousarray(arr)
        h.update(str(a.dtype).encode())
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    h.update(str(tr.final_round).encode())
    if tr.certificate is not None:
        h.update(json.dumps(tr.certificate.as_dict(), sort_keys=True).encode())
    return h.hexdigest()


def gap_chain_holds(cert: Certificate) -> bool:
    return math.isfinite(cert.gamma) and cert.gap_ok
