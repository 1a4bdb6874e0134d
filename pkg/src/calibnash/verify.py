"""Randomized property suites for the cover, payoffs, smoothed responses and rates.

Each check draws its instances from a seeded generator, counts violations
of one inequality and reports the largest excess over the allowed bound
(negative when every instance has slack).
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .calibration import BiasLedger
from .games import SmoothBRConfig, best_response, generate_game, mc_tolerance, ne_gap, payoff, smooth_best_response
from .reduction import smoothed_pair
from .simplex import l1_distance, marginals, outer, random_point
from .triangulation import GridTriangulation, TestWeights


@dataclass
class CheckResult:
    name: str
    trials: int = 0
    violations: int = 0
    max_excess: float = -math.inf
    seconds: float = 0.0
    params: dict = field(default_factory=dict)

    @property
    def passed(self) -> int:
        return self.trials - self.violations

    @property
    def ok(self) -> bool:
        return self.violations == 0 and self.trials > 0

    def record(self, value: float, bound: float) -> bool:
        """Count one instance; true when ``value <= bound``."""
        self.trials += 1
        excess = value - bound
        self.max_excess = max(self.max_excess, excess)
        if not excess <= 0:
            self.violations += 1
            return False
        return True

    def as_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        if not math.isfinite(out["max_excess"]):
            out["max_excess"] = 0.0
        return out

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return f"{status} {self.name}: {self.passed}/{self.trials} (max excess {self.max_excess:.3g}, {self.seconds:.1f}s)"


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def random_query(rng: np.random.Generator, dim: int) -> np.ndarray:
    """A simplex point that is often on a face or a grid-aligned value."""
    kind = rng.integers(4)
    if kind == 0:
        return random_point(rng, dim)
    if kind == 1:
        # sparse support
        q = random_point(rng, dim) * (rng.random(dim) < 0.5)
        if q.sum() == 0:
            q[rng.integers(dim)] = 1.0
        return q / q.sum()
    if kind == 2:
        # a multiple of 1/m, so partial sums often hit grid lines exactly
        m = int(rng.integers(1, 13))
        y = rng.multinomial(m, np.full(dim, 1.0 / dim))
        return y / m
    return np.eye(dim)[rng.integers(dim)]


@_timed
def check_cover(dims=range(2, 10), queries: int = 10_000, epsilon: float = 0.25, seed: int = 0, tol: float = 1e-9) -> CheckResult:
    """Test weights sum to one and reconstruct the query; the strong
    indicator is a single vertex at least as close as every active one."""
    res = CheckResult("cover identities", params={"dims": list(dims), "queries": queries, "epsilon": epsilon, "tol": tol})
    rng = np.random.default_rng(seed)
    for D in dims:
        tri = GridTriangulation.from_precision(D, epsilon)
        for _ in range(queries):
            q = random_query(rng, D)
            tw = tri.locate(q)
            V = tri.vertices(tw.ids)
            err = max(abs(tw.weights.sum() - 1.0), np.abs(tw.weights @ V - q).max())
            if tw.weights.min() <= 0:
                err = math.inf
            sid = tri.strong_indicator(q)
            near = np.abs(tri.vertex(sid) - q).sum()
            if near > np.abs(V - q).sum(axis=1).min() + 1e-12:
                err = math.inf
            res.record(err, tol)
    return res


@_timed
def check_payoff_lipschitz(trials: int = 1000, dims=(2, 3, 4, 5), seed: int = 0, tol: float = 1e-12) -> CheckResult:
    """``|U_i(p1, q) - U_i(p2, q)| <= ||p1 - p2||_1`` for both players."""
    res = CheckResult("payoff Lipschitz", params={"trials": trials, "dims": list(dims), "tol": tol})
    rng = np.random.default_rng(seed)
    for k in range(trials):
        d = int(rng.choice(dims))
        game = generate_game("random", d, seed=k + 1000 * seed)
        p1, p2, q = (random_query(rng, d) for _ in range(3))
        gap = max(
            abs(payoff(game, 1, p1, q) - payoff(game, 1, p2, q)),
            abs(payoff(game, 2, q, p1) - payoff(game, 2, q, p2)),
        )
        res.record(gap, l1_distance(p1, p2) + tol)
    return res


def _own_payoff(game, player, own, opponent):
    return payoff(game, 1, own, opponent) if player == 1 else payoff(game, 2, opponent, own)


@_timed
def check_best_response_loss(
    trials: int = 200, dims=(2, 3), deltas=(0.05, 0.1, 0.2), samples: int = 100_000, seed: int = 0
) -> CheckResult:
    """Smoothing costs at most ``2 d delta`` payoff, plus Monte Carlo slack."""
    res = CheckResult("smoothed response loss", params={"trials": trials, "dims": list(dims), "deltas": list(deltas), "samples": samples})
    rng = np.random.default_rng(seed)
    for k in range(trials):
        d = int(rng.choice(dims))
        delta = float(rng.choice(deltas))
        player = int(rng.integers(1, 3))
        game = generate_game("random", d, seed=10_000 + k + 1000 * seed)
        q = random_query(rng, d)
        br = best_response(game, player, q)
        sbr = smooth_best_response(game, player, q, SmoothBRConfig(delta, samples, (seed, 1, k)))
        loss = _own_payoff(game, player, br, q) - _own_payoff(game, player, sbr, q)
        res.record(loss, 2 * d * delta + mc_tolerance(d, samples))
    return res


@_timed
def check_smooth_lipschitz(trials: int = 200, dims=(3,), delta: float = 0.2, samples: int = 100_000, seed: int = 0) -> CheckResult:
    """``||BR_delta(p) - BR_delta(q)||_1 <= (2 / delta^2) ||p - q||_1`` plus
    slack for two independent estimates. Pairs sit at log-uniform distances
    so the linear term does not swamp the comparison."""
    dims = [d for d in dims if 2 < d < 1 / delta]
    res = CheckResult("smoothed response Lipschitz", params={"trials": trials, "dims": dims, "delta": delta, "samples": samples})
    if not dims:
        return res
    rng = np.random.default_rng(seed)
    for k in range(trials):
        d = int(rng.choice(dims))
        player = int(rng.integers(1, 3))
        game = generate_game("random", d, seed=20_000 + k + 1000 * seed)
        p = random_point(rng, d)
        r = 10 ** rng.uniform(-4, -1)
        q = (1 - r) * p + r * random_point(rng, d)
        a = smooth_best_response(game, player, p, SmoothBRConfig(delta, samples, (seed, 2, k, 0)))
        b = smooth_best_response(game, player, q, SmoothBRConfig(delta, samples, (seed, 2, k, 1)))
        res.record(l1_distance(a, b), 2 * l1_distance(p, q) / delta**2 + 2 * mc_tolerance(d, samples))
    return res


@_timed
def check_fixed_point_gap(trials: int = 200, dims=(2, 3), delta: float = 0.2, samples: int = 100_000, seed: int = 0) -> CheckResult:
    """Near fixed points of the smoothed response are near equilibria:
    ``ne_gap(BR_delta(p)) <= 2 ||p - BR_delta(p)||_1 + 2 d delta + 4 tau``.

    Joints are mixtures of a random joint with the product of its smoothed
    responses, so the residual spans small and large values.
    """
    res = CheckResult("fixed point to equilibrium", params={"trials": trials, "dims": list(dims), "delta": delta, "samples": samples})
    rng = np.random.default_rng(seed)
    for k in range(trials):
        d = int(rng.choice(dims))
        game = generate_game(str(rng.choice(["random", "matching_pennies", "coordination", "shifted"])), d, seed=30_000 + k)
        p0 = random_point(rng, d * d)
        x0, y0 = smoothed_pair(game, p0, SmoothBRConfig(delta, samples, (seed, 3, k, 0)))
        lam = rng.choice([0.0, rng.uniform(0, 0.1), rng.uniform()])
        p = (1 - lam) * outer(x0, y0) + lam * p0
        x, y = smoothed_pair(game, p, SmoothBRConfig(delta, samples, (seed, 3, k, 1)))
        residual = l1_distance(p, outer(x, y))
        res.record(ne_gap(game, (x, y)), 2 * residual + 2 * d * delta + 4 * mc_tolerance(d, samples))
    return res


@_timed
def check_marginal_contraction(trials: int = 1000, dims=(2, 3, 4, 5), seed: int = 0, tol: float = 1e-12) -> CheckResult:
    """Both marginals move no more than the joint: ``||[q]_i - [p]_i||_1 <= ||q - p||_1``."""
    res = CheckResult("marginal contraction", params={"trials": trials, "dims": list(dims), "tol": tol})
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        d = int(rng.choice(dims))
        p, q = random_query(rng, d * d), random_query(rng, d * d)
        (p1, p2), (q1, q2) = marginals(p), marginals(q)
        res.record(max(l1_distance(p1, q1), l1_distance(p2, q2)), l1_distance(p, q) + tol)
    return res


@_timed
def check_product_bound(trials: int = 1000, dims=(2, 3, 4, 5), seed: int = 0, tol: float = 1e-12) -> CheckResult:
    """``||u x v - u' x v'||_1 <= ||u - u'||_1 + ||v - v'||_1``."""
    res = CheckResult("product distance", params={"trials": trials, "dims": list(dims), "tol": tol})
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        d = int(rng.choice(dims))
        u, v, u2, v2 = (random_query(rng, d) for _ in range(4))
        res.record(l1_distance(outer(u, v), outer(u2, v2)), l1_distance(u, u2) + l1_distance(v, v2) + tol)
    return res


@_timed
def check_rate_range(rounds: int = 100_000, seed: int = 0, tol: float = 1e-12) -> CheckResult:
    """Weak and strong rates stay inside ``[0, 2]`` on fuzzed sequences.

    Rounds are split over sequences that mix adversarial patterns: a
    forecast pinned to a vertex with the opposite outcome, forecasts near
    cell boundaries, and uniformly random play.
    """
    res = CheckResult("rate range", params={"rounds": rounds, "tol": tol})
    rng = np.random.default_rng(seed)
    configs = [(2, 0.1), (3, 0.25), (4, 0.5), (6, 0.5), (9, 1.0)]
    per = rounds // (2 * len(configs))
    done = 0
    seq = 0
    while done < rounds:
        D, eps = configs[seq % len(configs)]
        pattern = seq // len(configs) % 2
        n = min(per, rounds - done)
        tri = GridTriangulation.from_precision(D, eps)
        weak, strong = BiasLedger(tri), BiasLedger(tri)
        worst_v = int(rng.integers(D))
        for t in range(n):
            if pattern == 0 and rng.random() < 0.7:
                q = np.eye(D)[worst_v]
                x = (worst_v + 1 + int(rng.integers(D - 1))) % D
            else:
                q = random_query(rng, D)
                x = int(rng.integers(D))
            weak.update(q, x)
            strong.update(q, x, TestWeights(np.array([tri.strong_indicator(q)]), np.ones(1)))
            for led in (weak, strong):
                r = led.weak_rate()
                res.record(max(r - 2.0, -r), tol)
        done += n
        seq += 1
    return res


SUITES = {
    "cover": (check_cover,),
    "inequalities": (check_payoff_lipschitz, check_marginal_contraction, check_product_bound),
    "lemmas": (check_best_response_loss, check_smooth_lipschitz, check_fixed_point_gap),
    "rates": (check_rate_range,),
}


def run_suite(name: str, dims=None, trials: int | None = None, seed: int = 0) -> list[CheckResult]:
    """Run one named suite (or ``all``). ``dims`` and ``trials`` override
    each check's defaults where the check takes them."""
    names = list(SUITES) if name == "all" else [name]
    results = []
    for n in names:
        if n not in SUITES:
            raise ValueError(f"unknown suite {n!r}; choose from {', '.join(SUITES)}, all")
        for check in SUITES[n]:
            kwargs = {"seed": seed}
            if dims is not None and check is not check_rate_range:
                kwargs["dims"] = tuple(dims)
            if trials is not None:
                key = {"check_cover": "queries", "check_rate_range": "rounds"}.get(check.__name__, "trials")
                kwargs[key] = trials
            results.append(check(**kwargs))
    return results
