"""Bias accounting, calibration rates and online forecasters."""

from __future__ import annotations

import abc
import functools
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .rng import TAG_ADVERSARY, TAG_FORECASTER, substream
from .simplex import l1_distance, onehot, project_l2, simplex_point, uniform
from .triangulation import GridTriangulation, TestWeights


class BiasLedger:
    """Cumulative per-vertex bias ``B_p = sum_s w_p(p_s) (p_s - X_s)``.

    Also tracks the cumulative weights ``W_p``, the round count and the
    running sum of ``||B_p||_1`` so the weak rate is O(1) per round.
    Vertex ids index the rows; rows of untouched vertices stay zero.
    """

    def __init__(self, triangulation: GridTriangulation):
        self.triangulation = triangulation
        self.dim = triangulation.dim
        self.t = 0
        self._bias = np.zeros((64, self.dim))
        self._weight = np.zeros(64)
        self._norm_total = 0.0

    def _ensure(self, n: int):
        cap = len(self._weight)
        if n <= cap:
            return
        while cap < n:
            cap *= 2
        bias = np.zeros((cap, self.dim))
        bias[: len(self._weight)] = self._bias
        weight = np.zeros(cap)
        weight[: len(self._weight)] = self._weight
        self._bias, self._weight = bias, weight

    def update(self, forecast, outcome: int, weights: TestWeights | None = None) -> BiasLedger:
        """Record one round; returns ``self``."""
        forecast = np.asarray(forecast, dtype=float)
        if forecast.shape != (self.dim,):
            raise ValueError(f"forecast has shape {forecast.shape}, expected ({self.dim},)")
        diff = forecast - onehot(int(outcome), self.dim)
        if weights is None:
            weights = self.triangulation.locate(forecast)
        ids, w = weights
        self._ensure(self.triangulation.n_vertices)
        before = np.abs(self._bias[ids]).sum()
        self._bias[ids] += w[:, None] * diff
        self._weight[ids] += w
        self._norm_total += np.abs(self._bias[ids]).sum() - before
        self.t += 1
        return self

    def weak_rate(self) -> float:
        """``(1/t) sum_p ||B_p||_1`` over touched vertices."""
        if self.t == 0:
            raise ValueError("weak rate is undefined before the first round")
        return max(self._norm_total, 0.0) / self.t

    def recomputed_weak_rate(self) -> float:
        if self.t == 0:
            raise ValueError("weak rate is undefined before the first round")
        return float(np.abs(self._bias).sum()) / self.t

    def touched(self) -> np.ndarray:
        return np.flatnonzero(self._weight > 0)

    def bias(self, vid: int) -> np.ndarray:
        if vid >= len(self._weight):
            return np.zeros(self.dim)
        return self._bias[vid].copy()

    def weight(self, vid: int) -> float:
        if vid >= len(self._weight):
            return 0.0
        return float(self._weight[vid])

    def total_weight(self) -> float:
        return float(self._weight.sum())

    def mean_bias(self, q, check: bool = False) -> np.ndarray:
        """Interpolated average bias ``sum_p w_p(q) B_p / t`` at ``q``."""
        ids, w = self.triangulation.locate(q, check=check)
        self._ensure(self.triangulation.n_vertices)
        return (w @ self._bias[ids]) / max(self.t, 1)

    def contributions(self) -> dict[int, float]:
        """Per-vertex share ``||B_p||_1 / t`` of the weak rate."""
        t = max(self.t, 1)
        return {int(i): float(np.abs(self._bias[i]).sum()) / t for i in self.touched()}


def update_ledger(ledger: BiasLedger, forecast, outcome: int) -> BiasLedger:
    return ledger.update(forecast, outcome)


def weak_rate(ledger: BiasLedger) -> float:
    return ledger.weak_rate()


def weak_rate_from_history(forecasts, outcomes, triangulation: GridTriangulation) -> float:
    """Weak rate recomputed from scratch, independent of any ledger."""
    forecasts = np.asarray(forecasts, dtype=float)
    if len(forecasts) == 0:
        raise ValueError("weak rate is undefined for an empty history")
    acc: dict[int, np.ndarray] = {}
    for p, x in zip(forecasts, outcomes):
        diff = p - onehot(int(x), triangulation.dim)
        for vid, w in zip(*triangulation.locate(p)):
            acc[vid] = acc.get(vid, 0.0) + w * diff
    return sum(float(np.abs(b).sum()) for b in acc.values()) / len(forecasts)


def strong_rate(forecasts, outcomes, cover: GridTriangulation) -> float:
    """Calibration rate with nearest-grid-vertex indicator tests."""
    forecasts = np.asarray(forecasts, dtype=float)
    if len(forecasts) == 0:
        raise ValueError("strong rate is undefined for an empty history")
    acc: dict[int, np.ndarray] = {}
    for p, x in zip(forecasts, outcomes):
        vid = cover.strong_indicator(p)
        acc[vid] = acc.get(vid, 0.0) + (p - onehot(int(x), cover.dim))
    return sum(float(np.abs(b).sum()) for b in acc.values()) / len(forecasts)


@dataclass
class CalibrationReport:
    weak_rate: float
    strong_rate: float
    horizon: int
    precision: float
    contributions: dict[int, float] = field(default_factory=dict)


def calibration_report(ledger: BiasLedger, forecasts, outcomes) -> CalibrationReport:
    tri = ledger.triangulation
    return CalibrationReport(
        weak_rate=ledger.weak_rate(),
        strong_rate=strong_rate(forecasts, outcomes, tri),
        horizon=ledger.t,
        precision=tri.precision,
        contributions=ledger.contributions(),
    )


class FixedPointResult(NamedTuple):
    point: np.ndarray
    residual: float
    converged: bool
    iterations: int
    # (cell vertex ids, support mask) of an exact solution, reusable as a hint
    face: tuple | None = None


def _newton_target(ledger: BiasLedger, q: np.ndarray, fq: np.ndarray) -> np.ndarray | None:
    """Exact fixed point of the cell-local linearization around ``q``.

    Inside one cell the interpolated bias is linear, ``g(x) = x @ A`` with
    ``A = V^-1 G`` (rows of V: cell vertices, rows of G: their mean bias).
    For a support S the fixed-point conditions are ``g_i(x) = c`` on S,
    ``x = 0`` off S and ``sum(x) = 1``. S starts as the support of ``fq``
    and loses its most negative coordinate until the solution is feasible.
    """
    ids, _ = ledger.triangulation.cell(q)
    ledger._ensure(ledger.triangulation.n_vertices)
    G = ledger._bias[ids] / max(ledger.t, 1)
    A = ledger.triangulation.cell_inverse(ids) @ G
    support = np.flatnonzero(fq > 1e-12)
    while len(support):
        n = len(support)
        system = np.zeros((n + 1, n + 1))
        system[:n, :n] = A[np.ix_(support, support)].T
        system[:n, n] = -1.0
        system[n, :n] = 1.0
        rhs = np.zeros(n + 1)
        rhs[n] = 1.0
        try:
            sol = np.linalg.solve(system, rhs)
        except np.linalg.LinAlgError:
            return None
        x = sol[:n]
        if not np.all(np.isfinite(x)):
            return None
        if x.min() >= 0.0:
            target = np.zeros(ledger.dim)
            target[support] = x
            return target
        support = np.delete(support, np.argmin(x))
    return None


_SUPPORTS: dict[int, np.ndarray] = {}


def _supports(dim: int) -> np.ndarray:
    if dim not in _SUPPORTS:
        masks = (np.arange(1, 2**dim)[:, None] >> np.arange(dim)[None, :]) & 1
        _SUPPORTS[dim] = masks.astype(bool)
    return _SUPPORTS[dim]


def _face_cells(tri: GridTriangulation, x: np.ndarray) -> np.ndarray:
    """Cells containing the minimal face of ``x``, plus their facet neighbours."""
    ids = tri.locate(x, check=False).ids
    around = np.concatenate([tri.vertex_star(int(v)) for v in ids])
    hits = np.isin(around, ids).sum(axis=1)
    if len(ids) == tri.dim:
        keep = hits >= tri.dim - 1
    else:
        keep = hits == len(ids)
    return np.unique(around[keep], axis=0)


def _star_candidates(ledger: BiasLedger, x: np.ndarray, feas_tol: float = 1e-10, rings: int = 1) -> np.ndarray:
    """Exact fixed points found in the cells around ``x``, one per row.

    ``rings=0`` searches the cells containing ``x`` and, when ``x`` lies
    inside a full cell, that cell's facet neighbours. Each ring adds
    every cell sharing a vertex with the previous ones.
    """
    tri = ledger.triangulation
    if rings == 0:
        cells = _face_cells(tri, x)
    else:
        cells = tri.star(tri.cell(x)[0])
        for _ in range(rings - 1):
            cells = tri.star(np.unique(cells))
    return _cell_fixed_points(ledger, cells, x, feas_tol)


def _cell_fixed_points(ledger: BiasLedger, cells: np.ndarray, x: np.ndarray, feas_tol: float = 1e-10):
    """Exact fixed points inside the given cells, one per row.

    Returns ``(points, faces)``; ``faces[i]`` is the (cell, support) pair
    that produced point ``i``, or None for a bias-free face.

    Every cell and every support S gives one linear system (see
    :func:`_newton_target`); feasible solutions lie in their cell and
    satisfy the complementarity conditions. A face whose vertices carry no
    bias is fixed pointwise; its representative is the renormalized
    restriction of ``x``.
    """
    tri = ledger.triangulation
    ledger._ensure(tri.n_vertices)
    D = ledger.dim
    V = tri.vertices(cells.ravel()).reshape(len(cells), D, D)
    G = ledger._bias[cells] / max(ledger.t, 1)
    Vinv = np.stack([tri.cell_inverse(c) for c in cells.tolist()])
    A = Vinv @ G
    sup = _supports(D)
    n, m = len(cells), len(sup)
    M = np.zeros((n, m, D + 1, D + 1))
    # rows on S: sum_j q_j A[j, i] - c = 0; rows off S: q_i = 0
    At = np.swapaxes(A, 1, 2)
    M[:, :, :D, :D] = np.where(sup[None, :, :, None], At[:, None], np.eye(D)[None, None])
    M[:, :, :D, D] = np.where(sup[None], -1.0, 0.0)
    M[:, :, D, :D] = 1.0
    det = np.linalg.det(M)
    ok = np.abs(det) > 1e-12
    M[~ok] = np.eye(D + 1)
    rhs = np.zeros(D + 1)
    rhs[D] = 1.0
    sol = np.linalg.solve(M, np.broadcast_to(rhs, (n, m, D + 1))[..., None])[..., 0]
    q, c = sol[..., :D], sol[..., D]
    lam = np.einsum("nmj,njk->nmk", q, Vinv)
    g = np.einsum("nmj,nji->nmi", q, A)
    slack = np.where(sup[None], 0.0, g - c[..., None])
    ok &= (q >= -feas_tol).all(axis=2) & (lam >= -feas_tol).all(axis=2) & (slack >= -feas_tol).all(axis=2)
    found = [q[ok]]
    ci, si = np.nonzero(ok)
    faces = [(tuple(cells[a].tolist()), tuple(sup[b].tolist())) for a, b in zip(ci, si)]
    # bias-free faces
    zero = ~np.abs(G).any(axis=2)
    if zero.any():
        lam_x = np.maximum(x @ Vinv, 0.0)
        w = np.where(zero, lam_x, 0.0)
        tot = w.sum(axis=1)
        w = np.where(tot[:, None] > 0, w / np.where(tot > 0, tot, 1.0)[:, None], zero / np.maximum(zero.sum(axis=1), 1)[:, None])
        has = zero.any(axis=1)
        found.append(np.einsum("nk,nkd->nd", w[has], V[has]))
        faces += [None] * int(has.sum())
    pts = np.maximum(np.concatenate(found), 0.0)
    return pts / pts.sum(axis=1, keepdims=True), faces


def _solve_face(ledger: BiasLedger, face: tuple, feas_tol: float = 1e-10) -> np.ndarray | None:
    """The exact fixed point for one (cell, support) pair, or None if infeasible."""
    cell, mask = face
    tri = ledger.triangulation
    D = ledger.dim
    if max(cell) >= tri.n_vertices:
        return None
    ledger._ensure(tri.n_vertices)
    Vinv = tri.cell_inverse(cell)
    A = Vinv @ (ledger._bias[list(cell)] / max(ledger.t, 1))
    S = np.array(mask, dtype=bool)
    M = np.eye(D + 1)
    M[:D][S, :D] = A[:, S].T
    M[:D][S, D] = -1.0
    M[D, :D] = 1.0
    M[D, D] = 0.0
    rhs = np.zeros(D + 1)
    rhs[D] = 1.0
    try:
        sol = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        return None
    q, c = sol[:D], sol[D]
    if not np.all(np.isfinite(q)) or q.min() < -feas_tol:
        return None
    if (q @ Vinv).min() < -feas_tol:
        return None
    g = q @ A
    if S.all() or (g[~S] - c).min() >= -feas_tol:
        q = np.maximum(q, 0.0)
        return q / q.sum()
    return None


def _nearest_unbiased_vertex(ledger: BiasLedger, q: np.ndarray, max_levels: int = 64) -> np.ndarray | None:
    """A grid vertex with zero accumulated bias, close to ``q``.

    Such a vertex is an exact fixed point since the interpolated bias
    vanishes there. Breadth-first over unit moves from the nearest vertex;
    within the first level holding one, the closest to ``q`` wins.
    """
    tri = ledger.triangulation
    D, k = ledger.dim, tri.resolution
    start = tri.key(tri.strong_indicator(q))
    seen = {start}
    level = [start]

    def unbiased(key):
        vid = tri.lookup(key)
        return vid is None or vid >= len(ledger._bias) or not ledger._bias[vid].any()

    for _ in range(max_levels):
        hits = [y for y in level if unbiased(y)]
        if hits:
            pts = np.array(hits, dtype=float) / k
            return pts[np.argmin(np.abs(pts - q).sum(axis=1))]
        nxt = []
        for y in level:
            for i in range(D):
                if y[i] == 0:
                    continue
                for j in range(D):
                    if j != i:
                        z = list(y)
                        z[i] -= 1
                        z[j] += 1
                        z = tuple(z)
                        if z not in seen:
                            seen.add(z)
                            nxt.append(z)
        if not nxt:
            break
        level = nxt
    return None


def fixed_point_forecast(
    ledger: BiasLedger,
    step: float,
    tol: float = 1e-6,
    max_iter: int = 200,
    init=None,
    rng: np.random.Generator | Callable[[], np.random.Generator] | None = None,
    damping: float = 0.5,
    restarts: int = 8,
    newton: bool = True,
    local_search: bool = True,
    stall_window: int = 20,
    hints=(),
) -> FixedPointResult:
    """Approximate fixed point of ``Phi(q) = project(q - step * mean_bias(q))``.

    ``Phi`` is continuous on the simplex, so a fixed point exists. Each
    iteration first tries a Newton step toward the fixed point of the
    cell-local linearization, kept only if it lowers the residual
    ``||q - Phi(q)||_1``; otherwise it takes the damped step
    ``q <- (1 - damping) q + damping Phi(q)``.

    With ``local_search`` on (dimension up to ``STAR_MAX_DIM``), the exact
    fixed points of the cells containing ``init`` are tried first. Then
    the iteration runs from ``init`` (default uniform), abandoning it once
    the residual fails to halve over ``stall_window`` iterations. Next come
    exact fixed points of the cells around the best iterate and ``init``,
    nearest to ``init`` first, then a nearby grid vertex with no
    accumulated bias, which is always fixed. Up to ``restarts`` random
    touched vertices are tried last. Every candidate is checked against
    ``Phi`` at the given step. ``hints`` lists (cell, support) pairs from
    earlier solutions (``FixedPointResult.face``); their exact solutions
    are tried before anything else. Never raises
    on non-convergence: the best iterate seen is returned with its residual.
    """
    if not 0 < step <= 1:
        raise ValueError(f"step must lie in (0, 1], got {step}")
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")
    dim = ledger.dim
    q = uniform(dim) if init is None else simplex_point(init)

    def phi(x):
        return project_l2(x - step * ledger.mean_bias(x))

    best = [math.inf, q, None]
    total = 0

    def consider(x, face=None):
        nonlocal total
        total += 1
        r = l1_distance(x, phi(x))
        if r < best[0]:
            best[:] = [r, x, face]
        return r <= tol

    def iterate(x):
        nonlocal total
        fx = phi(x)
        r = l1_distance(x, fx)
        history = []
        for _ in range(max_iter):
            total += 1
            if r < best[0]:
                best[:] = [r, x, None]
            if r <= tol:
                return True
            history.append(r)
            # give up on a start that stopped making progress
            if len(history) > stall_window and r > 0.5 * history[-stall_window - 1]:
                return False
            moved = False
            target = _newton_target(ledger, x, fx) if newton else None
            if target is not None:
                direction = target - x
                alpha = 1.0
                while alpha > 1e-3:
                    y = np.maximum(x + alpha * direction, 0.0)
                    y /= y.sum()
                    fy = phi(y)
                    ry = l1_distance(y, fy)
                    if ry < r:
                        x, fx, r, moved = y, fy, ry, True
                        break
                    alpha *= 0.5
            if not moved:
                x = (1.0 - damping) * x + damping * fx
                fx = phi(x)
                r = l1_distance(x, fx)
        if r < best[0]:
            best[:] = [r, x, None]
        return r <= tol

    def done():
        return FixedPointResult(best[1], best[0], best[0] <= tol, total, best[2])

    exact = local_search and dim <= ledger.triangulation.STAR_MAX_DIM and ledger.t > 0

    def search(centre, rings):
        cands, faces = _star_candidates(ledger, centre, rings=rings)
        if len(cands):
            order = np.argsort(np.abs(cands - q).sum(axis=1), kind="stable")
            for i in order[:4]:
                if consider(cands[i], faces[i]):
                    return True
        return False

    if exact:
        for face in hints:
            x = _solve_face(ledger, face)
            if x is not None and consider(x, face):
                return done()
    if exact and search(q, 0):
        return done()
    if iterate(q):
        return done()
    if exact:
        for centre, rings in ((best[1], 1), (q, 1), (q, 2)):
            if search(centre, rings):
                return done()
    if local_search:
        x = _nearest_unbiased_vertex(ledger, q)
        if x is not None and consider(x):
            return done()
    touched = ledger.touched()
    if len(touched) and restarts > 0:
        if rng is None:
            rng = np.random.default_rng(0)
        elif callable(rng):
            rng = rng()
        picks = rng.choice(touched, size=min(restarts, len(touched)), replace=False)
        for v in picks:
            if iterate(ledger.triangulation.vertex(int(v))):
                break
    return done()


class Forecaster(abc.ABC):
    """Online forecaster over ``dim`` outcomes.

    Callers alternate :meth:`next` and :meth:`observe`. The forecast at
    round ``t`` may depend only on the configuration and outcomes before t.
    """

    dim: int
    last_residual: float = math.nan

    @abc.abstractmethod
    def next(self) -> np.ndarray: ...

    @abc.abstractmethod
    def observe(self, outcome: int) -> None: ...


class FixedPointForecaster(Forecaster):
    """Deterministic forecaster playing an approximate fixed point of the bias map.

    At a fixed point ``q`` the interpolated bias ``g(q)`` satisfies
    ``<g(q), q - x> <= 0`` for every ``x`` in the simplex, so the squared
    bias potential grows by at most a constant per round whatever the
    outcome. ``step=None`` uses ``1/sqrt(t)``.
    """

    N_HINTS = 4

    def __init__(
        self,
        triangulation: GridTriangulation,
        seed: int = 0,
        step: float | None = None,
        tol: float = 1e-6,
        max_iter: int = 200,
        damping: float = 0.5,
        restarts: int = 8,
    ):
        self.triangulation = triangulation
        self.dim = triangulation.dim
        self.ledger = BiasLedger(triangulation)
        self.seed = seed
        self.step = step
        self.tol = tol
        self.max_iter = max_iter
        self.damping = damping
        self.restarts = restarts
        self._current: np.ndarray | None = None
        self._previous = uniform(self.dim)
        self._faces: list[tuple] = []
        self.last_result: FixedPointResult | None = None

    def next(self) -> np.ndarray:
        if self._current is None:
            t = max(self.ledger.t, 1)
            step = self.step if self.step is not None else 1.0 / math.sqrt(t)
            res = fixed_point_forecast(
                self.ledger,
                step,
                tol=self.tol,
                max_iter=self.max_iter,
                init=self._previous,
                rng=functools.partial(substream, self.seed, TAG_FORECASTER, self.ledger.t),
                damping=self.damping,
                restarts=self.restarts,
                hints=self._faces,
            )
            if res.face is not None:
                # most recent first; a short list covers back-and-forth moves
                self._faces = [res.face] + [f for f in self._faces if f != res.face][: self.N_HINTS - 1]
            self.last_result = res
            self.last_residual = res.residual
            self._current = res.point
        return self._current.copy()

    def observe(self, outcome: int) -> None:
        forecast = self.next()
        self.ledger.update(forecast, outcome)
        self._previous = forecast
        self._current = None


class EmpiricalAverageForecaster(Forecaster):
    """Baseline: forecast the running empirical frequency (uniform before any data)."""

    def __init__(self, dim: int):
        self.dim = dim
        self.counts = np.zeros(dim)

    def next(self) -> np.ndarray:
        return empirical_average_forecast(self.counts)

    def observe(self, outcome: int) -> None:
        self.counts[outcome] += 1


def empirical_average_forecast(counts) -> np.ndarray:
    counts = np.asarray(counts, dtype=float)
    n = counts.sum()
    if n == 0:
        return uniform(len(counts))
    return counts / n


def empirical_average_from_outcomes(outcomes, dim: int) -> np.ndarray:
    return empirical_average_forecast(np.bincount(np.asarray(outcomes, dtype=int), minlength=dim))


# adversaries: called as adversary(t, forecast) -> outcome index, t 0-based


class IIDAdversary:
    """Outcomes drawn i.i.d. from ``probs``, ignoring the forecasts.

    Draws come in blocks of ``BLOCK`` rounds, each from its own substream,
    so outcome ``t`` does not depend on which rounds were asked for before.
    """

    BLOCK = 1024

    def __init__(self, dim: int, seed: int = 0, probs=None):
        self.dim = dim
        self.probs = uniform(dim) if probs is None else simplex_point(probs)
        self.seed = seed
        self._block = (-1, None)

    def __call__(self, t: int, forecast) -> int:
        b, r = divmod(t, self.BLOCK)
        if self._block[0] != b:
            rng = substream(self.seed, TAG_ADVERSARY, b)
            self._block = (b, rng.choice(self.dim, size=self.BLOCK, p=self.probs))
        return int(self._block[1][r])


class AlternatingAdversary:
    """Cycles through the outcomes 0, 1, ..., dim-1, 0, ..."""

    def __init__(self, dim: int):
        self.dim = dim

    def __call__(self, t: int, forecast) -> int:
        return t % self.dim


class AdaptiveAdversary:
    """Plays the outcome the forecast considers least likely (lowest index on ties)."""

    def __init__(self, dim: int):
        self.dim = dim

    def __call__(self, t: int, forecast) -> int:
        return int(np.argmin(forecast))


ADVERSARIES = ("iid", "alternating", "adaptive")


def make_adversary(name: str, dim: int, seed: int = 0):
    if name == "iid":
        return IIDAdversary(dim, seed)
    if name == "alternating":
        return AlternatingAdversary(dim)
    if name == "adaptive":
        return AdaptiveAdversary(dim)
    raise ValueError(f"unknown adversary {name!r}; choose from {ADVERSARIES}")


FORECASTERS = ("fixedpoint", "empirical")


def make_forecaster(name: str, triangulation: GridTriangulation, seed: int = 0, **params) -> Forecaster:
    if name == "fixedpoint":
        return FixedPointForecaster(triangulation, seed=seed, **params)
    if name == "empirical":
        if params:
            raise ValueError(f"empirical forecaster takes no parameters, got {sorted(params)}")
        return EmpiricalAverageForecaster(triangulation.dim)
    raise ValueError(f"unknown forecaster {name!r}; choose from {FORECASTERS}")


@dataclass
class CalibrationRun:
    forecasts: np.ndarray
    outcomes: np.ndarray
    residuals: np.ndarray
    weak_rates: np.ndarray
    ledger: BiasLedger

    @property
    def rounds(self) -> int:
        return len(self.outcomes)


def run_calibration(forecaster: Forecaster, adversary, triangulation: GridTriangulation, rounds: int) -> CalibrationRun:
    """Play ``forecaster`` against ``adversary`` and track the running weak rate."""
    ledger = BiasLedger(triangulation)
    dim = triangulation.dim
    forecasts = np.empty((rounds, dim))
    outcomes = np.empty(rounds, dtype=np.int64)
    residuals = np.empty(rounds)
    rates = np.empty(rounds)
    for t in range(rounds):
        p = forecaster.next()
        x = adversary(t, p)
        forecaster.observe(x)
        ledger.update(p, x)
        forecasts[t] = p
        outcomes[t] = x
        residuals[t] = forecaster.last_residual
        rates[t] = ledger.weak_rate()
    return CalibrationRun(forecasts, outcomes, residuals, rates, ledger)
