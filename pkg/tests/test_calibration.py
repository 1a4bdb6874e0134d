import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import project_by_bisection, weak_rate_by_dict

from calibnash.calibration import (
    BiasLedger,
    EmpiricalAverageForecaster,
    FixedPointForecaster,
    IIDAdversary,
    calibration_report,
    empirical_average_from_outcomes,
    fixed_point_forecast,
    make_adversary,
    make_forecaster,
    run_calibration,
    strong_rate,
    weak_rate_from_history,
)
from calibnash.triangulation import GridTriangulation


def random_history(rng, dim, T, grid_k=None):
    ps = rng.dirichlet(np.ones(dim) * 0.7, size=T)
    if grid_k:
        # snap some forecasts onto grid vertices and faces
        snap = np.floor(ps[::3] * grid_k)
        snap[np.arange(len(snap)), ps[::3].argmax(axis=1)] += grid_k - snap.sum(axis=1)
        ps[::3] = snap / grid_k
    xs = rng.integers(dim, size=T)
    return ps, xs


def ledger_from(tri, ps, xs):
    led = BiasLedger(tri)
    for p, x in zip(ps, xs):
        led.update(p, x)
    return led


class OracleMap:
    """Independent bias map and projection step built from a raw history."""

    def __init__(self, tri, ps, xs):
        self.tri, self.dim, self.T = tri, tri.dim, len(xs)
        self.acc = {}
        for p, x in zip(ps, xs):
            e = np.zeros(self.dim)
            e[x] = 1
            for vid, w in zip(*tri.locate(p)):
                self.acc[int(vid)] = self.acc.get(int(vid), 0) + w * (p - e)

    def g(self, q):
        ids, w = self.tri.locate(q)
        return sum(wi * self.acc.get(int(v), 0) for v, wi in zip(ids, w)) / max(self.T, 1)

    def residual(self, q, step):
        return float(np.abs(q - project_by_bisection(q - step * self.g(q))).sum())


class TestWeakRate:
    def test_single_round_by_hand(self):
        tri = GridTriangulation(2, 2)
        led = BiasLedger(tri).update([0.75, 0.25], 0)
        # weights 1/2 on (1,1) and (2,0); each bias is (-1/8, 1/8)
        assert led.weak_rate() == pytest.approx(0.5)

    def test_cancelling_rounds(self):
        tri = GridTriangulation(2, 2)
        led = BiasLedger(tri).update([0.5, 0.5], 0).update([0.5, 0.5], 1)
        assert led.weak_rate() == pytest.approx(0.0, abs=1e-15)

    def test_extremes(self):
        tri = GridTriangulation(3, 4)
        assert ledger_from(tri, [[1, 0, 0]] * 5, [0] * 5).weak_rate() == 0.0
        assert ledger_from(tri, [[1, 0, 0]] * 5, [1] * 5).weak_rate() == pytest.approx(2.0)

    @pytest.mark.parametrize("dim,k", [(2, 6), (3, 4), (4, 3), (5, 2)])
    def test_matches_dict_oracle(self, dim, k):
        rng = np.random.default_rng(dim)
        tri = GridTriangulation(dim, k)
        ps, xs = random_history(rng, dim, 300, grid_k=k)
        led = ledger_from(tri, ps, xs)
        expected = weak_rate_by_dict(list(zip(ps, xs)), tri.locate, dim)
        assert led.weak_rate() == pytest.approx(expected, rel=1e-10, abs=1e-13)
        assert led.recomputed_weak_rate() == pytest.approx(expected, rel=1e-10, abs=1e-13)
        assert weak_rate_from_history(ps, xs, tri) == pytest.approx(expected, rel=1e-10, abs=1e-13)
        assert sum(led.contributions().values()) == pytest.approx(expected, rel=1e-10)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(2, 5), st.integers(1, 6), st.integers(1, 80), st.integers(0, 2**31))
    def test_rate_in_range_and_weights_sum_to_t(self, dim, k, T, seed):
        rng = np.random.default_rng(seed)
        tri = GridTriangulation(dim, k)
        ps, xs = random_history(rng, dim, T, grid_k=k)
        led = ledger_from(tri, ps, xs)
        assert 0.0 <= led.weak_rate() <= 2.0 + 1e-12
        assert led.total_weight() == pytest.approx(T)
        assert 0.0 <= strong_rate(ps, xs, tri) <= 2.0 + 1e-12

    def test_empty_history(self):
        tri = GridTriangulation(2, 2)
        with pytest.raises(ValueError):
            BiasLedger(tri).weak_rate()
        with pytest.raises(ValueError):
            weak_rate_from_history([], [], tri)
        with pytest.raises(ValueError):
            strong_rate([], [], tri)

    def test_rejects_bad_round(self):
        led = BiasLedger(GridTriangulation(3, 2))
        with pytest.raises(ValueError):
            led.update([0.5, 0.5], 0)
        with pytest.raises(IndexError):
            led.update([0.5, 0.5, 0.0], 3)

    def test_mean_bias(self):
        tri = GridTriangulation(2, 2)
        led = BiasLedger(tri).update([0.5, 0.5], 0).update([0.5, 0.5], 0)
        np.testing.assert_allclose(led.mean_bias([0.5, 0.5]), [-0.5, 0.5])
        np.testing.assert_allclose(led.mean_bias([0.75, 0.25]), [-0.25, 0.25])
        np.testing.assert_allclose(led.mean_bias([1.0, 0.0]), [0, 0])


class TestStrongRate:
    def test_by_hand(self):
        tri = GridTriangulation(2, 2)
        # both forecasts round to (1,1); biases (0.1-1, 0.9) + (0.6, 0.4-1) cancel partly
        r = strong_rate([[0.4, 0.6], [0.6, 0.4]], [0, 1], tri)
        assert r == pytest.approx(0.0)
        r = strong_rate([[0.4, 0.6], [0.9, 0.1]], [0, 1], tri)
        # first at (1,1): |-0.6|+|0.6| = 1.2; second at (2,0): 0.9+0.9 = 1.8
        assert r == pytest.approx((1.2 + 1.8) / 2)

    def test_brute_force(self):
        rng = np.random.default_rng(11)
        tri = GridTriangulation(3, 3)
        ps, xs = random_history(rng, 3, 200)
        keys = [tuple(k) for k in np.array(np.meshgrid(*[range(4)] * 3)).reshape(3, -1).T if sum(k) == 3]
        acc = {}
        for p, x in zip(ps, xs):
            dists = [(round(float(np.abs(np.array(k) / 3 - p).sum()), 12), k) for k in keys]
            key = min(dists)[1]
            e = np.eye(3)[x]
            acc[key] = acc.get(key, 0) + (p - e)
        expected = sum(np.abs(b).sum() for b in acc.values()) / len(xs)
        assert strong_rate(ps, xs, tri) == pytest.approx(expected)

    def test_report(self):
        rng = np.random.default_rng(2)
        tri = GridTriangulation(3, 4)
        ps, xs = random_history(rng, 3, 50)
        led = ledger_from(tri, ps, xs)
        rep = calibration_report(led, ps, xs)
        assert rep.horizon == 50 and rep.precision == tri.precision
        assert rep.weak_rate == pytest.approx(led.weak_rate())


class TestFixedPoint:
    @pytest.mark.parametrize("dim,k", [(2, 10), (3, 5), (4, 4), (5, 3), (6, 2)])
    @pytest.mark.parametrize("step", [1.0, 0.3, 0.05])
    def test_residual_checked_by_oracle(self, dim, k, step):
        rng = np.random.default_rng(dim * 100 + k)
        tri = GridTriangulation(dim, k)
        oracle_fails = 0
        for trial in range(5):
            ps, xs = random_history(rng, dim, 40 + 30 * trial, grid_k=k)
            led = ledger_from(tri, ps, xs)
            res = fixed_point_forecast(led, step, tol=1e-6, rng=np.random.default_rng(trial))
            assert res.point.min() >= 0 and res.point.sum() == pytest.approx(1.0)
            r = OracleMap(tri, ps, xs).residual(res.point, step)
            assert r == pytest.approx(res.residual, abs=1e-8)
            oracle_fails += r > 1e-6
        assert oracle_fails == 0

    def test_fixed_point_condition(self):
        # supp(q) lies in argmin g(q) at every exact fixed point
        rng = np.random.default_rng(5)
        tri = GridTriangulation(3, 6)
        for _ in range(10):
            ps, xs = random_history(rng, 3, 100, grid_k=6)
            led = ledger_from(tri, ps, xs)
            res = fixed_point_forecast(led, 0.5, tol=1e-9)
            g = OracleMap(tri, ps, xs).g(res.point)
            supp = res.point > 1e-7
            assert g[supp].max() <= g.min() + 1e-6

    def test_empty_ledger_gives_uniform_start(self):
        led = BiasLedger(GridTriangulation(4, 3))
        res = fixed_point_forecast(led, 1.0)
        assert res.converged and res.residual == 0.0
        np.testing.assert_allclose(res.point, [0.25] * 4)

    def test_without_local_search(self):
        rng = np.random.default_rng(8)
        tri = GridTriangulation(2, 10)
        ps, xs = random_history(rng, 2, 60)
        led = ledger_from(tri, ps, xs)
        res = fixed_point_forecast(led, 0.5, local_search=False, newton=False, max_iter=500)
        assert res.residual == pytest.approx(OracleMap(tri, ps, xs).residual(res.point, 0.5), abs=1e-8)
        assert res.converged

    def test_hints_reused(self):
        rng = np.random.default_rng(9)
        tri = GridTriangulation(3, 5)
        ps, xs = random_history(rng, 3, 80)
        led = ledger_from(tri, ps, xs)
        first = fixed_point_forecast(led, 0.5)
        if first.face is None:
            pytest.skip("solution was a zero-bias vertex")
        again = fixed_point_forecast(led, 0.5, hints=[first.face])
        np.testing.assert_allclose(again.point, first.point, atol=1e-9)
        assert again.converged

    def test_validates_arguments(self):
        led = BiasLedger(GridTriangulation(2, 2))
        for step in (0.0, -1.0, 1.5):
            with pytest.raises(ValueError):
                fixed_point_forecast(led, step)
        with pytest.raises(ValueError):
            fixed_point_forecast(led, 0.5, tol=0.0)


class TestForecasters:
    def test_fixed_point_forecaster_deterministic_and_fixed(self):
        tri = GridTriangulation(3, 5)
        runs = [
            run_calibration(FixedPointForecaster(tri, seed=3), IIDAdversary(3, seed=4), tri, 150) for _ in range(2)
        ]
        np.testing.assert_array_equal(runs[0].forecasts, runs[1].forecasts)
        assert runs[0].residuals.max() <= 1e-6

    def test_residual_against_oracle_during_run(self):
        tri = GridTriangulation(2, 20)
        f = FixedPointForecaster(tri, seed=1)
        adv = make_adversary("adaptive", 2)
        ps, xs = [], []
        for t in range(60):
            p = f.next()
            if t:
                step = 1 / np.sqrt(t)
                assert OracleMap(tri, ps, xs).residual(p, step) <= 1e-6
            x = adv(t, p)
            f.observe(x)
            ps.append(p)
            xs.append(x)

    def test_next_is_idempotent_until_observe(self):
        f = FixedPointForecaster(GridTriangulation(2, 4))
        f.observe(0)
        a, b = f.next(), f.next()
        np.testing.assert_array_equal(a, b)

    def test_high_dimension_falls_back_to_iteration(self):
        tri = GridTriangulation(7, 2)
        run = run_calibration(FixedPointForecaster(tri), IIDAdversary(7, seed=1), tri, 30)
        assert np.isfinite(run.residuals).all()
        assert (run.forecasts >= 0).all()

    def test_decays_against_iid(self):
        tri = GridTriangulation.from_precision(2, 0.1)
        run = run_calibration(FixedPointForecaster(tri), IIDAdversary(2, seed=0), tri, 2000)
        assert run.weak_rates[-1] < run.weak_rates[249]

    def test_empirical(self):
        f = EmpiricalAverageForecaster(3)
        np.testing.assert_allclose(f.next(), [1 / 3] * 3)
        for x in (0, 0, 2):
            f.observe(x)
        np.testing.assert_allclose(f.next(), [2 / 3, 0, 1 / 3])
        np.testing.assert_allclose(empirical_average_from_outcomes([1, 1, 0], 2), [1 / 3, 2 / 3])

    def test_make_forecaster(self):
        tri = GridTriangulation(2, 2)
        assert isinstance(make_forecaster("empirical", tri), EmpiricalAverageForecaster)
        assert make_forecaster("fixedpoint", tri, step=0.5).step == 0.5
        with pytest.raises(ValueError):
            make_forecaster("oracle", tri)
        with pytest.raises(ValueError):
            make_forecaster("empirical", tri, step=0.5)


class TestAdversaries:
    def test_iid_independent_of_call_order(self):
        a, b = IIDAdversary(3, seed=7), IIDAdversary(3, seed=7)
        forward = [a(t, None) for t in range(3000)]
        backward = [b(t, None) for t in reversed(range(3000))][::-1]
        assert forward == backward
        assert forward != [IIDAdversary(3, seed=8)(t, None) for t in range(3000)]

    def test_iid_frequencies(self):
        adv = IIDAdversary(2, seed=1, probs=[0.8, 0.2])
        xs = np.array([adv(t, None) for t in range(20000)])
        # 3 standard errors
        assert abs(xs.mean() - 0.2) <= 3 * np.sqrt(0.16 / 20000)

    def test_alternating_and_adaptive(self):
        alt = make_adversary("alternating", 3)
        assert [alt(t, None) for t in range(7)] == [0, 1, 2, 0, 1, 2, 0]
        ada = make_adversary("adaptive", 3)
        assert ada(0, [0.5, 0.2, 0.3]) == 1
        assert ada(0, [0.2, 0.6, 0.2]) == 0

    def test_unknown(self):
        with pytest.raises(ValueError):
            make_adversary("nature", 2)
