import math

import numpy as np
import pytest

from calibnash.games import SmoothBRConfig, generate_game, mc_tolerance, ne_gap
from calibnash.reduction import (
    Certificate,
    ReductionConfig,
    draw_outcome,
    estimate_fixed_point_residual,
    gap_chain_holds,
    replay_forecasts,
    residual_bound,
    run_reduction,
    smoothed_pair,
    theorem_bounds,
    transcript_digest,
)
from calibnash.rng import TAG_BR, TAG_FINAL, TAG_OUTCOME, substream
from calibnash.simplex import l1_distance, outer, uniform

MP = generate_game("matching_pennies")
COORD = generate_game("coordination")


def short(game=MP, rounds=60, seed=1, **kw):
    kw.setdefault("mc_samples", 2000)
    kw.setdefault("mc_samples_final", 20000)
    return ReductionConfig(game, 0.1, rounds, seed=seed, **kw)


@pytest.fixture(scope="module")
def run_mp():
    return run_reduction(short(rounds=150, seed=4))


class TestConfig:
    def test_default_delta(self):
        assert short().delta == pytest.approx(0.1 ** (1 / 3))

    @pytest.mark.parametrize(
        "kw",
        [dict(epsilon=0.0), dict(epsilon=1.0), dict(rounds=0), dict(rounds=2.5), dict(delta=1.2),
         dict(forecaster="magic"), dict(mc_samples=0), dict(seed=-1)],
    )
    def test_rejects(self, kw):
        base = dict(game=MP, epsilon=0.1, rounds=10)
        base.update(kw)
        with pytest.raises(ValueError):
            ReductionConfig(**base)

    def test_rejects_non_game(self):
        with pytest.raises(TypeError):
            ReductionConfig([[1, 0], [0, 1]], 0.1, 10)

    def test_triangulation_is_over_pairs(self):
        tri = short().triangulation()
        assert tri.dim == 4 and tri.resolution == 40


class TestSingleRound:
    def test_unrolled(self):
        cfg = short(rounds=1, seed=9)
        tr = run_reduction(cfg)
        # empty ledger: the forecast is uniform over pairs, itself a grid vertex
        np.testing.assert_array_equal(tr.forecasts[0], uniform(4))
        br = cfg.br_config()
        x, y = smoothed_pair(MP, uniform(4), br.with_seed(9, TAG_BR, 1))
        np.testing.assert_array_equal(tr.responses[0], [x, y])
        i, j = draw_outcome(substream(9, TAG_OUTCOME, 1), x, y)
        assert tuple(tr.outcomes[0]) == (i, j)
        # bias uniform - e_(i,j): norm 3/4 + 3 * 1/4
        assert tr.weak_rates[0] == pytest.approx(1.5)
        assert tr.final_round == 1
        np.testing.assert_array_equal(tr.final_vertex, uniform(4))
        out = smoothed_pair(MP, uniform(4), cfg.br_config(final=True).with_seed(9, TAG_FINAL, 1))
        np.testing.assert_array_equal(tr.output[0], out[0])
        np.testing.assert_array_equal(tr.output[1], out[1])
        assert tr.certificate.residual == pytest.approx(l1_distance(uniform(4), outer(*out)))


class TestTranscript:
    def test_shapes_and_ranges(self, run_mp):
        T = run_mp.rounds
        assert run_mp.forecasts.shape == (T, 4)
        assert run_mp.outcomes.min() >= 0 and run_mp.outcomes.max() <= 1
        assert ((run_mp.weak_rates >= 0) & (run_mp.weak_rates <= 2)).all()
        assert 1 <= run_mp.final_round <= T
        assert run_mp.converged.all()

    def test_weights_sum_to_rounds(self, run_mp):
        assert run_mp.ledger.total_weight() == pytest.approx(run_mp.rounds)

    def test_vertex_comes_from_chosen_round(self, run_mp):
        tri = run_mp.config.triangulation()
        tw = tri.locate(run_mp.forecasts[run_mp.final_round - 1])
        keys = {tri.key(v) for v in tw.ids}
        k = tri.resolution
        assert tuple(int(v) for v in np.rint(run_mp.final_vertex * k)) in keys

    def test_replay_reproduces_forecasts(self, run_mp):
        np.testing.assert_array_equal(replay_forecasts(run_mp.config, run_mp.pair_outcomes), run_mp.forecasts)

    def test_digest_deterministic(self, run_mp):
        again = run_reduction(run_mp.config)
        assert transcript_digest(again) == transcript_digest(run_mp)
        other = run_reduction(short(rounds=150, seed=5))
        assert transcript_digest(other) != transcript_digest(run_mp)

    def test_empirical_forecaster_runs(self):
        tr = run_reduction(short(rounds=30, forecaster="empirical"))
        assert math.isnan(tr.residuals[0]) or tr.residuals[0] >= 0
        assert gap_chain_holds(tr.certificate)


class TestOutcomeDraw:
    def test_frequencies_match_product(self):
        x, y = np.array([0.7, 0.3]), np.array([0.2, 0.8])
        rng = np.random.default_rng(0)
        n = 100_000
        counts = np.zeros(4)
        for _ in range(n):
            i, j = draw_outcome(rng, x, y)
            counts[2 * i + j] += 1
        assert np.abs(counts / n - outer(x, y)).sum() <= 3 * math.sqrt(4 / n)


class TestResidual:
    def test_self_consistent_point_mass(self):
        # coordination at the pure equilibrium: every perturbed response agrees
        p = outer([1, 0], [1, 0])
        assert estimate_fixed_point_residual(p, COORD, 0.05, 5000) == 0.0

    def test_uniform_matching_pennies(self):
        M = 100_000
        r = estimate_fixed_point_residual(uniform(4), MP, 0.3, M, seed=(2,))
        assert r <= 4 * mc_tolerance(2, M)

    def test_point_mass_far_from_fixed(self):
        p = outer([1, 0], [1, 0])
        # matching pennies column player flips to action 1
        r = estimate_fixed_point_residual(p, MP, 0.05, 5000)
        assert r == pytest.approx(2.0)


class TestBounds:
    def test_zero_rate(self):
        e = 0.1 ** (1 / 3)
        proof, thm = theorem_bounds(0.0, 0.1, 2)
        assert proof == pytest.approx(20 * e + 4 * e)
        assert thm == pytest.approx(44 * e)

    def test_residual_bound(self):
        assert residual_bound(0.2, 0.1, 0.5) == pytest.approx(0.2 + 0.1 + 1.6)

    def test_certificate_fields(self, run_mp):
        c = run_mp.certificate
        d, cfg = 2, run_mp.config
        assert c.weak_rate == pytest.approx(run_mp.weak_rates[-1])
        assert c.gamma == pytest.approx(ne_gap(MP, run_mp.output))
        assert c.gap_bound == pytest.approx(2 * c.residual + 2 * d * cfg.delta + 4 * mc_tolerance(d, cfg.mc_samples_final))
        assert not c.d_gt_2 and not c.hypotheses_hold
        doc = c.as_dict()
        assert isinstance(doc["gap_ok"], bool) and isinstance(doc["gamma"], float)
        assert c.gap_ok and gap_chain_holds(c)

    def test_verdicts(self):
        c = Certificate(0.1, 0.2, 0.5, 0.01, 0.6, 0.4, 1.0, 1.0, True, True)
        assert c.gap_ok and not c.proof_ok and c.theorem_ok and c.hypotheses_hold
