"""Scores: AIC identities, CPO harmonic means, discrete CRPS, PIT
histograms, residual autocorrelation, and predictive accuracy measures."""

import numpy as np
import pytest

from ingarch.core import ESTIMATION_INIT, IngarchSpec, lambda_filter
from ingarch.count_dists import Family, InvalidParameterError
from ingarch.forecast import PredictiveDist
from ingarch.hmc import point_chain
from ingarch.likelihood import cmle_fit, loglik
from ingarch.scoring import (
    aic,
    cpo,
    crps,
    mean_crps,
    pearson_residual_acf,
    pearson_residuals,
    pit_histogram,
    pmad,
    prmse,
    score_report,
)
from ingarch.simulate import SimConfig, scenario_spec, simulate
from conftest import make_chain


class TestAic:
    def test_unit_case(self):
        assert aic(0.0, 1) == 2.0

    def test_published_table_value(self):
        # back-solved log-likelihood: aic = 2*4 - 2*(-230.78) = 469.56
        assert aic(-230.78, 4) == pytest.approx(469.56, abs=1e-10)

    def test_one_extra_parameter_adds_two(self):
        assert aic(-100.0, 5) - aic(-100.0, 4) == pytest.approx(2.0)

    def test_k_validated(self):
        with pytest.raises(InvalidParameterError):
            aic(-1.0, 0)


class TestCpo:
    def test_single_draw_equals_conditional_pmf(self):
        series, _ = simulate(SimConfig(scenario_spec("I"), 80, seed=1))
        x = series.values
        spec = scenario_spec("I")
        chain = point_chain(spec)
        cpo_t, neg_mean = cpo(chain, x)
        lam = lambda_filter(spec, x, ESTIMATION_INIT)
        from ingarch.count_dists import cond_pmf

        np.testing.assert_allclose(
            cpo_t, cond_pmf(Family.HGEOM, x.astype(float), lam, 0.05), rtol=1e-12
        )
        assert neg_mean == pytest.approx(-float(np.mean(np.log(cpo_t))), rel=1e-12)

    def test_two_draw_harmonic_mean(self):
        # likelihoods 0.2 and 0.5 per draw: cpo = 1/((1/2)(5+2)) = 2/7.
        # an iid hgeom with alpha0 = lam and chosen phi yields those masses
        # at x=0 under the two draws
        rows = np.array([[1.0, 0.0, 0.0, 0.2], [1.0, 0.0, 0.0, 0.5]])
        chain = make_chain(rows)
        cpo_t, _ = cpo(chain, np.array([0.0]))
        assert cpo_t[0] == pytest.approx(2.0 / 7.0, rel=1e-12)

    def test_log_space_matches_direct(self):
        series, _ = simulate(SimConfig(scenario_spec("IV"), 60, seed=3))
        x = series.values
        rng = np.random.default_rng(0)
        rows = np.column_stack(
            [
                rng.uniform(0.9, 1.2, 40),
                rng.uniform(0.1, 0.3, 40),
                rng.uniform(0.05, 0.2, 40),
                rng.uniform(0.2, 0.5, 40),
            ]
        )
        chain = make_chain(rows)
        cpo_t, _ = cpo(chain, x)
        from ingarch.count_dists import cond_pmf
        from ingarch.forecast import chain_lambda_paths

        lam = chain_lambda_paths(chain, x.astype(float))
        direct = 1.0 / np.mean(
            1.0 / cond_pmf(Family.HGEOM, x[None, :].astype(float), lam,
                           rows[:, 3][:, None]),
            axis=0,
        )
        np.testing.assert_allclose(cpo_t, direct, rtol=1e-10)


class TestCrps:
    def test_point_mass_perfect_forecast(self):
        d = PredictiveDist(np.array([0.0, 0.0, 1.0]), h=1, tail_eps=0.0)
        assert crps(d, 2) == 0.0

    def test_two_point_cases(self):
        d = PredictiveDist(np.array([0.5, 0.5]), h=1, tail_eps=0.0)
        assert crps(d, 1) == pytest.approx(0.25, abs=1e-15)
        assert crps(d, 0) == pytest.approx(0.25, abs=1e-15)

    def test_nonnegative_and_zero_iff_point_mass(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            raw = rng.random(8)
            d = PredictiveDist(raw / raw.sum(), h=1, tail_eps=0.0)
            x = int(rng.integers(0, 8))
            val = crps(d, x)
            assert val >= 0.0
            if max(d.probs) < 1.0:
                assert val > 0.0

    def test_observation_beyond_support(self):
        d = PredictiveDist(np.array([0.5, 0.5]), h=1, tail_eps=0.0)
        assert crps(d, 5) == pytest.approx(0.25 + 1.0, abs=1e-12)

    def test_truncation_invariance(self):
        probs = np.array([0.3, 0.4, 0.2, 0.1])
        base = crps(np.cumsum(probs), 1)
        extended = np.concatenate([probs, np.zeros(50)])
        assert crps(np.cumsum(extended), 1) == pytest.approx(base, abs=1e-12)

    def test_mean_crps_stable_under_support_extension(self):
        series, _ = simulate(SimConfig(scenario_spec("I"), 100, seed=5))
        chain = point_chain(scenario_spec("I"))
        val, scores = mean_crps(chain, series.values)
        assert val >= 0.0
        assert len(scores) == 100


class TestPit:
    def test_bins_sum_to_one(self):
        series, _ = simulate(SimConfig(scenario_spec("III"), 400, seed=2))
        bins = pit_histogram(series.values, scenario_spec("III"))
        assert bins.sum() == pytest.approx(1.0, abs=1e-10)

    def test_true_model_near_uniform(self):
        series, _ = simulate(SimConfig(scenario_spec("I"), 10_000, seed=11))
        bins = pit_histogram(series.values, scenario_spec("I"))
        assert np.all(bins >= 0.07) and np.all(bins <= 0.13)

    def test_continuous_limit_reduces_to_ordinary_pit(self):
        # tight conditional cdf gaps: each observation lands in one bin
        spec = IngarchSpec(Family.POISSON, 40.0, (0.0,), (0.0,))
        series, _ = simulate(SimConfig(spec, 500, seed=3))
        bins = pit_histogram(series.values, spec, n_bins=5)
        assert bins.sum() == pytest.approx(1.0, abs=1e-10)

    def test_misspecified_model_shows_shape(self):
        series, _ = simulate(SimConfig(scenario_spec("III"), 4000, seed=7))
        fit = cmle_fit(series.values, Family.POISSON, 1, 1)
        bins = pit_histogram(series.values, fit.estimates)
        assert bins.max() > 0.15


class TestResiduals:
    def test_white_noise_band_under_true_model(self):
        spec = scenario_spec("I")
        series, _ = simulate(SimConfig(spec, 10_000, seed=13))
        lam = lambda_filter(spec, series.values)
        acf = pearson_residual_acf(series.values, lam, Family.HGEOM, 0.05, max_lag=20)
        band = 3.0 / np.sqrt(10_000)
        assert np.mean(np.abs(acf) < band) >= 0.95

    def test_residual_mean_near_zero(self):
        spec = scenario_spec("IV")
        series, _ = simulate(SimConfig(spec, 10_000, seed=17))
        lam = lambda_filter(spec, series.values)
        r = pearson_residuals(series.values, lam, Family.HGEOM, 0.35)
        assert abs(r.mean()) < 3.0 / np.sqrt(10_000) * r.std()

    def test_constant_residuals_flagged(self):
        x = np.full(50, 2.0)
        lam = np.full(50, 2.0)
        with pytest.warns(RuntimeWarning, match="constant"):
            acf = pearson_residual_acf(x, lam, Family.POISSON, None, max_lag=5)
        assert np.all(np.isnan(acf))


class TestPredictiveAccuracy:
    def test_perfect_forecasts(self):
        a = np.array([3, 1, 4, 1, 5])
        assert prmse(a, a.astype(float)) == 0.0
        assert pmad(a, a.astype(float)) == 0.0

    def test_constant_offset_median(self):
        a = np.array([3, 1, 4])
        assert pmad(a, a + 1.0) == 1.0

    def test_single_point_rmse(self):
        assert prmse(np.array([5.0]), np.array([3.0])) == 2.0

    def test_length_mismatch(self):
        with pytest.raises(InvalidParameterError):
            prmse(np.array([1.0, 2.0]), np.array([1.0]))


class TestScoreReport:
    def test_report_round_trip(self):
        series, _ = simulate(SimConfig(scenario_spec("I"), 150, seed=19))
        chain = point_chain(scenario_spec("I"))
        ll = loglik(scenario_spec("I"), series.values, ESTIMATION_INIT)
        rep = score_report(series.values, chain, "hgeom", ll, 4)
        assert rep.aic == pytest.approx(aic(ll, 4))
        text = rep.to_keyvalues()
        assert "model=hgeom" in text and "mean_crps=" in text
        assert rep.pit_bins.sum() == pytest.approx(1.0, abs=1e-10)
