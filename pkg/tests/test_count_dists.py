"""Distribution-level checks: pmf values, normalization, cdf consistency,
moments, and seeded sampling for all four count families."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ingarch.count_dists import (
    Family,
    GPParams,
    HurdleGeomParams,
    InvalidParameterError,
    NBParams,
    PoissonParams,
    TruncationError,
    cond_cdf,
    cond_logpmf,
    cond_mean,
    cond_pmf,
    cond_sample,
    cond_var,
    gp_cdf,
    gp_moments,
    gp_pmf,
    gp_sample,
    hgeom_cdf,
    hgeom_moments,
    hgeom_pmf,
    hgeom_sample,
    nb_cdf,
    nb_moments,
    nb_pmf,
    nb_sample,
    pois_cdf,
    pois_moments,
    pois_pmf,
    pois_sample,
)


class TestHurdleGeomPmf:
    def test_zero_mass_is_phi(self):
        assert hgeom_pmf(0, HurdleGeomParams(0.5, 0.2)) == pytest.approx(0.2, abs=0)

    def test_hand_value_at_one(self):
        # (1-0.2) * 0.5^0 * 0.5
        assert hgeom_pmf(1, HurdleGeomParams(0.5, 0.2)) == pytest.approx(0.4, rel=1e-15)

    def test_theta_one_concentrates_at_one(self):
        p = HurdleGeomParams(1.0, 0.2)
        assert hgeom_pmf(3, p) == 0.0
        assert hgeom_pmf(1, p) == pytest.approx(0.8, rel=1e-15)

    def test_zero_mass_independent_of_theta(self):
        for theta in (0.01, 0.3, 0.77, 1.0):
            assert hgeom_pmf(0, HurdleGeomParams(theta, 0.37)) == pytest.approx(0.37)

    def test_invalid_parameters(self):
        with pytest.raises(InvalidParameterError):
            HurdleGeomParams(0.0, 0.2)
        with pytest.raises(InvalidParameterError):
            HurdleGeomParams(1.2, 0.2)
        with pytest.raises(InvalidParameterError):
            HurdleGeomParams(0.5, 1.0)

    def test_cdf_values(self):
        p = HurdleGeomParams(0.5, 0.2)
        assert hgeom_cdf(0, p) == pytest.approx(0.2)
        assert hgeom_cdf(1, p) == pytest.approx(0.6)
        assert hgeom_cdf(5000, p) == pytest.approx(1.0, abs=1e-12)
        assert hgeom_cdf(-1, p) == 0.0

    def test_moments_hand_values(self):
        mean, var = hgeom_moments(HurdleGeomParams(0.5, 0.2))
        assert mean == pytest.approx(1.6, rel=1e-15)
        assert var == pytest.approx(2.24, rel=1e-15)

    def test_degenerate_point_mass(self):
        mean, var = hgeom_moments(HurdleGeomParams(1.0, 0.0))
        assert mean == 1.0
        assert var == pytest.approx(0.0, abs=1e-15)


class TestHurdleGeomSampling:
    def test_degenerate_always_one(self):
        rng = np.random.default_rng(0)
        x = hgeom_sample(HurdleGeomParams(1.0, 0.0), rng, size=1000)
        assert np.all(x == 1)

    def test_zero_fraction(self):
        rng = np.random.default_rng(1)
        x = hgeom_sample(HurdleGeomParams(0.5, 0.5), rng, size=1_000_000)
        assert np.mean(x == 0) == pytest.approx(0.5, abs=0.002)

    def test_sample_mean_matches_formula(self):
        rng = np.random.default_rng(2)
        x = hgeom_sample(HurdleGeomParams(0.5, 0.2), rng, size=1_000_000)
        assert x.mean() == pytest.approx(1.6, abs=0.01)

    def test_sample_variance_matches_formula(self):
        rng = np.random.default_rng(3)
        x = hgeom_sample(HurdleGeomParams(0.5, 0.2), rng, size=1_000_000)
        se = 2.24 * np.sqrt(2.0 / 1e6) * 2  # generous mc band
        assert x.var() == pytest.approx(2.24, abs=4 * se)


class TestGeneralizedPoisson:
    def test_kappa_zero_reduces_to_poisson(self):
        assert gp_pmf(0, GPParams(2.0, 0.0)) == pytest.approx(np.exp(-2.0), rel=1e-12)
        grid = np.arange(30)
        np.testing.assert_allclose(
            gp_pmf(grid, GPParams(2.0, 0.0)),
            pois_pmf(grid, PoissonParams(2.0)),
            rtol=1e-10,
        )

    def test_truncation_bound_enforced(self):
        with pytest.raises(TruncationError):
            GPParams(1.0, -0.5)  # m = 1 < 4
        p = GPParams(4.0, -0.5)  # m = 7
        assert p.m == 7
        assert gp_pmf(8, p) == 0.0
        assert gp_pmf(7, p) > 0.0

    def test_negative_kappa_deficit_below_half_percent(self):
        p = GPParams(4.0, -0.5)
        total = gp_pmf(np.arange(p.m + 1), p).sum()
        assert 1.0 - 0.005 < total <= 1.0 + 1e-12

    def test_nonnegative_kappa_normalizes(self):
        for eta, kappa in [(0.5, 0.0), (2.0, 0.3), (5.0, 0.7)]:
            grid = np.arange(4000)
            total = gp_pmf(grid, GPParams(eta, kappa)).sum()
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_moments_vs_sampling(self):
        p = GPParams(2.0, 0.3)
        mean, var = gp_moments(p)
        rng = np.random.default_rng(4)
        x = gp_sample(p, rng, size=1_000_000)
        se_mean = np.sqrt(var / 1e6)
        assert x.mean() == pytest.approx(mean, abs=4 * se_mean)
        assert x.var() == pytest.approx(var, rel=0.02)

    def test_cdf_matches_cumsum(self):
        p = GPParams(3.0, 0.2)
        grid = np.arange(200)
        np.testing.assert_allclose(
            gp_cdf(grid, p), np.cumsum(gp_pmf(grid, p)), atol=1e-12
        )


class TestNegativeBinomial:
    def test_n_one_is_geometric(self):
        p = NBParams(1.0, 0.3)
        grid = np.arange(50)
        np.testing.assert_allclose(
            nb_pmf(grid, p), 0.3 * 0.7**grid, rtol=1e-12
        )

    def test_real_dispersion_supported(self):
        p = NBParams(9.8134, 0.4)
        total = nb_pmf(np.arange(400), p).sum()
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_moments_vs_sampling(self):
        p = NBParams(3.0, 0.4)
        mean, var = nb_moments(p)
        rng = np.random.default_rng(5)
        x = nb_sample(p, rng, size=1_000_000)
        assert x.mean() == pytest.approx(mean, abs=4 * np.sqrt(var / 1e6))

    def test_cdf_matches_cumsum(self):
        p = NBParams(2.5, 0.35)
        grid = np.arange(300)
        np.testing.assert_allclose(
            nb_cdf(grid, p), np.cumsum(nb_pmf(grid, p)), atol=1e-12
        )


class TestPoisson:
    def test_pmf_at_zero(self):
        assert pois_pmf(0, PoissonParams(1.0)) == pytest.approx(np.exp(-1.0), rel=1e-12)

    def test_moments_and_sampling(self):
        rng = np.random.default_rng(6)
        x = pois_sample(PoissonParams(3.5), rng, size=1_000_000)
        mean, var = pois_moments(PoissonParams(3.5))
        assert mean == var == 3.5
        assert x.mean() == pytest.approx(3.5, abs=4 * np.sqrt(3.5 / 1e6))

    def test_cdf_matches_cumsum(self):
        grid = np.arange(60)
        np.testing.assert_allclose(
            pois_cdf(grid, PoissonParams(4.2)),
            np.cumsum(pois_pmf(grid, PoissonParams(4.2))),
            atol=1e-12,
        )


@settings(max_examples=60, deadline=None)
@given(
    theta=st.floats(0.02, 1.0),
    phi=st.floats(0.001, 0.999),
)
def test_hgeom_normalizes_property(theta, phi):
    p = HurdleGeomParams(theta, phi)
    hi = int(np.ceil(np.log(1e-14) / np.log1p(-theta))) + 2 if theta < 1 else 3
    total = hgeom_pmf(np.arange(hi), p).sum()
    assert total == pytest.approx(1.0, abs=1e-12)


class TestConditionalLaws:
    """The INGARCH-facing parameterization, driven by the mean level lam."""

    def test_hgeom_conditional_matches_distribution(self):
        lam, phi = 2.4, 0.3
        theta = (1.0 - phi) / lam
        grid = np.arange(40, dtype=float)
        np.testing.assert_allclose(
            cond_pmf(Family.HGEOM, grid, lam, phi),
            hgeom_pmf(grid, HurdleGeomParams(theta, phi)),
            rtol=1e-12,
        )

    def test_gp_conditional_matches_distribution(self):
        lam, kappa = 3.0, 0.25
        grid = np.arange(60, dtype=float)
        np.testing.assert_allclose(
            cond_pmf(Family.GP, grid, lam, kappa),
            gp_pmf(grid, GPParams((1.0 - kappa) * lam, kappa)),
            rtol=1e-12,
        )

    def test_nb_conditional_matches_distribution(self):
        lam, n = 1.7, 4.0
        grid = np.arange(60, dtype=float)
        np.testing.assert_allclose(
            cond_pmf(Family.NB, grid, lam, n),
            nb_pmf(grid, NBParams(n, 1.0 / (1.0 + lam))),
            rtol=1e-12,
        )

    @pytest.mark.parametrize(
        "family,disp",
        [
            (Family.HGEOM, 0.3),
            (Family.GP, 0.25),
            (Family.NB, 4.0),
            (Family.POISSON, None),
        ],
    )
    def test_mean_var_match_pmf_sums(self, family, disp):
        lam = 2.2
        grid = np.arange(3000, dtype=float)
        pmf = cond_pmf(family, grid, lam, disp)
        mean = float(np.dot(grid, pmf))
        var = float(np.dot(grid**2, pmf)) - mean**2
        assert cond_mean(family, lam, disp) == pytest.approx(mean, rel=1e-9)
        assert cond_var(family, lam, disp) == pytest.approx(var, rel=1e-9)

    @pytest.mark.parametrize(
        "family,disp",
        [
            (Family.HGEOM, 0.45),
            (Family.GP, 0.2),
            (Family.NB, 2.5),
            (Family.POISSON, None),
        ],
    )
    def test_cdf_is_pmf_partial_sum(self, family, disp):
        lam = 3.1
        grid = np.arange(1000, dtype=float)
        np.testing.assert_allclose(
            cond_cdf(family, grid, lam, disp),
            np.cumsum(cond_pmf(family, grid, lam, disp)),
            atol=1e-12,
        )

    def test_cond_sample_moments(self):
        rng = np.random.default_rng(7)
        lam = np.full(200_000, 2.0)
        for family, disp in [
            (Family.HGEOM, 0.3),
            (Family.NB, 4.0),
            (Family.POISSON, None),
        ]:
            x = cond_sample(family, lam, disp, rng)
            m = float(cond_mean(family, 2.0, disp))
            v = float(cond_var(family, 2.0, disp))
            assert x.mean() == pytest.approx(m, abs=4 * np.sqrt(v / 2e5))

    def test_hgeom_invalid_mean_level_sentinel(self):
        # lam below 1-phi cannot carry counts >= 2
        out = cond_logpmf(Family.HGEOM, np.array([2.0]), np.array([0.3]), 0.5)
        assert out[0] == -np.inf


@settings(max_examples=40, deadline=None)
@given(st.integers(-3, 50), st.floats(0.05, 0.95), st.floats(0.01, 0.95))
def test_hgeom_cdf_nondecreasing(x, theta, phi):
    p = HurdleGeomParams(theta, phi)
    assert hgeom_cdf(x, p) <= hgeom_cdf(x + 1, p) + 1e-15
