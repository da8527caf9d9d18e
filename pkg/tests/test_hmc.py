"""Sampler mechanics (leapfrog, acceptance, adaptation), posterior
correctness on known targets, and chain diagnostics."""

import numpy as np
import pytest

from ingarch.core import IngarchSpec
from ingarch.count_dists import Family
from ingarch.hmc import (
    Chain,
    HmcConfig,
    PriorSpec,
    autocorr,
    chain_diagnostics_export,
    chain_summary,
    ess,
    hmc_sample,
    leapfrog,
    log_posterior,
    log_posterior_grad,
    point_chain,
    pool_chains,
    sample_target,
)
from ingarch.likelihood import cmle_fit, loglik
from ingarch.simulate import SimConfig, scenario_spec, simulate
from ingarch.transforms import ParamTransform


def quad_grad(q):
    # gradient of log density -q^2/2
    return -q


class TestLeapfrog:
    def test_hand_computed_single_step(self):
        q, p = leapfrog(np.array([1.0]), np.array([0.0]), 0.1, 1, quad_grad)
        assert q[0] == pytest.approx(0.995, abs=0)
        assert p[0] == pytest.approx(-0.09975, abs=0)

    def test_time_reversibility(self):
        rng = np.random.default_rng(0)
        q0 = rng.normal(size=3)
        p0 = rng.normal(size=3)
        q1, p1 = leapfrog(q0, p0, 0.05, 40, quad_grad)
        q2, p2 = leapfrog(q1, -p1, 0.05, 40, quad_grad)
        np.testing.assert_allclose(q2, q0, atol=1e-10)
        np.testing.assert_allclose(-p2, p0, atol=1e-10)

    def test_energy_drift_bounded(self):
        q0, p0 = np.array([1.0]), np.array([0.5])
        h0 = 0.5 * q0[0] ** 2 + 0.5 * p0[0] ** 2
        q1, p1 = leapfrog(q0, p0, 0.01, 100, quad_grad)
        h1 = 0.5 * q1[0] ** 2 + 0.5 * p1[0] ** 2
        assert abs(h1 - h0) < 1e-4

    def test_volume_preservation(self):
        # numerical Jacobian determinant of one step on a 2-dim potential
        def grad2(z):
            return -np.array([z[0] + 0.3 * z[1], 0.3 * z[0] + 2.0 * z[1]])

        def step(z):
            q, p = leapfrog(z[:2], z[2:], 0.2, 1, grad2)
            return np.concatenate([q, p])

        z0 = np.array([0.4, -0.7, 0.9, 0.1])
        h = 1e-6
        J = np.empty((4, 4))
        for i in range(4):
            e = np.zeros(4)
            e[i] = h
            J[:, i] = (step(z0 + e) - step(z0 - e)) / (2 * h)
        assert abs(np.linalg.det(J) - 1.0) < 1e-6

    def test_nonfinite_gradient_raises(self):
        def bad(q):
            return np.full_like(q, np.nan)

        with pytest.raises(FloatingPointError):
            leapfrog(np.array([0.1]), np.array([0.1]), 0.1, 2, bad)

    def test_mass_scaled_drift(self):
        q, p = leapfrog(
            np.array([1.0]), np.array([0.0]), 0.1, 1, quad_grad,
            mass_diag=np.array([4.0]),
        )
        # drift scales by inverse mass
        assert q[0] == pytest.approx(1.0 + 0.1 * (-0.05) / 4.0, rel=1e-12)


class TestSamplerOnKnownTargets:
    def test_standard_normal_moments(self):
        def vg(u):
            return float(-0.5 * np.sum(u**2)), -u

        raw = sample_target(vg, np.zeros(4), HmcConfig(iterations=8000, seed=11))
        d = raw["draws"]
        assert d.shape == (4000, 4)
        np.testing.assert_allclose(d.mean(axis=0), 0.0, atol=0.06)
        np.testing.assert_allclose(d.std(axis=0), 1.0, atol=0.08)
        assert raw["accept_rate"] > 0.6

    def test_additive_constant_invariance(self):
        # acceptance depends on H differences only, so shifting the log
        # density by any constant leaves the acceptance probability unchanged
        # (up to float round-off from the shifted intermediate sums)
        rng = np.random.default_rng(0)
        for _ in range(50):
            v0, v1 = rng.normal(size=2) * 10.0
            k0, k1 = rng.exponential(size=2)
            shift = rng.uniform(-1e4, 1e4)
            delta = (-v0 + k0) - (-v1 + k1)
            delta_shifted = (-(v0 + shift) + k0) - (-(v1 + shift) + k1)
            a = min(1.0, np.exp(min(delta, 0.0)))
            b = min(1.0, np.exp(min(delta_shifted, 0.0)))
            assert a == pytest.approx(b, abs=1e-9)

    def test_correlated_gaussian_with_dense_metric(self):
        cov = np.array([[1.0, 0.95], [0.95, 1.0]])
        prec = np.linalg.inv(cov)

        def vg(u):
            return float(-0.5 * u @ prec @ u), -prec @ u

        raw = sample_target(
            vg, np.zeros(2), HmcConfig(iterations=8000, seed=3, mass_mode="dense")
        )
        d = raw["draws"]
        emp = np.cov(d.T)
        np.testing.assert_allclose(emp, cov, atol=0.12)

    def test_divergences_flagged_not_raised(self):
        def vg(u):
            # gradient blows up far from the origin
            if np.abs(u).max() > 2.0:
                return -np.inf, np.full_like(u, np.nan)
            return float(-0.5 * np.sum(u**2)), -u

        raw = sample_target(vg, np.zeros(2), HmcConfig(iterations=400, seed=5,
                                                       step_size=0.5))
        assert raw["divergences"] >= 0  # completes without raising


class TestIngarchPosterior:
    def test_prior_recovered_on_empty_series(self):
        priors = PriorSpec(np.array([0.1, 0.2, -0.3, 0.4]), np.full(4, 1.0))
        chain = hmc_sample(
            np.array([]), Family.HGEOM, 1, 1, priors,
            HmcConfig(iterations=6000, seed=2),
        )
        u_mean = chain.unconstrained.mean(axis=0)
        np.testing.assert_allclose(u_mean, priors.means, atol=0.1)

    def test_flat_prior_mode_matches_cmle(self):
        series, _ = simulate(SimConfig(scenario_spec("I"), 300, seed=4))
        x = series.values
        fit = cmle_fit(x, Family.HGEOM, 1, 1)
        priors = PriorSpec.default(4, sd=1e6)
        from scipy import optimize
        from ingarch.transforms import to_unconstrained

        u0 = to_unconstrained(fit.estimates)

        res = optimize.minimize(
            lambda u: -log_posterior(u, x, Family.HGEOM, 1, 1, priors),
            u0 + 0.05,
            jac=lambda u: -log_posterior_grad(u, x, Family.HGEOM, 1, 1, priors),
            method="BFGS",
        )
        tf = ParamTransform(Family.HGEOM, 1, 1)
        spec_post = IngarchSpec.from_packed(Family.HGEOM, 1, 1, tf.to_constrained(res.x))
        from ingarch.core import ESTIMATION_INIT

        assert loglik(spec_post, x, ESTIMATION_INIT) == pytest.approx(
            fit.loglik, abs=1e-4
        )

    def test_posterior_gradient_matches_fd(self):
        series, _ = simulate(SimConfig(scenario_spec("III"), 120, seed=6))
        x = series.values
        priors = PriorSpec.default(4, sd=5.0)
        rng = np.random.default_rng(8)
        tested = 0
        while tested < 10:
            u = rng.normal(0.0, 0.8, 4)
            if not np.isfinite(log_posterior(u, x, Family.HGEOM, 1, 1, priors)):
                continue  # sentinel region: gradient undefined there
            g = log_posterior_grad(u, x, Family.HGEOM, 1, 1, priors)
            fd = np.empty(4)
            h = 1e-6
            for i in range(4):
                e = np.zeros(4)
                e[i] = h
                fd[i] = (
                    log_posterior(u + e, x, Family.HGEOM, 1, 1, priors)
                    - log_posterior(u - e, x, Family.HGEOM, 1, 1, priors)
                ) / (2 * h)
            np.testing.assert_allclose(g, fd, rtol=2e-5, atol=1e-6)
            tested += 1

    def test_kept_draws_satisfy_parameter_ranges(self):
        series, _ = simulate(SimConfig(scenario_spec("I"), 150, seed=3))
        chain = hmc_sample(
            series.values, Family.HGEOM, 1, 1,
            config=HmcConfig(iterations=1200, seed=1),
        )
        for i in range(0, len(chain), 50):
            chain.spec_at(i).validate(check_link=False)
        assert np.all(chain.draws[:, 0] > 0)
        assert np.all(chain.draws[:, 1:] > 0)
        assert np.all(chain.draws[:, 1:3] < 1)

    def test_strict_stationarity_barrier(self):
        series, _ = simulate(SimConfig(scenario_spec("I"), 100, seed=3))
        cfg = HmcConfig(iterations=1000, seed=1, strict_stationarity=True)
        chain = hmc_sample(series.values, Family.HGEOM, 1, 1, config=cfg)
        sums = chain.draws[:, 1] + chain.draws[:, 2]
        assert np.all(sums < 1.0)

    def test_energies_and_accept_flags_recorded(self):
        series, _ = simulate(SimConfig(scenario_spec("I"), 100, seed=3))
        chain = hmc_sample(series.values, Family.HGEOM, 1, 1,
                           config=HmcConfig(iterations=800, seed=9))
        assert len(chain.energies) == len(chain) == 400
        assert chain.accept_rate == pytest.approx(float(np.mean(chain.accepted)))
        assert np.all(np.isfinite(chain.energies))


class TestChainTools:
    def test_ess_iid_near_n(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=10_000)
        assert 8_000 <= ess(x) <= 12_000

    def test_ess_degenerate_zero(self):
        assert ess(np.full(100, 3.0)) == 0.0

    def test_summary_mean_is_exact(self):
        series, _ = simulate(SimConfig(scenario_spec("I"), 80, seed=2))
        chain = hmc_sample(series.values, Family.HGEOM, 1, 1,
                           config=HmcConfig(iterations=600, seed=4))
        s = chain_summary(chain)
        np.testing.assert_array_equal(s["mean"], chain.draws.mean(axis=0))
        assert s["accept_rate"] == chain.accept_rate

    def test_summary_flags_constant_chain(self):
        chain = point_chain(scenario_spec("I"))
        s = chain_summary(chain)
        assert all(s["degenerate"])

    def test_pool_chains_concatenates(self):
        series, _ = simulate(SimConfig(scenario_spec("I"), 60, seed=2))
        cfg = HmcConfig(iterations=400, seed=5)
        a = hmc_sample(series.values, Family.HGEOM, 1, 1, config=cfg)
        b = hmc_sample(series.values, Family.HGEOM, 1, 1,
                       config=HmcConfig(iterations=400, seed=6))
        pooled = pool_chains([a, b])
        assert len(pooled) == len(a) + len(b)
        np.testing.assert_array_equal(pooled.draws[: len(a)], a.draws)

    def test_diagnostics_export(self, tmp_path):
        rng = np.random.default_rng(3)
        draws = rng.normal(size=(2000, 2))
        chain = Chain(
            draws=draws,
            unconstrained=draws.copy(),
            param_names=["alpha0", "phi"],
            family=Family.HGEOM,
            p=0,
            q=0,
            accept_rate=1.0,
            energies=np.zeros(2000),
            accepted=np.ones(2000, dtype=bool),
            divergences=0,
            step_size=0.5,
            mass_diag=np.ones(2),
        )
        paths = chain_diagnostics_export(chain, str(tmp_path / "diag"))
        assert len(paths) == 6
        trace = np.loadtxt(tmp_path / "diag_alpha0_trace.csv", delimiter=",", skiprows=1)
        assert trace.shape == (2000, 2)
        hist = np.loadtxt(tmp_path / "diag_phi_hist.csv", delimiter=",", skiprows=1)
        assert int(hist[:, 2].sum()) == 2000
        acf = np.loadtxt(tmp_path / "diag_alpha0_acf.csv", delimiter=",", skiprows=1)
        # iid chain: white-noise band at 95% of lags
        band = 3.0 / np.sqrt(2000)
        frac = np.mean(np.abs(acf[1:, 1]) < band)
        assert frac >= 0.9
