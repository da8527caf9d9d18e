"""Hamiltonian Monte Carlo over the unconstrained parameterization.

The potential energy is the negative unnormalized log posterior; momenta are
Gaussian with a (diagonal) mass matrix, so one iteration is: draw momentum,
integrate Hamilton's equations with the leapfrog scheme for a fixed number of
steps, and accept with probability min(1, exp(H_current - H_proposed)).
Warmup adapts the step size by dual averaging toward a target acceptance
rate and (optionally) estimates a diagonal mass matrix from warmup draws.

Priors are normal on each unconstrained coordinate, which for the log-mapped
intercept is exactly a lognormal prior on the original scale and a
(scaled) logit-normal prior for interval-bounded coordinates.
"""

from __future__ import annotations

import csv
import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_INIT, ESTIMATION_INIT, IngarchSpec, InitPolicy, as_counts
from .count_dists import Family, InvalidParameterError
from .likelihood import _loglik_grad_packed, _loglik_packed, _moment_start
from .transforms import ParamTransform


@dataclass(frozen=True)
class PriorSpec:
    """Independent normal priors on the unconstrained coordinates."""

    means: np.ndarray
    sds: np.ndarray

    def __post_init__(self):
        if np.any(np.asarray(self.sds) <= 0.0):
            raise InvalidParameterError("prior sds must be positive")

    @staticmethod
    def default(dim: int, sd: float = 10.0) -> "PriorSpec":
        """Weakly informative wide normals (lognormal(0, sd^2) on alpha0)."""
        return PriorSpec(np.zeros(dim), np.full(dim, sd))

    def logpdf(self, u: np.ndarray) -> float:
        z = (u - self.means) / self.sds
        return float(-0.5 * np.sum(z**2) - np.sum(np.log(self.sds)))

    def grad(self, u: np.ndarray) -> np.ndarray:
        return -(u - self.means) / self.sds**2


@dataclass(frozen=True)
class HmcConfig:
    """Sampler settings; defaults follow the simulation-study protocol
    (25,000 iterations with the first half discarded as warmup)."""

    iterations: int = 25_000
    warmup_frac: float = 0.5
    n_leapfrog: int = 20
    step_size: float = 0.1
    # kinetic-energy metric: "identity", "diag" (adapted variances), or
    # "dense" (adapted covariance; helps strongly correlated ridges)
    mass_mode: str = "diag"
    target_accept: float = 0.8
    seed: int = 0
    strict_stationarity: bool = False
    # per-iteration step-size jitter (uniform down-scaling) breaks the
    # periodic-trajectory resonance a fixed leapfrog length can hit
    step_jitter: float = 0.2

    def __post_init__(self):
        if not (0.0 < self.warmup_frac < 1.0):
            raise InvalidParameterError("warmup_frac must be in (0, 1)")
        if self.n_leapfrog < 1 or self.step_size <= 0.0 or self.iterations < 2:
            raise InvalidParameterError("need n_leapfrog >= 1, step_size > 0, iterations >= 2")
        if not (0.0 <= self.step_jitter < 1.0):
            raise InvalidParameterError("step_jitter must be in [0, 1)")
        if self.mass_mode not in ("identity", "diag", "dense"):
            raise InvalidParameterError("mass_mode must be identity, diag, or dense")


@dataclass
class Chain:
    """Post-warmup draws (constrained and unconstrained) plus sampler stats."""

    draws: np.ndarray
    unconstrained: np.ndarray
    param_names: list[str]
    family: Family
    p: int
    q: int
    accept_rate: float
    energies: np.ndarray
    accepted: np.ndarray
    divergences: int
    step_size: float
    mass_diag: np.ndarray

    def __len__(self) -> int:
        return len(self.draws)

    @property
    def dim(self) -> int:
        return self.draws.shape[1]

    def spec_at(self, i: int) -> IngarchSpec:
        return IngarchSpec.from_packed(self.family, self.p, self.q, self.draws[i])

    def posterior_mean_spec(self) -> IngarchSpec:
        return IngarchSpec.from_packed(
            self.family, self.p, self.q, self.draws.mean(axis=0)
        )


def point_chain(spec: IngarchSpec) -> Chain:
    """Single-draw chain concentrated at one spec (plug-in forecasts)."""
    packed = spec.packed()
    return Chain(
        draws=packed[None, :],
        unconstrained=np.full((1, len(packed)), np.nan),
        param_names=spec.param_names(),
        family=spec.family,
        p=spec.p,
        q=spec.q,
        accept_rate=1.0,
        energies=np.zeros(1),
        accepted=np.ones(1, dtype=bool),
        divergences=0,
        step_size=0.0,
        mass_diag=np.ones(len(packed)),
    )


# ---------------------------------------------------------------------------
# Log posterior in unconstrained space
# ---------------------------------------------------------------------------


class _Posterior:
    """log p(u | data) = loglik(theta(u)) + normal log prior on u."""

    def __init__(self, x, family, p, q, priors, init, strict=False):
        self.x = np.asarray(x, dtype=float)
        self.family = family
        self.p = p
        self.q = q
        self.tf = ParamTransform(family, p, q)
        self.priors = priors if priors is not None else PriorSpec.default(self.tf.dim)
        self.init = init
        self.strict = strict

    def _barrier(self, packed) -> bool:
        if not self.strict:
            return False
        return float(np.sum(packed[1 : 1 + self.p + self.q])) >= 1.0

    def value(self, u: np.ndarray) -> float:
        packed = self.tf.to_constrained(u)
        if self._barrier(packed):
            return -np.inf
        ll = _loglik_packed(self.family, self.p, self.q, packed, self.x, self.init)
        return ll + self.priors.logpdf(u)

    def value_grad(self, u: np.ndarray) -> tuple[float, np.ndarray]:
        packed = self.tf.to_constrained(u)
        if self._barrier(packed):
            return -np.inf, np.zeros(self.tf.dim)
        ll, g = _loglik_grad_packed(self.family, self.p, self.q, packed, self.x, self.init)
        if not np.isfinite(ll):
            return -np.inf, np.zeros(self.tf.dim)
        grad = g * self.tf.jacobian_diag(u) + self.priors.grad(u)
        return ll + self.priors.logpdf(u), grad


def log_posterior(
    uvec,
    series,
    family: Family,
    p: int,
    q: int,
    priors: PriorSpec | None = None,
    init: InitPolicy = ESTIMATION_INIT,
) -> float:
    """Unnormalized log posterior density at unconstrained coordinates."""
    post = _Posterior(as_counts(series), family, p, q, priors, init)
    return post.value(np.asarray(uvec, dtype=float))


def log_posterior_grad(
    uvec,
    series,
    family: Family,
    p: int,
    q: int,
    priors: PriorSpec | None = None,
    init: InitPolicy = ESTIMATION_INIT,
) -> np.ndarray:
    post = _Posterior(as_counts(series), family, p, q, priors, init)
    return post.value_grad(np.asarray(uvec, dtype=float))[1]


# ---------------------------------------------------------------------------
# Leapfrog integrator
# ---------------------------------------------------------------------------


def leapfrog(
    position,
    momentum,
    step_size: float,
    n_steps: int,
    grad_fn,
    mass_diag=None,
):
    """Half-kick / drift / half-kick composition, n_steps times.

    grad_fn returns the gradient of the log target (so the kick is
    momentum += step/2 * grad). Exactly time reversible when rerun with the
    negated final momentum. Raises FloatingPointError on a nonfinite
    gradient, which callers treat as a divergent trajectory.
    """
    q = np.array(position, dtype=float)
    p = np.array(momentum, dtype=float)
    inv_mass = 1.0 / (np.ones_like(q) if mass_diag is None else np.asarray(mass_diag))
    g = grad_fn(q)
    if not np.all(np.isfinite(g)):
        raise FloatingPointError("nonfinite gradient at trajectory start")
    for _ in range(n_steps):
        p = p + 0.5 * step_size * g
        q = q + step_size * inv_mass * p
        g = grad_fn(q)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("nonfinite gradient mid-trajectory")
        p = p + 0.5 * step_size * g
    return q, p


@dataclass
class _DualAveraging:
    """Nesterov dual averaging of log step size toward a target acceptance."""

    target: float
    mu: float
    gamma: float = 0.05
    t0: float = 10.0
    kappa: float = 0.75
    _m: int = 0
    _h_bar: float = 0.0
    _log_eps_bar: float = 0.0

    def update(self, accept_prob: float) -> float:
        self._m += 1
        m = self._m
        eta_h = 1.0 / (m + self.t0)
        self._h_bar = (1.0 - eta_h) * self._h_bar + eta_h * (self.target - accept_prob)
        log_eps = self.mu - np.sqrt(m) / self.gamma * self._h_bar
        w = m**-self.kappa
        self._log_eps_bar = w * log_eps + (1.0 - w) * self._log_eps_bar
        return float(np.exp(log_eps))

    @property
    def adapted(self) -> float:
        return float(np.exp(self._log_eps_bar))


class _Metric:
    """Kinetic-energy metric: the inverse mass matrix, estimated from draws.

    The well-tuned inverse mass approximates the posterior covariance, so
    momenta are drawn with covariance equal to its inverse and the drift
    step is scaled by the covariance itself.
    """

    def __init__(self, inv_mass, mode: str):
        self.mode = mode
        if mode == "dense":
            self.inv_mass = np.asarray(inv_mass)
            # momentum covariance = inv(inv_mass) via Cholesky of inv_mass
            L = np.linalg.cholesky(self.inv_mass)
            self._mom_chol = np.linalg.inv(L).T
        else:
            self.inv_mass = np.asarray(inv_mass, dtype=float)

    @staticmethod
    def identity(dim: int) -> "_Metric":
        return _Metric(np.ones(dim), "diag")

    @staticmethod
    def from_draws(draws: np.ndarray, mode: str) -> "_Metric":
        n_w = draws.shape[0]
        shrink = n_w / (n_w + 5.0)
        if mode == "dense":
            cov = np.cov(draws.T, ddof=1)
            cov = shrink * cov + 1e-4 * (1.0 - shrink) * np.eye(draws.shape[1])
            cov += 1e-10 * np.eye(draws.shape[1])
            return _Metric(cov, "dense")
        var = shrink * draws.var(axis=0, ddof=1) + 1e-4 * (1.0 - shrink)
        return _Metric(np.maximum(var, 1e-10), "diag")

    def draw_momentum(self, rng: np.random.Generator) -> np.ndarray:
        if self.mode == "dense":
            z = rng.standard_normal(self.inv_mass.shape[0])
            return self._mom_chol @ z
        return rng.standard_normal(len(self.inv_mass)) / np.sqrt(self.inv_mass)

    def kinetic(self, p: np.ndarray) -> float:
        if self.mode == "dense":
            return float(0.5 * p @ self.inv_mass @ p)
        return float(0.5 * np.sum(p**2 * self.inv_mass))

    def velocity(self, p: np.ndarray) -> np.ndarray:
        """dq/dtau = inv_mass @ p."""
        if self.mode == "dense":
            return self.inv_mass @ p
        return self.inv_mass * p

    def mass_diag(self) -> np.ndarray:
        if self.mode == "dense":
            return 1.0 / np.diag(self.inv_mass)
        return 1.0 / self.inv_mass


def _integrate(value_grad, q, p, eps, n_steps, metric: _Metric):
    """Leapfrog under a metric; returns (q, p, value, grad) at the endpoint."""
    v, g = value_grad(q)
    if not np.all(np.isfinite(g)) or not np.isfinite(v):
        raise FloatingPointError("nonfinite gradient at trajectory start")
    for _ in range(n_steps):
        p = p + 0.5 * eps * g
        q = q + eps * metric.velocity(p)
        v, g = value_grad(q)
        if not np.all(np.isfinite(g)) or not np.isfinite(v):
            raise FloatingPointError("nonfinite gradient mid-trajectory")
        p = p + 0.5 * eps * g
    return q, p, v, g


def _find_initial_step(value_grad, u0, eps0, rng, metric: _Metric):
    """Double/halve eps until the one-step acceptance crosses 1/2."""
    v0, _ = value_grad(u0)
    if not np.isfinite(v0):
        return eps0
    p0 = metric.draw_momentum(rng)
    h0 = -v0 + metric.kinetic(p0)

    def log_accept(eps):
        try:
            _, p1, v1, _ = _integrate(value_grad, u0, p0, eps, 1, metric)
        except FloatingPointError:
            return -np.inf
        return h0 - (-v1 + metric.kinetic(p1))

    eps = eps0
    la = log_accept(eps)
    direction = 1.0 if la > np.log(0.5) else -1.0
    for _ in range(30):
        eps_new = eps * 2.0**direction
        la = log_accept(eps_new)
        if (direction > 0 and la <= np.log(0.5)) or (direction < 0 and la > np.log(0.5)):
            return eps_new if direction < 0 else eps
        eps = eps_new
    return eps


def _adaptation_windows(n_warm: int) -> list[tuple[int, int]]:
    """Expanding metric-estimation windows inside warmup (Stan-style).

    A settle-in buffer and a final step-size-only buffer surround doubling
    windows of draws; the metric is re-estimated and the step-size averager
    restarted at the end of each window.
    """
    if n_warm < 60:
        return []
    init_buf = 75 if n_warm >= 500 else max(n_warm // 8, 5)
    term_buf = 50 if n_warm >= 500 else max(n_warm // 10, 5)
    lo = init_buf
    hi = n_warm - term_buf
    windows = []
    size = 25 if n_warm >= 500 else max((hi - lo) // 4, 5)
    start = lo
    while start < hi:
        end = min(start + size, hi)
        # absorb a too-small trailing window into the previous one
        if hi - end < size * 2 and end != hi:
            end = hi
        windows.append((start, end))
        start = end
        size *= 2
    return windows


def sample_target(value_grad, u0, config: HmcConfig):
    """Run HMC on an arbitrary differentiable log density.

    value_grad(u) must return (log density, gradient). Returns a dict with
    kept draws and sampler statistics; hmc_sample wraps this for INGARCH
    posteriors.
    """
    rng = np.random.default_rng(config.seed)
    u = np.array(u0, dtype=float)
    dim = len(u)
    n_warm = int(config.iterations * config.warmup_frac)
    n_keep = config.iterations - n_warm
    metric = _Metric.identity(dim)
    adapt_mode = config.mass_mode if config.mass_mode != "identity" else None
    windows = _adaptation_windows(n_warm) if adapt_mode else []
    window_ends = {end: start for start, end in windows}
    window_draws: list[np.ndarray] = []

    eps = _find_initial_step(value_grad, u, config.step_size, rng, metric)
    averager = _DualAveraging(config.target_accept, mu=float(np.log(10.0 * eps)))

    kept = np.empty((n_keep, dim))
    energies = np.empty(n_keep)
    accepted = np.zeros(n_keep, dtype=bool)
    divergences = 0
    accept_count = 0

    value, grad = value_grad(u)
    for it in range(config.iterations):
        p0 = metric.draw_momentum(rng)
        h0 = -value + metric.kinetic(p0)
        eps_it = eps * (1.0 - config.step_jitter * rng.random())
        diverged = False
        try:
            q1, p1, v1, g1 = _integrate(value_grad, u, p0, eps_it,
                                        config.n_leapfrog, metric)
            h1 = -v1 + metric.kinetic(p1)
            delta = h0 - h1
            if not np.isfinite(delta) or abs(delta) > 1000.0:
                diverged = True
        except FloatingPointError:
            diverged = True
        if diverged:
            divergences += 1
            accept_prob = 0.0
            ok = False
        else:
            accept_prob = float(min(1.0, np.exp(min(delta, 0.0))))
            ok = np.log(rng.random()) < delta
        if ok:
            u, value, grad = q1, v1, g1
            h_now = h1
        else:
            h_now = h0

        if it < n_warm:
            eps = averager.update(accept_prob)
            if adapt_mode:
                if any(s <= it < e for s, e in windows):
                    window_draws.append(u.copy())
                if (it + 1) in window_ends and len(window_draws) >= max(10, dim):
                    metric = _Metric.from_draws(np.asarray(window_draws), adapt_mode)
                    window_draws = []
                    eps = _find_initial_step(value_grad, u, averager.adapted, rng, metric)
                    averager = _DualAveraging(
                        config.target_accept, mu=float(np.log(10.0 * eps))
                    )
            if it == n_warm - 1:
                eps = averager.adapted
        else:
            k = it - n_warm
            kept[k] = u
            energies[k] = h_now
            accepted[k] = ok
            accept_count += int(ok)

    return {
        "draws": kept,
        "energies": energies,
        "accepted": accepted,
        "accept_rate": accept_count / max(n_keep, 1),
        "divergences": divergences,
        "step_size": eps,
        "mass_diag": metric.mass_diag(),
    }


def hmc_sample(
    series,
    family: Family | str,
    p: int = 1,
    q: int = 1,
    priors: PriorSpec | None = None,
    config: HmcConfig = HmcConfig(),
    init: InitPolicy = ESTIMATION_INIT,
) -> Chain:
    """Posterior sample for an INGARCH model via HMC in unconstrained space.

    Draws are returned on the constrained scale. A chain whose acceptance
    rate collapses below 1% is flagged with a warning, not an exception.
    """
    family = Family.parse(family) if isinstance(family, str) else family
    x = as_counts(series)
    post = _Posterior(x, family, p, q, priors, init, config.strict_stationarity)
    tf = post.tf
    u0 = tf.to_unconstrained(_moment_start(family, p, q, x)) if x.size else np.zeros(tf.dim)
    raw = sample_target(post.value_grad, u0, config)

    draws_u = raw["draws"]
    draws_c = np.empty_like(draws_u)
    for i in range(draws_u.shape[0]):
        draws_c[i] = tf.to_constrained(draws_u[i])
    if raw["accept_rate"] < 0.01:
        warnings.warn(
            f"HMC acceptance rate {raw['accept_rate']:.3f} < 0.01; "
            "chain is unusable",
            RuntimeWarning,
            stacklevel=2,
        )
    return Chain(
        draws=draws_c,
        unconstrained=draws_u,
        param_names=tf.names,
        family=family,
        p=p,
        q=q,
        accept_rate=raw["accept_rate"],
        energies=raw["energies"],
        accepted=raw["accepted"],
        divergences=raw["divergences"],
        step_size=raw["step_size"],
        mass_diag=raw["mass_diag"],
    )


def hmc_sample_chains(
    series,
    family: Family | str,
    p: int = 1,
    q: int = 1,
    priors: PriorSpec | None = None,
    config: HmcConfig = HmcConfig(),
    n_chains: int = 4,
    init: InitPolicy = ESTIMATION_INIT,
) -> list[Chain]:
    """Independent chains with per-chain derived seeds."""
    out = []
    for c in range(n_chains):
        seed = int(np.random.SeedSequence(config.seed, spawn_key=(c,)).generate_state(1)[0])
        cfg = dataclasses.replace(config, seed=seed)
        out.append(hmc_sample(series, family, p, q, priors, cfg, init))
    return out


def pool_chains(chains: list[Chain]) -> Chain:
    """Concatenate kept draws of same-model chains."""
    first = chains[0]
    return Chain(
        draws=np.concatenate([c.draws for c in chains]),
        unconstrained=np.concatenate([c.unconstrained for c in chains]),
        param_names=first.param_names,
        family=first.family,
        p=first.p,
        q=first.q,
        accept_rate=float(np.mean([c.accept_rate for c in chains])),
        energies=np.concatenate([c.energies for c in chains]),
        accepted=np.concatenate([c.accepted for c in chains]),
        divergences=int(sum(c.divergences for c in chains)),
        step_size=float(np.mean([c.step_size for c in chains])),
        mass_diag=first.mass_diag,
    )


# ---------------------------------------------------------------------------
# Chain summaries and diagnostics
# ---------------------------------------------------------------------------


def autocorr(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Sample autocorrelation at lags 0..max_lag (biased normalization)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    xc = x - x.mean()
    denom = float(np.dot(xc, xc))
    if denom == 0.0:
        return np.full(max_lag + 1, np.nan)
    out = np.empty(max_lag + 1)
    out[0] = 1.0
    for h in range(1, max_lag + 1):
        out[h] = float(np.dot(xc[:-h], xc[h:])) / denom if h < n else 0.0
    return out


def ess(x: np.ndarray) -> float:
    """Effective sample size via Geyer's initial monotone sequence.

    Pairs consecutive autocorrelations; keeps leading positive pair sums,
    enforces monotone decay, and inverts the implied integrated
    autocorrelation time. Degenerate (constant) chains return 0.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < 4 or np.var(x) == 0.0:
        return 0.0
    max_lag = min(n - 2, 2000)
    rho = autocorr(x, max_lag)
    pair_sums = []
    m = 0
    while 2 * m + 1 <= max_lag:
        g = rho[2 * m] + rho[2 * m + 1]
        if g <= 0.0:
            break
        pair_sums.append(g)
        m += 1
    if not pair_sums:
        return float(n)
    pair_sums = np.minimum.accumulate(pair_sums)  # enforce monotone decrease
    tau = max(2.0 * float(np.sum(pair_sums)) - 1.0, 1e-12)
    return float(min(n / tau, float(n) * 1.5))


def chain_summary(chain: Chain) -> dict:
    """Per-parameter means, sds, central quantiles, ESS; plus acceptance."""
    if len(chain) == 0:
        raise InvalidParameterError("empty chain")
    draws = chain.draws
    qs = np.percentile(draws, [2.5, 50.0, 97.5], axis=0)
    ess_vals = np.array([ess(draws[:, j]) for j in range(chain.dim)])
    degenerate = [bool(np.var(draws[:, j]) == 0.0) for j in range(chain.dim)]
    return {
        "params": list(chain.param_names),
        "mean": draws.mean(axis=0),
        "sd": draws.std(axis=0, ddof=1) if len(chain) > 1 else np.zeros(chain.dim),
        "q2.5": qs[0],
        "median": qs[1],
        "q97.5": qs[2],
        "ess": ess_vals,
        "degenerate": degenerate,
        "accept_rate": chain.accept_rate,
        "divergences": chain.divergences,
    }


def chain_diagnostics_export(chain: Chain, prefix: str, acf_lags: int = 50,
                             hist_bins: int = 40) -> list[str]:
    """Write per-parameter trace, histogram, and chain-ACF CSVs.

    Files are named {prefix}_{param}_{trace|hist|acf}.csv; returns the paths.
    """
    paths = []
    for j, name in enumerate(chain.param_names):
        col = chain.draws[:, j]
        path = f"{prefix}_{name}_trace.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "value"])
            w.writerows(enumerate(col))
        paths.append(path)

        counts, edges = np.histogram(col, bins=hist_bins)
        path = f"{prefix}_{name}_hist.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["left", "right", "count"])
            for i, c in enumerate(counts):
                w.writerow([edges[i], edges[i + 1], c])
        paths.append(path)

        rho = autocorr(col, min(acf_lags, len(col) - 2))
        path = f"{prefix}_{name}_acf.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lag", "acf"])
            w.writerows(enumerate(rho))
        paths.append(path)
    return paths
