"""Bayesian predictive distributions over future counts, point forecasts,
quantile credible intervals, and highest-density sets.

The h-step predictive pmf is the posterior-draw average of the conditional
pmf at each draw's rolled-forward mean. Future lags use the plug-in scheme:
observed values wherever the lagged index points at data, otherwise the
cross-draw average mean (for lagged mean values) and the predictive mean
(for lagged counts). A sampled-trajectory mode is available for comparison;
it propagates simulated future counts draw by draw instead of plug-ins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ESTIMATION_INIT, InitPolicy, as_counts
from .count_dists import (
    Family,
    InvalidParameterError,
    cond_cdf,
    cond_mean,
    cond_pmf,
    cond_sample,
)
from .hmc import Chain
from ._kernels import lambda_filter as _filter_kernel

X_MAX_CAP = 100_000


@dataclass
class PredictiveDist:
    """Truncated predictive pmf on 0..x_max with a guaranteed tail bound."""

    probs: np.ndarray
    h: int
    tail_eps: float

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.ndim != 1 or self.probs.size == 0:
            raise InvalidParameterError("probs must be a nonempty vector")
        if np.any(self.probs < -1e-15):
            raise InvalidParameterError("probs must be nonnegative")
        total = float(self.probs.sum())
        if not (1.0 - self.tail_eps - 1e-12 <= total <= 1.0 + 1e-9):
            raise InvalidParameterError(
                f"probs sum {total} outside [1 - tail_eps, 1]"
            )

    @property
    def support(self) -> np.ndarray:
        return np.arange(len(self.probs))

    @property
    def x_max(self) -> int:
        return len(self.probs) - 1

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)


def _chain_params(chain: Chain):
    """Split chain draws into (alpha0, alpha, beta, disp) arrays."""
    d = chain.draws
    p, q = chain.p, chain.q
    a0 = d[:, 0]
    alpha = d[:, 1 : 1 + p]
    beta = d[:, 1 + p : 1 + p + q]
    disp = d[:, 1 + p + q] if chain.family is not Family.POISSON else None
    return a0, alpha, beta, disp


def chain_lambda_paths(
    chain: Chain, series, init: InitPolicy = ESTIMATION_INIT
) -> np.ndarray:
    """Per-draw filtered mean paths over the series, shape (draws, n)."""
    x = as_counts(series)
    a0, alpha, beta, _ = _chain_params(chain)
    out = np.empty((len(chain), len(x)))
    for m in range(len(chain)):
        spec = chain.spec_at(m)
        x0, lam0, _, _ = init.resolve(spec, x)
        lam, ok = _filter_kernel(
            x, a0[m], np.ascontiguousarray(alpha[m]),
            np.ascontiguousarray(beta[m]), x0, lam0,
        )
        if not ok:
            raise FloatingPointError(f"mean recursion diverged for draw {m}")
        out[m] = lam
    return out


def _mixture_support(family, lam_draws, disp_draws, tail_eps) -> int:
    """Smallest grid top with average tail mass below tail_eps (capped)."""
    means = cond_mean(family, lam_draws, None if disp_draws is None else disp_draws)
    hi = int(np.max(means) * 3 + 30)
    while hi < X_MAX_CAP:
        disp = None if disp_draws is None else disp_draws
        tail = 1.0 - np.mean(cond_cdf(family, np.asarray(hi, dtype=float), lam_draws, disp))
        if tail < tail_eps * 0.5:
            return hi
        hi *= 2
    return X_MAX_CAP


def _mixture_pmf(family, lam_draws, disp_draws, x_hi, tail_eps, h) -> PredictiveDist:
    grid = np.arange(x_hi + 1, dtype=float)
    disp = None if disp_draws is None else disp_draws[:, None]
    probs = cond_pmf(
        family, grid[None, :], lam_draws[:, None], disp, boundary="clamp"
    ).mean(axis=0)
    # gammaln round-off at extreme dispersions can overshoot unit mass by
    # ~1e-8; renormalize down so the distribution contract holds exactly
    total = float(probs.sum())
    if total > 1.0:
        probs = probs / total
    # trim once the cumulative mass clears the tail bound
    cum = np.cumsum(probs)
    keep = int(np.searchsorted(cum, 1.0 - tail_eps, side="left"))
    keep = min(keep + 1, len(probs))
    return PredictiveDist(probs[:keep], h=h, tail_eps=tail_eps)


def predictive_pmf(
    chain: Chain,
    series,
    h: int = 1,
    tail_eps: float = 1e-8,
    method: str = "plugin",
    rng: np.random.Generator | None = None,
    init: InitPolicy = ESTIMATION_INIT,
) -> PredictiveDist:
    """Posterior predictive pmf of the count h steps past the end of series.

    method="plugin" follows the deterministic plug-in recursion; "sampled"
    draws future counts per posterior draw (requires rng) and averages the
    resulting conditional pmfs.
    """
    if len(chain) == 0:
        raise InvalidParameterError("empty chain")
    if h < 1:
        raise InvalidParameterError("horizon h must be >= 1")
    x = as_counts(series)
    a0, alpha, beta, disp = _chain_params(chain)
    M = len(chain)
    p, q = chain.p, chain.q
    lam_hist = chain_lambda_paths(chain, x, init)  # (M, n)
    n = len(x)

    if method == "sampled":
        if rng is None:
            rng = np.random.default_rng(0)
        x_fut = np.zeros((M, h))
        lam_fut = np.empty((M, h))
        for k in range(1, h + 1):
            lam_k = a0.copy()
            for i in range(1, p + 1):
                idx = k - i
                past = x[n + idx - 1] if idx <= 0 else x_fut[:, idx - 1]
                lam_k += alpha[:, i - 1] * past
            for j in range(1, q + 1):
                idx = k - j
                past = lam_hist[:, n + idx - 1] if idx <= 0 else lam_fut[:, idx - 1]
                lam_k += beta[:, j - 1] * past
            lam_fut[:, k - 1] = lam_k
            if k < h:
                x_fut[:, k - 1] = cond_sample(chain.family, lam_k, disp, rng)
        lam_h = lam_fut[:, h - 1]
    else:
        # plug-in scheme: future lagged counts use the predictive mean,
        # future lagged mean values use the cross-draw average
        xhat = np.zeros(h)
        lamhat = np.zeros(h)
        lam_fut = np.empty((M, h))
        for k in range(1, h + 1):
            lam_k = a0.copy()
            for i in range(1, p + 1):
                idx = k - i
                lam_k += alpha[:, i - 1] * (x[n + idx - 1] if idx <= 0 else xhat[idx - 1])
            for j in range(1, q + 1):
                idx = k - j
                past = lam_hist[:, n + idx - 1] if idx <= 0 else np.full(M, lamhat[idx - 1])
                lam_k += beta[:, j - 1] * past
            lam_fut[:, k - 1] = lam_k
            lamhat[k - 1] = float(np.mean(lam_k))
            xhat[k - 1] = float(
                np.mean(cond_mean(chain.family, lam_k, None if disp is None else disp))
            )
        lam_h = lam_fut[:, h - 1]

    x_hi = _mixture_support(chain.family, lam_h, disp, tail_eps)
    return _mixture_pmf(chain.family, lam_h, disp, x_hi, tail_eps, h)


def forecast_mean(dist: PredictiveDist) -> float:
    """Expected count over the truncated support."""
    return float(np.dot(dist.support, dist.probs))


def forecast_median(dist: PredictiveDist) -> int:
    """Smallest integer whose cumulative predictive mass reaches 1/2."""
    return _quantile(dist.cdf(), 0.5)


def _quantile(cdf: np.ndarray, level: float) -> int:
    # 1e-12 slack absorbs float accumulation in the cumulative sums
    idx = int(np.searchsorted(cdf, level - 1e-12, side="left"))
    return min(idx, len(cdf) - 1)


def credible_interval(dist: PredictiveDist, alpha: float = 0.025) -> tuple[int, int]:
    """Equal-tail interval [q_alpha, q_{1-alpha}] by cdf scan."""
    if not (0.0 < alpha < 0.5):
        raise InvalidParameterError("alpha must be in (0, 0.5)")
    cdf = dist.cdf()
    return _quantile(cdf, alpha), _quantile(cdf, 1.0 - alpha)


def hpd_set(dist: PredictiveDist, alpha: float = 0.05) -> np.ndarray:
    """Smallest set of support points with predictive mass >= 1 - alpha.

    Accumulates support points in decreasing-probability order (ties broken
    toward smaller counts); the result need not be an interval.
    """
    if not (0.0 < alpha < 1.0):
        raise InvalidParameterError("alpha must be in (0, 1)")
    order = np.lexsort((dist.support, -dist.probs))
    cum = np.cumsum(dist.probs[order])
    k = int(np.searchsorted(cum, 1.0 - alpha - 1e-12, side="left")) + 1
    return np.sort(order[:k])


def one_step_predictives(
    chain: Chain,
    series,
    start: int,
    tail_eps: float = 1e-8,
    init: InitPolicy = ESTIMATION_INIT,
) -> list[PredictiveDist]:
    """One-step-ahead predictive for each index start..n-1 of the series.

    The per-draw mean path is filtered once over the whole series; the
    predictive at time t conditions on everything before t, so this matches
    rolling h=1 forecasts over a held-out tail without refitting.
    """
    x = as_counts(series)
    if not (0 <= start < len(x)):
        raise InvalidParameterError(f"start {start} outside series")
    a0, alpha, beta, disp = _chain_params(chain)
    lam_hist = chain_lambda_paths(chain, x, init)
    out = []
    for t in range(start, len(x)):
        lam_t = lam_hist[:, t]
        x_hi = _mixture_support(chain.family, lam_t, disp, tail_eps)
        out.append(_mixture_pmf(chain.family, lam_t, disp, x_hi, tail_eps, 1))
    return out


def forecast_rows(
    dists: list[PredictiveDist],
    t_index,
    alpha: float = 0.025,
    with_hpd: bool = False,
) -> list[dict]:
    """Tabular forecast summaries: t, horizon, mean, median, lo, hi (+hpd)."""
    rows = []
    for t, dist in zip(t_index, dists):
        lo, hi = credible_interval(dist, alpha)
        row = {
            "t": int(t),
            "horizon": dist.h,
            "mean": forecast_mean(dist),
            "median": forecast_median(dist),
            "lo95": lo,
            "hi95": hi,
        }
        if with_hpd:
            pts = hpd_set(dist, 2 * alpha)
            runs = np.split(pts, np.where(np.diff(pts) > 1)[0] + 1)
            row["hpd"] = ";".join(
                f"{r[0]}-{r[-1]}" if len(r) > 1 else f"{r[0]}" for r in runs
            )
        rows.append(row)
    return rows
