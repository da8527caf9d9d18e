"""Model adequacy and forecast accuracy scores: AIC, conditional predictive
ordinate, discrete CRPS, nonrandomized PIT histograms, Pearson-residual
autocorrelation, and the predictive error summaries PRMSE and PMAD.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .core import ESTIMATION_INIT, InitPolicy, as_counts
from .count_dists import (
    Family,
    InvalidParameterError,
    cond_cdf,
    cond_logpmf,
    cond_mean,
    cond_var,
)
from .forecast import PredictiveDist, chain_lambda_paths
from .hmc import Chain, point_chain


def aic(loglik: float, k: int) -> float:
    """Akaike information criterion 2k - 2*loglik."""
    if k < 1:
        raise InvalidParameterError("k must be >= 1")
    return 2.0 * k - 2.0 * loglik


# ---------------------------------------------------------------------------
# Conditional predictive ordinate
# ---------------------------------------------------------------------------


def _per_draw_logpmf(chain: Chain, series, init: InitPolicy) -> np.ndarray:
    """Matrix of log p(x_t | draw m) along per-draw filtered mean paths."""
    x = as_counts(series)
    lam = chain_lambda_paths(chain, x, init)  # (M, n)
    if chain.family is Family.POISSON:
        disp = None
    else:
        disp = chain.draws[:, 1 + chain.p + chain.q][:, None]
    return cond_logpmf(chain.family, x[None, :], lam, disp)


def cpo(
    chain: Chain, series, init: InitPolicy = ESTIMATION_INIT
) -> tuple[np.ndarray, float]:
    """Per-observation conditional predictive ordinate and -mean(log CPO).

    CPO_t is the harmonic mean over posterior draws of the one-step
    conditional likelihood, computed in log space through log-sum-exp of the
    negated per-draw log terms. A zero per-draw likelihood makes the
    corresponding CPO_t collapse to zero (its -log contribution is +inf),
    which is reported rather than raised.
    """
    ll = _per_draw_logpmf(chain, series, init)  # (M, n)
    M = ll.shape[0]
    with np.errstate(over="ignore"):
        neg_log_cpo = logsumexp(-ll, axis=0) - np.log(M)
    cpo_t = np.exp(-neg_log_cpo)
    if np.any(~np.isfinite(neg_log_cpo)):
        warnings.warn(
            "some posterior draws assign zero likelihood to an observation; "
            "their CPO contributions are degenerate",
            RuntimeWarning,
            stacklevel=2,
        )
    return cpo_t, float(np.mean(neg_log_cpo))


# ---------------------------------------------------------------------------
# Discrete CRPS
# ---------------------------------------------------------------------------


def crps(dist_or_cdf, x: int) -> float:
    """Continuous ranked probability score in its discrete cumulative form.

    Sums F(y)^2 below the observation and (F(y)-1)^2 from the observation to
    the end of the truncated support (the last point carrying probability).
    """
    if isinstance(dist_or_cdf, PredictiveDist):
        cdf = dist_or_cdf.cdf()
    else:
        cdf = np.asarray(dist_or_cdf, dtype=float)
    x = int(x)
    if x < 0:
        raise InvalidParameterError("observed count must be >= 0")
    below = cdf[: min(x, len(cdf))]
    at_above = cdf[x:] if x < len(cdf) else np.empty(0)
    return float(np.sum(below**2) + np.sum((at_above - 1.0) ** 2))


def _averaged_cdf_rows(chain, x, init, tail: float = 1e-10):
    """Chain-averaged one-step conditional cdfs F_t(grid) for each t.

    Grid runs to where every row clears 1 - tail, so CRPS truncation error
    is negligible.
    """
    lam = chain_lambda_paths(chain, x, init)  # (M, n)
    disp = (
        None
        if chain.family is Family.POISSON
        else chain.draws[:, 1 + chain.p + chain.q][:, None, None]
    )
    hi = int(np.max(cond_mean(chain.family, lam,
                              None if disp is None else disp[:, 0, 0]))) * 3 + 30
    while True:
        grid = np.arange(hi + 1, dtype=float)
        # (M, n, X) in draw-chunks to bound memory
        out = np.zeros((lam.shape[1], hi + 1))
        chunk = max(1, int(2e7 // ((hi + 1) * lam.shape[1])))
        for s in range(0, lam.shape[0], chunk):
            d = None if disp is None else disp[s : s + chunk]
            out += cond_cdf(
                chain.family, grid[None, None, :], lam[s : s + chunk, :, None], d
            ).sum(axis=0)
        out /= lam.shape[0]
        if np.min(out[:, -1]) > 1.0 - tail or hi >= 100_000:
            return out
        hi *= 2


def mean_crps(
    chain: Chain, series, init: InitPolicy = ESTIMATION_INIT
) -> tuple[float, np.ndarray]:
    """Average one-step in-sample CRPS under the chain-averaged cdfs."""
    x = as_counts(series).astype(int)
    cdfs = _averaged_cdf_rows(chain, x.astype(float), init)
    scores = np.array([crps(cdfs[t], x[t]) for t in range(len(x))])
    return float(np.mean(scores)), scores


# ---------------------------------------------------------------------------
# Nonrandomized PIT
# ---------------------------------------------------------------------------


def pit_histogram(
    series,
    model,
    n_bins: int = 10,
    init: InitPolicy = ESTIMATION_INIT,
) -> np.ndarray:
    """Mean-PIT histogram masses for count data (n_bins equal bins).

    Each observation spreads unit mass uniformly over
    [F_t(x_t - 1), F_t(x_t)]; bin masses therefore sum to one exactly and
    are near-uniform when the fitted conditional cdfs match the data.
    model is a Chain or an IngarchSpec (treated as a point chain).
    """
    x = as_counts(series).astype(int)
    chain = model if isinstance(model, Chain) else point_chain(model)
    lam = chain_lambda_paths(chain, x.astype(float), init)
    disp = (
        None
        if chain.family is Family.POISSON
        else chain.draws[:, 1 + chain.p + chain.q][:, None]
    )
    hi_cdf = cond_cdf(chain.family, x[None, :].astype(float), lam, disp).mean(axis=0)
    lo_cdf = cond_cdf(chain.family, x[None, :].astype(float) - 1.0, lam, disp).mean(axis=0)

    edges = np.linspace(0.0, 1.0, n_bins + 1)
    masses = np.zeros(n_bins)
    n = len(x)
    for lo, hi in zip(lo_cdf, hi_cdf):
        width = hi - lo
        if width <= 1e-300:  # degenerate jump: all mass in one bin
            b = min(int(lo * n_bins), n_bins - 1)
            masses[b] += 1.0 / n
            continue
        overlap = np.minimum(hi, edges[1:]) - np.maximum(lo, edges[:-1])
        masses += np.maximum(overlap, 0.0) / width / n
    return masses


# ---------------------------------------------------------------------------
# Pearson residuals
# ---------------------------------------------------------------------------


def pearson_residuals(series, lam, family: Family, disp=None) -> np.ndarray:
    """(x_t - conditional mean) / conditional sd along a fitted mean path."""
    x = as_counts(series)
    lam = np.asarray(lam, dtype=float)
    var = cond_var(family, lam, disp)
    if np.any(var <= 0.0):
        raise InvalidParameterError("conditional variance must be positive")
    return (x - cond_mean(family, lam, disp)) / np.sqrt(var)


def pearson_residual_acf(
    series, lam, family: Family, disp=None, max_lag: int = 20
) -> np.ndarray:
    """Sample ACF of Pearson residuals at lags 1..max_lag.

    Returns NaNs (with a warning) when the residuals are constant and the
    ACF is undefined.
    """
    r = pearson_residuals(series, lam, family, disp)
    rc = r - r.mean()
    denom = float(np.dot(rc, rc))
    if denom == 0.0:
        warnings.warn(
            "residuals are constant; autocorrelation undefined",
            RuntimeWarning,
            stacklevel=2,
        )
        return np.full(max_lag, np.nan)
    out = np.empty(max_lag)
    for h in range(1, max_lag + 1):
        out[h - 1] = float(np.dot(rc[:-h], rc[h:])) / denom if h < len(r) else 0.0
    return out


# ---------------------------------------------------------------------------
# Predictive accuracy over a test set
# ---------------------------------------------------------------------------


def prmse(actual, mean_forecasts, h: int = 1) -> float:
    """Root mean squared error of h-step mean forecasts over a test set."""
    a = np.asarray(actual, dtype=float)
    f = np.asarray(mean_forecasts, dtype=float)
    if a.shape != f.shape:
        raise InvalidParameterError("actual and forecast lengths differ")
    return float(np.sqrt(np.mean((a - f) ** 2)))


def pmad(actual, median_forecasts, h: int = 1) -> float:
    """Mean absolute deviation of h-step median forecasts over a test set."""
    a = np.asarray(actual, dtype=float)
    f = np.asarray(median_forecasts, dtype=float)
    if a.shape != f.shape:
        raise InvalidParameterError("actual and forecast lengths differ")
    return float(np.mean(np.abs(a - f)))


# ---------------------------------------------------------------------------
# Report container
# ---------------------------------------------------------------------------


@dataclass
class ScoreReport:
    """Adequacy summary for one fitted model on one series."""

    model: str
    aic: float
    neg_mean_log_cpo: float
    mean_crps: float
    pit_bins: np.ndarray
    residual_acf: np.ndarray
    prmse: float | None = None
    pmad: float | None = None

    def to_keyvalues(self) -> str:
        lines = [
            f"model={self.model}",
            f"aic={self.aic:.6g}",
            f"neg_mean_log_cpo={self.neg_mean_log_cpo:.6g}",
            f"mean_crps={self.mean_crps:.6g}",
            f"pit_bins={','.join(f'{b:.6g}' for b in self.pit_bins)}",
            f"residual_acf={','.join(f'{a:.6g}' for a in self.residual_acf)}",
        ]
        if self.prmse is not None:
            lines.append(f"prmse={self.prmse:.6g}")
        if self.pmad is not None:
            lines.append(f"pmad={self.pmad:.6g}")
        return "\n".join(lines) + "\n"


def score_report(
    series,
    chain: Chain,
    model_label: str,
    loglik_value: float,
    k: int,
    init: InitPolicy = ESTIMATION_INIT,
    n_bins: int = 10,
    max_lag: int = 20,
) -> ScoreReport:
    """Bundle AIC, CPO, CRPS, PIT, and residual ACF for one fitted model.

    loglik_value and k feed the AIC (use the CMLE or the posterior-mean
    point's likelihood); everything else averages over the chain.
    """
    x = as_counts(series)
    _, neg_log_cpo = cpo(chain, x, init)
    crps_val, _ = mean_crps(chain, x, init)
    bins = pit_histogram(x, chain, n_bins, init)
    point = chain.posterior_mean_spec()
    lam = chain_lambda_paths(point_chain(point), x, init)[0]
    racf = pearson_residual_acf(x, lam, chain.family, point.disp, max_lag)
    return ScoreReport(
        model=model_label,
        aic=aic(loglik_value, k),
        neg_mean_log_cpo=neg_log_cpo,
        mean_crps=crps_val,
        pit_bins=bins,
        residual_acf=racf,
    )
