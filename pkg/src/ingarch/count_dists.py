"""Probability mass functions, cdfs, moments, and samplers for the four
conditional count families: hurdle geometric, generalized Poisson, negative
binomial, and Poisson.

The hurdle-geometric family places a structural point mass ``phi`` at zero
and a shifted geometric (support {1, 2, ...}) with success probability
``theta`` on the positives, so zero inflation is controlled independently of
the positive-part shape. All pmfs are evaluated in log space and
exponentiated, so large counts do not underflow.

Each family also has a "conditional" form used by the INGARCH recursion,
parameterized by the conditional-mean driver ``lam`` plus a fixed dispersion:

* hurdle geometric: theta_t = (1 - phi) / lam_t (mean lam_t)
* generalized Poisson: eta_t = (1 - kappa) * lam_t (mean lam_t)
* negative binomial: p_t = 1 / (1 + lam_t) (mean n * lam_t)
* Poisson: mean lam_t
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import gammaln, xlogy


class InvalidParameterError(ValueError):
    """A distribution or model parameter is outside its admissible range."""


class TruncationError(InvalidParameterError):
    """Generalized Poisson with kappa < 0 whose truncation point m is < 4."""


class Family(enum.Enum):
    """Conditional distribution family of an INGARCH model."""

    HGEOM = "hgeom"
    GP = "gp"
    NB = "nb"
    POISSON = "poisson"

    @classmethod
    def parse(cls, name: str) -> "Family":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise InvalidParameterError(
                f"unknown family {name!r}; expected one of "
                f"{[f.value for f in cls]}"
            ) from None


#: Name of each family's dispersion parameter (None = no dispersion).
DISP_NAME = {
    Family.HGEOM: "phi",
    Family.GP: "kappa",
    Family.NB: "n",
    Family.POISSON: None,
}


# ---------------------------------------------------------------------------
# Parameter containers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HurdleGeomParams:
    """Zero mass ``phi``; success probability ``theta`` in (0,1].

    phi = 0 is admitted here (the plain shifted geometric); the INGARCH
    model-level dispersion keeps the open interval (0, 1).
    """

    theta: float
    phi: float

    def __post_init__(self):
        if not (0.0 < self.theta <= 1.0):
            raise InvalidParameterError(f"theta must be in (0, 1], got {self.theta}")
        if not (0.0 <= self.phi < 1.0):
            raise InvalidParameterError(f"phi must be in [0, 1), got {self.phi}")


@dataclass(frozen=True)
class GPParams:
    """Rate ``eta`` > 0 and dispersion ``kappa`` < 1.

    For kappa < 0 the support is truncated at m, the largest integer with
    eta + kappa * m > 0; m must be at least 4 so the lost tail mass stays
    below 0.5%.
    """

    eta: float
    kappa: float

    def __post_init__(self):
        if not (self.eta > 0.0):
            raise InvalidParameterError(f"eta must be positive, got {self.eta}")
        if not (self.kappa < 1.0):
            raise InvalidParameterError(f"kappa must be < 1, got {self.kappa}")
        if self.kappa < 0.0:
            if self.kappa <= -1.0:
                raise InvalidParameterError(f"kappa must exceed -1, got {self.kappa}")
            if self.m < 4:
                raise TruncationError(
                    f"negative kappa needs truncation point m >= 4, got m={self.m} "
                    f"(eta={self.eta}, kappa={self.kappa})"
                )

    @property
    def m(self) -> int:
        """Largest integer x with eta + kappa*x > 0 (support cap for kappa<0)."""
        if self.kappa >= 0.0:
            raise ValueError("m is only defined for kappa < 0")
        m = int(np.floor(-self.eta / self.kappa))
        if self.eta + self.kappa * m <= 0.0:
            m -= 1
        return m


@dataclass(frozen=True)
class NBParams:
    """Dispersion ``n`` > 0 and success probability ``p`` in (0,1).

    n is mathematically an arbitrary positive real (the pmf uses gamma
    functions); fitted values are reported un-rounded.
    """

    n: float
    p: float

    def __post_init__(self):
        if not (self.n > 0.0):
            raise InvalidParameterError(f"n must be positive, got {self.n}")
        if not (0.0 < self.p < 1.0):
            raise InvalidParameterError(f"p must be in (0, 1), got {self.p}")


@dataclass(frozen=True)
class PoissonParams:
    lam: float

    def __post_init__(self):
        if not (self.lam > 0.0):
            raise InvalidParameterError(f"lam must be positive, got {self.lam}")


# ---------------------------------------------------------------------------
# Hurdle geometric
# ---------------------------------------------------------------------------


def hgeom_logpmf(x, params: HurdleGeomParams):
    x = np.asarray(x)
    theta, phi = params.theta, params.phi
    with np.errstate(divide="ignore", invalid="ignore"):
        # (1-theta)^(x-1) via xlogy so that theta=1, x=1 gives 0^0 := 1
        pos = np.log1p(-phi) + xlogy(x - 1, 1.0 - theta) + np.log(theta)
        out = np.where(x == 0, np.log(phi), pos)
    return np.where(x < 0, -np.inf, out)


def hgeom_pmf(x, params: HurdleGeomParams):
    return np.exp(hgeom_logpmf(x, params))


def hgeom_cdf(x, params: HurdleGeomParams):
    x = np.asarray(x, dtype=float)
    theta, phi = params.theta, params.phi
    xf = np.floor(x)
    if theta == 1.0:
        tail = np.where(xf >= 1, 1.0, 0.0)
    else:
        tail = -np.expm1(xf * np.log1p(-theta))
    out = phi + (1.0 - phi) * tail
    return np.where(xf < 0, 0.0, out)


def hgeom_sample(params: HurdleGeomParams, rng: np.random.Generator, size=None):
    """Two-stage composition: Bernoulli(phi) zero, else shifted geometric."""
    zero = rng.random(size) < params.phi
    geo = rng.geometric(params.theta, size)
    return np.where(zero, 0, geo)


def hgeom_moments(params: HurdleGeomParams) -> tuple[float, float]:
    theta, phi = params.theta, params.phi
    mean = (1.0 - phi) / theta
    var = mean * ((1.0 + phi) / theta - 1.0)
    return mean, var


# ---------------------------------------------------------------------------
# Generalized Poisson
# ---------------------------------------------------------------------------


def gp_logpmf(x, params: GPParams):
    x = np.asarray(x, dtype=float)
    eta, kappa = params.eta, params.kappa
    rate = eta + kappa * x
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(eta) + xlogy(x - 1, rate) - rate - gammaln(x + 1)
    out = np.where((rate <= 0.0) | (x < 0), -np.inf, out)
    return out


def gp_pmf(x, params: GPParams):
    return np.exp(gp_logpmf(x, params))


@functools.lru_cache(maxsize=128)
def _gp_cumulative_table(params: GPParams) -> np.ndarray:
    """Cumulative pmf over the effective support (tail below 1e-13)."""
    if params.kappa < 0.0:
        hi = params.m
    else:
        mean = params.eta / (1.0 - params.kappa)
        sd = np.sqrt(mean) / (1.0 - params.kappa)
        hi = int(mean + 12.0 * sd + 30.0)
        cum = np.cumsum(gp_pmf(np.arange(hi + 1), params))
        while 1.0 - cum[-1] > 1e-13 and hi < 10_000_000:
            hi *= 2
            cum = np.cumsum(gp_pmf(np.arange(hi + 1), params))
    return np.cumsum(gp_pmf(np.arange(hi + 1), params))


def gp_cdf(x, params: GPParams):
    x = np.asarray(x)
    table = _gp_cumulative_table(params)
    idx = np.clip(np.floor(x).astype(np.int64), -1, len(table) - 1)
    out = np.where(idx < 0, 0.0, table[np.maximum(idx, 0)])
    return out


def gp_sample(params: GPParams, rng: np.random.Generator, size=None):
    """Inverse-cdf draw over the cached cumulative table."""
    table = _gp_cumulative_table(params)
    u = rng.random(size)
    return np.searchsorted(table, u, side="left")


def gp_moments(params: GPParams) -> tuple[float, float]:
    eta, kappa = params.eta, params.kappa
    mean = eta / (1.0 - kappa)
    var = eta / (1.0 - kappa) ** 3
    return mean, var


# ---------------------------------------------------------------------------
# Negative binomial (success probability p, real dispersion n)
# ---------------------------------------------------------------------------


def nb_logpmf(x, params: NBParams):
    x = np.asarray(x, dtype=float)
    n, p = params.n, params.p
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (
            gammaln(x + n)
            - gammaln(n)
            - gammaln(x + 1)
            + n * np.log(p)
            + x * np.log1p(-p)
        )
    return np.where(x < 0, -np.inf, out)


def nb_pmf(x, params: NBParams):
    return np.exp(nb_logpmf(x, params))


def nb_cdf(x, params: NBParams):
    return stats.nbinom.cdf(x, params.n, params.p)


def nb_sample(params: NBParams, rng: np.random.Generator, size=None):
    return rng.negative_binomial(params.n, params.p, size)


def nb_moments(params: NBParams) -> tuple[float, float]:
    n, p = params.n, params.p
    mean = n * (1.0 - p) / p
    var = n * (1.0 - p) / p**2
    return mean, var


# ---------------------------------------------------------------------------
# Poisson
# ---------------------------------------------------------------------------


def pois_logpmf(x, params: PoissonParams):
    return stats.poisson.logpmf(x, params.lam)


def pois_pmf(x, params: PoissonParams):
    return stats.poisson.pmf(x, params.lam)


def pois_cdf(x, params: PoissonParams):
    return stats.poisson.cdf(x, params.lam)


def pois_sample(params: PoissonParams, rng: np.random.Generator, size=None):
    return rng.poisson(params.lam, size)


def pois_moments(params: PoissonParams) -> tuple[float, float]:
    return params.lam, params.lam


# ---------------------------------------------------------------------------
# Conditional laws driven by the INGARCH mean recursion
# ---------------------------------------------------------------------------


def validate_disp(family: Family, disp) -> None:
    """Check a family dispersion value (phi / kappa / n; None for Poisson)."""
    if family is Family.POISSON:
        if disp is not None:
            raise InvalidParameterError("Poisson takes no dispersion parameter")
        return
    if disp is None:
        raise InvalidParameterError(f"family {family.value} needs a dispersion value")
    if family is Family.HGEOM and not (0.0 < disp < 1.0):
        raise InvalidParameterError(f"phi must be in (0, 1), got {disp}")
    if family is Family.GP and not (-1.0 < disp < 1.0):
        raise InvalidParameterError(f"kappa must be in (-1, 1), got {disp}")
    if family is Family.NB and not (disp > 0.0):
        raise InvalidParameterError(f"n must be positive, got {disp}")


def cond_logpmf(family: Family, x, lam, disp=None, boundary: str = "mask"):
    """Log pmf of x under the family's conditional law at mean driver lam.

    Broadcasts over x and lam. The hurdle-geometric law is improper when
    lam < 1-phi (theta > 1): boundary="mask" maps positive counts there to
    -inf (zero likelihood, the estimation-side convention), while
    boundary="clamp" evaluates the boundary law theta = 1 instead, keeping
    every mixture component a proper distribution (the forecasting-side
    convention).
    """
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if family is Family.HGEOM:
        phi = disp
        theta = (1.0 - phi) / lam
        if boundary == "clamp":
            theta = np.clip(theta, None, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            pos = np.log1p(-phi) + xlogy(x - 1, 1.0 - theta) + np.log(theta)
            # theta > 1 is not a distribution on the positives at all
            pos = np.where((theta > 1.0 + 1e-12) & (x >= 1), -np.inf, pos)
            out = np.where(x == 0, np.log(phi), pos)
    elif family is Family.GP:
        kappa = disp
        eta = (1.0 - kappa) * lam
        rate = eta + kappa * x
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.log(eta) + xlogy(x - 1, rate) - rate - gammaln(x + 1)
        out = np.where(rate <= 0.0, -np.inf, out)
    elif family is Family.NB:
        n = disp
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (
                gammaln(x + n)
                - gammaln(n)
                - gammaln(x + 1)
                - (x + n) * np.log1p(lam)
                + xlogy(x, lam)
            )
    elif family is Family.POISSON:
        with np.errstate(divide="ignore", invalid="ignore"):
            out = xlogy(x, lam) - lam - gammaln(x + 1)
    else:  # pragma: no cover
        raise InvalidParameterError(f"unknown family {family}")
    return np.where(x < 0, -np.inf, out)


def cond_pmf(family: Family, x, lam, disp=None, boundary: str = "mask"):
    return np.exp(cond_logpmf(family, x, lam, disp, boundary))


def cond_cdf(family: Family, x, lam, disp=None):
    """Conditional cdf at x given mean driver lam (broadcasting)."""
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    xf = np.floor(x)
    if family is Family.HGEOM:
        phi = disp
        theta = np.clip((1.0 - phi) / lam, None, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = -np.expm1(xf * np.log1p(-theta))
        tail = np.where(theta >= 1.0, (xf >= 1).astype(float), tail)
        out = phi + (1.0 - phi) * tail
        return np.where(xf < 0, 0.0, out)
    if family is Family.NB:
        return stats.nbinom.cdf(xf, disp, 1.0 / (1.0 + lam))
    if family is Family.POISSON:
        return stats.poisson.cdf(xf, lam)
    if family is Family.GP:
        # no closed form: cumulative sums over a shared grid up to max(x)
        xb, lamb = np.broadcast_arrays(xf, lam)
        if xb.size == 0:
            return np.zeros(xb.shape)
        hi = max(int(np.max(xb)), 0)
        grid = np.arange(hi + 1, dtype=float)
        pmf = cond_pmf(family, grid, lamb[..., None], disp)
        cum = np.cumsum(pmf, axis=-1)
        idx = np.clip(xb.astype(np.int64), -1, hi)
        taken = np.take_along_axis(cum, np.maximum(idx, 0)[..., None], axis=-1)[..., 0]
        return np.where(idx < 0, 0.0, taken)
    raise InvalidParameterError(f"unknown family {family}")


def cond_mean(family: Family, lam, disp=None):
    lam = np.asarray(lam, dtype=float)
    if family is Family.NB:
        return disp * lam
    return lam


def cond_var(family: Family, lam, disp=None):
    lam = np.asarray(lam, dtype=float)
    if family is Family.HGEOM:
        phi = disp
        return lam * ((1.0 + phi) / (1.0 - phi) * lam - 1.0)
    if family is Family.GP:
        return lam / (1.0 - disp) ** 2
    if family is Family.NB:
        return disp * lam * (1.0 + lam)
    if family is Family.POISSON:
        return lam
    raise InvalidParameterError(f"unknown family {family}")


def cond_sample(family: Family, lam, disp, rng: np.random.Generator):
    """One draw per entry of lam from the conditional law."""
    lam = np.asarray(lam, dtype=float)
    if family is Family.HGEOM:
        phi = disp
        theta = np.clip((1.0 - phi) / lam, None, 1.0)
        zero = rng.random(lam.shape) < phi
        geo = rng.geometric(theta)
        return np.where(zero, 0, geo)
    if family is Family.NB:
        return rng.negative_binomial(disp, 1.0 / (1.0 + lam))
    if family is Family.POISSON:
        return rng.poisson(lam)
    if family is Family.GP:
        lam_b, disp_b = np.broadcast_arrays(lam, np.asarray(disp, dtype=float))
        out = np.empty(lam_b.shape, dtype=np.int64)
        flat_l, flat_d, res = lam_b.ravel(), disp_b.ravel(), out.ravel()
        for i in range(flat_l.size):
            res[i] = gp_sample(GPParams((1.0 - flat_d[i]) * flat_l[i], flat_d[i]), rng)
        return out
    raise InvalidParameterError(f"unknown family {family}")
