"""INGARCH(p,q) model specification, conditional-mean recursion, and
stationarity/autocovariance theory.

The model: counts X_t follow a chosen conditional family whose mean driver
lam_t obeys

    lam_t = alpha0 + sum_i alpha_i X_{t-i} + sum_j beta_j lam_{t-j}.

Mean stationarity is decided by the roots of the characteristic polynomial
of the implied difference equation for E[X_t]; the second-order condition for
the hurdle-geometric family has a matrix construction for the pure-AR case
and a scalar condition for orders (1,1), for which closed-form
autocovariances are also available.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .count_dists import (
    Family,
    InvalidParameterError,
    validate_disp,
)


class NonstationaryError(ValueError):
    """Raised when an operation requires a (mean/second-order) stationary spec."""


class SingularMatrixError(ValueError):
    """The second-order-condition matrix is numerically singular."""


@dataclass(frozen=True)
class IngarchSpec:
    """Full parameterization of an INGARCH(p,q) count model.

    alpha/beta are the feedback weights on lagged counts and lagged means;
    disp is the family dispersion (phi for hurdle geometric, kappa for
    generalized Poisson, n for negative binomial, None for Poisson).
    Orders p = len(alpha) and q = len(beta); p = q = 0 is the i.i.d. model.
    """

    family: Family
    alpha0: float
    alpha: tuple[float, ...] = ()
    beta: tuple[float, ...] = ()
    disp: float | None = None

    @property
    def p(self) -> int:
        return len(self.alpha)

    @property
    def q(self) -> int:
        return len(self.beta)

    @property
    def n_params(self) -> int:
        return 1 + self.p + self.q + (0 if self.family is Family.POISSON else 1)

    def coeff_sum(self) -> float:
        return float(sum(self.alpha) + sum(self.beta))

    def packed(self) -> np.ndarray:
        """Parameters as a flat vector [alpha0, alpha..., beta..., disp?]."""
        vec = [self.alpha0, *self.alpha, *self.beta]
        if self.family is not Family.POISSON:
            vec.append(self.disp)
        return np.asarray(vec, dtype=float)

    def param_names(self) -> list[str]:
        names = ["alpha0"]
        names += [f"alpha{i}" for i in range(1, self.p + 1)]
        names += [f"beta{j}" for j in range(1, self.q + 1)]
        if self.family is Family.HGEOM:
            names.append("phi")
        elif self.family is Family.GP:
            names.append("kappa")
        elif self.family is Family.NB:
            names.append("n")
        return names

    def validate(self, check_link: bool = True) -> "IngarchSpec":
        """Raise InvalidParameterError on any violated constraint.

        check_link enforces alpha0 >= 1 - phi for the hurdle-geometric
        family, which guarantees theta_t = (1-phi)/lam_t <= 1 on every
        possible path (lam_t >= alpha0 always). Internal callers that have
        already guarded path validity may skip it.
        """
        if not (self.alpha0 > 0.0):
            raise InvalidParameterError(f"alpha0 must be positive, got {self.alpha0}")
        if any(a < 0.0 for a in self.alpha):
            raise InvalidParameterError(f"alpha weights must be >= 0, got {self.alpha}")
        if any(b < 0.0 for b in self.beta):
            raise InvalidParameterError(f"beta weights must be >= 0, got {self.beta}")
        validate_disp(self.family, self.disp)
        if check_link and self.family is Family.HGEOM and self.alpha0 < 1.0 - self.disp:
            raise InvalidParameterError(
                f"hurdle-geometric link needs alpha0 >= 1 - phi "
                f"(alpha0={self.alpha0}, phi={self.disp})"
            )
        return self

    @staticmethod
    def from_packed(family: Family, p: int, q: int, vec) -> "IngarchSpec":
        vec = np.asarray(vec, dtype=float)
        disp = None if family is Family.POISSON else float(vec[1 + p + q])
        return IngarchSpec(
            family=family,
            alpha0=float(vec[0]),
            alpha=tuple(float(v) for v in vec[1 : 1 + p]),
            beta=tuple(float(v) for v in vec[1 + p : 1 + p + q]),
            disp=disp,
        )


@dataclass
class CountSeries:
    """Ordered nonnegative integer observations, optionally split train/test."""

    values: np.ndarray
    split: int | None = None

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.ndim != 1 or vals.size == 0:
            raise InvalidParameterError("count series must be a nonempty 1-d array")
        if np.any(vals < 0) or np.any(vals != np.floor(vals)):
            raise InvalidParameterError("counts must be nonnegative integers")
        self.values = vals.astype(np.int64)
        if self.split is not None and not (0 < self.split <= len(self.values)):
            raise InvalidParameterError(
                f"split index {self.split} outside series of length {len(self.values)}"
            )

    def __len__(self) -> int:
        return len(self.values)

    @property
    def train(self) -> np.ndarray:
        return self.values if self.split is None else self.values[: self.split]

    @property
    def test(self) -> np.ndarray:
        return self.values[len(self.values) if self.split is None else self.split :]


def as_counts(series) -> np.ndarray:
    """Normalize CountSeries / array-like input to a float array of counts."""
    if isinstance(series, CountSeries):
        return series.values.astype(float)
    arr = np.asarray(series, dtype=float)
    if arr.ndim != 1:
        raise InvalidParameterError("series must be one-dimensional")
    return arr


class InitKind(enum.Enum):
    UNCOND_MEAN = "uncond_mean"
    SAMPLE_MEAN = "sample_mean"
    FIXED = "fixed"


@dataclass(frozen=True)
class InitPolicy:
    """Where pre-sample X's and lam's come from.

    UNCOND_MEAN uses the equilibrium values when the spec is mean stationary,
    else alpha0/(1 - sum beta) floored at alpha0. SAMPLE_MEAN uses the data
    mean (a parameter-free constant, convenient for optimization); FIXED uses
    an explicit value. Counts and mean drivers live on different scales for
    the negative binomial family (E[X] = n * E[lam]), so the two pre-sample
    constants are tracked separately, each with its gradient in the packed
    parameter order (needed for exact likelihood derivatives).
    """

    kind: InitKind = InitKind.UNCOND_MEAN
    value: float | None = None

    def resolve(self, spec: IngarchSpec, x: np.ndarray):
        """Return (x_init, lam_init, dx_init, dlam_init).

        Gradients are w.r.t. the packed vector [alpha0, alpha, beta, disp?].
        """
        k = 1 + spec.p + spec.q + (0 if spec.family is Family.POISSON else 1)
        dx = np.zeros(k)
        dlam = np.zeros(k)
        scale = spec.disp if spec.family is Family.NB else 1.0
        if self.kind is InitKind.FIXED:
            return float(self.value), float(self.value), dx, dlam
        if self.kind is InitKind.SAMPLE_MEAN:
            xbar = float(np.mean(x)) if x.size else spec.alpha0 * scale
            if spec.family is Family.NB:
                dlam[-1] = -xbar / scale**2  # lam scale divides by n
            return xbar, xbar / scale, dx, dlam

        a_sum = sum(spec.alpha)
        b_sum = sum(spec.beta)
        if spec.family is Family.NB:
            n = spec.disp
            eff = n * a_sum + b_sum
            if eff < 1.0:
                denom = 1.0 - eff
                lam0 = spec.alpha0 / denom
                dlam[0] = 1.0 / denom
                dlam[1 : 1 + spec.p] = n * lam0 / denom
                dlam[1 + spec.p : 1 + spec.p + spec.q] = lam0 / denom
                dlam[-1] = lam0 * a_sum / denom
            elif b_sum < 1.0:
                denom = 1.0 - b_sum
                lam0 = spec.alpha0 / denom
                dlam[0] = 1.0 / denom
                dlam[1 + spec.p : 1 + spec.p + spec.q] = lam0 / denom
            else:
                lam0 = spec.alpha0
                dlam[0] = 1.0
            x0 = n * lam0
            dx[:] = n * dlam
            dx[-1] += lam0
            return x0, lam0, dx, dlam

        if a_sum + b_sum < 1.0:
            denom = 1.0 - a_sum - b_sum
            c = spec.alpha0 / denom
            dlam[0] = 1.0 / denom
            dlam[1 : 1 + spec.p + spec.q] = c / denom
        elif b_sum < 1.0:
            denom = 1.0 - b_sum
            c = spec.alpha0 / denom
            dlam[0] = 1.0 / denom
            dlam[1 + spec.p : 1 + spec.p + spec.q] = c / denom
        else:
            c = spec.alpha0
            dlam[0] = 1.0
        return c, c, dlam.copy(), dlam


DEFAULT_INIT = InitPolicy()

#: Estimation entry points default to the sample-mean policy: it does not
#: depend on the parameters, so the likelihood surface has no kink where the
#: equilibrium-mean policy switches branches at coefficient sum 1.
ESTIMATION_INIT = InitPolicy(InitKind.SAMPLE_MEAN)


def lambda_filter(
    spec: IngarchSpec,
    series,
    init: InitPolicy = DEFAULT_INIT,
    validate: bool = True,
) -> np.ndarray:
    """Conditional-mean path lam_1..lam_n given the observed counts."""
    if validate:
        spec.validate()
    x = as_counts(series)
    x0, lam0, _, _ = init.resolve(spec, x)
    lam, ok = _kernels.lambda_filter(
        x, spec.alpha0, np.asarray(spec.alpha), np.asarray(spec.beta), x0, lam0
    )
    if not ok:
        raise FloatingPointError("conditional-mean recursion diverged")
    return lam


def unconditional_mean(spec: IngarchSpec) -> float:
    """Equilibrium mean of the count process (NB scales by its dispersion)."""
    s = spec.coeff_sum()
    if spec.family is Family.NB:
        s = spec.disp * sum(spec.alpha) + sum(spec.beta)
    if s >= 1.0:
        raise NonstationaryError(
            f"coefficient sum {s:.4f} >= 1: no finite equilibrium mean"
        )
    mu_lam = spec.alpha0 / (1.0 - s)
    return float(spec.disp * mu_lam) if spec.family is Family.NB else float(mu_lam)


@dataclass
class StationarityReport:
    mean_stationary: bool
    char_roots: np.ndarray
    max_root_modulus: float
    second_order_stationary: bool | None = None
    L_coeffs: np.ndarray | None = None


def _char_poly_coeffs(spec: IngarchSpec) -> np.ndarray:
    """Monic characteristic polynomial of the mean difference equation.

    Degree max(p, q+1) with alpha zero-padded when p <= q, i.e. coefficients
    of b^P - sum_{i<=q} (alpha_i+beta_i) b^{P-i} - sum_{i>q} alpha_i b^{P-i}.
    Trailing zero coefficients are stripped so degenerate lags do not add
    spurious roots at the origin.
    """
    p, q = spec.p, spec.q
    deg = max(p, q + 1) if (p or q) else 0
    alpha = list(spec.alpha) + [0.0] * (deg - p)
    beta = list(spec.beta) + [0.0] * (deg - q)
    coeffs = np.zeros(deg + 1)
    coeffs[0] = 1.0
    for i in range(1, deg + 1):
        coeffs[i] = -(alpha[i - 1] + beta[i - 1])
    while len(coeffs) > 1 and coeffs[-1] == 0.0:
        coeffs = coeffs[:-1]
    return coeffs


def mean_stationarity_check(spec: IngarchSpec) -> StationarityReport:
    """Root check of the mean recursion's characteristic polynomial.

    Roots are found as companion-matrix eigenvalues; the process is mean
    stationary iff all roots lie strictly inside the unit circle.
    """
    spec.validate()
    coeffs = _char_poly_coeffs(spec)
    if len(coeffs) == 1:  # i.i.d. model: no feedback at all
        return StationarityReport(True, np.array([]), 0.0)
    roots = np.roots(coeffs)
    max_mod = float(np.max(np.abs(roots))) if roots.size else 0.0
    return StationarityReport(max_mod < 1.0, roots, max_mod)


def _theorem_L_coeffs(spec: IngarchSpec) -> np.ndarray:
    """L_1..L_p for the pure-AR second-order condition (hurdle geometric).

    Built from the (p-1)x(p-1) matrix M with entries
    nu_ss = alpha_{2s} - 1 (alpha out of range contributing zero) and
    nu_sr = alpha_{s+r} + alpha_{s-r} off the diagonal, together with
    nu_s0 = alpha_s; L_r subtracts the M^{-1}-weighted cross terms from
    zeta * alpha_r^2, and L_p = zeta * alpha_p^2.
    """
    p = spec.p
    phi = spec.disp
    zeta = 2.0 / (1.0 - phi)
    alpha = np.asarray(spec.alpha)

    def a(i: int) -> float:
        # indices outside 1..p contribute zero
        return alpha[i - 1] if 1 <= i <= p else 0.0

    L = np.zeros(p)
    L[p - 1] = zeta * a(p) ** 2
    if p == 1:
        return L

    dim = p - 1
    M = np.zeros((dim, dim))
    for s in range(1, p):
        for r in range(1, p):
            if r == s:
                M[s - 1, r - 1] = a(2 * s) - 1.0
            else:
                M[s - 1, r - 1] = a(s + r) + a(s - r)
    cond = np.linalg.cond(M)
    if not np.isfinite(cond) or cond > 1e12:
        raise SingularMatrixError(
            f"second-order condition matrix is singular (cond={cond:.3g})"
        )
    Minv = np.linalg.inv(M)

    # cross[v] = sum over |i-j| = v of alpha_i alpha_j (i != j counted twice)
    cross = np.zeros(p)
    for i in range(1, p + 1):
        for j in range(1, p + 1):
            v = abs(i - j)
            if 1 <= v <= p - 1:
                cross[v] += a(i) * a(j)
    for r in range(1, p):
        acc = 0.0
        for v in range(1, p):
            acc += cross[v] * Minv[v - 1, r - 1] * a(r)
        L[r - 1] = zeta * (a(r) ** 2 - acc)
    return L


def second_order_check(spec: IngarchSpec) -> StationarityReport:
    """Second-order stationarity for the hurdle-geometric family.

    Pure-AR specs (q = 0) use the L-coefficient root condition; orders (1,1)
    use the scalar condition zeta*alpha1^2 + 2*alpha1*beta1 + beta1^2 < 1
    with zeta = 2/(1-phi). Other orders are not covered.
    """
    spec.validate()
    if spec.family is not Family.HGEOM:
        raise InvalidParameterError(
            "second-order condition implemented for the hurdle-geometric family"
        )
    base = mean_stationarity_check(spec)
    if spec.q == 0:
        L = _theorem_L_coeffs(spec) if spec.p else np.array([])
        if L.size == 0 or np.all(L == 0.0):
            base.second_order_stationary = True
            base.L_coeffs = L
            return base
        coeffs = np.concatenate([[1.0], -L])
        while len(coeffs) > 1 and coeffs[-1] == 0.0:
            coeffs = coeffs[:-1]
        roots = np.roots(coeffs)
        base.second_order_stationary = bool(
            base.mean_stationary and np.max(np.abs(roots)) < 1.0
        )
        base.L_coeffs = L
        return base
    if spec.p == 1 and spec.q == 1:
        a1, b1 = spec.alpha[0], spec.beta[0]
        zeta = 2.0 / (1.0 - spec.disp)
        cond = zeta * a1**2 + 2.0 * a1 * b1 + b1**2
        base.second_order_stationary = bool(base.mean_stationary and cond < 1.0)
        return base
    raise InvalidParameterError(
        "second-order condition covers q = 0 or (p, q) = (1, 1) only"
    )


@dataclass
class Acvf11:
    """Closed-form second-order structure of the hurdle-geometric (1,1) model."""

    gamma_x: np.ndarray
    gamma_lambda: np.ndarray
    rho_x: np.ndarray
    rho_lambda: np.ndarray
    uncond_mean: float
    uncond_var: float


def acvf_11(spec: IngarchSpec, h_max: int = 10) -> Acvf11:
    """Autocovariances/correlations of counts and mean process at lags 0..h_max.

    Only for hurdle-geometric order (1,1) specs that are second-order
    stationary. Everything follows from the lag-0 mean-process variance

        g_lam(0) = alpha1^2 mu (V mu - 1) / D,

    with V = (1+phi)/(1-phi), zeta = V + 1, D = 1 - zeta*alpha1^2
    - 2*alpha1*beta1 - beta1^2, via Var[X] = zeta*g_lam(0) + mu(V mu - 1),
    g_x(1) = alpha1 Var[X] + beta1 g_lam(0), and geometric decay at rate
    alpha1 + beta1 thereafter.
    """
    spec.validate()
    if spec.family is not Family.HGEOM or spec.p != 1 or spec.q != 1:
        raise InvalidParameterError("closed forms available for hurdle-geometric (1,1)")
    rep = second_order_check(spec)
    if not rep.second_order_stationary:
        raise NonstationaryError("spec is not second-order stationary")
    a1, b1, phi = spec.alpha[0], spec.beta[0], spec.disp
    mu = unconditional_mean(spec)
    V = (1.0 + phi) / (1.0 - phi)
    zeta = V + 1.0
    D = 1.0 - zeta * a1**2 - 2.0 * a1 * b1 - b1**2
    g_lam0 = a1**2 * mu * (V * mu - 1.0) / D
    var_x = zeta * g_lam0 + mu * (V * mu - 1.0)
    g_x1 = a1 * var_x + b1 * g_lam0

    decay = a1 + b1
    h = np.arange(h_max + 1)
    gamma_lambda = g_lam0 * decay**h
    gamma_x = np.empty(h_max + 1)
    gamma_x[0] = var_x
    if h_max >= 1:
        gamma_x[1:] = g_x1 * decay ** (h[1:] - 1)
    rho_x = gamma_x / var_x
    rho_lambda = decay**h.astype(float)
    return Acvf11(gamma_x, gamma_lambda, rho_x, rho_lambda, mu, var_x)
