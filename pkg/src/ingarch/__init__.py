"""Count time series with INGARCH conditional-mean feedback.

Four conditional families (hurdle geometric, generalized Poisson, negative
binomial, Poisson) share one mean recursion; the package covers simulation,
stationarity theory, conditional maximum likelihood, Hamiltonian Monte Carlo
posterior sampling, Bayesian predictive forecasting, and probabilistic
scoring, plus a CLI wiring them into a pipeline.
"""

from .core import (
    Acvf11,
    CountSeries,
    IngarchSpec,
    InitKind,
    InitPolicy,
    NonstationaryError,
    SingularMatrixError,
    StationarityReport,
    acvf_11,
    lambda_filter,
    mean_stationarity_check,
    second_order_check,
    unconditional_mean,
)
from .count_dists import (
    Family,
    GPParams,
    HurdleGeomParams,
    InvalidParameterError,
    NBParams,
    PoissonParams,
    TruncationError,
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
from .forecast import (
    PredictiveDist,
    credible_interval,
    forecast_mean,
    forecast_median,
    hpd_set,
    one_step_predictives,
    predictive_pmf,
)
from .hmc import (
    Chain,
    HmcConfig,
    PriorSpec,
    chain_diagnostics_export,
    chain_summary,
    ess,
    hmc_sample,
    hmc_sample_chains,
    leapfrog,
    log_posterior,
    log_posterior_grad,
    point_chain,
    pool_chains,
)
from .likelihood import FitOptions, FitResult, cmle_fit, loglik, loglik_grad
from .scoring import (
    ScoreReport,
    aic,
    cpo,
    crps,
    mean_crps,
    pearson_residual_acf,
    pit_histogram,
    pmad,
    prmse,
    score_report,
)
from .simulate import SCENARIOS, SimConfig, replication_rng, scenario_spec, simulate
from .transforms import ParamTransform, to_constrained, to_unconstrained

__version__ = "0.1.0"
