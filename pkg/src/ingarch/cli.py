"""Command-line pipeline: simulate, fit (CMLE or HMC), forecast, score, and
a replication study over the preset scenarios.

Every command is deterministic given --seed. Output location comes from
--out or the INGARCH_OUTDIR environment variable. A flat key=value config
file can pre-set any flag (--config), with explicit flags winning.

Exit codes: 0 success (including warnings), 2 usage error, 3 data error,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import dataio
from .core import CountSeries, IngarchSpec
from .count_dists import Family, InvalidParameterError
from .forecast import forecast_rows, one_step_predictives, predictive_pmf
from .hmc import (
    Chain,
    HmcConfig,
    PriorSpec,
    chain_diagnostics_export,
    chain_summary,
    hmc_sample_chains,
    point_chain,
    pool_chains,
)
from .likelihood import FitOptions, cmle_fit, loglik
from .scoring import aic, pmad, prmse, score_report
from .simulate import SCENARIOS, SimConfig, replication_rng, scenario_spec, simulate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def _resolve_out(args) -> str:
    out = args.out or os.environ.get("INGARCH_OUTDIR")
    if not out:
        raise InvalidParameterError(
            "no output directory: pass --out or set INGARCH_OUTDIR"
        )
    os.makedirs(out, exist_ok=True)
    return out


def _spec_from_args(args) -> IngarchSpec:
    if args.scenario:
        return scenario_spec(args.scenario)
    if args.family is None:
        raise InvalidParameterError("need --scenario or an explicit --family spec")
    alpha = tuple(float(v) for v in args.alpha.split(",")) if args.alpha else ()
    beta = tuple(float(v) for v in args.beta.split(",")) if args.beta else ()
    return IngarchSpec(
        Family.parse(args.family), args.alpha0, alpha, beta, args.disp
    ).validate()


def _hmc_config(args) -> HmcConfig:
    return HmcConfig(
        iterations=args.iterations,
        warmup_frac=args.warmup_frac,
        n_leapfrog=args.leapfrog,
        step_size=args.step_size,
        mass_mode=args.mass_mode,
        target_accept=args.target_accept,
        seed=args.seed,
    )


def cmd_simulate(args) -> int:
    out = _resolve_out(args)
    spec = _spec_from_args(args)
    series, _ = simulate(SimConfig(spec, args.n, burnin=args.burnin, seed=args.seed))
    path = os.path.join(out, "counts.csv")
    dataio.write_counts_csv(path, series.values)
    dataio.write_meta(
        path + ".meta",
        {
            "kind": "counts",
            "family": spec.family.value,
            "alpha0": spec.alpha0,
            "alpha": ",".join(str(v) for v in spec.alpha),
            "beta": ",".join(str(v) for v in spec.beta),
            "disp": spec.disp if spec.disp is not None else "",
            "n": args.n,
            "burnin": args.burnin,
            "seed": args.seed,
            "scenario": args.scenario or "",
        },
    )
    print(f"wrote {path} ({args.n} rows)")
    return EXIT_OK


def _write_fit_report(path, fit):
    lines = [
        "kind=cmle_fit",
        f"family={fit.estimates.family.value}",
        f"p={fit.estimates.p}",
        f"q={fit.estimates.q}",
        f"loglik={fit.loglik:.10g}",
        f"aic={aic(fit.loglik, fit.n_params):.10g}",
        f"converged={int(fit.converged)}",
        f"iterations={fit.iterations}",
        f"hessian_cond={fit.hessian_cond if fit.hessian_cond is not None else ''}",
        f"n_obs={fit.n_obs}",
    ]
    packed = fit.estimates.packed()
    for i, name in enumerate(fit.param_names):
        se = "" if fit.std_errors is None else f"{fit.std_errors[i]:.10g}"
        lines.append(f"{name}={packed[i]:.10g}")
        lines.append(f"se_{name}={se}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_fit(args) -> int:
    out = _resolve_out(args)
    series = dataio.read_counts_csv(args.data)
    x = series.values if args.split is None else series.values[: args.split]
    family = Family.parse(args.family)
    label = f"{family.value}_p{args.p}q{args.q}"
    if args.estimator == "cmle":
        fit = cmle_fit(x, family, args.p, args.q,
                       options=FitOptions(starts=args.starts, seed=args.seed))
        path = os.path.join(out, f"fit_{label}_cmle.txt")
        _write_fit_report(path, fit)
        print(f"wrote {path} (loglik={fit.loglik:.3f}, converged={fit.converged})")
        if not fit.converged:
            print("warning: optimizer did not report convergence", file=sys.stderr)
        chain = point_chain(fit.estimates)
        chain_path = os.path.join(out, f"chain_{label}_cmle.csv")
        dataio.save_chain(chain, chain_path)
        return EXIT_OK

    dim = 1 + args.p + args.q + (0 if family is Family.POISSON else 1)
    priors = PriorSpec.default(dim, sd=args.prior_sd)
    chains = hmc_sample_chains(
        x, family, args.p, args.q, priors, _hmc_config(args), n_chains=args.chains
    )
    pooled = pool_chains(chains)
    chain_path = os.path.join(out, f"chain_{label}_hmc.csv")
    dataio.save_chain(pooled, chain_path)
    summ = chain_summary(pooled)
    summary_path = os.path.join(out, f"summary_{label}_hmc.txt")
    with open(summary_path, "w") as fh:
        fh.write("kind=hmc_summary\n")
        fh.write(f"kept_draws={len(pooled)}\nchains={args.chains}\n")
        fh.write(f"accept_rate={pooled.accept_rate:.4f}\n")
        fh.write(f"divergences={pooled.divergences}\n")
        for j, name in enumerate(summ["params"]):
            fh.write(
                f"{name}: mean={summ['mean'][j]:.6g} sd={summ['sd'][j]:.6g} "
                f"q2.5={summ['q2.5'][j]:.6g} median={summ['median'][j]:.6g} "
                f"q97.5={summ['q97.5'][j]:.6g} ess={summ['ess'][j]:.1f}\n"
            )
    for ci, ch in enumerate(chains):
        chain_diagnostics_export(ch, os.path.join(out, f"diag_{label}_c{ci}"))
    print(
        f"wrote {chain_path} ({len(pooled)} kept draws, "
        f"accept={pooled.accept_rate:.3f})"
    )
    if pooled.accept_rate < 0.01:
        print("warning: acceptance rate below 1%; chain unusable", file=sys.stderr)
    return EXIT_OK


def cmd_forecast(args) -> int:
    out = _resolve_out(args)
    series = dataio.read_counts_csv(args.data, split=args.split)
    chain = dataio.load_chain(args.chain)
    if args.horizon < 1:
        raise InvalidParameterError("--horizon must be >= 1")
    if args.split is not None and args.split < len(series.values):
        dists = one_step_predictives(chain, series.values, args.split,
                                     tail_eps=args.tail_eps)
        t_index = range(args.split + 1, len(series.values) + 1)
        rows = forecast_rows(dists, t_index, alpha=args.alpha, with_hpd=args.hpd)
    else:
        dists = [
            predictive_pmf(chain, series.values, h, tail_eps=args.tail_eps)
            for h in range(1, args.horizon + 1)
        ]
        t_index = [len(series.values) + h for h in range(1, args.horizon + 1)]
        rows = forecast_rows(dists, t_index, alpha=args.alpha, with_hpd=args.hpd)
    path = os.path.join(out, "forecast.csv")
    dataio.write_forecast_csv(path, rows)
    if args.dump_pmf:
        pmf_path = os.path.join(out, "predictive_pmf.csv")
        dataio.write_table_csv(
            pmf_path, ["x", "prob"],
            [[i, f"{p:.12g}"] for i, p in enumerate(dists[-1].probs)],
        )
        print(f"wrote {pmf_path}")
    print(f"wrote {path} ({len(rows)} rows)")
    return EXIT_OK


def cmd_score(args) -> int:
    out = _resolve_out(args)
    series = dataio.read_counts_csv(args.data, split=args.split)
    train = series.train
    test = series.test
    table_rows = []
    for chain_path in args.chains.split(","):
        chain = dataio.load_chain(chain_path.strip())
        label = os.path.basename(chain_path).replace("chain_", "").replace(".csv", "")
        point = chain.posterior_mean_spec()
        ll = loglik(point, train)
        k = point.n_params
        report = score_report(train, chain, label, ll, k)
        if len(test):
            dists = one_step_predictives(chain, series.values, len(train))
            means = [float(np.dot(d.support, d.probs)) for d in dists]
            meds = [int(np.searchsorted(d.cdf(), 0.5 - 1e-12)) for d in dists]
            report.prmse = prmse(test, means)
            report.pmad = pmad(test, meds)
        rp = os.path.join(out, f"scores_{label}.txt")
        with open(rp, "w") as fh:
            fh.write(report.to_keyvalues())
        table_rows.append(
            [
                label,
                f"{report.aic:.4f}",
                f"{report.neg_mean_log_cpo:.4f}",
                f"{report.mean_crps:.4f}",
                "" if report.prmse is None else f"{report.prmse:.17g}",
                "" if report.pmad is None else f"{report.pmad:.17g}",
            ]
        )
    path = os.path.join(out, "comparison.csv")
    dataio.write_table_csv(
        path, ["model", "aic", "neg_log_cpo", "crps", "prmse", "pmad"], table_rows
    )
    print(f"wrote {path} ({len(table_rows)} models)")
    return EXIT_OK


def cmd_replicate(args) -> int:
    out = _resolve_out(args)
    spec = scenario_spec(args.scenario)
    truth = spec.packed()
    names = spec.param_names()
    sizes = [int(s) for s in args.sizes.split(",")]
    rows = []
    for n in sizes:
        ests = {est: [] for est in args.estimators.split(",")}
        for rep in range(args.reps):
            rng = replication_rng(args.seed, rep)
            series, _ = simulate(SimConfig(spec, n, seed=0), rng=rng)
            for est in ests:
                if est == "cmle":
                    fit = cmle_fit(
                        series.values, spec.family, spec.p, spec.q,
                        options=FitOptions(starts=args.starts, seed=args.seed + rep),
                    )
                    ests[est].append(fit.estimates.packed())
                else:
                    chains = hmc_sample_chains(
                        series.values, spec.family, spec.p, spec.q,
                        None, _hmc_config(args), n_chains=1,
                    )
                    ests[est].append(chains[0].draws.mean(axis=0))
        for est, arr in ests.items():
            arr = np.asarray(arr)
            for j, name in enumerate(names):
                err = arr[:, j] - truth[j]
                mse = float(np.mean(err**2))
                scale = np.sqrt(mse) if est == "hmc" else mse
                rows.append(
                    [
                        args.scenario,
                        est,
                        n,
                        name,
                        f"{truth[j]:.4f}",
                        f"{arr[:, j].mean():.4f}",
                        f"{scale:.4f}",
                        f"{np.mean(np.abs(err)):.4f}",
                    ]
                )
    path = os.path.join(out, f"replicate_{args.scenario}.csv")
    dataio.write_table_csv(
        path,
        ["scenario", "estimator", "n", "parameter", "true", "avg_est",
         "mse_or_rmse", "abs_bias"],
        rows,
    )
    print(f"wrote {path} ({len(rows)} rows)")
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--out", help="output directory (or env INGARCH_OUTDIR)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="flat key=value file pre-setting any flag")


def _add_spec_flags(p: argparse.ArgumentParser):
    p.add_argument("--scenario", choices=sorted(SCENARIOS), help="preset spec")
    p.add_argument("--family", choices=[f.value for f in Family])
    p.add_argument("--alpha0", type=float, default=1.0)
    p.add_argument("--alpha", help="comma-separated lag weights on counts")
    p.add_argument("--beta", help="comma-separated lag weights on means")
    p.add_argument("--disp", type=float, help="phi / kappa / n, per family")


def _add_hmc_flags(p: argparse.ArgumentParser):
    p.add_argument("--iterations", type=int, default=25_000)
    p.add_argument("--warmup-frac", type=float, default=0.5)
    p.add_argument("--leapfrog", type=int, default=20)
    p.add_argument("--step-size", type=float, default=0.1)
    p.add_argument("--mass-mode", choices=["identity", "diag", "dense"], default="diag")
    p.add_argument("--target-accept", type=float, default=0.8)
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--prior-sd", type=float, default=10.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ingarch",
        description="Count time series with INGARCH feedback: simulate, fit, "
        "forecast, score, replicate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a path and write a count CSV")
    _add_common(p)
    _add_spec_flags(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--burnin", type=int, default=500)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="CMLE or HMC fit of one family")
    _add_common(p)
    p.add_argument("--data", required=True, help="count CSV")
    p.add_argument("--split", type=int, help="train on the first SPLIT rows")
    p.add_argument("--family", required=True, choices=[f.value for f in Family])
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--estimator", choices=["cmle", "hmc"], default="cmle")
    p.add_argument("--starts", type=int, default=5)
    _add_hmc_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("forecast", help="predictive mean/median/intervals")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--chain", required=True, help="chain CSV from `fit`")
    p.add_argument("--split", type=int,
                   help="one-step forecasts over rows past SPLIT")
    p.add_argument("--horizon", type=int, default=1)
    p.add_argument("--alpha", type=float, default=0.025,
                   help="per-tail quantile level of the credible interval")
    p.add_argument("--tail-eps", type=float, default=1e-8)
    p.add_argument("--hpd", action="store_true", help="add an HPD-set column")
    p.add_argument("--dump-pmf", action="store_true",
                   help="also write the last predictive pmf")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("score", help="adequacy and accuracy comparison table")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--split", type=int, help="train/test split for PRMSE/PMAD")
    p.add_argument("--chains", required=True,
                   help="comma-separated chain CSVs (one per model)")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("replicate", help="repeated-simulation estimator study")
    _add_common(p)
    p.add_argument("--scenario", required=True, choices=sorted(SCENARIOS))
    p.add_argument("--sizes", default="50,200,500")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--estimators", default="cmle", help="cmle, hmc, or cmle,hmc")
    p.add_argument("--starts", type=int, default=5)
    _add_hmc_flags(p)
    p.set_defaults(func=cmd_replicate)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> list[str]:
    """Fold --config file values in as subparser defaults."""
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise InvalidParameterError("--config needs a file path")
    cfg = dataio.read_config(argv[idx + 1])
    if not argv or argv[0].startswith("-"):
        raise InvalidParameterError("--config requires a subcommand")
    sub_actions = [
        a for a in parser._actions if isinstance(a, argparse._SubParsersAction)
    ]
    subparser = sub_actions[0].choices.get(argv[0])
    if subparser is None:
        raise InvalidParameterError(f"unknown command {argv[0]!r}")
    known = {}
    for action in subparser._actions:
        if action.dest in cfg:
            raw = cfg[action.dest]
            if isinstance(action, (argparse._StoreTrueAction,)):
                known[action.dest] = raw.strip().lower() in ("1", "true", "yes")
            elif action.type is not None:
                known[action.dest] = action.type(raw)
            else:
                known[action.dest] = raw
            action.required = False  # the config value satisfies it
    unknown = set(cfg) - set(known)
    if unknown:
        raise InvalidParameterError(
            f"config keys not recognized for {argv[0]!r}: {sorted(unknown)}"
        )
    subparser.set_defaults(**known)
    return argv


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (dataio.DataFormatError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FloatingPointError, np.linalg.LinAlgError, OverflowError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
