"""Command-line entry point.

Subcommands: estimate, forecast, infer, cov, spectest, fdr, simulate.
Exit codes: 0 on success, 1 on usage errors, 2 on data errors.  Every run
writes a manifest.json with the resolved configuration so it can be
re-run exactly.  A JSON file passed through --config supplies defaults
that explicit flags override; DIVPROJ_THREADS is the fallback for
--threads.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .covariance import ThresholdRule, invert_sparse_cov, sparse_idio_cov
from .exceptions import DivprojError
from .experiments import (
    experiment_cov,
    experiment_forecast,
    experiment_postsel,
    experiment_spectest,
)
from .fdr import farm_test
from .forecast import FixedWeightScheme, PCScheme, RollingWeightScheme, rolling_forecast
from .inference import confidence_interval, double_selection
from .io import (
    ensure_outdir,
    read_panel,
    read_series,
    write_json,
    write_matrix,
    write_panel,
    write_rows_csv,
    write_sparse_triplets,
)
from .projection import PanelData, fit as projection_fit
from .spectest import spec_test
from .weights import build_weights, check_diversified

SCHEME_CHOICES = ("hadamard", "walsh", "sieve", "rolling", "initial")
RULE_CHOICES = ("hard", "soft", "scad")
EXPERIMENTS = ("fig1", "table2", "postsel", "table3")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's default 2
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="divproj", description=__doc__)
    parser.add_argument("--version", action="version", version=f"divproj {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--out", default="divproj_out", help="output directory")
        p.add_argument("--config", default=None, help="JSON file with default flag values")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument(
            "--threads",
            type=int,
            default=int(os.environ.get("DIVPROJ_THREADS", "1")),
            help="worker threads for simulation replications",
        )

    def scheme_flags(p, need_R=True):
        p.add_argument("--scheme", choices=SCHEME_CHOICES, default="walsh")
        if need_R:
            p.add_argument("--R", type=int, default=1, help="working number of factors")
        p.add_argument("--chars", default=None, help="characteristics CSV (sieve weights)")
        p.add_argument("--history", default=None, help="historical panel CSV (rolling weights)")
        p.add_argument("--epsilon", type=float, default=1.0, help="rolling-weight trimming constant")

    p = sub.add_parser("estimate", help="estimate factors, loadings and residuals")
    p.add_argument("--panel", required=True)
    scheme_flags(p)
    common(p)

    p = sub.add_parser("forecast", help="rolling out-of-sample factor-augmented forecast")
    p.add_argument("--panel", required=True)
    p.add_argument("--outcome", required=True, help="target series CSV")
    scheme_flags(p)
    p.add_argument("--window", type=int, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--lead", type=int, default=1)
    p.add_argument("--compare-pc", action="store_true", help="also run the PC benchmark")
    common(p)

    p = sub.add_parser("infer", help="post-selection inference for a treatment effect")
    p.add_argument("--panel", required=True)
    p.add_argument("--outcome", required=True)
    p.add_argument("--treatment", required=True)
    scheme_flags(p)
    p.add_argument("--C", type=float, default=4.1, help="lasso penalty constant")
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--no-refit", action="store_true")
    common(p)

    p = sub.add_parser("cov", help="sparse idiosyncratic covariance")
    p.add_argument("--panel", required=True)
    scheme_flags(p)
    p.add_argument("--rule", choices=RULE_CHOICES, default="scad")
    p.add_argument("--C", type=float, default=2.0, help="threshold constant")
    p.add_argument("--scad-a", type=float, default=3.7)
    p.add_argument("--sparse", action="store_true", help="write (i, j, value) triplets")
    common(p)

    p = sub.add_parser("spectest", help="factor specification test")
    p.add_argument("--panel", required=True)
    p.add_argument("--factors", required=True, help="observed factors CSV (panel layout)")
    scheme_flags(p, need_R=False)
    p.add_argument("--rule", choices=RULE_CHOICES, default="scad")
    p.add_argument("--C", type=float, default=2.0)
    p.add_argument("--draws", type=int, default=2000)
    common(p)

    p = sub.add_parser("fdr", help="factor-adjusted multiple testing")
    p.add_argument("--panel", required=True)
    scheme_flags(p)
    p.add_argument("--q", type=float, default=0.1, help="FDR level")
    common(p)

    p = sub.add_parser("simulate", help="reproduce a Monte Carlo study")
    p.add_argument("--experiment", choices=EXPERIMENTS, required=True)
    p.add_argument("--reps", type=int, default=None, help="replications (experiment default if omitted)")
    p.add_argument("--C", type=float, default=None, help="threshold constant override")
    common(p)

    return parser


def _apply_config(args: argparse.Namespace, argv: list[str]) -> argparse.Namespace:
    """Fill in values from --config for flags not given on the command line."""
    if not getattr(args, "config", None):
        return args
    with open(args.config) as fh:
        defaults = json.load(fh)
    given = {a.split("=")[0].lstrip("-").replace("-", "_") for a in argv if a.startswith("--")}
    for key, value in defaults.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and attr not in given and attr != "subcommand":
            setattr(args, attr, value)
    return args


def _panel_and_weights(args, X_panel: PanelData):
    """Build weights for a user panel; initial weights consume the first column."""
    X = X_panel.X
    chars = read_series(args.chars)[1] if args.chars else None
    history = read_panel(args.history).X if args.history else None
    x0 = None
    time_ids = X_panel.time_ids
    if args.scheme == "initial":
        if X.shape[1] < 2:
            raise DivprojError("initial-transform weights need at least two time points")
        x0 = X[:, 0]
        X_panel = PanelData(
            X[:, 1:], series_ids=X_panel.series_ids,
            time_ids=time_ids[1:] if time_ids else None,
        )
    W = build_weights(
        args.scheme,
        X_panel.n_series,
        getattr(args, "R", 1),
        characteristics=chars,
        panel_history=history,
        x0=x0,
        epsilon=args.epsilon,
    )
    return X_panel, W


def _write_manifest(outdir: Path, args: argparse.Namespace) -> None:
    resolved = {k: v for k, v in vars(args).items() if k != "config"}
    write_json(outdir / "manifest.json", {"artifact": "divproj", "version": __version__, "config": resolved})


def _cmd_estimate(args) -> int:
    panel = read_panel(args.panel)
    panel, W = _panel_and_weights(args, panel)
    fit_res = projection_fit(panel, W)
    outdir = ensure_outdir(args.out)
    t_ids = panel.time_ids or [str(j + 1) for j in range(panel.n_periods)]
    s_ids = panel.series_ids or [f"s{i + 1}" for i in range(panel.n_series)]
    f_cols = [f"f{k + 1}" for k in range(fit_res.n_factors)]
    write_matrix(outdir / "factors.csv", fit_res.factors, t_ids, f_cols, corner="time")
    write_matrix(outdir / "loadings.csv", fit_res.loadings, s_ids, f_cols, corner="series")
    write_panel(outdir / "residuals.csv", PanelData(fit_res.residuals, s_ids, t_ids))
    diag = check_diversified(W)
    write_json(
        outdir / "diagnostics.json",
        {
            "scheme": W.scheme,
            "max_abs_entry": diag.max_abs_entry,
            "min_eig_gram": diag.min_eig_gram,
            "gram_condition": diag.gram_condition,
            "factor_gram": fit_res.gram,
        },
    )
    _write_manifest(outdir, args)
    return 0


def _forecast_scheme(args, panel: PanelData):
    if args.scheme == "rolling":
        if not args.history:
            raise DivprojError("rolling-window forecasts need --history")
        history = read_panel(args.history).X
        return RollingWeightScheme(history, args.R, args.epsilon), panel
    panel2, W = _panel_and_weights(args, panel)
    return FixedWeightScheme(W), panel2


def _cmd_forecast(args) -> int:
    panel = read_panel(args.panel)
    labels, y = read_series(args.outcome)
    scheme, panel = _forecast_scheme(args, panel)
    if args.scheme == "initial":
        y = y[1:]  # keep the target aligned with the trimmed panel
        labels = labels[1:]
    report = rolling_forecast(y, panel.X, args.window, args.steps, scheme, h=args.lead)
    columns = {"forecast_" + args.scheme: report.forecasts}
    if args.compare_pc:
        pc_report = rolling_forecast(y, panel.X, args.window, args.steps, PCScheme(args.R), h=args.lead)
        columns["forecast_pc"] = pc_report.forecasts
    outdir = ensure_outdir(args.out)
    rows = []
    for step in range(args.steps):
        row = {"step": step + 1, "realized": report.realized[step]}
        row.update({name: vals[step] for name, vals in columns.items()})
        rows.append(row)
    write_rows_csv(outdir / "forecast.csv", ["step", "realized", *columns], rows)
    write_json(outdir / "mse.json", {"mse": {name: float(np.mean((vals - report.realized) ** 2)) for name, vals in columns.items()}})
    _write_manifest(outdir, args)
    return 0


def _cmd_infer(args) -> int:
    panel = read_panel(args.panel)
    _, y = read_series(args.outcome)
    _, g = read_series(args.treatment)
    if args.R == 0:
        weights, X = None, panel.X
    else:
        panel2, weights = _panel_and_weights(args, panel)
        X = panel2.X
        if args.scheme == "initial":
            y, g = y[1:], g[1:]
    res = double_selection(y, g, X, weights, C=args.C, refit=not args.no_refit)
    lo, hi = confidence_interval(res, args.level)
    outdir = ensure_outdir(args.out)
    write_json(
        outdir / "inference.json",
        {
            "beta_hat": res.beta_hat,
            "se": res.se,
            "z": res.z,
            "ci": {"level": args.level, "lo": lo, "hi": hi},
            "selected": res.selected,
            "alpha_y": res.alpha_y,
            "alpha_g": res.alpha_g,
            "gamma_hat": {"indices": res.selected, "values": res.gamma_hat[res.selected]},
            "theta_hat": {"indices": res.selected, "values": res.theta_hat[res.selected]},
            "sigma_g2": res.sigma_g2,
            "sigma_eta_g2": res.sigma_eta_g2,
            "eps_y_hat": res.eps_y_hat,
            "eps_g_hat": res.eps_g_hat,
        },
    )
    _write_manifest(outdir, args)
    return 0


def _cmd_cov(args) -> int:
    panel = read_panel(args.panel)
    panel, W = _panel_and_weights(args, panel)
    fit_res = projection_fit(panel, W)
    rule = ThresholdRule(kind=args.rule, constant_C=args.C, scad_a=args.scad_a)
    cov = sparse_idio_cov(fit_res.residuals, rule)
    outdir = ensure_outdir(args.out)
    s_ids = panel.series_ids or [f"s{i + 1}" for i in range(panel.n_series)]
    if args.sparse:
        write_sparse_triplets(outdir / "sigma_u.csv", cov.sigma_u)
    else:
        write_matrix(outdir / "sigma_u.csv", cov.sigma_u, s_ids, s_ids, corner="series")
    write_matrix(outdir / "sigma_u_inv.csv", invert_sparse_cov(cov), s_ids, s_ids, corner="series")
    write_json(
        outdir / "summary.json",
        {
            "omega": cov.omega,
            "nonzero_offdiag": cov.nonzero_offdiag,
            "m_n_q0": cov.sparsity_m(0.0),
            "m_n_q1": cov.sparsity_m(1.0),
            "rule": {"kind": rule.kind, "constant_C": rule.constant_C, "scad_a": rule.scad_a},
        },
    )
    _write_manifest(outdir, args)
    return 0


def _cmd_spectest(args) -> int:
    panel = read_panel(args.panel)
    factors = read_panel(args.factors)
    G = factors.X.T  # panel layout stores series in rows; observed factors are columns
    args.R = G.shape[1]  # the working number of factors is pinned to dim(g_t)
    panel, W = _panel_and_weights(args, panel)
    if args.scheme == "initial":
        G = G[1:]
    rule = ThresholdRule(kind=args.rule, constant_C=args.C)
    res = spec_test(panel.X, G, W, rule=rule, n_draws=args.draws, seed=args.seed)
    outdir = ensure_outdir(args.out)
    write_json(
        outdir / "spectest.json",
        {
            "statistic": res.statistic,
            "mean_hat": res.mean_hat,
            "sigma_hat": res.sigma_hat,
            "z": res.z,
            "p_value": res.p_value,
            "n_bootstrap": res.n_bootstrap,
            "seed": res.seed,
        },
    )
    _write_manifest(outdir, args)
    return 0


def _cmd_fdr(args) -> int:
    panel = read_panel(args.panel)
    panel, W = _panel_and_weights(args, panel)
    res = farm_test(panel.X, W, q=args.q)
    outdir = ensure_outdir(args.out)
    s_ids = panel.series_ids or [f"s{i + 1}" for i in range(panel.n_series)]
    rejected = set(res.rejected.tolist())
    rows = [
        {
            "series": s_ids[i],
            "alpha_hat": res.alpha_hat[i],
            "z": res.z_stats[i],
            "p": res.p_values[i],
            "rejected": i in rejected,
        }
        for i in range(len(s_ids))
    ]
    write_rows_csv(outdir / "fdr.csv", ["series", "alpha_hat", "z", "p", "rejected"], rows)
    _write_manifest(outdir, args)
    return 0


def _cmd_simulate(args) -> int:
    outdir = ensure_outdir(args.out)
    seed, threads = args.seed, args.threads
    if args.experiment == "fig1":
        reps = args.reps if args.reps is not None else 100
        c_values = (args.C,) if args.C is not None else (1.0, 2.0)
        rows = experiment_cov(n_reps=reps, seed=seed, C_values=c_values, threads=threads)
        fields = ["alpha", "rho_T", "N", "method", "C",
                  "err_cov_mean", "err_cov_se", "err_inv_mean", "err_inv_se"]
        write_rows_csv(outdir / "results.csv", fields, rows)
        for alpha in sorted({r["alpha"] for r in rows}):
            for rho in sorted({r["rho_T"] for r in rows}):
                panel_rows = [r for r in rows if r["alpha"] == alpha and r["rho_T"] == rho]
                for what in ("cov", "inv"):
                    write_rows_csv(
                        outdir / f"fig1_{what}_alpha{alpha:g}_rho{rho:g}.csv",
                        ["N", "method", "C", "err_mean", "err_se"],
                        [
                            {
                                "N": r["N"], "method": r["method"], "C": r["C"],
                                "err_mean": r[f"err_{what}_mean"], "err_se": r[f"err_{what}_se"],
                            }
                            for r in panel_rows
                        ],
                    )
        config = {"experiment": "fig1", "reps": reps, "seed": seed, "C_values": list(c_values),
                  "sizes": [100, 200, 300], "alphas": [0.5, 1.0], "rho_Ts": [0.1, 0.7],
                  "rule": "scad", "r": 1, "weights": "characteristic"}
    elif args.experiment == "table2":
        reps = args.reps if args.reps is not None else 20
        rows = experiment_forecast(n_reps=reps, seed=seed, threads=threads)
        fields = ["alpha", "rho_T", "N", "T", "method", "mse_ratio_mean", "mse_ratio_se"]
        write_rows_csv(outdir / "results.csv", fields, rows)
        config = {"experiment": "table2", "reps": reps, "seed": seed, "N": 100, "m": 50,
                  "window_sizes": [50, 100], "rho_Ts": [0.0, 0.5, 0.9], "alphas": [1.0, 0.2],
                  "coefficients": {"beta0": 1.5, "beta_lag": 0.5, "alpha_factors": [1.0, 1.0]},
                  "presample_loadings": "B1 = 0.8 B + 0.5 Z, Z scaled like B",
                  "epsilon": 1.0}
    elif args.experiment == "postsel":
        reps = args.reps if args.reps is not None else 200
        samples, rows = experiment_postsel(n_reps=reps, seed=seed, threads=threads)
        write_rows_csv(outdir / "results.csv", ["r", "method", "mean_z", "std_z", "coverage", "level"], rows)
        sample_rows = [
            {"setting": name, "rep": i, "z": z}
            for name in sorted(samples)
            for i, z in enumerate(samples[name])
        ]
        write_rows_csv(outdir / "postsel_z_samples.csv", ["setting", "rep", "z"], sample_rows)
        config = {"experiment": "postsel", "reps": reps, "seed": seed, "N": 200, "T": 200,
                  "beta": 1.0, "sparse_coefs": [1.0, -1.5, 0.5], "C": 4.1,
                  "weights": "initial_transform", "r_values": [0, 2], "R_values": [1, 2, 3]}
    else:  # table3
        reps = args.reps if args.reps is not None else 1000
        c = args.C if args.C is not None else 2.0
        rows = experiment_spectest(n_reps=reps, seed=seed, C=c, threads=threads)
        write_rows_csv(
            outdir / "results.csv",
            ["scheme", "gamma", "T", "N", "rejection_rate", "mc_se", "level"],
            rows,
        )
        config = {"experiment": "table3", "reps": reps, "seed": seed, "N": 200, "r": 2,
                  "gammas": [0.0, 0.2], "T_values": [100, 200], "level": 0.05,
                  "rule": "scad", "C": c, "n_draws": 2000,
                  "schemes": ["characteristic", "hadamard", "initial"]}
    config["threads"] = threads
    write_json(outdir / "config.json", config)
    _write_manifest(outdir, args)
    return 0


_COMMANDS = {
    "estimate": _cmd_estimate,
    "forecast": _cmd_forecast,
    "infer": _cmd_infer,
    "cov": _cmd_cov,
    "spectest": _cmd_spectest,
    "fdr": _cmd_fdr,
    "simulate": _cmd_simulate,
}


def run(argv=None) -> int:
    """Parse arguments and dispatch; returns the process exit code."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        args = _apply_config(args, argv)
    except UsageError as exc:
        print(f"divproj: {exc}", file=sys.stderr)
        return 1
    try:
        return _COMMANDS[args.subcommand](args)
    except (DivprojError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"divproj: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
