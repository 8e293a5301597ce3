"""
Command-line entry point.

Usage:
    robust-mct dunnett --input clin.csv --response CreatKinase --control 0
    robust-mct mlt --input clin.csv --response CreatKinase --df-mode linear-model
    robust-mct colr --input clin.csv --response CreatKinase --tail greater
    robust-mct mmm --input clin.csv --response CreatKinase,ALT
    robust-mct sim --runs 1000 --procedures dun,sat --rows h0-normal
    robust-mct calibrate --runs 2000

Exit codes: 0 success, 1 analysis diagnostic, 2 usage error.
"""

import argparse
import logging
import sys
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from robust_mct.errors import RobustMCTError
from robust_mct.logging_config import configure_logging
from robust_mct.mct.contrast import max_t_test
from robust_mct.mct.nparm import npar_dunnett
from robust_mct.mct.robust import robust_dunnett
from robust_mct.mlt.dunnett import colr_dunnett, linear_model_df, mlt_dunnett
from robust_mct.mlt.mmm import StackedFit, mmm_dunnett, stack_models
from robust_mct.mlt.model import Link, fit_mlt
from robust_mct.models import GroupedSample, MaxTResult
from robust_mct.settings import get_settings
from robust_mct.sim.runner import calibrate_effect, load_grid, grid_study
from robust_mct.sim.scenarios import PROCEDURES, ROW_BLOCKS
from robust_mct.validation_schemas import ANALYSIS_METHODS, AnalysisConfig, AnalysisConfigSchema, validate_config

from .ingest import ingest_endpoints, plot_data
from .report import render, render_error, render_frame, write_output

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DIAGNOSTIC = 1
EXIT_USAGE = 2


def _split_list(values: Optional[Sequence[str]]) -> List[str]:
    out: List[str] = []
    for value in values or []:
        out.extend(v.strip() for v in value.split(",") if v.strip())
    return out


def procedure_list(value: str) -> List[str]:
    """argparse type for --procedures: comma-separated, case-insensitive."""
    lookup = {p.lower(): p for p in PROCEDURES}
    names = [v.strip() for v in value.split(",") if v.strip()]
    unknown = [v for v in names if v.lower() not in lookup]
    if unknown or not names:
        raise argparse.ArgumentTypeError(f"invalid procedure(s) {unknown}; valid names: {', '.join(PROCEDURES)}")
    return [lookup[v.lower()] for v in names]


def _df_for(model, df_mode: str) -> Optional[float]:
    return linear_model_df(model) if df_mode == "linear-model" else None


def _single_analysis(config: AnalysisConfig, sample: GroupedSample) -> MaxTResult:
    common = {"tail": config.tail, "alpha": config.alpha, "seed": config.seed}
    method = config.method
    if method in ("dunnett", "satterthwaite"):
        return max_t_test(sample, variance="pooled" if method == "dunnett" else "satterthwaite", **common)
    if method == "sandwich":
        df = float(sample.n_total - (sample.k + 1)) if config.df_mode == "linear-model" else None
        return max_t_test(sample, variance="sandwich", sandwich_df=df, **common)
    if method == "robust":
        return robust_dunnett(sample, psi=config.psi, **common)
    if method == "npar":
        return npar_dunnett(sample, link=config.link, **common)
    if method == "mlt":
        model = fit_mlt(sample, order=config.order, link=Link.NORMAL)
        return mlt_dunnett(model, _df_for(model, config.df_mode), **common)
    if method == "colr":
        model = fit_mlt(sample, order=config.order, link=Link.LOGISTIC)
        return colr_dunnett(sample, model=model, df=_df_for(model, config.df_mode), **common)
    raise RobustMCTError(f"Unsupported method '{method}'")


def _mmm_df(config: AnalysisConfig, stacked: StackedFit) -> float:
    if config.df_mode == "asymptotic":
        return np.inf
    if config.df_mode == "linear-model":
        return linear_model_df(stacked.models[0])
    return stacked.df


def _mmm_analysis(config: AnalysisConfig, samples: dict, subjects: np.ndarray) -> List[Tuple[str, MaxTResult]]:
    link = Link.parse(config.extra.get("mlt_link", "normal"))
    names = list(config.responses)
    models = [fit_mlt(samples[name], order=config.order, link=link) for name in names]
    stacked = stack_models(models, subject_index=[subjects] * len(models), names=names)
    df = _mmm_df(config, stacked)
    common = {"tail": config.tail, "alpha": config.alpha, "seed": config.seed}
    sections = [("multiple marginal models", mmm_dunnett(stacked, df=df, **common))]
    for name, model in zip(names, models):
        if link is Link.LOGISTIC:
            single = colr_dunnett(samples[name], model=model, df=df, **common)
        else:
            single = mlt_dunnett(model, df, **common)
        sections.append((f"{name} (univariate)", single))
    return sections


def run_analysis(config: AnalysisConfig) -> List[Tuple[str, MaxTResult]]:
    """
    Ingest the data and run the configured procedure.

    Returns:
        titled result sections; one for single-endpoint methods, the joint
        test followed by the univariate tests for mmm
    """
    samples, subjects = ingest_endpoints(
        config.input,
        config.responses,
        group_column=config.group_column,
        control=config.control,
        drop_missing=config.drop_missing,
    )
    if config.emit_plot_data:
        frame = pd.concat([plot_data(samples[r], r) for r in config.responses], ignore_index=True)
        write_output(render_frame(frame, "csv"), config.emit_plot_data)

    if config.method == "mmm":
        return _mmm_analysis(config, samples, subjects)
    response = config.responses[0]
    return [(f"{response}: {config.method}", _single_analysis(config, samples[response]))]


def _add_analysis_args(parser: argparse.ArgumentParser):
    parser.add_argument("--input", required=True, help="CSV file with a header row")
    parser.add_argument(
        "--response",
        action="append",
        required=True,
        help="Response column; repeat or comma-separate for mmm",
    )
    parser.add_argument("--group-column", default="Dose", help="Group (dose) column (default: Dose)")
    parser.add_argument("--control", default=None, help="Control group label (default: smallest dose)")
    parser.add_argument("--tail", default="two.sided", help="two.sided, greater or less")
    parser.add_argument("--alpha", type=float, default=0.05)
    parser.add_argument("--order", type=int, default=5, help="Bernstein order for mlt/colr/mmm")
    parser.add_argument(
        "--df-mode",
        default=None,
        help="asymptotic or linear-model (default: asymptotic; mmm uses the mean of the model dfs)",
    )
    parser.add_argument("--link", default="probit", help="npar effect scale: probit, logit or identity")
    parser.add_argument("--mlt-link", default="normal", help="mmm model link: normal or logistic")
    parser.add_argument("--psi", default="huber", help="robust psi function: huber or bisquare")
    parser.add_argument("--emit-plot-data", default=None, help="Write per-group points, means and SDs to this CSV")
    parser.add_argument("--drop-missing", action="store_true", help="Drop rows with missing responses")


def _add_common_args(parser: argparse.ArgumentParser):
    parser.add_argument("--format", dest="output_format", default="human", choices=["human", "csv", "json"])
    parser.add_argument("--output", default=None, help="Write the report to this file instead of stdout")
    parser.add_argument("--seed", type=int, default=None, help="Random seed (default: ROBUST_MCT_SEED or 20190501)")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads (default: ROBUST_MCT_THREADS)")
    parser.add_argument("--verbose", "-v", action="store_true", help="Debug logging")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robust-mct",
        description="Dunnett-type multiple contrast tests with robust, nonparametric and transformation-model variants",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for method in ANALYSIS_METHODS:
        cmd = sub.add_parser(method, help=f"{method} many-to-one comparisons")
        _add_analysis_args(cmd)
        _add_common_args(cmd)

    sim = sub.add_parser("sim", help="Monte Carlo size/power study over the scenario grid")
    sim.add_argument("--runs", type=int, default=10000)
    sim.add_argument("--procedures", type=procedure_list, default=list(PROCEDURES), help=f"Subset of {','.join(PROCEDURES)}")
    sim.add_argument("--rows", default=None, help=f"Comma-separated scenario ids or blocks ({', '.join(ROW_BLOCKS)})")
    sim.add_argument("--grid", default=None, help="Scenario grid CSV (default: built-in grid)")
    sim.add_argument("--effect", type=float, default=None, help="H1 shift in SD units (default: ROBUST_MCT_EFFECT)")
    _add_common_args(sim)

    cal = sub.add_parser("calibrate", help="Calibrate the H1 shift to a target Dunnett power")
    cal.add_argument("--runs", type=int, default=2000)
    cal.add_argument("--target", type=float, default=0.84)
    _add_common_args(cal)
    return parser


def _analysis_config(args: argparse.Namespace, seed: int) -> AnalysisConfig:
    data = {
        "input": args.input,
        "method": args.command,
        "responses": _split_list(args.response),
        "group_column": args.group_column,
        "control": args.control,
        "tail": args.tail,
        "alpha": args.alpha,
        "order": args.order,
        "df_mode": args.df_mode,
        "link": args.link,
        "psi": args.psi,
        "output_format": args.output_format,
        "output": args.output,
        "emit_plot_data": args.emit_plot_data,
        "drop_missing": args.drop_missing,
        "seed": seed,
    }
    config = validate_config(AnalysisConfigSchema, data)
    config.extra["mlt_link"] = args.mlt_link
    return config


def _run_sim(args: argparse.Namespace, seed: int, threads: int) -> str:
    if args.runs < 100:
        raise RobustMCTError("At least 100 runs are required", {"runs": args.runs})
    grid = load_grid(args.grid) if args.grid else None
    report = grid_study(
        grid,
        runs=args.runs,
        seed=seed,
        procedures=args.procedures,
        rows=_split_list([args.rows]) if args.rows else None,
        threads=threads,
        effect=args.effect,
    )
    if args.output_format == "human":
        return report.render() + "\n"
    return render_frame(report.to_frame(), args.output_format)


def _run_calibrate(args: argparse.Namespace, seed: int, threads: int) -> str:
    result = calibrate_effect(args.target, runs=args.runs, seed=seed, threads=threads)
    frame = pd.DataFrame([{"effect": result.effect, "power": result.power, "iterations": result.iterations, "runs": result.runs}])
    if args.output_format == "human":
        return (
            f"H1 shift {result.effect:.6g} SD gives Dunnett power {result.power:.4f} "
            f"({result.runs} runs, {result.iterations} bisection steps)\n"
            f"set ROBUST_MCT_EFFECT={result.effect:.6g} to freeze it\n"
        )
    return render_frame(frame, args.output_format)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    configure_logging(verbose=args.verbose)
    settings = get_settings()
    seed = settings.seed if args.seed is None else args.seed
    threads = max(1, args.threads or settings.threads)
    fmt = args.output_format

    try:
        if args.command == "sim":
            text = _run_sim(args, seed, threads)
        elif args.command == "calibrate":
            text = _run_calibrate(args, seed, threads)
        else:
            config = _analysis_config(args, seed)
            text = render(run_analysis(config), config.output_format)
        write_output(text, args.output)
    except RobustMCTError as exc:
        logger.error(f"[CLI] {args.command} failed: {exc.kind}: {exc.message}")
        sys.stderr.write(render_error(exc, fmt))
        return EXIT_DIAGNOSTIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
