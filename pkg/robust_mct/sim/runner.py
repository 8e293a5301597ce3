"""
Monte Carlo driver: empirical size and power of every procedure over the
scenario grid, plus the one-time calibration of the H1 shift.
"""

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from robust_mct.errors import ConfigError, ConvergenceError, RobustMCTError
from robust_mct.mct.contrast import max_t_test
from robust_mct.mct.nparm import npar_dunnett
from robust_mct.mct.robust import robust_dunnett
from robust_mct.mlt.dunnett import linear_model_df, mlt_dunnett
from robust_mct.mlt.model import Link, fit_mlt
from robust_mct.models import GroupedSample
from robust_mct.settings import DEFAULT_SEED, Settings, get_settings
from robust_mct.sim.pool import ReplicatePool
from robust_mct.sim.scenarios import (
    GRID_ROWS,
    PROCEDURES,
    REFERENCE_RATES,
    SimScenario,
    assemble_sample,
    draw_noise,
    generate_sample,
    replicate_rng,
    scenario_from_row,
    select_rows,
)
from robust_mct.validation_schemas import GridRowSchema, validate_config

logger = logging.getLogger(__name__)

# failure rate above which a procedure's column is flagged unreliable
UNRELIABLE_FAILURE_RATE = 0.05


def _dun(sample: GroupedSample, alpha: float, seed: int) -> bool:
    return max_t_test(sample, variance="pooled", alpha=alpha, seed=seed, conf_int=False).any_rejected


def _sat(sample: GroupedSample, alpha: float, seed: int) -> bool:
    return max_t_test(sample, variance="satterthwaite", alpha=alpha, seed=seed, conf_int=False).any_rejected


def _saw(sample: GroupedSample, alpha: float, seed: int) -> bool:
    return max_t_test(sample, variance="sandwich", alpha=alpha, seed=seed, conf_int=False).any_rejected


def _rob(sample: GroupedSample, alpha: float, seed: int) -> bool:
    return robust_dunnett(sample, alpha=alpha, seed=seed, conf_int=False).any_rejected


def _mlt(sample: GroupedSample, alpha: float, seed: int) -> bool:
    model = fit_mlt(sample, order=5, link=Link.NORMAL, starts=("identity",))
    if not model.converged:
        raise ConvergenceError("Transformation model did not converge")
    return mlt_dunnett(model, df=linear_model_df(model), alpha=alpha, seed=seed, conf_int=False).any_rejected


def _rel(sample: GroupedSample, alpha: float, seed: int) -> bool:
    return npar_dunnett(sample, alpha=alpha, seed=seed, conf_int=False).any_rejected


PROCEDURE_FUNCS: Dict[str, Callable[[GroupedSample, float, int], bool]] = {
    "Dun": _dun,
    "Sat": _sat,
    "SaW": _saw,
    "Rob": _rob,
    "MLT": _mlt,
    "Rel": _rel,
}


@dataclass(frozen=True)
class ProcedureResult:
    """Rejection count of one procedure in one scenario; failed replicates are excluded from ``runs``."""

    procedure: str
    rejections: int
    runs: int
    failures: int

    @property
    def proportion(self) -> float:
        return self.rejections / self.runs if self.runs else float("nan")

    @property
    def mcse(self) -> float:
        if not self.runs:
            return float("nan")
        p = self.proportion
        return float(np.sqrt(p * (1.0 - p) / self.runs))

    @property
    def failure_rate(self) -> float:
        attempted = self.runs + self.failures
        return self.failures / attempted if attempted else 0.0

    @property
    def unreliable(self) -> bool:
        return self.failure_rate > UNRELIABLE_FAILURE_RATE


@dataclass(frozen=True, eq=False)
class SimResult:
    """All procedure results of one scenario."""

    scenario: SimScenario
    effect: float
    results: Dict[str, ProcedureResult]
    elapsed: float = 0.0

    def __getitem__(self, procedure: str) -> ProcedureResult:
        return self.results[procedure]

    def to_frame(self) -> pd.DataFrame:
        s = self.scenario
        rows = []
        for name, res in self.results.items():
            rows.append(
                {
                    "scenario_id": s.scenario_id,
                    "procedure": name,
                    "hypothesis": s.hypothesis,
                    "xi": s.xi,
                    "n0": s.sample_sizes[0],
                    "n1": s.sample_sizes[1],
                    "n2": s.sample_sizes[2],
                    "n3": s.sample_sizes[3],
                    "rejections": res.rejections,
                    "runs": res.runs,
                    "proportion": res.proportion,
                    "mcse": res.mcse,
                    "failures": res.failures,
                }
            )
        return pd.DataFrame(rows)


def _resolve_effect(scenario: SimScenario, effect: Optional[float], settings: Settings) -> float:
    if effect is not None:
        return float(effect)
    if scenario.effect is not None:
        return float(scenario.effect)
    return float(settings.effect)


def _apply(procedures: Sequence[str], sample: GroupedSample, alpha: float, seed: int) -> tuple:
    """Outcome per procedure: True/False for reject/keep, None for a failed fit."""
    outcomes = []
    for name in procedures:
        try:
            outcomes.append(PROCEDURE_FUNCS[name](sample, alpha, seed))
        except RobustMCTError as exc:
            logger.debug(f"[SIM] {name} failed: {exc.kind}: {exc.message}")
            outcomes.append(None)
        except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
            logger.debug(f"[SIM] {name} failed: {type(exc).__name__}: {exc}")
            outcomes.append(None)
    return tuple(outcomes)


def run_scenario(
    scenario: SimScenario,
    *,
    threads: Optional[int] = None,
    effect: Optional[float] = None,
    settings: Optional[Settings] = None,
) -> SimResult:
    """
    Simulate ``scenario.runs`` data sets and apply every selected procedure.

    Replicate r draws from its own stream ``replicate_rng(scenario, r)``, so the
    result is identical for any ``threads``.
    """
    settings = settings or get_settings()
    threads = threads or settings.threads
    shift = _resolve_effect(scenario, effect, settings)
    procedures = tuple(scenario.procedures)

    def task(replicate: int) -> tuple:
        rng = replicate_rng(scenario, replicate)
        sample = generate_sample(scenario, rng, shift, settings)
        mvt_seed = int(rng.integers(0, 2**31 - 1))
        return _apply(procedures, sample, scenario.alpha, mvt_seed)

    started = time.perf_counter()
    outcomes = ReplicatePool(threads).run(task, scenario.runs)
    elapsed = time.perf_counter() - started

    results = {}
    for j, name in enumerate(procedures):
        column = [o[j] for o in outcomes]
        failures = sum(1 for v in column if v is None)
        rejections = sum(1 for v in column if v)
        res = ProcedureResult(name, rejections, len(column) - failures, failures)
        if res.unreliable:
            logger.warning(f"[SIM] {scenario.scenario_id}: {name} failed in {res.failure_rate:.1%} of replicates")
        results[name] = res

    summary = ", ".join(f"{n}={r.proportion:.3f}" for n, r in results.items())
    logger.info(f"[SIM] {scenario.scenario_id} ({scenario.runs} runs, {elapsed:.1f}s): {summary}")
    return SimResult(scenario=scenario, effect=shift, results=results, elapsed=elapsed)


def load_grid(path: Optional[str] = None) -> List[dict]:
    """
    Read and validate a scenario grid CSV.

    Raises:
        ConfigError: unreadable file, invalid rows or duplicate scenario ids
    """
    path = path or get_settings().grid_path
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ConfigError(f"Cannot read grid file {path}: {exc}") from exc

    rows = []
    for i, record in enumerate(frame.to_dict("records")):
        try:
            rows.append(validate_config(GridRowSchema, {k.strip(): v.strip() for k, v in record.items()}))
        except ConfigError as exc:
            exc.details["line"] = i + 2
            raise
    ids = [r["scenario_id"] for r in rows]
    duplicates = sorted({s for s in ids if ids.count(s) > 1})
    if duplicates:
        raise ConfigError("Duplicate scenario ids in grid", {"scenario_ids": duplicates})
    logger.info(f"[SIM] Loaded {len(rows)} scenarios from {path}")
    return rows


@dataclass(frozen=True, eq=False)
class GridReport:
    """Results of a grid run."""

    results: List[SimResult]
    effect: float
    reference: Dict[str, Dict[str, float]] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        if not self.results:
            return pd.DataFrame()
        return pd.concat([r.to_frame() for r in self.results], ignore_index=True)

    def render(self) -> str:
        """Human-readable table: one line per scenario, ``estimate (published)`` per procedure."""
        lines = [f"H1 shift: {self.effect:g} SD"]
        rows = []
        for res in self.results:
            s = res.scenario
            row = {
                "scenario": s.scenario_id,
                "dist": s.distribution,
                "hyp": s.hypothesis,
                "xi": f"{s.xi:g}",
                "n": "/".join(str(n) for n in s.sample_sizes),
            }
            ref = self.reference.get(s.scenario_id, {})
            for name, pr in res.results.items():
                cell = f"{pr.proportion:.3f}"
                if name in ref:
                    cell += f" ({ref[name]:.2f})"
                if pr.unreliable:
                    cell += " !"
                row[name] = cell
            rows.append(row)
        lines.append(pd.DataFrame(rows).to_string(index=False))
        lines.append("values in parentheses: published reference; ! = more than 5% failed fits")
        return "\n".join(lines)


def grid_study(
    grid: Optional[List[dict]] = None,
    *,
    runs: int = 10000,
    seed: int = DEFAULT_SEED,
    procedures: Sequence[str] = PROCEDURES,
    rows: Optional[List[str]] = None,
    threads: Optional[int] = None,
    effect: Optional[float] = None,
    settings: Optional[Settings] = None,
) -> GridReport:
    """
    Run every selected grid row.

    Args:
        grid: scenario rows, defaults to the published grid
        rows: block names ("h0-normal", ...) or scenario ids to keep
    """
    settings = settings or get_settings()
    grid = GRID_ROWS if grid is None else grid
    selected = select_rows(grid, rows)
    shift = settings.effect if effect is None else float(effect)
    logger.info(f"[SIM] Running {len(selected)} scenarios x {runs} runs, procedures {list(procedures)}")
    results = []
    for row in selected:
        scenario = scenario_from_row(row, runs=runs, seed=seed, procedures=procedures)
        results.append(run_scenario(scenario, threads=threads, effect=shift, settings=settings))
    return GridReport(results=results, effect=shift, reference=REFERENCE_RATES)


@dataclass(frozen=True)
class CalibrationResult:
    effect: float
    power: float
    iterations: int
    runs: int


def calibrate_effect(
    target: float = 0.84,
    *,
    runs: int = 2000,
    seed: int = DEFAULT_SEED,
    lo: float = 0.5,
    hi: float = 2.5,
    tol: float = 0.005,
    max_iter: int = 40,
    threads: Optional[int] = None,
    settings: Optional[Settings] = None,
) -> CalibrationResult:
    """
    Bisection over the H1 shift so that Dunnett power at xi=1, n=(10,10,10,10) hits ``target``.

    The noise of every replicate is drawn once and reused for each candidate
    shift, which makes the estimated power monotone in the shift.

    Raises:
        ConfigError: the target is not bracketed by [lo, hi]
    """
    settings = settings or get_settings()
    threads = threads or settings.threads
    anchor = replace(
        scenario_from_row(GRID_ROWS[4], runs=runs, seed=seed, procedures=("Dun",)),
        scenario_id="calibration",
    )
    noise = []
    mvt_seeds = []
    for replicate in range(runs):
        rng = replicate_rng(anchor, replicate)
        noise.append(draw_noise(anchor, rng, settings))
        mvt_seeds.append(int(rng.integers(0, 2**31 - 1)))
    pool = ReplicatePool(threads)

    def power(shift: float) -> float:
        def task(replicate: int) -> bool:
            sample = assemble_sample(anchor, noise[replicate], shift, settings)
            return _dun(sample, anchor.alpha, mvt_seeds[replicate])

        return float(np.mean(pool.run(task, runs)))

    p_lo, p_hi = power(lo), power(hi)
    if not p_lo <= target <= p_hi:
        raise ConfigError(
            "Target power is not bracketed by the shift interval",
            {"lo": lo, "hi": hi, "power_lo": p_lo, "power_hi": p_hi, "target": target},
        )
    mid, p_mid = lo, p_lo
    iterations = 0
    for iterations in range(1, max_iter + 1):
        mid = (lo + hi) / 2.0
        p_mid = power(mid)
        logger.debug(f"[SIM] calibration step {iterations}: shift={mid:.5f} power={p_mid:.4f}")
        if abs(p_mid - target) <= tol / 2.0 or hi - lo < 1e-4:
            break
        if p_mid < target:
            lo = mid
        else:
            hi = mid
    logger.info(f"[SIM] Calibrated H1 shift {mid:.4f} SD gives Dunnett power {p_mid:.4f} ({runs} runs)")
    return CalibrationResult(effect=mid, power=p_mid, iterations=iterations, runs=runs)
