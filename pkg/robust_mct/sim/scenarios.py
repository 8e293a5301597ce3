"""
Simulation scenarios: the control-plus-three-doses design grid, its
published reference values and the data generator.
"""

import logging
import zlib
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple

import numpy as np

from robust_mct.errors import ConfigError
from robust_mct.models import GroupedSample
from robust_mct.settings import DEFAULT_SEED, Settings, get_settings

logger = logging.getLogger(__name__)

PROCEDURES = ("Dun", "Sat", "SaW", "Rob", "MLT", "Rel")
GROUP_LABELS = ("0", "1", "2", "3")


class Distribution(Enum):
    NORMAL = "Normal"
    MIXTURE10 = "Mixture10"
    MIXTURE20 = "Mixture20"

    @property
    def contamination(self) -> float:
        return {"Normal": 0.0, "Mixture10": 0.10, "Mixture20": 0.20}[self.value]


class Hypothesis(Enum):
    H0 = "H0"
    H1 = "H1"


@dataclass(frozen=True)
class SimScenario:
    """
    One simulation cell.

    Attributes:
        xi: SD inflation of the top dose (Normal) or of the contaminating component (mixtures)
        sample_sizes: (n0, n1, n2, n3), control first
        effect: H1 shift of every dose group in base-SD units; None uses the configured effect
    """

    scenario_id: str
    distribution: str
    xi: float
    sample_sizes: Tuple[int, ...]
    hypothesis: str
    effect: Optional[float] = None
    runs: int = 10000
    alpha: float = 0.05
    seed: int = DEFAULT_SEED
    procedures: Tuple[str, ...] = PROCEDURES

    def __post_init__(self):
        try:
            Distribution(self.distribution)
            Hypothesis(self.hypothesis)
        except ValueError as exc:
            raise ConfigError(str(exc), {"scenario": self.scenario_id}) from exc
        if self.xi < 1.0:
            raise ConfigError("xi must be at least 1", {"scenario": self.scenario_id, "xi": self.xi})
        if len(self.sample_sizes) != 4 or min(self.sample_sizes) < 2:
            raise ConfigError("Scenarios need four groups of at least 2", {"sample_sizes": list(self.sample_sizes)})
        if self.runs < 100:
            raise ConfigError("At least 100 runs are required", {"runs": self.runs})
        unknown = [p for p in self.procedures if p not in PROCEDURES]
        if unknown:
            raise ConfigError(f"Unknown procedures {unknown}", {"valid": list(PROCEDURES)})

    @property
    def dist(self) -> Distribution:
        return Distribution(self.distribution)

    @property
    def stream_key(self) -> int:
        """Stable per-scenario key for the replicate RNG streams."""
        return zlib.crc32(self.scenario_id.encode("utf-8"))


def replicate_rng(scenario: SimScenario, replicate: int) -> np.random.Generator:
    """Independent generator for one replicate, fixed by (seed, scenario, replicate)."""
    seq = np.random.SeedSequence(entropy=scenario.seed, spawn_key=(scenario.stream_key, replicate))
    return np.random.Generator(np.random.PCG64(seq))


def draw_noise(scenario: SimScenario, rng: np.random.Generator, settings: Optional[Settings] = None) -> List[np.ndarray]:
    """Responses under H0 in base-SD units, centred at 0."""
    settings = settings or get_settings()
    dist = scenario.dist
    pi = dist.contamination
    top = len(scenario.sample_sizes) - 1
    draws = []
    for g, n in enumerate(scenario.sample_sizes):
        if dist is Distribution.NORMAL:
            sd = scenario.xi if g == top else 1.0
            draws.append(rng.normal(0.0, sd, size=n))
        else:
            clean = rng.normal(0.0, 1.0, size=n)
            dirty = rng.normal(settings.mixture_shift, scenario.xi, size=n)
            contaminated = rng.random(n) < pi
            draws.append(np.where(contaminated, dirty, clean))
    return draws


def assemble_sample(scenario: SimScenario, noise: List[np.ndarray], effect: float, settings: Optional[Settings] = None) -> GroupedSample:
    settings = settings or get_settings()
    shift = effect if scenario.hypothesis == Hypothesis.H1.value else 0.0
    arrays = []
    for g, z in enumerate(noise):
        mean = settings.base_mean + (shift * settings.base_sd if g > 0 else 0.0)
        arrays.append(mean + settings.base_sd * z)
    return GroupedSample.from_arrays(arrays, labels=list(GROUP_LABELS))


def generate_sample(
    scenario: SimScenario,
    rng: np.random.Generator,
    effect: Optional[float] = None,
    settings: Optional[Settings] = None,
) -> GroupedSample:
    """
    Draw one data set for ``scenario``.

    Normal rows inflate the top-dose SD by xi. Mixture rows draw each
    response with the contamination probability from N(mu_g + shift sd, (xi sd)^2)
    and otherwise from N(mu_g, sd^2). Under H1 every dose mean is shifted by
    ``effect`` base SDs.
    """
    settings = settings or get_settings()
    effect = scenario.effect if effect is None else effect
    effect = settings.effect if effect is None else effect
    return assemble_sample(scenario, draw_noise(scenario, rng, settings), effect, settings)


def _row(dist: str, hyp: str, xi: float, n0: int, ni: int) -> dict:
    prefix = "N" if dist == "Normal" else "M"
    return {
        "scenario_id": f"{prefix}-{hyp}-xi{xi:g}-n{n0}-{ni}",
        "distribution": dist,
        "xi": float(xi),
        "n0": n0,
        "n1": ni,
        "n2": ni,
        "n3": ni,
        "hypothesis": hyp,
    }


# (distribution, hypothesis, xi, n0, n_i, Dun, Sat, SaW, Rob, MLT, Rel)
_PUBLISHED = [
    ("Normal", "H0", 1, 10, 10, 0.05, 0.03, 0.08, 0.06, 0.06, 0.03),
    ("Normal", "H0", 2, 10, 10, 0.04, 0.03, 0.08, 0.06, 0.07, 0.03),
    ("Normal", "H0", 3, 10, 10, 0.04, 0.02, 0.07, 0.05, 0.05, 0.04),
    ("Normal", "H0", 4, 10, 10, 0.03, 0.03, 0.06, 0.04, 0.06, 0.03),
    ("Normal", "H1", 1, 10, 10, 0.84, 0.79, 0.89, 0.86, 0.85, 0.74),
    ("Normal", "H1", 2, 10, 10, 0.75, 0.69, 0.81, 0.79, 0.77, 0.65),
    ("Normal", "H1", 3, 10, 10, 0.65, 0.58, 0.69, 0.72, 0.70, 0.56),
    ("Normal", "H1", 4, 10, 10, 0.52, 0.47, 0.58, 0.71, 0.63, 0.47),
    ("Normal", "H0", 1, 20, 10, 0.04, 0.03, 0.07, 0.06, 0.05, 0.04),
    ("Normal", "H0", 4, 20, 10, 0.06, 0.03, 0.06, 0.06, 0.06, 0.04),
    ("Normal", "H1", 1, 20, 10, 0.94, 0.92, 0.94, 0.94, 0.95, 0.88),
    ("Normal", "H1", 4, 20, 10, 0.73, 0.67, 0.65, 0.84, 0.78, 0.62),
    ("Normal", "H0", 1, 5, 20, 0.04, 0.02, 0.11, 0.05, 0.05, 0.05),
    ("Normal", "H0", 4, 5, 20, 0.02, 0.00, 0.11, 0.05, 0.04, 0.06),
    ("Normal", "H1", 1, 5, 20, 0.64, 0.47, 0.79, 0.67, 0.70, 0.63),
    ("Normal", "H1", 4, 5, 20, 0.36, 0.22, 0.67, 0.63, 0.57, 0.56),
    ("Mixture10", "H0", 1, 20, 10, 0.09, 0.07, 0.09, 0.16, 0.08, 0.06),
    ("Mixture10", "H0", 2, 20, 10, 0.09, 0.07, 0.08, 0.20, 0.07, 0.05),
    ("Mixture10", "H0", 3, 20, 10, 0.13, 0.10, 0.09, 0.22, 0.09, 0.05),
    ("Mixture10", "H0", 4, 20, 10, 0.13, 0.09, 0.07, 0.20, 0.07, 0.05),
    ("Mixture10", "H1", 1, 20, 10, 0.71, 0.68, 0.57, 0.74, 0.65, 0.34),
    ("Mixture10", "H1", 2, 20, 10, 0.63, 0.57, 0.44, 0.69, 0.53, 0.26),
    ("Mixture10", "H1", 3, 20, 10, 0.52, 0.47, 0.33, 0.64, 0.44, 0.22),
    ("Mixture10", "H1", 4, 20, 10, 0.46, 0.40, 0.26, 0.61, 0.39, 0.19),
    ("Mixture20", "H0", 1, 5, 20, 0.00, 0.00, 0.10, 0.02, 0.01, 0.04),
    ("Mixture20", "H0", 4, 5, 20, 0.00, 0.00, 0.09, 0.02, 0.01, 0.05),
    ("Mixture20", "H1", 1, 5, 20, 0.31, 0.19, 0.59, 0.41, 0.32, 0.41),
    ("Mixture20", "H1", 4, 5, 20, 0.10, 0.05, 0.41, 0.35, 0.20, 0.34),
]

GRID_ROWS: List[dict] = [_row(d, h, xi, n0, ni) for d, h, xi, n0, ni, *_ in _PUBLISHED]

REFERENCE_RATES: Dict[str, Dict[str, float]] = {
    row["scenario_id"]: dict(zip(PROCEDURES, entry[5:])) for row, entry in zip(GRID_ROWS, _PUBLISHED)
}

ROW_BLOCKS = {
    "h0-normal": lambda r: r["distribution"] == "Normal" and r["hypothesis"] == "H0",
    "h1-normal": lambda r: r["distribution"] == "Normal" and r["hypothesis"] == "H1",
    "h0-mixture": lambda r: r["distribution"] != "Normal" and r["hypothesis"] == "H0",
    "h1-mixture": lambda r: r["distribution"] != "Normal" and r["hypothesis"] == "H1",
}


def scenario_from_row(row: dict, runs: int = 10000, seed: int = DEFAULT_SEED, procedures=PROCEDURES) -> SimScenario:
    return SimScenario(
        scenario_id=str(row["scenario_id"]),
        distribution=str(row["distribution"]),
        xi=float(row["xi"]),
        sample_sizes=(int(row["n0"]), int(row["n1"]), int(row["n2"]), int(row["n3"])),
        hypothesis=str(row["hypothesis"]),
        runs=runs,
        seed=seed,
        procedures=tuple(procedures),
    )


def select_rows(rows: List[dict], selectors: Optional[List[str]]) -> List[dict]:
    """Keep rows matching any block name (e.g. "h0-normal") or scenario id."""
    if not selectors:
        return list(rows)
    unknown = [s for s in selectors if s not in ROW_BLOCKS and s not in {r["scenario_id"] for r in rows}]
    if unknown:
        raise ConfigError(f"Unknown row selectors {unknown}", {"blocks": sorted(ROW_BLOCKS)})
    return [r for r in rows if any(r["scenario_id"] == s or (s in ROW_BLOCKS and ROW_BLOCKS[s](r)) for s in selectors)]
