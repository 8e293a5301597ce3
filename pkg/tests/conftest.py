"""Shared fixtures for the robust MCT test suite."""

import os

import numpy as np
import pytest

from robust_mct.models import GroupedSample
from robust_mct.settings import reset_settings

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "fixtures")
CLIN_CSV = os.path.join(FIXTURE_DIR, "clin.csv")


@pytest.fixture(autouse=True)
def _fresh_settings(monkeypatch):
    """Every test sees the default settings regardless of the developer's .env."""
    for name in list(os.environ):
        if name.startswith("ROBUST_MCT_"):
            monkeypatch.delenv(name, raising=False)
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def rng():
    return np.random.default_rng(20190501)


@pytest.fixture
def balanced_sample(rng):
    """Control plus three doses, n=10 each, the top dose shifted up by 1.5 SD."""
    shifts = [0.0, 0.2, 0.5, 1.5]
    return GroupedSample.from_arrays(
        [90.0 + 10.0 * (s + rng.standard_normal(10)) for s in shifts],
        labels=["0", "1", "2", "3"],
    )


@pytest.fixture
def hetero_sample(rng):
    """Unbalanced layout with an inflated top-dose SD."""
    sizes = [12, 8, 10, 9]
    sds = [1.0, 1.0, 1.5, 4.0]
    means = [0.0, 0.3, 0.8, 1.0]
    return GroupedSample.from_arrays(
        [m + s * rng.standard_normal(n) for m, s, n in zip(means, sds, sizes)],
        labels=["ctrl", "low", "mid", "high"],
    )


@pytest.fixture
def two_group_sample(rng):
    return GroupedSample.from_arrays([rng.normal(5.0, 1.0, 11), rng.normal(6.0, 1.5, 14)], labels=["0", "1"])


@pytest.fixture
def clin_csv():
    """Clinical chemistry data (Dose plus endpoint columns); tests skip without it."""
    if not os.path.exists(CLIN_CSV):
        pytest.skip("tests/fixtures/clin.csv not available")
    return CLIN_CSV
