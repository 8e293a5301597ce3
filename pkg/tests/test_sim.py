import threading

import numpy as np
import pandas as pd
import pytest

from robust_mct.errors import ConfigError
from robust_mct.settings import Settings, reset_settings
from robust_mct.sim import (
    GRID_ROWS,
    PROCEDURES,
    REFERENCE_RATES,
    ProcedureResult,
    ReplicatePool,
    SimScenario,
    calibrate_effect,
    generate_sample,
    grid_study,
    load_grid,
    replicate_rng,
    run_scenario,
    scenario_from_row,
    select_rows,
)
from robust_mct.sim.scenarios import draw_noise


def _scenario(**overrides):
    params = dict(
        scenario_id="unit",
        distribution="Normal",
        xi=1.0,
        sample_sizes=(10, 10, 10, 10),
        hypothesis="H0",
        runs=100,
    )
    params.update(overrides)
    return SimScenario(**params)


class TestGenerator:
    def test_top_dose_sd_is_inflated(self):
        scenario = _scenario(xi=3.0, sample_sizes=(2, 2, 2, 200_000))
        sample = generate_sample(scenario, np.random.default_rng(1))
        top = sample.groups[3].responses
        assert np.std(top, ddof=1) == pytest.approx(30.0, rel=0.02)
        assert np.mean(top) == pytest.approx(90.0, abs=0.5)

    def test_mixture_control_mean(self):
        scenario = _scenario(distribution="Mixture10", sample_sizes=(1_000_000, 2, 2, 2))
        sample = generate_sample(scenario, np.random.default_rng(2))
        # 90 + 10 * 0.1 * 3
        assert sample.groups[0].responses.mean() == pytest.approx(93.0, abs=0.1)

    def test_h1_shifts_every_dose(self):
        scenario = _scenario(hypothesis="H1", sample_sizes=(50_000, 50_000, 50_000, 50_000))
        sample = generate_sample(scenario, np.random.default_rng(3), effect=1.25)
        means = sample.means
        assert means[0] == pytest.approx(90.0, abs=0.2)
        assert np.allclose(means[1:], 102.5, atol=0.2)

    def test_settings_override(self):
        settings = Settings(base_mean=0.0, base_sd=1.0)
        scenario = _scenario(sample_sizes=(100_000, 2, 2, 2))
        sample = generate_sample(scenario, np.random.default_rng(4), settings=settings)
        assert sample.groups[0].responses.mean() == pytest.approx(0.0, abs=0.02)
        assert sample.labels == ["0", "1", "2", "3"]

    @pytest.mark.parametrize("distribution, fraction", [("Mixture10", 0.10), ("Mixture20", 0.20)])
    def test_contamination_fraction(self, distribution, fraction):
        # contaminating component far from the clean one
        settings = Settings(mixture_shift=1000.0)
        scenario = _scenario(distribution=distribution, sample_sizes=(20_000, 20_000, 20_000, 20_000))
        noise = draw_noise(scenario, np.random.default_rng(5), settings)
        for draws in noise:
            assert np.mean(draws > 500.0) == pytest.approx(fraction, abs=0.01)

    def test_replicate_streams(self):
        scenario = _scenario()
        a = replicate_rng(scenario, 7).standard_normal(5)
        b = replicate_rng(scenario, 7).standard_normal(5)
        c = replicate_rng(scenario, 8).standard_normal(5)
        other = replicate_rng(_scenario(scenario_id="other"), 7).standard_normal(5)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)
        assert not np.array_equal(a, other)


class TestScenario:
    @pytest.mark.parametrize(
        "overrides",
        [
            {"distribution": "Cauchy"},
            {"hypothesis": "H2"},
            {"xi": 0.5},
            {"sample_sizes": (10, 10, 10)},
            {"sample_sizes": (1, 10, 10, 10)},
            {"runs": 99},
            {"procedures": ("Dun", "Bonferroni")},
        ],
    )
    def test_invalid(self, overrides):
        with pytest.raises(ConfigError):
            _scenario(**overrides)

    def test_published_grid(self):
        assert len(GRID_ROWS) == 28
        assert set(REFERENCE_RATES) == {r["scenario_id"] for r in GRID_ROWS}
        assert REFERENCE_RATES["N-H1-xi1-n10-10"]["Dun"] == pytest.approx(0.84)
        assert all(set(v) == set(PROCEDURES) for v in REFERENCE_RATES.values())

    def test_scenario_from_row(self):
        scenario = scenario_from_row(GRID_ROWS[12], runs=500, procedures=("Dun",))
        assert scenario.sample_sizes == (5, 20, 20, 20)
        assert scenario.runs == 500
        assert scenario.procedures == ("Dun",)

    def test_select_rows(self):
        assert len(select_rows(GRID_ROWS, ["h0-normal"])) == 8
        assert len(select_rows(GRID_ROWS, ["h1-normal"])) == 8
        assert len(select_rows(GRID_ROWS, ["h0-mixture", "h1-mixture"])) == 12
        assert len(select_rows(GRID_ROWS, None)) == 28
        picked = select_rows(GRID_ROWS, ["h0-normal", "M-H1-xi4-n5-20"])
        assert len(picked) == 9
        with pytest.raises(ConfigError):
            select_rows(GRID_ROWS, ["h2-normal"])


class TestReplicatePool:
    def test_results_are_indexed_by_replicate(self):
        pool = ReplicatePool(4)
        assert pool.run(lambda r: r * r, 50) == [r * r for r in range(50)]

    def test_serial_and_threaded_agree(self):
        def task(r):
            return float(np.random.default_rng(r).standard_normal())

        assert ReplicatePool(1).run(task, 40) == ReplicatePool(4).run(task, 40)

    def test_uses_several_threads(self):
        names = set()
        lock = threading.Lock()
        barrier = threading.Barrier(2, timeout=5)

        def task(r):
            if r < 2:
                barrier.wait()
            with lock:
                names.add(threading.current_thread().name)

        ReplicatePool(2).run(task, 10)
        assert len(names) == 2

    def test_lowest_failing_replicate_is_raised(self):
        def task(r):
            if r in (3, 11):
                raise ValueError(f"replicate {r}")
            return r

        pool = ReplicatePool(3)
        with pytest.raises(ValueError, match="replicate 3"):
            pool.run(task, 20)
        status = pool.get_pool_status()
        assert status["total_failed"] == 2
        assert status["total_executed"] == 18
        assert status["total_queued"] == 20
        assert not status["running"]


class TestProcedureResult:
    def test_proportion_and_mcse(self):
        res = ProcedureResult("Dun", rejections=50, runs=1000, failures=0)
        assert res.proportion == pytest.approx(0.05)
        assert res.mcse == pytest.approx(np.sqrt(0.05 * 0.95 / 1000))
        assert not res.unreliable

    def test_unreliable(self):
        res = ProcedureResult("MLT", rejections=40, runs=940, failures=60)
        assert res.failure_rate == pytest.approx(0.06)
        assert res.unreliable

    def test_no_runs(self):
        res = ProcedureResult("MLT", rejections=0, runs=0, failures=100)
        assert np.isnan(res.proportion)
        assert res.unreliable


class TestRunScenario:
    def test_thread_count_does_not_change_results(self):
        scenario = _scenario(procedures=("Dun", "Rel"))
        serial = run_scenario(scenario, threads=1)
        threaded = run_scenario(scenario, threads=3)
        for name in scenario.procedures:
            assert serial[name] == threaded[name]

    def test_all_procedures(self):
        scenario = _scenario(hypothesis="H1")
        result = run_scenario(scenario, threads=2, effect=2.0)
        assert set(result.results) == set(PROCEDURES)
        for res in result.results.values():
            assert res.runs + res.failures == 100
        assert result["Dun"].proportion > 0.9
        frame = result.to_frame()
        assert list(frame["procedure"]) == list(PROCEDURES)
        assert (frame["n0"] == 10).all()

    def test_effect_override_and_seed(self):
        a = run_scenario(_scenario(procedures=("Dun",), hypothesis="H1"), effect=0.8)
        b = run_scenario(_scenario(procedures=("Dun",), hypothesis="H1", seed=7), effect=0.8)
        assert a.effect == b.effect == 0.8
        assert a["Dun"].runs + a["Dun"].failures == b["Dun"].runs + b["Dun"].failures == 100

    def test_power_rises_with_effect(self):
        scenario = _scenario(procedures=("Dun",), hypothesis="H1", runs=200)
        powers = [run_scenario(scenario, threads=2, effect=e)["Dun"].proportion for e in (0.5, 1.0, 1.5)]
        assert powers[0] < powers[1] < powers[2]


class TestGrid:
    def test_default_grid_matches_published_rows(self):
        rows = load_grid()
        assert len(rows) == 28
        assert [r["scenario_id"] for r in rows] == [r["scenario_id"] for r in GRID_ROWS]
        assert rows[13]["xi"] == 4.0 and rows[13]["n1"] == 20

    def test_invalid_row_reports_line(self, tmp_path):
        path = tmp_path / "grid.csv"
        path.write_text(
            "scenario_id,distribution,xi,n0,n1,n2,n3,hypothesis\n"
            "a,Normal,1,10,10,10,10,H0\n"
            "b,Normal,0.5,10,10,10,10,H0\n"
        )
        with pytest.raises(ConfigError) as excinfo:
            load_grid(str(path))
        assert excinfo.value.details["line"] == 3

    def test_duplicate_ids(self, tmp_path):
        path = tmp_path / "grid.csv"
        path.write_text(
            "scenario_id,distribution,xi,n0,n1,n2,n3,hypothesis\n"
            "a,Normal,1,10,10,10,10,H0\n"
            "a,Mixture10,2,20,10,10,10,H1\n"
        )
        with pytest.raises(ConfigError, match="Duplicate"):
            load_grid(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_grid(str(tmp_path / "absent.csv"))

    def test_grid_from_environment(self, tmp_path, monkeypatch):
        path = tmp_path / "grid.csv"
        path.write_text("scenario_id,distribution,xi,n0,n1,n2,n3,hypothesis\nonly,Normal,2,6,6,6,6,H1\n")
        monkeypatch.setenv("ROBUST_MCT_GRID", str(path))
        reset_settings()
        assert [r["scenario_id"] for r in load_grid()] == ["only"]


class TestGridStudy:
    def test_smoke(self):
        report = grid_study(runs=100, procedures=("Dun", "Sat"), rows=["N-H0-xi1-n10-10", "N-H1-xi1-n10-10"], threads=2)
        assert len(report.results) == 2
        frame = report.to_frame()
        assert isinstance(frame, pd.DataFrame)
        assert len(frame) == 4
        text = report.render()
        assert "(0.05)" in text
        assert "(0.84)" in text
        assert "H1 shift: 1.25 SD" in text

    def test_custom_grid_has_no_reference(self):
        grid = [dict(GRID_ROWS[0], scenario_id="custom")]
        report = grid_study(grid, runs=100, procedures=("Dun",))
        assert "(" not in report.render().splitlines()[2]


@pytest.mark.slow
class TestOperatingCharacteristics:
    def test_dunnett_and_satterthwaite_keep_size_under_normality(self):
        scenario = scenario_from_row(GRID_ROWS[0], runs=2000, procedures=("Dun", "Sat"))
        result = run_scenario(scenario, threads=4)
        assert result["Dun"].proportion == pytest.approx(0.05, abs=0.015)
        assert result["Sat"].proportion <= 0.065

    def test_dunnett_is_conservative_with_small_control_and_inflated_top_dose(self):
        scenario = scenario_from_row(GRID_ROWS[13], runs=2000, procedures=("Dun",))
        assert run_scenario(scenario, threads=4)["Dun"].proportion <= 0.04

    def test_calibration(self):
        calib = calibrate_effect(runs=1000, threads=4)
        assert calib.power == pytest.approx(0.84, abs=0.01)
        assert 1.0 < calib.effect < 1.5

    def test_calibration_requires_bracket(self):
        with pytest.raises(ConfigError):
            calibrate_effect(target=0.999, runs=200, hi=0.6)
