import pytest

from robust_mct.errors import ConfigError
from robust_mct.settings import DEFAULT_SEED, get_settings, reset_settings
from robust_mct.validation_schemas import (
    AnalysisConfig,
    AnalysisConfigSchema,
    GridRowSchema,
    validate_config,
)

GRID_ROW = {
    "scenario_id": "x",
    "distribution": "Normal",
    "xi": "2",
    "n0": "10",
    "n1": "10",
    "n2": "10",
    "n3": "10",
    "hypothesis": "H0",
}


class TestAnalysisConfigSchema:
    def test_defaults(self):
        config = validate_config(AnalysisConfigSchema, {"input": "clin.csv", "method": "mlt", "responses": ["ALT"]})
        assert isinstance(config, AnalysisConfig)
        assert config.group_column == "Dose"
        assert config.tail == "two.sided"
        assert config.order == 5
        assert config.seed == DEFAULT_SEED
        assert config.extra == {}
        assert config.df_mode is None

    @pytest.mark.parametrize(
        "overrides",
        [
            {"method": "tukey"},
            {"alpha": 1.0},
            {"alpha": 0.0},
            {"order": 0},
            {"tail": "both"},
            {"df_mode": "exact"},
            {"responses": []},
            {"responses": ["A", "B"]},
            {"output_format": "xlsx"},
        ],
    )
    def test_invalid(self, overrides):
        data = {"input": "clin.csv", "method": "dunnett", "responses": ["ALT"], **overrides}
        with pytest.raises(ConfigError) as excinfo:
            validate_config(AnalysisConfigSchema, data)
        assert "fields" in excinfo.value.details

    def test_mmm_needs_two_responses(self):
        with pytest.raises(ConfigError):
            validate_config(AnalysisConfigSchema, {"input": "x.csv", "method": "mmm", "responses": ["A"]})
        config = validate_config(AnalysisConfigSchema, {"input": "x.csv", "method": "mmm", "responses": ["A", "B"]})
        assert config.responses == ["A", "B"]

    def test_no_data(self):
        with pytest.raises(ConfigError):
            validate_config(AnalysisConfigSchema, None)


class TestGridRowSchema:
    def test_grid_row_coerces_strings(self):
        row = validate_config(GridRowSchema, dict(GRID_ROW))
        assert row["xi"] == 2.0
        assert row["n3"] == 10

    def test_grid_row_unknown_column(self):
        with pytest.raises(ConfigError):
            validate_config(GridRowSchema, {**GRID_ROW, "n4": "10"})


class TestSettings:
    def test_defaults(self):
        settings = get_settings()
        assert settings.seed == 20190501
        assert settings.effect == 1.25
        assert settings.base_mean == 90.0
        assert settings.base_sd == 10.0
        assert settings.grid_path.endswith("scenario_grid.csv")

    def test_environment_overrides(self, monkeypatch):
        monkeypatch.setenv("ROBUST_MCT_SEED", "7")
        monkeypatch.setenv("ROBUST_MCT_EFFECT", "1.3")
        monkeypatch.setenv("ROBUST_MCT_THREADS", "0")
        reset_settings()
        settings = get_settings()
        assert settings.seed == 7
        assert settings.effect == 1.3
        assert settings.threads == 1

    def test_cached_until_reset(self, monkeypatch):
        first = get_settings()
        monkeypatch.setenv("ROBUST_MCT_SEED", "11")
        assert get_settings() is first
        reset_settings()
        assert get_settings().seed == 11
