import logging

import pytest

from robust_mct import logging_config
from robust_mct.logging_config import LoggingManager, configure_logging


@pytest.fixture
def manager(monkeypatch):
    for name in ("LOG_ROOT_LEVEL", "LOG_APP_LEVEL", "LOG_MVT_LEVEL", "LOG_MLT_LEVEL", "LOG_SIM_LEVEL", "LOG_CLI_LEVEL", "LOG_FILE"):
        monkeypatch.delenv(name, raising=False)
    saved = {name: logging.getLogger(name).level for name in logging_config._LOGGER_FIELDS.values()}
    yield LoggingManager()
    for name, level in saved.items():
        logging.getLogger(name).setLevel(level)


def test_defaults(manager):
    assert manager.config.app_level == "INFO"
    assert manager.config.mvt_level == "WARNING"
    assert logging.getLogger("robust_mct.mct.mvt").level == logging.WARNING


def test_environment(monkeypatch, manager):
    monkeypatch.setenv("LOG_SIM_LEVEL", "error")
    fresh = LoggingManager()
    assert fresh.config.sim_level == "error"
    assert logging.getLogger("robust_mct.sim").level == logging.ERROR


def test_set_logger_level(manager):
    assert manager.set_logger_level("robust_mct.sim", "debug")
    assert manager.config.sim_level == "DEBUG"
    assert logging.getLogger("robust_mct.sim").level == logging.DEBUG
    assert not manager.set_logger_level("robust_mct.sim", "chatty")


def test_verbose_sets_debug(monkeypatch, manager):
    monkeypatch.setattr(logging_config, "_logging_manager", manager)
    configure_logging(verbose=True)
    assert logging.getLogger("robust_mct").level == logging.DEBUG
