import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from semlink.harness.config import config_from_dict

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ORACLES = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())


@pytest.fixture(scope="session")
def oracle():
    return ORACLES


@pytest.fixture(scope="session")
def small_cfg():
    """Three reference users over a 12-image synthetic set; fast enough for unit tests."""
    return config_from_dict({"seed": 11, "dataset": {"synth": {"n_images": 12}},
                             "rcga": {"population": 20, "max_iter": 8}})


@pytest.fixture(scope="session")
def small_data(small_cfg):
    return small_cfg.load_data()


@pytest.fixture(scope="session")
def small_scenario(small_cfg, small_data):
    return small_cfg.scenario(*small_data)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
