import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hybrid_sindy import pipeline
from hybrid_sindy.config import bundled_config, load_pipeline_config

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def hopper_config():
    return load_pipeline_config(bundled_config("hopper"))


@pytest.fixture(scope="session")
def sir_config():
    return load_pipeline_config(bundled_config("sir"))


@pytest.fixture(scope="session")
def hopper_data(hopper_config):
    return pipeline.split(hopper_config)


@pytest.fixture(scope="session")
def hopper_result(hopper_config, hopper_data):
    return pipeline.run(hopper_config, data=hopper_data)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
