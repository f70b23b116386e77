import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from extmle import fixtures
from extmle.design import build_design_matrix
from extmle.tables import parse_model

settings.register_profile("default", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def load_example():
    def _load(name):
        table, model = fixtures.load(name)
        return table, build_design_matrix(table.grid, parse_model(model, table.grid))
    return _load


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
