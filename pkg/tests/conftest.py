import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from twostage import read_net, read_trips, sioux_falls_paths

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def sioux_falls():
    net_path, trips_path = sioux_falls_paths()
    net = read_net(net_path)
    return net, read_trips(trips_path, zone_count=net.zone_count)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    """``report(label, passed, detail)`` records one acceptance line."""
    def report(label, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'}  {label}: {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return passed
    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
