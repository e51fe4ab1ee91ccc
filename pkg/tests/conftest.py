import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from crncompare import bundles

settings.register_profile("ci", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ci")


def brute_states(d, bound, keep):
    """All x in {0..bound}^d with keep(x), in lexicographic order."""
    return np.array([x for x in itertools.product(range(bound + 1), repeat=d) if keep(x)],
                    dtype=np.int64).reshape(-1, d)


@pytest.fixture(scope="session")
def enzyme1():
    return bundles.enzyme1()


@pytest.fixture(scope="session")
def braess():
    return bundles.braess()


@pytest.fixture(scope="session")
def histone():
    return bundles.histone()


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(results[n])
