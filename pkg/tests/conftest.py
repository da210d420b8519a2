import math

import pytest

from mdyn.distributions import normal_zero_mean
from mdyn.dynamics import MarketParams

# sigma giving pdf(0) = 1
UNIT_PEAK_SIGMA = 1.0 / math.sqrt(2.0 * math.pi)

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance_log(request):
    """Collects one ``(criterion, ok, detail)`` line per acceptance check."""
    log = request.config.stash[_ACCEPTANCE_KEY]

    def record(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title}" + (f" ({detail})" if detail else "")
        log.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)


@pytest.fixture
def std_normal():
    return normal_zero_mean(1.0)


@pytest.fixture
def unit_peak():
    return normal_zero_mean(UNIT_PEAK_SIGMA)


@pytest.fixture
def gs_params():
    """Globally stable reference point: alpha=0.5, J=0.8, lam=0.15, standard Normal."""
    return MarketParams(alpha=0.5, J=0.8, lam=0.15)
