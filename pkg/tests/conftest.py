import pytest

from blink.predictor import LinearModel
from blink.selector import MachineProfile

GB = 10**9
GiB = 1 << 30


@pytest.fixture
def profile_10_5():
    return MachineProfile(10 * GB, 5 * GB)


def constant(value) -> LinearModel:
    return LinearModel(float(value), 0.0)


def per_scale(bytes_at_full, full=1000.0) -> LinearModel:
    return LinearModel(0.0, bytes_at_full / full)


ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
