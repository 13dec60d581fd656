import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

CRITERIA: dict[int, tuple[str, bool, str]] = {}


def record(number: int, title: str, passed: bool, detail: str) -> None:
    CRITERIA[number] = (title, bool(passed), detail)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(CRITERIA):
        title, passed, detail = CRITERIA[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:2d} {title}: {detail}")
