import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


class FixedUniform:
    """Stand-in rng whose ``uniform`` always returns ``value``."""

    def __init__(self, value):
        self.value = value

    def uniform(self, low, high, size=None):
        assert low <= self.value <= high
        return self.value if size is None else np.full(size, self.value)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    prev = ACCEPTANCE.get(number)
    if prev is not None:
        passed = passed and prev[0]
        detail = f"{prev[1]}; {detail}"
    ACCEPTANCE[number] = (bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(
            f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        )
