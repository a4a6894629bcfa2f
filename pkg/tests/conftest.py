import numpy as np
import pytest

from ultraspec.hiermat import HierParams

ACCEPTANCE_LINES = []


def random_params(rng, p, r, low=0.1, high=1.0, form="A"):
    return HierParams(p, r, tuple(rng.uniform(low, high, r + 1)), form)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def acceptance_log():
    def record(number, ok, detail):
        line = f"[criterion {number:>2}] {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
