import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

# criterion number -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE = {}


def record(number, name, passed, detail=""):
    ACCEPTANCE[number] = (name, bool(passed), detail)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        name, passed, detail = ACCEPTANCE[number]
        mark = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{mark}] #{number:<2d} {name}: {detail}")
