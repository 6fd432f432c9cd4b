import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def complex_vectors(min_size=1, max_size=12, bound=10.0):
    """Hypothesis strategy for finite complex vectors as numpy arrays."""
    fl = st.floats(-bound, bound, allow_nan=False, allow_infinity=False)
    pair = st.tuples(fl, fl).map(lambda t: complex(*t))
    return st.lists(pair, min_size=min_size, max_size=max_size).map(
        lambda v: np.array(v, dtype=np.complex128))


def seeds():
    return st.integers(0, 2 ** 32 - 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance(capsys):
    """Record (and echo) one pass/fail line for an acceptance criterion."""
    def record(number, name, ok, detail=""):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        with capsys.disabled():
            print("\n" + line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
