import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from lzc import ModelParams

settings.register_profile("lzc", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lzc")


def random_params(rng, n_max=6, beta=(0.5, 3.0), k=(-3.0, 15.0), g=(0.0, 2.0), n=None):
    n = int(rng.integers(1, n_max + 1)) if n is None else n
    return ModelParams(rng.uniform(*beta), rng.uniform(*k, n), rng.uniform(*g, n))


@st.composite
def model_params(draw, n_max=6, k_range=(-3.0, 15.0), g_range=(0.0, 2.0)):
    n = draw(st.integers(1, n_max))
    floats = lambda lo, hi: st.floats(lo, hi, allow_nan=False, allow_infinity=False)
    beta = draw(floats(0.5, 3.0))
    k = draw(st.lists(floats(*k_range), min_size=n, max_size=n))
    g = draw(st.lists(floats(*g_range), min_size=n, max_size=n))
    return ModelParams(beta, k, g)


@pytest.fixture
def rng():
    return np.random.default_rng(20261017)


ACCEPTANCE_LINES = []


def record_criterion(number, title, passed, detail):
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
