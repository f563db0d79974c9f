import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from statreg.ols_core import RegressionData, fit_ols

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# (sort key, line) pairs filled by tests/test_acceptance.py, printed after the run
ACCEPTANCE_LINES: list[tuple[float, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)


def random_design(rng, n, p, intercept=True):
    x = rng.standard_normal((n, p - 1 if intercept else p))
    if intercept:
        return RegressionData.with_intercept(rng.standard_normal(n), x)
    return RegressionData(rng.standard_normal(n), x)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_fit(rng):
    """n = 60 regression with AR(1)-flavoured errors and two regressors."""
    n = 60
    t = np.arange(n, dtype=float)
    e = np.zeros(n)
    w = rng.standard_normal(n)
    for i in range(1, n):
        e[i] = 0.5 * e[i - 1] + w[i]
    x = np.column_stack([np.sin(t / 5.0), t / n])
    y = 1.0 + 2.0 * x[:, 0] - x[:, 1] + e
    return fit_ols(RegressionData.with_intercept(y, x, ("s", "t")))
