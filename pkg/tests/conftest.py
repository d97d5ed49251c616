import numpy as np
import pytest
from hypothesis import settings

from ppmvar import kernels

settings.register_profile("ppmvar", max_examples=60, deadline=None)
settings.load_profile("ppmvar")

BACKENDS = kernels.available_backends()


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def normal_series():
    return np.random.default_rng(123).normal(0.0, 0.01, 200)


@pytest.fixture
def two_regime_series():
    rng = np.random.default_rng(7)
    y = rng.normal(0.0, 0.005, 300)
    y[270:] = rng.normal(0.0, 0.05, 30)
    return y


def pytest_configure(config):
    config.acceptance_lines = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for the terminal summary, then assert it."""

    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        request.config.acceptance_lines.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if config.acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in config.acceptance_lines:
            terminalreporter.write_line(line)
