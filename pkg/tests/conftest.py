import numpy as np
import pytest

from diracpart.model import ModelConfig, CouplingProfile

CRITERION_LINES = []


def record_criterion(num, passed, detail):
    """Collect one pass/fail line per acceptance criterion for the summary."""
    status = "PASS" if passed else "FAIL"
    CRITERION_LINES.append(f"criterion {num}: {status} - {detail}")


def pytest_terminal_summary(terminalreporter):
    if CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in CRITERION_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def cfg1d():
    cp = CouplingProfile(kind="gaussian-decay", radius=1.0, amplitudes=[[0.6, 0.3]])
    return ModelConfig(d=1, masses=[1.0], V=[[2.0]], coupling=cp,
                       L=60.0, M=512, dt=0.01)


@pytest.fixture(scope="session")
def cfg1d2f():
    cp = CouplingProfile(kind="gaussian-decay", radius=1.0,
                         amplitudes=[[0.5, 0.2], [0.3, 0.1]])
    return ModelConfig(d=1, masses=[1.0, 2.0], V=[[2.0]], coupling=cp,
                       L=200.0, M=2048, dt=0.02)


@pytest.fixture(scope="session")
def cfg3d():
    cp = CouplingProfile(kind="gaussian-decay", radius=1.0,
                         amplitudes=[[0.5, 0.2, 0.1, 0.3]])
    return ModelConfig(d=3, masses=[1.0], V=2.0 * np.eye(3), coupling=cp,
                       L=32.0, M=32, dt=0.02)
