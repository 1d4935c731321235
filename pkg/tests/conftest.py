import numpy as np
import pytest

from otfs_radar.grid import SystemConfig

_CRITERIA: list[str] = []


@pytest.fixture
def small_cfg():
    return SystemConfig(num_delay_bins=8, num_doppler_bins=4, cp_length_samples=4, noise_variance=0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def criterion():
    """Record a PASS/FAIL line for the acceptance summary, then assert."""

    def record(name: str, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} [{name}] {detail}"
        _CRITERIA.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
