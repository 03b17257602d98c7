import numpy as np
import pytest

from wavestat import BasisConfig, SpectralVector


@pytest.fixture
def unit():
    """m = kappa = L = 1 with a handful of modes."""
    return BasisConfig(L=1.0, N=8, m=1.0, kappa=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def smooth_vector(rng, cfg, power=3.0):
    return SpectralVector(rng.normal(size=cfg.N) / cfg.modes**power, cfg)


ACCEPTANCE_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_LINES] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line; the block is printed after the run."""
    lines = request.config.stash[ACCEPTANCE_LINES]

    def record(number: int, passed: bool, text: str):
        lines.append((number, f"{'PASS' if passed else 'FAIL'} criterion {number}: {text}"))

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
