import numpy as np
import pytest

from mimoy.channel import Mode, NetworkConfig


def cn(rng, *shape):
    """CN(0,1) draws with unit total variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * np.sqrt(0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def erua_cfg():
    return NetworkConfig(N=1, mode=Mode.ER_UA, cluster_sizes=(2, 3, 4)).with_snr_db(10)


@pytest.fixture
def minua_cfg():
    return NetworkConfig(N=1, mode=Mode.MIN_UA, cluster_sizes=(2, 2, 2)).with_snr_db(10)


# acceptance report ---------------------------------------------------------------

ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def acceptance():
    """Record one verdict line per criterion; printed again in the summary."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
