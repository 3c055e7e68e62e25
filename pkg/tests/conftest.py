import os

import numpy as np
import pytest

from pashaping.core import AmplitudeAlphabet


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run long fiber simulations")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow") or os.environ.get("PASHAPING_RUN_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="slow; pass --runslow or set PASHAPING_RUN_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="session")
def a3():
    return AmplitudeAlphabet(3)


@pytest.fixture(scope="session")
def a2():
    return AmplitudeAlphabet(2)


@pytest.fixture(scope="session")
def fig4(a3):
    from pashaping.ess import build_trellis

    return build_trellis(a3, 4, 60)


@pytest.fixture(scope="session")
def ess200(a3):
    from pashaping.ess import EssCode

    return EssCode.for_rate(a3, 200, 370, cache=False)


@pytest.fixture(scope="session")
def ccdm200(a3):
    from pashaping.ccdm import ccdm_code_for_rate

    return ccdm_code_for_rate(a3, 200, 1.85)


@pytest.fixture(scope="session")
def ccdm3600(a3):
    from pashaping.ccdm import ccdm_code_for_rate

    return ccdm_code_for_rate(a3, 3600, 1.85)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
        if not any(line[6:].startswith("7") for line in ACCEPTANCE_LINES):
            terminalreporter.write_line("SKIP  7 fiber link: slow suite, run with --runslow")
