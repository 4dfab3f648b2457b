import json
from pathlib import Path

import pytest

from agrifin import REFERENCE, build_grid, solve_gamma
from agrifin.sweep import alpha_sweep_spec, run_sweep

HERE = Path(__file__).parent
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def frozen():
    return json.loads((HERE / "oracles" / "frozen.json").read_text())


@pytest.fixture(scope="session")
def grid():
    return build_grid(REFERENCE)


@pytest.fixture(scope="session")
def sol0(grid):
    return solve_gamma(REFERENCE, grid)


@pytest.fixture(scope="session")
def sweep_both():
    """Default alpha sweep at the reference parameters, both expectation modes."""
    return run_sweep(alpha_sweep_spec(REFERENCE, n=51, mode="both"))


def record_acceptance(line: str):
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
