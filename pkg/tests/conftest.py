import numpy as np
import pytest

from melanoma_fem.hybrid import FEM_BOX_3D, SimulationConfig, run_simulation
from melanoma_fem.mesh import build_box_mesh

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def box_mesh():
    return build_box_mesh(FEM_BOX_3D, 0.5)


@pytest.fixture(scope="session")
def run_month22():
    return run_simulation(SimulationConfig(month=22), keep_state=True)


@pytest.fixture(scope="session")
def run_month0():
    return run_simulation(SimulationConfig(month=0))


@pytest.fixture
def rng():
    return np.random.default_rng(20251016)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
