import json
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from waveobs import Grid, MeasurementSelection, PhysicalParams, assemble_system

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = Path(__file__).resolve().parent / "fixtures"
CONFIGS = ROOT / "configs"

REF_PARAMS = PhysicalParams(c_squared=0.9, length_l=2.0, T_final=100.0)


def reference_system(n_x, sel=None, cfl=0.95, T_final=100.0):
    params = PhysicalParams(0.9, 2.0, T_final)
    grid = Grid.from_nodes(params, n_x, cfl=cfl)
    return assemble_system(grid, params, sel or MeasurementSelection.full())


def sine_source(grid):
    return 3.0 * np.sin(5.0 * grid.nodes)


def as_float_array(nested):
    return np.array([[float(Fraction(x)) for x in row] for row in nested]) \
        if isinstance(nested[0], list) else np.array([float(Fraction(x)) for x in nested])


@pytest.fixture(scope="session")
def micro():
    return json.loads((FIXTURES / "micro_n2.json").read_text())


@pytest.fixture
def micro_system():
    params = PhysicalParams(1.0, 3.0, 10.0)  # dx = 3 / (2 + 1) = 1
    grid = Grid(dx=1.0, dt=1.0, n_x=2, n_t=10)
    with pytest.warns(Warning):
        return assemble_system(grid, params)


# acceptance summary lines, printed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
