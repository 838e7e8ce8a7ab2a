import numpy as np
import pytest

from roomloc import RoomSpec, build_dictionary, build_grid, enumerate_modes_in_index_cube
from roomloc.harness import ExperimentConfig, run_sweep

PAPER_MIC = (0.9, 2.2, 0.65)

# criterion id -> (passed, detail); filled by test_acceptance
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def paper_room():
    return RoomSpec(4.0, 7.0, 3.0, rt60=0.5)


@pytest.fixture(scope="session")
def paper_modes(paper_room):
    return enumerate_modes_in_index_cube(3, paper_room)


@pytest.fixture(scope="session")
def paper_grid(paper_room):
    return build_grid(paper_room, (10, 15, 10))


@pytest.fixture(scope="session")
def paper_dict(paper_room, paper_modes, paper_grid):
    return build_dictionary(paper_modes, paper_grid, PAPER_MIC, paper_room)


def col_factor_config(**kw):
    base = dict(sweep_axis="col_factor", sweep_values=[1, 2, 3, 15], trials=100, max_outer=300, seed=2024)
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.fixture(scope="session")
def col_factor_sweep():
    return run_sweep(col_factor_config())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda s: (int(s.rstrip("ab")), s)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key:<3} {'PASS' if ok else 'FAIL'}  {detail}")
