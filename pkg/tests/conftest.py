import json
from pathlib import Path

import numpy as np
import pytest

from bdrigid.boundary import boundary_distance_matrix, c0_deviation, reference_boundary_data
from bdrigid.embedding import build_embedding
from bdrigid.mesh import Disk, build_disk_mesh
from bdrigid.scenarios import make_scenario

ORACLES = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())

# (criterion number, title, passed, detail) appended by the acceptance tests
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n, title, ok, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"criterion {n} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")


@pytest.fixture(scope="session")
def oracles():
    return ORACLES


@pytest.fixture(scope="session")
def coarse_mesh():
    return build_disk_mesh(1.0, 0.05)


@pytest.fixture(scope="session")
def disk_mesh():
    return build_disk_mesh(1.0, 0.02)


@pytest.fixture(scope="session")
def disk_bd(disk_mesh):
    return boundary_distance_matrix(disk_mesh, 128)


@pytest.fixture(scope="session")
def disk_chord(disk_bd):
    return reference_boundary_data(disk_bd.params, disk_bd.period, Disk())


@pytest.fixture(scope="session")
def disk_floor(disk_bd, disk_chord):
    """Metrication plus sampling floor of the default Euclidean run."""
    return c0_deviation(disk_bd, disk_chord) + 0.5 * disk_bd.max_gap


@pytest.fixture(scope="session")
def disk_embedding(disk_bd):
    return build_embedding(disk_bd)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture(scope="session")
def cylinder_small():
    return make_scenario("cylinder_graft", {"r": 0.05, "L": 3.0}, h=0.025)


@pytest.fixture(scope="session")
def sphere_small():
    return make_scenario("sphere_graft", {"r": 0.05, "R": 3.0}, h=0.025)
