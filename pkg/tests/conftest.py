import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from decaphi import BoxMeshSpec, build_complex, build_incidence, generate_box_mesh  # noqa: E402

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

# lines printed in the terminal summary by the acceptance suite
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


UNIT_TET = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def unit_tet():
    return build_complex(UNIT_TET, [[0, 1, 2, 3]])


@pytest.fixture(scope="session")
def two_tets():
    v = np.vstack([UNIT_TET, [[1, 1, 1]]])
    return build_complex(v, [[0, 1, 2, 3], [1, 2, 3, 4]])


@pytest.fixture(scope="session")
def cube6():
    return generate_box_mesh(BoxMeshSpec((1.0, 1.0, 1.0), (1, 1, 1)))


@pytest.fixture(scope="session")
def box333():
    cx = generate_box_mesh(BoxMeshSpec((0.03, 0.03, 0.03), (3, 3, 3)))
    return cx, build_incidence(cx)
