import os
import tempfile

import numpy as np
import pytest

# keep kernel caches out of the home directory during tests
os.environ.setdefault("KF_CACHE_DIR", tempfile.mkdtemp(prefix="kf-test-cache-"))

from kinetic_fredholm import geometry as geo  # noqa: E402
from kinetic_fredholm.cache import cache_kernel  # noqa: E402
from kinetic_fredholm.collision import CrossSection, GammaOperator  # noqa: E402
from kinetic_fredholm.solver_linear import LinearProblem  # noqa: E402
from kinetic_fredholm.spatial import SpatialGrid  # noqa: E402
from kinetic_fredholm.transport import BoundarySource, gaussian_source  # noqa: E402
from kinetic_fredholm.velocity import VelocityGrid  # noqa: E402


@pytest.fixture(scope="session")
def unit_ball():
    return geo.ball()


@pytest.fixture(scope="session")
def ellipsoid211():
    return geo.ellipsoid((2.0, 1.0, 1.0))


@pytest.fixture(scope="session")
def hard_spheres():
    return CrossSection(1.0, 1.0)


@pytest.fixture(scope="session")
def hs_table(hard_spheres):
    table, _ = cache_kernel(hard_spheres, VelocityGrid())
    return table


@pytest.fixture(scope="session")
def small_table(hard_spheres):
    table, _ = cache_kernel(hard_spheres, VelocityGrid(n_radial=6, angular_order=5), certify=False)
    return table


@pytest.fixture(scope="session")
def hs_problem(unit_ball, hs_table):
    return LinearProblem(unit_ball, hs_table, SpatialGrid(unit_ball))


@pytest.fixture(scope="session")
def small_problem(unit_ball, small_table):
    return LinearProblem(unit_ball, small_table, SpatialGrid(unit_ball, 5, 4, 6))


@pytest.fixture(scope="session")
def hs_gamma(hs_table):
    return GammaOperator(hs_table.cross_section, hs_table.grid)


@pytest.fixture(scope="session")
def gaussian_f0():
    return BoundarySource(gaussian_source(0.25), 0.25, "gaussian")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = {}


@pytest.fixture
def acceptance():
    def record(number, title, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}"
        ACCEPTANCE_LINES[number] = line
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
