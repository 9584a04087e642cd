import numpy as np
import pytest

from gravdengue.fixtures import write_fixtures
from gravdengue.model import DiseaseParams, PatchGeometry, PatchState, SeasonalBeta

# approximate centers of the three climate patches
THREE_GEOMS = (
    PatchGeometry("north", 7.6e6, -6.5, -79.8),
    PatchGeometry("central", 10.5e6, -11.0, -77.0),
    PatchGeometry("jungle", 2.8e6, -5.5, -75.5),
)


@pytest.fixture
def three_geoms():
    return THREE_GEOMS


@pytest.fixture
def seasonal_params():
    return DiseaseParams(beta_v=SeasonalBeta(0.3, 0.1, 0.0))


@pytest.fixture
def three_initial():
    return [PatchState.seeded(g.population, inf) for g, inf in zip(THREE_GEOMS, (10.0, 5.0, 20.0))]


@pytest.fixture(scope="session")
def fixture_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("fixtures")
    write_fixtures(out, seed=0)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one PASS/FAIL line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    def report(number, name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {name}" + (f" ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
