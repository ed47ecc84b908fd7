import pytest

from ccportfolio import PerturbationSpec, PortfolioModel
from ccportfolio.fixtures import DEFAULT_BETA, SECTOR_SHIFTS, sector_statistics

ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def stats():
    return sector_statistics()


@pytest.fixture(scope="session")
def nominal(stats):
    return PortfolioModel(stats, variant="nominal")


@pytest.fixture(scope="session")
def normal_model(stats):
    return PortfolioModel(stats, variant="robust_normal",
                          perturbation=PerturbationSpec.normal(SECTOR_SHIFTS), beta=DEFAULT_BETA)


@pytest.fixture(scope="session")
def exp_model(stats):
    return PortfolioModel(stats, variant="robust_exponential",
                          perturbation=PerturbationSpec.exponential(SECTOR_SHIFTS), beta=DEFAULT_BETA)


@pytest.fixture
def record():
    """``record(key, ok, detail)`` stores one acceptance line for the terminal summary."""
    def _record(key, ok, detail):
        ACCEPTANCE[key] = (bool(ok), detail)
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split()[0].rstrip("abc")), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
