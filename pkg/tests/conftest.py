import pytest

from dcweak.config import JobConfig
from dcweak.pipeline import Pipeline

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def small(tmp_path_factory):
    """p = 5, N = 5, w_max = 8: quick lattice for unit tests."""
    root = tmp_path_factory.mktemp("small")
    cfg = JobConfig(wmax=8, cache_dir=str(root / "cache"), out_dir=str(root / "reports"))
    return Pipeline(cfg)


@pytest.fixture(scope="session")
def desk(tmp_path_factory):
    """The shipped desk-scale configuration p = 5, N = 5, n = 2, w_max = 16."""
    root = tmp_path_factory.mktemp("desk")
    cfg = JobConfig(cache_dir=str(root / "cache"), out_dir=str(root / "reports"))
    return Pipeline(cfg)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split()[0])):
            terminalreporter.write_line(line)
