import numpy as np
import pytest

from quadcurl.mesh import build_structured_mesh


@pytest.fixture(scope="session")
def mesh2():
    return build_structured_mesh(2, 4)


@pytest.fixture(scope="session")
def mesh3():
    return build_structured_mesh(3, 2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_CRITERIA = []


@pytest.fixture
def record_criterion():
    """Log one PASS/FAIL line for an acceptance criterion and return the verdict."""

    def record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        _CRITERIA.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
